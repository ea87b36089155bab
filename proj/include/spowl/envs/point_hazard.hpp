#pragma once

#include "spowl/envs/env.hpp"

#include <vector>

namespace spowl {

/// 2-D point navigation with circular hazards. Double-integrator agent
/// in the arena [-1,1]^2, bounded acceleration action, dense
/// progress-toward-goal reward, unit cost per step spent inside any
/// hazard.
///
/// Observation layout (16 floats with obs_hazards=4):
///   [0:2)   velocity
///   [2:4)   goal displacement (goal - position)
///   [4:16)  for each of the obs_hazards nearest hazards, sorted by
///           distance: displacement (2) and radius (1); absent hazards
///           are padded with displacement (2,2) and radius 0.
struct PointHazardConfig {
    int num_hazards = 4;
    double hazard_radius = 0.25;
    int episode_length = 200;
    double goal_tolerance = 0.15;
    double goal_bonus = 10.0;
    double shaping_coef = 10.0;
    double dt = 0.1;
    double accel = 0.25;          // velocity gain per unit action per step
    double max_speed = 1.0;
    double spawn_clearance = 0.2; // extra agent/goal clearance beyond the radius
    int obs_hazards = 4;
};

class PointHazardEnv final : public Env {
public:
    explicit PointHazardEnv(PointHazardConfig cfg = {});

    Vec reset(std::uint64_t seed) override;
    StepResult step(const Vec& action) override;
    int obs_dim() const override { return 4 + 3 * cfg_.obs_hazards; }
    int action_dim() const override { return 2; }
    int episode_limit() const override { return cfg_.episode_length; }

    bool in_hazard(const Eigen::Vector2d& p) const;
    const PointHazardConfig& config() const { return cfg_; }
    Eigen::Vector2d position() const { return pos_; }
    Eigen::Vector2d goal() const { return goal_; }

private:
    Vec observe() const;

    PointHazardConfig cfg_;
    Rng rng_;
    Eigen::Vector2d pos_, vel_, goal_;
    std::vector<Eigen::Vector2d> hazards_;
    int t_ = 0;
    bool done_ = true;
};

}  // namespace spowl

#pragma once

#include "spowl/envs/env.hpp"

#include <utility>
#include <vector>

namespace spowl {

/// Small discrete-state CMDP with exact dynamics, used as an oracle
/// substrate. States are grid cells, actions the 4 axis moves embedded
/// as a continuous 4-vector (the executed move is the argmax entry).
/// Rewards and costs are per-cell tables evaluated at the landing cell.
struct GridConfig {
    int size = 4;
    double noise = 0.0;          // prob of a uniformly random move instead
    std::vector<double> cell_reward;  // size*size entries; empty -> zeros
    std::vector<double> cell_cost;    // size*size entries; empty -> zeros
    int episode_length = 50;
    int start_state = 0;
    std::vector<int> absorbing;  // states that self-loop under every action

    int num_states() const { return size * size; }
    void validate() const;
};

class GridCMDP final : public Env {
public:
    static constexpr int kNumActions = 4;  // up, down, left, right

    explicit GridCMDP(GridConfig cfg);

    Vec reset(std::uint64_t seed) override;
    StepResult step(const Vec& action) override;
    int obs_dim() const override { return cfg_.num_states(); }
    int action_dim() const override { return kNumActions; }
    int episode_limit() const override { return cfg_.episode_length; }

    // Exact kernel: row-stochastic matrix per action, P[a](s, s').
    const Mat& kernel(int action) const { return kernels_[static_cast<size_t>(action)]; }
    // Expected immediate reward/cost of (s, a) under the kernel.
    double expected_reward(int s, int a) const { return exp_r_[static_cast<size_t>(a)](s); }
    double expected_cost(int s, int a) const { return exp_c_[static_cast<size_t>(a)](s); }

    int deterministic_successor(int s, int a) const;
    int state() const { return state_; }
    const GridConfig& config() const { return cfg_; }

    static Vec one_hot(int s, int n);
    static int argmax_action(const Vec& action);

private:
    void build_kernels();
    Vec observe() const { return one_hot(state_, cfg_.num_states()); }

    GridConfig cfg_;
    Rng rng_;
    std::vector<Mat> kernels_;
    std::vector<Vec> exp_r_, exp_c_;
    int state_ = 0;
    int t_ = 0;
    bool done_ = true;
};

/// Exact policy evaluation on a GridCMDP: value iteration to 1e-10 on
/// both reward and cost returns of a stochastic policy table (rows sum
/// to 1 over the 4 actions).
std::pair<Vec, Vec> grid_oracle_values(const GridCMDP& env, const Mat& policy_table,
                                       double gamma, double gamma_c);

}  // namespace spowl

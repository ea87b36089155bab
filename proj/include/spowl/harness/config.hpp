#pragma once

#include "spowl/envs/grid_cmdp.hpp"
#include "spowl/envs/point_hazard.hpp"
#include "spowl/planner.hpp"
#include "spowl/safe_policy.hpp"
#include "spowl/world_model.hpp"

#include <memory>
#include <string>

namespace spowl {

enum class RunMode { Spowl, PolicyOnly, PlanOnly, CceGlobal, CceLocal, Unconstrained };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct EnvConfig {
    std::string type = "point_hazard";
    PointHazardConfig point;
    GridConfig grid;

    std::unique_ptr<Env> make() const;
};

struct TrainConfig {
    long steps = 200000;
    long warmup = 2000;
    int batch = 64;
    int updates_per_step = 1;
    size_t buffer_capacity = 200000;
    double model_lr = 3e-4;
    double policy_lr = 3e-4;
    std::uint64_t seed = 0;
    long eval_every = 5000;
    int eval_episodes = 10;
    long checkpoint_every = 25000;
};

struct RunConfig {
    RunMode mode = RunMode::Spowl;
    EnvConfig env;
    WorldModelConfig model;     // obs/action dims filled from the env
    PolicyConfig policy;        // latent/action dims filled from model
    LagrangianState lagrangian; // initial state
    PlannerConfig planner;
    TrainConfig train;

    // Parses strict JSON: unknown keys are hard errors, absent keys take
    // the documented defaults.
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_text() const;  // fully resolved config

    void finalize();  // fills derived dims, validates everything
};

}  // namespace spowl

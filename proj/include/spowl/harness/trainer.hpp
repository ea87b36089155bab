#pragma once

#include "spowl/decision.hpp"
#include "spowl/harness/config.hpp"
#include "spowl/harness/replay_buffer.hpp"

#include <memory>
#include <string>
#include <vector>

namespace spowl {

struct EvalSummary {
    double return_mean = 0.0, return_std = 0.0;
    double cost_mean = 0.0, cost_std = 0.0;
    double balance = 0.0;
    int episodes = 0;
};

/// Everything a run needs in one place; built from a RunConfig, drives
/// the interaction/learning loop, and owns checkpoint I/O.
/// Per-episode training statistics, recorded at each episode end.
struct EpisodeStat {
    double ep_return = 0.0;
    double ep_cost = 0.0;
    double balance = 0.0;  // fraction of decisions resolved by the planner
};

class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    // Runs training, writing metrics.csv, eval.csv, manifest.json and
    // checkpoints under `run_dir`. Returns the final checkpoint path.
    std::string train(const std::string& run_dir);

    // Deterministic evaluation episodes with the configured mode's
    // action pipeline.
    EvalSummary evaluate(int episodes, std::uint64_t seed_base);

    void save_checkpoint(const std::string& path) const;
    static Trainer load_checkpoint(const std::string& path);

    WorldModel& model() { return model_; }
    SafePolicy& policy() { return policy_; }
    LagrangianState& lagrangian() { return lagr_; }
    const RunConfig& config() const { return cfg_; }
    long step() const { return global_step_; }
    double total_cost() const { return total_cost_; }
    const std::vector<EpisodeStat>& episode_history() const { return episode_history_; }

private:
    struct ActEnvResult {
        Vec action;
        bool from_plan = false;
    };
    // One action through the mode's pipeline (plan / choose / policy).
    ActEnvResult select_action(const Vec& obs, Mat& warm_mean, bool deterministic, Rng& rng);
    void update_models(Rng& rng, double& model_loss_out, double& policy_loss_out);
    bool uses_planner() const;
    bool uses_switching() const { return cfg_.mode == RunMode::Spowl; }

    RunConfig cfg_;
    WorldModel model_;
    SafePolicy policy_;
    LagrangianState lagr_;
    Planner planner_;
    ReplayBuffer buffer_;
    std::unique_ptr<AdamOptimizer> model_opt_, policy_opt_;
    long global_step_ = 0;
    double total_cost_ = 0.0;  // lifetime cost for the cost-rate metric
    double last_delta_ = 0.0;
    std::vector<EpisodeStat> episode_history_;
};

/// Ablation grid runner: trains every (variant, seed) pair and writes a
/// comparison CSV. The grid file holds a base config, named JSON merge
/// patches, and a seed list.
void run_ablation(const std::string& grid_path, const std::string& out_dir);

}  // namespace spowl

#pragma once

#include "spowl/model_interface.hpp"

#include <vector>

namespace spowl {

enum class PlanMode { Adaptive, CceGlobal, CceLocal };

struct PlannerConfig {
    int horizon = 3;
    int iterations = 6;
    int samples = 512;        // Gaussian samples per iteration
    int prior_samples = 24;   // policy-prior sequences
    int elite_k = 64;
    double sigma_init = 1.0;
    double sigma_floor = 0.05;
    PlanMode mode = PlanMode::Adaptive;
    double d_plan = 1.0;      // fixed threshold, CCE modes only
    bool score_weighted_sampling = false;

    void validate() const {
        if (horizon < 1 || iterations < 1 || elite_k < 1 || sigma_init <= 0.0 ||
            prior_samples < 1 || samples < 0)
            throw ConfigError("PlannerConfig: bad values");
        if (mode != PlanMode::Adaptive && d_plan < 0.0)
            throw ConfigError("PlannerConfig: d_plan must be >= 0");
    }
};

/// A batch of H-step action sequences. Column j of `actions` stacks the
/// H action vectors of candidate j; the first `prior_count` columns are
/// the policy prior, the rest Gaussian samples.
struct CandidateSet {
    Mat actions;   // (H*action_dim) x n
    Vec jm, jmc;   // value / cost estimates per candidate
    int prior_count = 0;
    int size() const { return static_cast<int>(actions.cols()); }
};

struct PlanOutcome {
    Vec action;        // chosen first action a_plan
    Mat mean;          // refined mu_N, action_dim x H
    Mat sigma;         // refined sigma_N, action_dim x H
    double jm = 0.0;   // elite-mean estimates
    double jmc = 0.0;
    int elite_count = 0;
    bool fallback = false;  // elites are the policy prior (adaptive mode)
};

/// Safe-improvement planner with adaptive thresholds from the policy
/// prior, plus fixed-threshold CCE baselines in global and local
/// cost-estimation modes.
class Planner {
public:
    explicit Planner(PlannerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    PlanOutcome plan(const Vec& z0, const Mat& warm_mean, const DynamicsModel& model,
                     const ActionSampler& policy, Rng& rng) const;

    // Rolls the stochastic policy through the model for `count` sequences.
    static Mat generate_policy_prior(const Vec& z0, const ActionSampler& policy,
                                     const DynamicsModel& model, int horizon, int count,
                                     Rng& rng);

    // (J^M, J^M_c) per candidate column. `include_cost_bootstrap=false`
    // is the CCE local estimation mode.
    static std::pair<Vec, Vec> estimate_values(const Vec& z0, const Mat& actions,
                                               const DynamicsModel& model,
                                               const ActionSampler& policy, int horizon,
                                               bool include_cost_bootstrap = true);

    // Adaptive thresholds: means over the prior set's estimates.
    static std::pair<double, double> set_thresholds(const Vec& prior_jm, const Vec& prior_jmc);

    // Improvement-set selection. Returns candidate indices; ties in the
    // top-k cut are broken by original candidate order (stable sort on
    // descending J^M). `fallback` reports the empty-improvement branch.
    static std::vector<int> select_elites(const CandidateSet& cands, double d_r, double d_c,
                                          int k, bool* fallback = nullptr);

    // CCE selection: feasible candidates (jmc < d_plan) top-k by J^M;
    // if none feasible, the k lowest-cost candidates.
    static std::vector<int> select_elites_cce(const CandidateSet& cands, double d_plan, int k,
                                              bool* fallback = nullptr);

    const PlannerConfig& config() const { return cfg_; }

private:
    PlannerConfig cfg_;
};

/// Shift a refined mean one step left and zero-pad the tail (the warm
/// start for the next environment step).
Mat shift_warm_start(const Mat& mean);

}  // namespace spowl

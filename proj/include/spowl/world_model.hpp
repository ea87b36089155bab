#pragma once

#include "spowl/model_interface.hpp"
#include "spowl/net.hpp"
#include "spowl/representation.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace spowl {

enum class CostAgg { Min, Max, Avg };
enum class ValueMode { Min2, Avg };

struct WorldModelConfig {
    int obs_dim = 0;
    int action_dim = 0;
    int latent_dim = 64;
    int simnorm_group = 8;
    int hidden = 128;
    int num_q = 5;
    int num_cost = 5;
    int num_qc = 5;
    double gamma = 0.99;
    double gamma_c = 0.99;
    double lambda = 0.5;
    int horizon = 3;              // training rollout length H
    BinSpec bins;
    double tau = 0.01;
    CostAgg cost_target_agg = CostAgg::Avg;
    double consistency_coef = 20.0;
    bool consistency_enabled = true;
    bool decoder_enabled = false;
    double decoder_weight = 0.01;

    void validate() const;
};

/// One training batch: step-indexed sequences, column-per-segment.
/// obs/actions/... have horizon+1 entries each.
struct SegmentBatch {
    std::vector<Mat> obs, actions, next_obs;
    std::vector<Vec> rewards, costs, done;
    int batch = 0;
    int horizon() const { return static_cast<int>(obs.size()) - 1; }
};

struct ModelLossStats {
    double total = 0.0;
    double consistency = 0.0;
    double reward_ce = 0.0;
    double value_ce = 0.0;
    double cost_ce = 0.0;
    double cost_value_ce = 0.0;
    double decoder = 0.0;
};

/// Implicit world model: encoder, latent dynamics, reward head, value
/// ensemble, cost ensemble and cost-value ensemble with EMA target
/// copies. All heads are discrete-regression (two-hot) heads over the
/// configured bins.
class WorldModel final : public DynamicsModel {
public:
    WorldModel(WorldModelConfig cfg, std::uint64_t init_seed);

    // -- inference --------------------------------------------------
    Vec encode(const Vec& obs) const;
    Mat encode(const Mat& obs) const;
    Vec predict_next(const Vec& z, const Vec& a) const;
    double predict_reward(const Vec& z, const Vec& a) const;
    Vec predict_cost_heads(const Vec& z, const Vec& a) const;
    double value_reward(const Vec& z, const Vec& a, ValueMode mode, Rng& rng) const;
    double value_cost(const Vec& z, const Vec& a) const;

    // DynamicsModel surface (ensemble-average values, max-cost heads).
    int latent_dim() const override { return cfg_.latent_dim; }
    int action_dim() const override { return cfg_.action_dim; }
    Vec encode_obs(const Vec& obs) const override { return encode(obs); }
    Mat next(const Mat& z, const Mat& a) const override;
    Vec reward(const Mat& z, const Mat& a) const override;
    Vec cost_max(const Mat& z, const Mat& a) const override;
    Vec value_avg(const Mat& z, const Mat& a) const override;
    Vec cost_value_avg(const Mat& z, const Mat& a) const override;
    double gamma() const override { return cfg_.gamma; }
    double gamma_c() const override { return cfg_.gamma_c; }

    Vec value_min2(const Mat& z, const Mat& a, Rng& rng) const;

    // -- training ---------------------------------------------------
    // TD targets per Eq-style bootstrap from the EMA copies; rows are
    // steps 0..H, columns batch entries. Gradient-free by construction.
    std::pair<Mat, Mat> td_targets(const SegmentBatch& batch, const ActionSampler& policy,
                                   Rng& rng) const;

    // Everything behind a stop-gradient boundary, precomputed so a
    // finite-difference probe can hold it fixed.
    struct FrozenTargets {
        Mat q, qc;                     // TD targets, rows are steps
        std::vector<Mat> consistency;  // sg(h(s'_t)) per step
    };
    FrozenTargets compute_targets(const SegmentBatch& batch, const ActionSampler& policy,
                                  Rng& rng) const;

    // Builds the joint loss on a fresh tape, runs backward, leaves
    // gradients in the nets. Caller owns the optimizer step. Passing
    // `frozen` reuses precomputed stop-gradient targets.
    ModelLossStats model_loss_backward(const SegmentBatch& batch, const ActionSampler& policy,
                                       Rng& rng, const FrozenTargets* frozen = nullptr);

    // Standalone reconstruction loss of the ablation decoder head (no
    // backward), for probing; model_loss folds it in when enabled.
    double decoder_loss(const SegmentBatch& batch) const;

    void ema_update(double tau);
    void ema_update() { ema_update(cfg_.tau); }

    void zero_grad();
    std::vector<DenseNet*> trainable_nets();
    const WorldModelConfig& config() const { return cfg_; }

    void save(std::ostream& os) const;
    void load(std::istream& is);

    // Target-copy access for tests.
    const std::vector<DenseNet>& q_targets() const { return q_target_; }
    const std::vector<DenseNet>& qc_targets() const { return qc_target_; }
    std::vector<DenseNet>& q_heads() { return q_; }
    std::vector<DenseNet>& qc_heads() { return qc_; }
    std::vector<DenseNet>& cost_heads_nets() { return cost_; }
    DenseNet& dynamics_net() { return dynamics_; }
    DenseNet& encoder_net() { return encoder_; }

    // Used by SafePolicy's loss: tape-level rollout building blocks.
    Tape::Var dynamics_forward(Tape& t, Tape::Var za) { return dynamics_.forward(t, za, false); }
    Tape::Var q_head_value(Tape& t, Tape::Var za, int head);       // decoded scalar row
    Tape::Var qc_head_value(Tape& t, Tape::Var za, int head);
    int num_q() const { return cfg_.num_q; }
    int num_qc() const { return cfg_.num_qc; }

private:
    Vec decode_scalar_heads(const std::vector<DenseNet>& heads, const Mat& z, const Mat& a,
                            bool average) const;
    Mat head_input(const Mat& z, const Mat& a) const;

    WorldModelConfig cfg_;
    DenseNet encoder_, dynamics_, reward_;
    std::vector<DenseNet> q_, cost_, qc_;
    std::vector<DenseNet> q_target_, qc_target_;
    std::optional<DenseNet> decoder_;
};

}  // namespace spowl

#pragma once

#include "spowl/model_interface.hpp"
#include "spowl/net.hpp"
#include "spowl/world_model.hpp"

#include <iosfwd>

namespace spowl {

/// Augmented-Lagrangian bookkeeping carried across optimization steps.
struct LagrangianState {
    double lambda = 0.0;   // multiplier, never negative
    double mu = 1.0;       // penalty, non-decreasing
    double nu = 1e-4;      // penalty growth rate
    double budget = 0.1;   // safety threshold b
    long k = 0;

    void validate() const {
        if (lambda < 0.0 || mu < 0.0 || nu < 0.0)
            throw ConfigError("LagrangianState: lambda, mu, nu must be non-negative");
    }
};

/// Piecewise penalty term and the next multiplier:
///   if lambda + mu*delta >= 0:  Psi = lambda*delta + mu/2*delta^2, lambda' = lambda + mu*delta
///   else:                       Psi = -lambda^2/(2*mu),            lambda' = 0
struct PsiResult {
    double psi;
    double lambda_next;
};
PsiResult psi_and_multiplier(double delta, const LagrangianState& state);

/// mu <- max(mu*(nu+1), 1), k incremented.
LagrangianState penalty_update(LagrangianState state);

struct PolicyConfig {
    int latent_dim = 0;
    int action_dim = 0;
    int hidden = 128;
    double alpha = 1.0;        // reward-value coefficient
    double beta = 1e-3;        // entropy coefficient
    double log_std_min = -8.0;
    double log_std_max = 1.0;

    void validate() const {
        if (latent_dim < 1 || action_dim < 1) throw ConfigError("PolicyConfig: dims required");
        if (!(log_std_min < log_std_max)) throw ConfigError("PolicyConfig: bad log-std range");
    }
};

struct PolicyLossStats {
    double total = 0.0;
    double q_term = 0.0;
    double entropy = 0.0;   // estimated policy entropy (mean -logp)
    double psi = 0.0;
    double delta = 0.0;     // detached constraint violation measure
};

/// Tanh-squashed diagonal-Gaussian policy over latents, trained against
/// a frozen world-model snapshot with the Augmented Lagrangian penalty.
class SafePolicy final : public ActionSampler {
public:
    SafePolicy(PolicyConfig cfg, std::uint64_t init_seed);

    // (action, log-prob) with the tanh change-of-variables correction.
    std::pair<Vec, double> sample_action(const Vec& z, bool deterministic, Rng& rng) const;
    double log_prob(const Vec& z, const Vec& pre_tanh_action) const;

    Mat sample(const Mat& z, Rng& rng) const override;
    Mat mean_action(const Mat& z) const override;

    // Constraint violation measure: mean over a latent rollout of
    // cost_value_avg(z_t, pi(z_t)) - budget, deterministic actions.
    double delta(const Mat& latents0, WorldModel& model, const LagrangianState& lagr,
                 int horizon) const;

    // Builds Eq-style maximum-entropy + Augmented-Lagrangian loss on a
    // tape, runs backward into this net only. World-model parameters are
    // treated as constants.
    PolicyLossStats policy_loss_backward(const SegmentBatch& batch, WorldModel& model,
                                         const LagrangianState& lagr, Rng& rng);

    void zero_grad() { net_.zero_grad(); }
    DenseNet& net() { return net_; }
    const PolicyConfig& config() const { return cfg_; }

    void save(std::ostream& os) const { net_.save(os); }
    void load(std::istream& is) { net_.load(is); }

private:
    // Splits trunk output into (mean, soft-clamped log-std).
    std::pair<Mat, Mat> dist_params(const Mat& z) const;

    PolicyConfig cfg_;
    DenseNet net_;
};

}  // namespace spowl

#include "spowl/safe_policy.hpp"

#include <cmath>

namespace spowl {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*ln(2*pi)
constexpr double kTanhEps = 1e-9;
}  // namespace

PsiResult psi_and_multiplier(double delta, const LagrangianState& state) {
    state.validate();
    double lam = state.lambda, mu = state.mu;
    if (lam + mu * delta >= 0.0)
        return {lam * delta + 0.5 * mu * delta * delta, lam + mu * delta};
    return {-lam * lam / (2.0 * mu), 0.0};
}

LagrangianState penalty_update(LagrangianState state) {
    state.validate();
    state.mu = std::max(state.mu * (state.nu + 1.0), 1.0);
    ++state.k;
    return state;
}

SafePolicy::SafePolicy(PolicyConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(init_seed);
    net_ = DenseNet({cfg_.latent_dim, cfg_.hidden, 2 * cfg_.action_dim}, Activation::Mish,
                    Activation::Linear, rng, 0, 0.1);
}

std::pair<Mat, Mat> SafePolicy::dist_params(const Mat& z) const {
    Mat out = net_.forward(z);
    Mat mean = out.topRows(cfg_.action_dim);
    Mat u = out.bottomRows(cfg_.action_dim);
    double lo = cfg_.log_std_min, hi = cfg_.log_std_max;
    Mat log_std = (lo + 0.5 * (hi - lo) * (u.array().tanh() + 1.0)).matrix();
    return {mean, log_std};
}

std::pair<Vec, double> SafePolicy::sample_action(const Vec& z, bool deterministic,
                                                Rng& rng) const {
    auto [mean, log_std] = dist_params(Mat(z));
    Vec pre = mean.col(0);
    if (!deterministic) {
        std::normal_distribution<double> n01(0.0, 1.0);
        for (Eigen::Index i = 0; i < pre.size(); ++i)
            pre(i) += std::exp(log_std(i, 0)) * n01(rng);
    }
    Vec a = pre.array().tanh();
    double logp = 0.0;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
        double e = (pre(i) - mean(i, 0)) / std::exp(log_std(i, 0));
        logp += -0.5 * e * e - log_std(i, 0) - kHalfLog2Pi;
        logp -= std::log(1.0 - a(i) * a(i) + kTanhEps);
    }
    return {a, logp};
}

double SafePolicy::log_prob(const Vec& z, const Vec& pre_tanh_action) const {
    auto [mean, log_std] = dist_params(Mat(z));
    double logp = 0.0;
    for (Eigen::Index i = 0; i < pre_tanh_action.size(); ++i) {
        double tanh_a = std::tanh(pre_tanh_action(i));
        double e = (pre_tanh_action(i) - mean(i, 0)) / std::exp(log_std(i, 0));
        logp += -0.5 * e * e - log_std(i, 0) - kHalfLog2Pi;
        logp -= std::log(1.0 - tanh_a * tanh_a + kTanhEps);
    }
    return logp;
}

Mat SafePolicy::sample(const Mat& z, Rng& rng) const {
    auto [mean, log_std] = dist_params(z);
    std::normal_distribution<double> n01(0.0, 1.0);
    Mat pre = mean;
    for (Eigen::Index j = 0; j < pre.cols(); ++j)
        for (Eigen::Index i = 0; i < pre.rows(); ++i)
            pre(i, j) += std::exp(log_std(i, j)) * n01(rng);
    return pre.array().tanh();
}

Mat SafePolicy::mean_action(const Mat& z) const {
    auto [mean, log_std] = dist_params(z);
    (void)log_std;
    return mean.array().tanh();
}

double SafePolicy::delta(const Mat& latents0, WorldModel& model, const LagrangianState& lagr,
                         int horizon) const {
    Mat z = latents0;
    double acc = 0.0;
    for (int t = 0; t <= horizon; ++t) {
        Mat a = mean_action(z);
        acc += model.cost_value_avg(z, a).mean();
        if (t < horizon) z = model.next(z, a);
    }
    return acc / static_cast<double>(horizon + 1) - lagr.budget;
}

PolicyLossStats SafePolicy::policy_loss_backward(const SegmentBatch& batch, WorldModel& model,
                                                 const LagrangianState& lagr, Rng& rng) {
    lagr.validate();
    int H = batch.horizon();
    int B = batch.batch;
    int ad = cfg_.action_dim;
    double invB = 1.0 / static_cast<double>(B);
    double lo = cfg_.log_std_min, hi = cfg_.log_std_max;

    Tape tape;
    Tape::Var z = tape.constant(model.encode(batch.obs[0]));
    Tape::Var total = tape.constant(Mat::Zero(1, 1));
    Tape::Var qc_acc = tape.constant(Mat::Zero(1, 1));

    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, model.num_q() - 1);
    PolicyLossStats stats;
    double w = 1.0;
    double w_sum = 0.0;

    for (int t = 0; t <= H; ++t) {
        Tape::Var out = net_.forward(tape, z, true);
        Tape::Var mean = tape.rows(out, 0, ad);
        Tape::Var u = tape.rows(out, ad, ad);
        Tape::Var log_std = tape.add_scalar(
            tape.scale(tape.add_scalar(tape.tanh_(u), 1.0), 0.5 * (hi - lo)), lo);
        Tape::Var std = tape.exp_(log_std);

        Mat eps = Mat::NullaryExpr(ad, B, [&]() { return n01(rng); });
        Tape::Var pre = tape.add(mean, tape.mul(std, tape.constant(eps)));
        Tape::Var action = tape.tanh_(pre);

        // log-prob of the sampled action, summed over batch and dims
        double const_part = (-0.5 * eps.array().square() - kHalfLog2Pi).sum();
        Tape::Var asq = tape.square(action);
        Tape::Var jac = tape.log_(tape.add_scalar(tape.scale(asq, -1.0), 1.0 + kTanhEps));
        Tape::Var logp = tape.add_scalar(
            tape.sub(tape.scale(tape.sum(log_std), -1.0), tape.sum(jac)), const_part);

        Tape::Var za = tape.concat_rows(z, action);

        int i = pick(rng);
        int j = pick(rng);
        while (j == i) j = pick(rng);
        Tape::Var q = tape.sum(
            tape.min2(model.q_head_value(tape, za, i), model.q_head_value(tape, za, j)));

        Tape::Var qc = model.qc_head_value(tape, za, 0);
        for (int h = 1; h < model.num_qc(); ++h)
            qc = tape.add(qc, model.qc_head_value(tape, za, h));
        qc_acc = tape.add(qc_acc, tape.scale(tape.sum(qc), 1.0 / model.num_qc()));

        Tape::Var step = tape.add(tape.scale(q, -cfg_.alpha * invB),
                                  tape.scale(logp, cfg_.beta * invB));
        total = tape.add(total, tape.scale(step, w));

        stats.q_term += w * cfg_.alpha * invB * tape.value(q)(0, 0);
        stats.entropy += -invB * tape.value(logp)(0, 0);
        w_sum += 1.0;
        w *= model.config().lambda;

        if (t < H) z = model.dynamics_forward(tape, za);
    }
    stats.entropy /= w_sum;

    // Constraint violation measure over the rolled latents; the branch
    // choice uses the detached value, the penalty itself stays on tape
    // so it can steer the policy.
    Tape::Var delta_var = tape.add_scalar(
        tape.scale(qc_acc, invB / static_cast<double>(H + 1)), -lagr.budget);
    stats.delta = tape.value(delta_var)(0, 0);
    Tape::Var psi;
    if (lagr.lambda + lagr.mu * stats.delta >= 0.0) {
        psi = tape.add(tape.scale(delta_var, lagr.lambda),
                       tape.scale(tape.square(delta_var), 0.5 * lagr.mu));
    } else {
        Mat c(1, 1);
        c(0, 0) = -lagr.lambda * lagr.lambda / (2.0 * lagr.mu);
        psi = tape.constant(c);
    }
    stats.psi = tape.value(psi)(0, 0);
    total = tape.add(total, psi);

    stats.total = tape.value(total)(0, 0);
    check_finite(stats.total, "policy loss");
    tape.backward(total);
    return stats;
}

}  // namespace spowl

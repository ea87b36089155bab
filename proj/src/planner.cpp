#include "spowl/planner.hpp"

#include <algorithm>
#include <numeric>

namespace spowl {

Mat Planner::generate_policy_prior(const Vec& z0, const ActionSampler& policy,
                                   const DynamicsModel& model, int horizon, int count,
                                   Rng& rng) {
    if (count < 1) throw ConfigError("generate_policy_prior: count must be >= 1");
    int ad = model.action_dim();
    Mat z = z0.replicate(1, count);
    Mat actions(horizon * ad, count);
    for (int t = 0; t < horizon; ++t) {
        Mat a = policy.sample(z, rng);
        actions.middleRows(t * ad, ad) = a;
        if (t + 1 < horizon) z = model.next(z, a);
    }
    return actions;
}

std::pair<Vec, Vec> Planner::estimate_values(const Vec& z0, const Mat& actions,
                                             const DynamicsModel& model,
                                             const ActionSampler& policy, int horizon,
                                             bool include_cost_bootstrap) {
    int n = static_cast<int>(actions.cols());
    int ad = model.action_dim();
    if (actions.rows() != horizon * ad)
        throw ConfigError("estimate_values: action stack height mismatch");
    Mat z = z0.replicate(1, n);
    Vec jm = Vec::Zero(n), jmc = Vec::Zero(n);
    double g = 1.0, gc = 1.0;
    for (int t = 0; t < horizon; ++t) {
        Mat a = actions.middleRows(t * ad, ad);
        jm += g * model.reward(z, a);
        jmc += gc * model.cost_max(z, a);
        z = model.next(z, a);
        g *= model.gamma();
        gc *= model.gamma_c();
    }
    // Terminal bootstrap with the deterministic policy action.
    Mat a_h = policy.mean_action(z);
    jm += g * model.value_avg(z, a_h);
    if (include_cost_bootstrap) jmc += gc * model.cost_value_avg(z, a_h);
    return {jm, jmc};
}

std::pair<double, double> Planner::set_thresholds(const Vec& prior_jm, const Vec& prior_jmc) {
    if (prior_jm.size() == 0 || prior_jm.size() != prior_jmc.size())
        throw ConfigError("set_thresholds: empty or mismatched prior estimates");
    return {prior_jm.mean(), prior_jmc.mean()};
}

namespace {

std::vector<int> top_k_stable(const std::vector<int>& idx, const Vec& key, int k,
                              bool descending) {
    std::vector<int> order = idx;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return descending ? key(a) > key(b) : key(a) < key(b);
    });
    if (static_cast<int>(order.size()) > k) order.resize(static_cast<size_t>(k));
    return order;
}

}  // namespace

std::vector<int> Planner::select_elites(const CandidateSet& cands, double d_r, double d_c,
                                        int k, bool* fallback) {
    std::vector<int> impr;
    for (int i = 0; i < cands.size(); ++i)
        if (cands.jm(i) >= d_r && cands.jmc(i) <= d_c) impr.push_back(i);
    if (fallback) *fallback = impr.empty();
    if (impr.empty()) {
        std::vector<int> prior(static_cast<size_t>(cands.prior_count));
        std::iota(prior.begin(), prior.end(), 0);
        return prior;
    }
    if (static_cast<int>(impr.size()) <= k) return impr;
    return top_k_stable(impr, cands.jm, k, /*descending=*/true);
}

std::vector<int> Planner::select_elites_cce(const CandidateSet& cands, double d_plan, int k,
                                            bool* fallback) {
    std::vector<int> feasible;
    for (int i = 0; i < cands.size(); ++i)
        if (cands.jmc(i) < d_plan) feasible.push_back(i);
    if (fallback) *fallback = feasible.empty();
    if (feasible.empty()) {
        std::vector<int> all(static_cast<size_t>(cands.size()));
        std::iota(all.begin(), all.end(), 0);
        return top_k_stable(all, cands.jmc, k, /*descending=*/false);
    }
    if (static_cast<int>(feasible.size()) <= k) return feasible;
    return top_k_stable(feasible, cands.jm, k, /*descending=*/true);
}

PlanOutcome Planner::plan(const Vec& z0, const Mat& warm_mean, const DynamicsModel& model,
                          const ActionSampler& policy, Rng& rng) const {
    int ad = model.action_dim();
    int H = cfg_.horizon;
    if (warm_mean.rows() != ad || warm_mean.cols() != H)
        throw ConfigError("plan: warm-start mean must be action_dim x horizon");

    Mat prior = generate_policy_prior(z0, policy, model, H, cfg_.prior_samples, rng);
    auto [prior_jm, prior_jmc] =
        estimate_values(z0, prior, model, policy, H, cfg_.mode != PlanMode::CceLocal);

    Mat mu = warm_mean;
    Mat sigma = Mat::Constant(ad, H, cfg_.sigma_init);

    std::normal_distribution<double> n01(0.0, 1.0);
    CandidateSet cands;
    std::vector<int> elites;
    bool fallback = false;

    for (int it = 0; it < cfg_.iterations; ++it) {
        int n = cfg_.prior_samples + cfg_.samples;
        cands.actions.resize(H * ad, n);
        cands.actions.leftCols(cfg_.prior_samples) = prior;
        cands.prior_count = cfg_.prior_samples;
        for (int j = cfg_.prior_samples; j < n; ++j) {
            for (int t = 0; t < H; ++t)
                for (int i = 0; i < ad; ++i)
                    cands.actions(t * ad + i, j) =
                        std::clamp(mu(i, t) + sigma(i, t) * n01(rng), -1.0, 1.0);
        }

        cands.jm.resize(n);
        cands.jmc.resize(n);
        cands.jm.head(cfg_.prior_samples) = prior_jm;
        cands.jmc.head(cfg_.prior_samples) = prior_jmc;
        if (cfg_.samples > 0) {
            auto [jm_s, jmc_s] = estimate_values(
                z0, cands.actions.rightCols(cfg_.samples), model, policy, H,
                cfg_.mode != PlanMode::CceLocal);
            cands.jm.tail(cfg_.samples) = jm_s;
            cands.jmc.tail(cfg_.samples) = jmc_s;
        }

        if (cfg_.mode == PlanMode::Adaptive) {
            auto [d_r, d_c] = set_thresholds(prior_jm, prior_jmc);
            elites = select_elites(cands, d_r, d_c, cfg_.elite_k, &fallback);
        } else {
            elites = select_elites_cce(cands, cfg_.d_plan, cfg_.elite_k, &fallback);
        }

        // Refit the sampling distribution to the elite set.
        int ne = static_cast<int>(elites.size());
        for (int t = 0; t < H; ++t) {
            for (int i = 0; i < ad; ++i) {
                double m = 0.0;
                for (int e : elites) m += cands.actions(t * ad + i, e);
                m /= ne;
                double var = 0.0;
                for (int e : elites) {
                    double d = cands.actions(t * ad + i, e) - m;
                    var += d * d;
                }
                var /= ne;
                mu(i, t) = m;
                sigma(i, t) = std::max(std::sqrt(var), cfg_.sigma_floor);
            }
        }
    }

    // Draw the executed sequence from the final elite set.
    int chosen;
    if (cfg_.score_weighted_sampling) {
        Vec w(elites.size());
        for (size_t e = 0; e < elites.size(); ++e) w(static_cast<Eigen::Index>(e)) = cands.jm(elites[e]);
        w = (w.array() - w.maxCoeff()).exp();
        std::discrete_distribution<int> d(w.data(), w.data() + w.size());
        chosen = elites[static_cast<size_t>(d(rng))];
    } else {
        std::uniform_int_distribution<int> d(0, static_cast<int>(elites.size()) - 1);
        chosen = elites[static_cast<size_t>(d(rng))];
    }

    PlanOutcome out;
    out.action = cands.actions.col(chosen).head(ad);
    out.mean = mu;
    out.sigma = sigma;
    out.elite_count = static_cast<int>(elites.size());
    out.fallback = fallback;
    double jm_sum = 0.0, jmc_sum = 0.0;
    for (int e : elites) {
        jm_sum += cands.jm(e);
        jmc_sum += cands.jmc(e);
    }
    out.jm = jm_sum / static_cast<double>(elites.size());
    out.jmc = jmc_sum / static_cast<double>(elites.size());
    return out;
}

Mat shift_warm_start(const Mat& mean) {
    Mat out = Mat::Zero(mean.rows(), mean.cols());
    if (mean.cols() > 1) out.leftCols(mean.cols() - 1) = mean.rightCols(mean.cols() - 1);
    return out;
}

}  // namespace spowl

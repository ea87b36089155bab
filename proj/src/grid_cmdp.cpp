#include "spowl/envs/grid_cmdp.hpp"

#include <algorithm>

namespace spowl {

void GridConfig::validate() const {
    if (size < 2) throw ConfigError("GridCMDP: size must be >= 2");
    if (noise < 0.0 || noise > 1.0) throw ConfigError("GridCMDP: noise in [0,1]");
    if (!cell_reward.empty() && static_cast<int>(cell_reward.size()) != num_states())
        throw ConfigError("GridCMDP: cell_reward size mismatch");
    if (!cell_cost.empty() && static_cast<int>(cell_cost.size()) != num_states())
        throw ConfigError("GridCMDP: cell_cost size mismatch");
    for (double c : cell_cost)
        if (c < 0.0) throw ConfigError("GridCMDP: costs must be non-negative");
    if (start_state < 0 || start_state >= num_states())
        throw ConfigError("GridCMDP: bad start state");
}

GridCMDP::GridCMDP(GridConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.cell_reward.empty()) cfg_.cell_reward.assign(cfg_.num_states(), 0.0);
    if (cfg_.cell_cost.empty()) cfg_.cell_cost.assign(cfg_.num_states(), 0.0);
    build_kernels();
}

int GridCMDP::deterministic_successor(int s, int a) const {
    if (std::find(cfg_.absorbing.begin(), cfg_.absorbing.end(), s) != cfg_.absorbing.end())
        return s;
    int x = s % cfg_.size, y = s / cfg_.size;
    switch (a) {
        case 0: y = std::min(y + 1, cfg_.size - 1); break;
        case 1: y = std::max(y - 1, 0); break;
        case 2: x = std::max(x - 1, 0); break;
        case 3: x = std::min(x + 1, cfg_.size - 1); break;
        default: throw ConfigError("GridCMDP: bad action index");
    }
    return y * cfg_.size + x;
}

void GridCMDP::build_kernels() {
    int n = cfg_.num_states();
    kernels_.assign(kNumActions, Mat::Zero(n, n));
    exp_r_.assign(kNumActions, Vec::Zero(n));
    exp_c_.assign(kNumActions, Vec::Zero(n));
    for (int a = 0; a < kNumActions; ++a) {
        for (int s = 0; s < n; ++s) {
            kernels_[a](s, deterministic_successor(s, a)) += 1.0 - cfg_.noise;
            for (int b = 0; b < kNumActions; ++b)
                kernels_[a](s, deterministic_successor(s, b)) += cfg_.noise / kNumActions;
            for (int s2 = 0; s2 < n; ++s2) {
                exp_r_[a](s) += kernels_[a](s, s2) * cfg_.cell_reward[s2];
                exp_c_[a](s) += kernels_[a](s, s2) * cfg_.cell_cost[s2];
            }
        }
    }
}

Vec GridCMDP::one_hot(int s, int n) {
    Vec v = Vec::Zero(n);
    v(s) = 1.0;
    return v;
}

int GridCMDP::argmax_action(const Vec& action) {
    if (action.size() != kNumActions) throw ConfigError("GridCMDP: action must be 4-D");
    Eigen::Index best = 0;
    action.maxCoeff(&best);
    return static_cast<int>(best);
}

Vec GridCMDP::reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = cfg_.start_state;
    t_ = 0;
    done_ = false;
    return observe();
}

StepResult GridCMDP::step(const Vec& action) {
    if (done_) throw ConfigError("GridCMDP::step called on a finished episode");
    int a = argmax_action(action);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (cfg_.noise > 0.0 && u(rng_) < cfg_.noise) {
        std::uniform_int_distribution<int> pick(0, kNumActions - 1);
        a = pick(rng_);
    }
    state_ = deterministic_successor(state_, a);
    ++t_;
    StepResult r;
    r.reward = cfg_.cell_reward[static_cast<size_t>(state_)];
    r.cost = cfg_.cell_cost[static_cast<size_t>(state_)];
    r.done = done_ = (t_ >= cfg_.episode_length);
    r.obs = observe();
    return r;
}

std::pair<Vec, Vec> grid_oracle_values(const GridCMDP& env, const Mat& policy_table,
                                       double gamma, double gamma_c) {
    int n = env.config().num_states();
    if (policy_table.rows() != n || policy_table.cols() != GridCMDP::kNumActions)
        throw ConfigError("grid_oracle_values: policy table shape mismatch");
    for (int s = 0; s < n; ++s) {
        if (std::abs(policy_table.row(s).sum() - 1.0) > 1e-9 || policy_table.row(s).minCoeff() < 0.0)
            throw ConfigError("grid_oracle_values: policy rows must be stochastic");
    }

    Mat P = Mat::Zero(n, n);
    Vec r = Vec::Zero(n), c = Vec::Zero(n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < GridCMDP::kNumActions; ++a) {
            double pa = policy_table(s, a);
            if (pa == 0.0) continue;
            P.row(s) += pa * env.kernel(a).row(s);
            r(s) += pa * env.expected_reward(s, a);
            c(s) += pa * env.expected_cost(s, a);
        }
    }

    auto evaluate = [&](const Vec& rew, double g) {
        Vec v = Vec::Zero(n);
        for (int it = 0; it < 1000000; ++it) {
            Vec nv = rew + g * (P * v);
            if ((nv - v).cwiseAbs().maxCoeff() < 1e-12) return nv;
            v = nv;
        }
        return v;
    };
    return {evaluate(r, gamma), evaluate(c, gamma_c)};
}

}  // namespace spowl

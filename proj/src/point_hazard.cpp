#include "spowl/envs/point_hazard.hpp"

#include <algorithm>

namespace spowl {

PointHazardEnv::PointHazardEnv(PointHazardConfig cfg) : cfg_(cfg) {
    if (cfg_.num_hazards < 0 || cfg_.episode_length < 1 || cfg_.hazard_radius <= 0.0)
        throw ConfigError("PointHazardEnv: bad config");
    pos_.setZero();
    vel_.setZero();
    goal_.setZero();
}

Vec PointHazardEnv::reset(std::uint64_t seed) {
    rng_.seed(seed);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    auto draw = [&]() { return Eigen::Vector2d(u(rng_), u(rng_)); };

    pos_ = draw();
    do {
        goal_ = draw();
    } while ((goal_ - pos_).norm() < 0.8);

    double clear = cfg_.hazard_radius + cfg_.spawn_clearance;
    hazards_.clear();
    while (static_cast<int>(hazards_.size()) < cfg_.num_hazards) {
        Eigen::Vector2d h = draw();
        if ((h - pos_).norm() < clear) continue;
        if ((h - goal_).norm() < cfg_.hazard_radius + cfg_.goal_tolerance) continue;
        hazards_.push_back(h);
    }

    vel_.setZero();
    t_ = 0;
    done_ = false;
    return observe();
}

bool PointHazardEnv::in_hazard(const Eigen::Vector2d& p) const {
    return std::any_of(hazards_.begin(), hazards_.end(), [&](const Eigen::Vector2d& h) {
        return (p - h).norm() < cfg_.hazard_radius;
    });
}

StepResult PointHazardEnv::step(const Vec& action) {
    if (done_) throw ConfigError("PointHazardEnv::step called on a finished episode");
    if (action.size() != 2) throw ConfigError("PointHazardEnv: action must be 2-D");

    Eigen::Vector2d a = action.cwiseMax(-1.0).cwiseMin(1.0);
    vel_ = (vel_ + cfg_.accel * a).cwiseMax(-cfg_.max_speed).cwiseMin(cfg_.max_speed);

    double prev_dist = (goal_ - pos_).norm();
    for (int i = 0; i < 2; ++i) {
        double next = pos_[i] + cfg_.dt * vel_[i];
        if (next > 1.0 || next < -1.0) {
            next = std::clamp(next, -1.0, 1.0);
            vel_[i] = 0.0;  // clipped at the arena wall
        }
        pos_[i] = next;
    }
    double dist = (goal_ - pos_).norm();

    StepResult r;
    r.reward = cfg_.shaping_coef * (prev_dist - dist);
    r.cost = in_hazard(pos_) ? 1.0 : 0.0;

    ++t_;
    if (dist < cfg_.goal_tolerance) {
        r.reward += cfg_.goal_bonus;
        done_ = true;
    } else if (t_ >= cfg_.episode_length) {
        done_ = true;
    }
    r.done = done_;
    r.obs = observe();
    return r;
}

Vec PointHazardEnv::observe() const {
    Vec obs(obs_dim());
    obs.segment<2>(0) = vel_;
    obs.segment<2>(2) = goal_ - pos_;

    std::vector<int> order(hazards_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return (hazards_[a] - pos_).norm() < (hazards_[b] - pos_).norm();
    });
    for (int k = 0; k < cfg_.obs_hazards; ++k) {
        int base = 4 + 3 * k;
        if (k < static_cast<int>(order.size())) {
            Eigen::Vector2d d = hazards_[order[k]] - pos_;
            obs(base) = d.x();
            obs(base + 1) = d.y();
            obs(base + 2) = cfg_.hazard_radius;
        } else {
            obs(base) = 2.0;
            obs(base + 1) = 2.0;
            obs(base + 2) = 0.0;
        }
    }
    return obs;
}

}  // namespace spowl

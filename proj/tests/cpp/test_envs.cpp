#include "doctest.h"

#include "spowl/envs/grid_cmdp.hpp"
#include "spowl/envs/point_hazard.hpp"
#include "spowl/oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace spowl;

TEST_CASE("point hazard resets are reproducible and clear of hazards") {
    PointHazardEnv env;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Vec a = env.reset(seed);
        PointHazardEnv env2;
        Vec b = env2.reset(seed);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bitwise
        CHECK_FALSE(env.in_hazard(env.position()));   // spawn clearance
    }
}

TEST_CASE("goal placement never lands inside a hazard (sampling audit)") {
    PointHazardEnv env;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        env.reset(seed);
        CHECK_FALSE(env.in_hazard(env.goal()));
    }
}

TEST_CASE("zero action from rest leaves the agent in place") {
    PointHazardEnv env;
    env.reset(3);
    Eigen::Vector2d before = env.position();
    StepResult r = env.step(Vec::Zero(2));
    CHECK((env.position() - before).norm() == 0.0);
    CHECK(r.cost == 0.0);  // started outside hazards, did not move
    CHECK(r.reward == doctest::Approx(0.0));
}

TEST_CASE("hazard contact yields unit cost") {
    // Dense, large hazards: a random walk must collide quickly.
    PointHazardConfig cfg;
    cfg.num_hazards = 8;
    cfg.hazard_radius = 0.4;
    cfg.spawn_clearance = 0.05;
    PointHazardEnv env(cfg);
    Rng rng(201);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    bool hit = false;
    for (std::uint64_t seed = 1; seed <= 20 && !hit; ++seed) {
        env.reset(seed);
        for (int t = 0; t < cfg.episode_length; ++t) {
            Vec a(2);
            a << u(rng), u(rng);
            StepResult r = env.step(a);
            CHECK((r.cost == 0.0 || r.cost == 1.0));
            CHECK(r.cost == (env.in_hazard(env.position()) ? 1.0 : 0.0));
            if (r.cost == 1.0) hit = true;
            if (r.done) break;
        }
    }
    CHECK(hit);
}

TEST_CASE("stepping a finished episode is an error") {
    PointHazardConfig cfg;
    cfg.episode_length = 2;
    PointHazardEnv env(cfg);
    env.reset(9);
    env.step(Vec::Zero(2));
    StepResult r = env.step(Vec::Zero(2));
    CHECK(r.done);
    CHECK_THROWS_AS((void)env.step(Vec::Zero(2)), ConfigError);
}

TEST_CASE("trajectories replay bit-for-bit under a fixed seed") {
    PointHazardEnv a, b;
    a.reset(77);
    b.reset(77);
    Rng rng(78);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        Vec act(2);
        act << u(rng), u(rng);
        StepResult ra = a.step(act);
        StepResult rb = b.step(act);
        CHECK(ra.reward == rb.reward);
        CHECK(ra.cost == rb.cost);
        CHECK((ra.obs - rb.obs).cwiseAbs().maxCoeff() == 0.0);
        if (ra.done) break;
    }
}

TEST_CASE("cumulative reward telescopes to the travelled progress plus bonus") {
    PointHazardConfig cfg;
    cfg.num_hazards = 0;  // hazard-free world
    PointHazardEnv env(cfg);
    Vec obs = env.reset(5);

    // Independent hand simulation of the clipped double integrator.
    Eigen::Vector2d pos = env.position(), vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d goal = env.goal();
    double d0 = (goal - pos).norm();
    double total = 0.0;
    bool reached = false;
    for (int t = 0; t < cfg.episode_length; ++t) {
        // Velocity controller: steer current velocity toward k*(goal - pos).
        Eigen::Vector2d desired = (2.0 * (goal - pos)).cwiseMax(-cfg.max_speed).cwiseMin(cfg.max_speed);
        Eigen::Vector2d raw = (desired - vel) / cfg.accel;
        Vec a(2);
        a << std::clamp(raw.x(), -1.0, 1.0), std::clamp(raw.y(), -1.0, 1.0);
        StepResult r = env.step(a);
        total += r.reward;

        vel = (vel + cfg.accel * Eigen::Vector2d(a(0), a(1)))
                  .cwiseMax(-cfg.max_speed)
                  .cwiseMin(cfg.max_speed);
        for (int i = 0; i < 2; ++i) {
            double next = pos[i] + cfg.dt * vel[i];
            if (next > 1.0 || next < -1.0) {
                next = std::clamp(next, -1.0, 1.0);
                vel[i] = 0.0;
            }
            pos[i] = next;
        }
        CHECK((env.position() - pos).norm() < 1e-12);
        if (r.done) {
            reached = (goal - pos).norm() < cfg.goal_tolerance;
            break;
        }
    }
    REQUIRE(reached);
    double dT = (goal - pos).norm();
    CHECK(total == doctest::Approx(cfg.shaping_coef * (d0 - dT) + cfg.goal_bonus).epsilon(1e-9));
}

TEST_CASE("grid kernels are row-stochastic") {
    GridConfig cfg;
    cfg.size = 4;
    cfg.noise = 0.3;
    cfg.absorbing = {5};
    GridCMDP env(cfg);
    for (int a = 0; a < 4; ++a) {
        const Mat& P = env.kernel(a);
        for (int s = 0; s < cfg.num_states(); ++s) {
            CHECK(P.row(s).sum() == doctest::Approx(1.0));
            CHECK(P.row(s).minCoeff() >= 0.0);
        }
        CHECK(P(5, 5) == doctest::Approx(1.0));  // absorbing self-loop
    }
}

TEST_CASE("zero rewards evaluate to zero everywhere") {
    GridConfig cfg;
    cfg.size = 3;
    cfg.noise = 0.1;
    GridCMDP env(cfg);
    Mat uniform = Mat::Constant(9, 4, 0.25);
    auto [J, Jc] = grid_oracle_values(env, uniform, 0.9, 0.9);
    CHECK(J.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(Jc.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("absorbing unit-reward state is a geometric series") {
    GridConfig cfg;
    cfg.size = 2;
    cfg.noise = 0.0;
    cfg.cell_reward = {1.0, 0.0, 0.0, 0.0};
    cfg.absorbing = {0};
    GridCMDP env(cfg);
    Mat uniform = Mat::Constant(4, 4, 0.25);
    auto [J, Jc] = grid_oracle_values(env, uniform, 0.9, 0.9);
    CHECK(J(0) == doctest::Approx(10.0).epsilon(1e-8));  // 1/(1-0.9)
}

TEST_CASE("non-stochastic policy tables are rejected") {
    GridConfig cfg;
    cfg.size = 2;
    GridCMDP env(cfg);
    Mat bad = Mat::Constant(4, 4, 0.3);
    CHECK_THROWS_AS((void)grid_oracle_values(env, bad, 0.9, 0.9), ConfigError);
}

TEST_CASE("exact policy evaluation matches monte carlo (oracle suite)") {
    oracles::CheckResult r = oracles::check_grid_policy_eval();
    INFO(r.detail);
    CHECK(r.pass);
}

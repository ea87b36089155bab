// Acceptance gate: one pass/fail line per criterion. Criteria 1-5 and 9
// are exact/analytic checks; 6-8 are trend checks over short training
// runs on the point-hazard task; 10 is a byte-level determinism check.

#include "spowl/harness/trainer.hpp"
#include "spowl/oracles.hpp"
#include "spowl/safe_policy.hpp"
#include "spowl/world_model.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace spowl;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int idx, const std::string& what, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", idx, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void report(int idx, const std::string& what, const oracles::CheckResult& r) {
    report(idx, what, r.pass, r.detail);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criterion 9: strict min/avg/max ordering of cost TD targets ----

bool strict_cost_target_ordering(std::string& detail) {
    WorldModelConfig cfg;
    cfg.obs_dim = 3;
    cfg.action_dim = 2;
    cfg.latent_dim = 8;
    cfg.simnorm_group = 4;
    cfg.hidden = 8;
    cfg.num_q = cfg.num_cost = cfg.num_qc = 5;
    cfg.horizon = 2;
    cfg.bins = BinSpec{21, -5.0, 5.0};

    Rng rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int batch = 6;
    SegmentBatch seg;
    seg.batch = batch;
    for (int t = 0; t <= cfg.horizon; ++t) {
        Mat o(cfg.obs_dim, batch), a(cfg.action_dim, batch), no(cfg.obs_dim, batch);
        for (int c = 0; c < batch; ++c) {
            for (int i = 0; i < cfg.obs_dim; ++i) o(i, c) = u(rng), no(i, c) = u(rng);
            for (int i = 0; i < cfg.action_dim; ++i) a(i, c) = u(rng);
        }
        seg.obs.push_back(o);
        seg.actions.push_back(a);
        seg.next_obs.push_back(no);
        Vec r(batch), c(batch);
        for (int i = 0; i < batch; ++i) r(i) = u(rng), c(i) = std::abs(u(rng));
        seg.rewards.push_back(r);
        seg.costs.push_back(c);
        seg.done.push_back(Vec::Zero(batch));  // no terminals: bootstrap everywhere
    }

    PolicyConfig pc;
    pc.latent_dim = cfg.latent_dim;
    pc.action_dim = cfg.action_dim;
    pc.hidden = 8;
    SafePolicy pol(pc, 77);

    auto targets_for = [&](CostAgg agg) {
        WorldModelConfig c = cfg;
        c.cost_target_agg = agg;
        WorldModel wm(c, 99);  // same seed: identical ensembles, only the aggregation differs
        Rng r(515);
        return wm.td_targets(seg, pol, r).second;
    };
    Mat lo = targets_for(CostAgg::Min);
    Mat mid = targets_for(CostAgg::Avg);
    Mat hi = targets_for(CostAgg::Max);
    bool strict = ((lo.array() < mid.array()) && (mid.array() < hi.array())).all();
    std::ostringstream os;
    os << "min/avg/max cost targets strictly ordered elementwise over " << lo.size()
       << " entries (sample: " << lo(0, 0) << " < " << mid(0, 0) << " < " << hi(0, 0) << ")";
    detail = os.str();
    return strict;
}

// ---- criteria 6-8 and 10: training runs ----

const char* kTrendConfig = R"({
  "mode": "spowl",
  "env": {"type": "point_hazard", "episode_length": 100,
          "num_hazards": 6, "hazard_radius": 0.28},
  "model": {"latent_dim": 24, "simnorm_group": 6, "hidden": 48,
            "num_q": 3, "num_cost": 3, "num_qc": 3, "bins": 51,
            "gamma": 0.97, "gamma_c": 0.97},
  "policy": {"hidden": 48},
  "lagrangian": {"budget": 0.75},
  "planner": {"iterations": 3, "samples": 48, "prior_samples": 8, "elite_k": 12},
  "train": {"steps": 15000, "warmup": 1000, "batch": 32, "updates_per_step": 2,
            "model_lr": 5e-4, "policy_lr": 1e-3,
            "eval_every": 100000, "eval_episodes": 20, "checkpoint_every": 100000}
})";

struct RunOutcome {
    double ret = 0.0;       // mean return over the final 20 training episodes
    double cost = 0.0;      // mean cost over the final 20 training episodes
    double balance = 0.0;   // mean planner share over the final 20 episodes
    double cumulative_cost; // lifetime training cost
};

RunOutcome run_mode(const std::string& mode, std::uint64_t seed, double d_plan, fs::path root) {
    RunConfig cfg = RunConfig::from_json_text(kTrendConfig);
    cfg.mode = run_mode_from_string(mode);
    cfg.train.seed = seed;
    if (d_plan > 0.0) cfg.planner.d_plan = d_plan;
    cfg.finalize();
    fs::path dir = root / (mode + "_d" + std::to_string(int(d_plan)) + "_s" + std::to_string(seed));
    fs::create_directories(dir);
    Trainer trainer(cfg);
    auto t0 = std::chrono::steady_clock::now();
    trainer.train(dir.string());
    RunOutcome out;
    const auto& hist = trainer.episode_history();
    size_t tail = std::min<size_t>(20, hist.size());
    for (size_t i = hist.size() - tail; i < hist.size(); ++i) {
        out.ret += hist[i].ep_return / double(tail);
        out.cost += hist[i].ep_cost / double(tail);
        out.balance += hist[i].balance / double(tail);
    }
    out.cumulative_cost = trainer.total_cost();
    std::printf("       [run] mode=%-12s seed=%llu  return=%.2f cost=%.2f balance=%.3f "
                "cum_cost=%.0f  (%.0fs)\n",
                mode.c_str(), static_cast<unsigned long long>(seed), out.ret,
                out.cost, out.balance, out.cumulative_cost, elapsed_s(t0));
    std::fflush(stdout);
    return out;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();

    report(1, "gradient finite-difference integrity", [] {
        oracles::CheckResult m = oracles::check_gradients_model();
        oracles::CheckResult p = oracles::check_gradients_policy();
        oracles::CheckResult out{"gradients", m.pass && p.pass,
                                 m.detail + "; " + p.detail};
        return out;
    }());
    report(2, "piecewise penalty and multiplier hand table", oracles::check_lagrangian_table());
    report(3, "elite selection vs naive oracle (1e4 instances)", oracles::check_select_elites());
    report(4, "planner vs exhaustive search on the exact grid model", oracles::check_planner_grid());
    report(5, "latent/scalar codec suite", oracles::check_codec());

    {
        std::string detail;
        bool ok = strict_cost_target_ordering(detail);
        report(9, "cost-target aggregation strict ordering", ok, detail);
    }

    fs::path root = fs::temp_directory_path() / "spowl_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    // Criterion 10: byte-identical metrics for identical config + seed.
    {
        RunConfig cfg = RunConfig::from_json_text(kTrendConfig);
        cfg.mode = RunMode::Spowl;
        cfg.train.steps = 600;
        cfg.train.warmup = 200;
        cfg.train.seed = 12;
        cfg.finalize();
        fs::path d1 = root / "det1", d2 = root / "det2";
        fs::create_directories(d1);
        fs::create_directories(d2);
        Trainer(cfg).train(d1.string());
        Trainer(cfg).train(d2.string());
        bool same = slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv") &&
                    !slurp(d1 / "metrics.csv").empty();
        report(10, "byte-identical metrics across identical runs", same,
               same ? "metrics.csv matches byte for byte" : "metrics.csv differs between runs");
    }

    // Trend runs: 6 configurations x 3 seeds.
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    const double kSmallD = 0.5, kLargeD = 1e6;
    std::vector<RunOutcome> spowl, uncon, ponly, planonly, cce_small, cce_large;
    for (std::uint64_t s : seeds) {
        spowl.push_back(run_mode("spowl", s, -1.0, root));
        uncon.push_back(run_mode("unconstrained", s, -1.0, root));
        ponly.push_back(run_mode("policy-only", s, -1.0, root));
        planonly.push_back(run_mode("plan-only", s, -1.0, root));
        cce_small.push_back(run_mode("cce-global", s, kSmallD, root));
        cce_large.push_back(run_mode("cce-global", s, kLargeD, root));
    }
    auto returns = [](const std::vector<RunOutcome>& v) {
        std::vector<double> r;
        for (const auto& o : v) r.push_back(o.ret);
        return r;
    };
    auto costs = [](const std::vector<RunOutcome>& v) {
        std::vector<double> r;
        for (const auto& o : v) r.push_back(o.cost);
        return r;
    };

    // Criterion 6: constrained training keeps final-episode cost at <= 20%
    // of the unconstrained run while retaining >= 50% of its return
    // (seed means).
    {
        double sc = mean(costs(spowl)), uc = mean(costs(uncon));
        double sr = mean(returns(spowl)), ur = mean(returns(uncon));
        bool cost_ok = sc <= 0.2 * uc;
        bool ret_ok = sr >= 0.5 * ur;
        std::ostringstream os;
        os << "cost " << sc << " vs unconstrained " << uc << " (need <=20%); return " << sr
           << " vs " << ur << " (need >=50%)";
        report(6, "safety trend vs unconstrained baseline", cost_ok && ret_ok, os.str());
    }

    // Criterion 7: fixed low threshold caps return below the adaptive
    // mode; fixed high threshold accrues at least as much training cost
    // (each on >= 2 of 3 seeds).
    {
        int ret_seeds = 0, cost_seeds = 0;
        for (size_t i = 0; i < seeds.size(); ++i) {
            if (cce_small[i].ret <= spowl[i].ret) ++ret_seeds;
            if (cce_large[i].cumulative_cost >= spowl[i].cumulative_cost) ++cost_seeds;
        }
        std::ostringstream os;
        os << "tight-threshold return <= adaptive on " << ret_seeds
           << "/3 seeds; loose-threshold cumulative cost >= adaptive on " << cost_seeds
           << "/3 seeds (need >=2 each)";
        report(7, "adaptive vs fixed planning thresholds", ret_seeds >= 2 && cost_seeds >= 2,
               os.str());
    }

    // Criterion 8: switching matches the better pure mode within 10%,
    // and actually mixes plan and policy actions.
    {
        double sw = mean(returns(spowl));
        double best = std::max(mean(returns(ponly)), mean(returns(planonly)));
        double margin = 0.1 * std::abs(best);
        bool ret_ok = sw >= best - margin;
        std::vector<double> balances;
        for (const auto& o : spowl) balances.push_back(o.balance);
        double bal = mean(balances);
        bool bal_ok = bal > 0.0 && bal < 1.0;
        std::ostringstream os;
        os << "switching return " << sw << " vs best pure mode " << best << " (margin " << margin
           << "); mean balance " << bal;
        report(8, "plan/policy switching value", ret_ok && bal_ok, os.str());
    }

    std::printf("%d/10 criteria passed (%.0fs total)\n", 10 - failures, elapsed_s(t0));
    return failures == 0 ? 0 : 1;
}

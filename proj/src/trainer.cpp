#include "spowl/harness/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spowl {

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'P', 'O', 'W', 'L', 'C', 'K', '1'};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.8g", x);
    return buf;
}

}  // namespace

Trainer::Trainer(RunConfig cfg)
    : cfg_(std::move(cfg)),
      model_(cfg_.model, cfg_.train.seed * 7919 + 1),
      policy_(cfg_.policy, cfg_.train.seed * 7919 + 2),
      lagr_(cfg_.lagrangian),
      planner_(cfg_.planner),
      buffer_(cfg_.train.buffer_capacity) {}

bool Trainer::uses_planner() const {
    return cfg_.mode != RunMode::PolicyOnly;
}

Trainer::ActEnvResult Trainer::select_action(const Vec& obs, Mat& warm_mean,
                                             bool deterministic, Rng& rng) {
    ActEnvResult r;
    Vec z = model_.encode(obs);
    if (!uses_planner()) {
        r.action = policy_.sample_action(z, deterministic, rng).first;
        return r;
    }
    PlanOutcome plan = planner_.plan(z, warm_mean, model_, policy_, rng);
    warm_mean = shift_warm_start(plan.mean);
    if (uses_switching()) {
        Decision d = choose(z, plan.action, policy_, model_);
        r.from_plan = (d.source == ActionSource::Plan);
        if (r.from_plan)
            r.action = d.action;
        else
            r.action = deterministic ? d.action : policy_.sample_action(z, false, rng).first;
    } else {
        r.from_plan = true;
        r.action = plan.action;
    }
    return r;
}

void Trainer::update_models(Rng& rng, double& model_loss_out, double& policy_loss_out) {
    SegmentBatch batch =
        buffer_.sample_segments(cfg_.train.batch, cfg_.model.horizon, rng);

    model_.zero_grad();
    ModelLossStats ms = model_.model_loss_backward(batch, policy_, rng);
    model_opt_->step(model_.trainable_nets());
    model_.ema_update();

    policy_.zero_grad();
    PolicyLossStats ps = policy_.policy_loss_backward(batch, model_, lagr_, rng);
    policy_opt_->step(policy_.net());

    // Lagrangian bookkeeping from the same batch's violation measure.
    if (cfg_.mode != RunMode::Unconstrained) {
        lagr_.lambda = psi_and_multiplier(ps.delta, lagr_).lambda_next;
        lagr_ = penalty_update(lagr_);
    }
    last_delta_ = ps.delta;
    model_loss_out = ms.total;
    policy_loss_out = ps.total;
}

std::string Trainer::train(const std::string& run_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(run_dir);

    std::ofstream manifest(run_dir + "/manifest.json");
    manifest << cfg_.to_json_text() << "\n";
    manifest.close();

    std::ofstream metrics(run_dir + "/metrics.csv");
    metrics << "step,episode,return,cost,cost_rate,balance,delta,lambda,mu,model_loss,"
               "policy_loss\n";
    std::ofstream evalcsv(run_dir + "/eval.csv");
    evalcsv << "step,return_mean,return_std,cost_mean,cost_std,balance\n";

    model_opt_ = std::make_unique<AdamOptimizer>(cfg_.train.model_lr);
    policy_opt_ = std::make_unique<AdamOptimizer>(cfg_.train.policy_lr);

    Rng rng(cfg_.train.seed * 1000003 + 17);
    auto env = cfg_.env.make();
    std::uniform_real_distribution<double> ua(-1.0, 1.0);

    Vec obs = env->reset(cfg_.train.seed * 31 + 1);
    std::uint64_t episode_seed = cfg_.train.seed * 31 + 1;
    Mat warm_mean = Mat::Zero(model_.action_dim(), cfg_.planner.horizon);

    long episode = 0;
    double ep_return = 0.0, ep_cost = 0.0;
    long ep_plan_actions = 0, ep_decisions = 0;
    double ep_model_loss = 0.0, ep_policy_loss = 0.0;
    long ep_updates = 0;

    for (global_step_ = 0; global_step_ < cfg_.train.steps; ++global_step_) {
        ActEnvResult act;
        if (global_step_ < cfg_.train.warmup) {
            act.action = Vec::NullaryExpr(model_.action_dim(), [&]() { return ua(rng); });
        } else {
            act = select_action(obs, warm_mean, /*deterministic=*/false, rng);
        }
        StepResult sr = env->step(act.action);

        ReplayBuffer::Transition tr;
        tr.obs = obs;
        tr.action = act.action;
        tr.next_obs = sr.obs;
        tr.reward = sr.reward;
        tr.cost = sr.cost;
        tr.done = sr.done;
        buffer_.add(std::move(tr));

        obs = sr.obs;
        ep_return += sr.reward;
        ep_cost += sr.cost;
        total_cost_ += sr.cost;
        if (global_step_ >= cfg_.train.warmup) {
            ++ep_decisions;
            if (act.from_plan) ++ep_plan_actions;
        }

        if (global_step_ >= cfg_.train.warmup &&
            buffer_.warm(cfg_.model.horizon, cfg_.train.batch)) {
            double ml = 0.0, pl = 0.0;
            try {
                for (int u = 0; u < cfg_.train.updates_per_step; ++u)
                    update_models(rng, ml, pl);
            } catch (const TrainingError& e) {
                save_checkpoint(run_dir + "/crash.ckpt");
                std::ofstream diag(run_dir + "/crash_diagnostics.txt");
                diag << "step " << global_step_ << "\n"
                     << e.what() << "\n"
                     << "lambda " << lagr_.lambda << " mu " << lagr_.mu << " delta "
                     << last_delta_ << "\n";
                throw;
            }
            ep_model_loss += ml;
            ep_policy_loss += pl;
            ++ep_updates;
        }

        if (sr.done) {
            double balance =
                ep_decisions > 0 ? static_cast<double>(ep_plan_actions) / ep_decisions : 0.0;
            double cost_rate = total_cost_ / static_cast<double>(global_step_ + 1);
            metrics << global_step_ + 1 << ',' << episode << ',' << fmt(ep_return) << ','
                    << fmt(ep_cost) << ',' << fmt(cost_rate) << ',' << fmt(balance) << ','
                    << fmt(last_delta_) << ',' << fmt(lagr_.lambda) << ',' << fmt(lagr_.mu)
                    << ',' << fmt(ep_updates ? ep_model_loss / ep_updates : 0.0) << ','
                    << fmt(ep_updates ? ep_policy_loss / ep_updates : 0.0) << '\n';
            metrics.flush();
            episode_history_.push_back({ep_return, ep_cost, balance});
            ++episode;
            ep_return = ep_cost = ep_model_loss = ep_policy_loss = 0.0;
            ep_plan_actions = ep_decisions = ep_updates = 0;
            episode_seed = cfg_.train.seed * 1000003 + 7127 * static_cast<std::uint64_t>(episode);
            obs = env->reset(episode_seed);
            warm_mean.setZero();
        }

        if (cfg_.train.eval_every > 0 && (global_step_ + 1) % cfg_.train.eval_every == 0) {
            EvalSummary ev = evaluate(cfg_.train.eval_episodes,
                                      cfg_.train.seed * 90001 + 13 +
                                          static_cast<std::uint64_t>(global_step_));
            evalcsv << global_step_ + 1 << ',' << fmt(ev.return_mean) << ','
                    << fmt(ev.return_std) << ',' << fmt(ev.cost_mean) << ','
                    << fmt(ev.cost_std) << ',' << fmt(ev.balance) << '\n';
            evalcsv.flush();
        }
        if (cfg_.train.checkpoint_every > 0 &&
            (global_step_ + 1) % cfg_.train.checkpoint_every == 0) {
            save_checkpoint(run_dir + "/step_" + std::to_string(global_step_ + 1) + ".ckpt");
        }
    }

    std::string final_path = run_dir + "/final.ckpt";
    save_checkpoint(final_path);
    return final_path;
}

EvalSummary Trainer::evaluate(int episodes, std::uint64_t seed_base) {
    EvalSummary s;
    s.episodes = episodes;
    auto env = cfg_.env.make();
    Rng rng(seed_base * 2654435761ull + 99);
    std::vector<double> returns, costs;
    long plan_actions = 0, decisions = 0;
    for (int e = 0; e < episodes; ++e) {
        Vec obs = env->reset(seed_base + 7919ull * static_cast<std::uint64_t>(e));
        Mat warm_mean = Mat::Zero(model_.action_dim(), cfg_.planner.horizon);
        double ret = 0.0, cost = 0.0;
        while (true) {
            ActEnvResult a = select_action(obs, warm_mean, /*deterministic=*/true, rng);
            StepResult sr = env->step(a.action);
            ret += sr.reward;
            cost += sr.cost;
            ++decisions;
            if (a.from_plan) ++plan_actions;
            obs = sr.obs;
            if (sr.done) break;
        }
        returns.push_back(ret);
        costs.push_back(cost);
    }
    auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - m) * (x - m);
        var /= static_cast<double>(v.size());
        return std::pair<double, double>{m, std::sqrt(var)};
    };
    std::tie(s.return_mean, s.return_std) = mean_std(returns);
    std::tie(s.cost_mean, s.cost_std) = mean_std(costs);
    s.balance = decisions > 0 ? static_cast<double>(plan_actions) / decisions : 0.0;
    return s;
}

void Trainer::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    std::string cfg_text = cfg_.to_json_text();
    std::uint64_t n = cfg_text.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(cfg_text.data(), static_cast<std::streamsize>(n));
    model_.save(os);
    policy_.save(os);
    os.write(reinterpret_cast<const char*>(&lagr_.lambda), sizeof(double));
    os.write(reinterpret_cast<const char*>(&lagr_.mu), sizeof(double));
    os.write(reinterpret_cast<const char*>(&lagr_.k), sizeof(long));
    os.write(reinterpret_cast<const char*>(&global_step_), sizeof(long));
}

Trainer Trainer::load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw ConfigError("bad checkpoint magic/version in " + path);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::string cfg_text(n, '\0');
    is.read(cfg_text.data(), static_cast<std::streamsize>(n));
    Trainer t(RunConfig::from_json_text(cfg_text));
    t.model_.load(is);
    t.policy_.load(is);
    is.read(reinterpret_cast<char*>(&t.lagr_.lambda), sizeof(double));
    is.read(reinterpret_cast<char*>(&t.lagr_.mu), sizeof(double));
    is.read(reinterpret_cast<char*>(&t.lagr_.k), sizeof(long));
    is.read(reinterpret_cast<char*>(&t.global_step_), sizeof(long));
    if (!is) throw ConfigError("truncated checkpoint: " + path);
    return t;
}

void run_ablation(const std::string& grid_path, const std::string& out_dir) {
    using nlohmann::json;
    std::ifstream in(grid_path);
    if (!in) throw ConfigError("cannot open grid file: " + grid_path);
    json grid;
    try {
        in >> grid;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid parse error: ") + e.what());
    }
    if (!grid.contains("base") || !grid.contains("variants") || !grid.contains("seeds"))
        throw ConfigError("grid file needs base, variants, seeds");

    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/ablate.csv");
    out << "name,seed,return_mean,return_std,cost_mean,cost_std,cost_rate,balance\n";

    for (const auto& variant : grid.at("variants")) {
        std::string name = variant.at("name").get<std::string>();
        json merged = grid.at("base");
        if (variant.contains("patch")) merged.merge_patch(variant.at("patch"));
        for (const auto& seed : grid.at("seeds")) {
            json run_cfg = merged;
            run_cfg["train"]["seed"] = seed.get<std::uint64_t>();
            RunConfig cfg = RunConfig::from_json_text(run_cfg.dump());
            Trainer trainer(cfg);
            std::string run_dir =
                out_dir + "/" + name + "_s" + std::to_string(seed.get<std::uint64_t>());
            trainer.train(run_dir);
            EvalSummary ev =
                trainer.evaluate(cfg.train.eval_episodes, cfg.train.seed * 424243 + 5);
            double cost_rate =
                trainer.step() > 0 ? trainer.total_cost() / static_cast<double>(trainer.step())
                                   : 0.0;
            out << name << ',' << seed.get<std::uint64_t>() << ',' << fmt(ev.return_mean)
                << ',' << fmt(ev.return_std) << ',' << fmt(ev.cost_mean) << ','
                << fmt(ev.cost_std) << ',' << fmt(cost_rate) << ',' << fmt(ev.balance)
                << '\n';
            out.flush();
        }
    }
}

}  // namespace spowl

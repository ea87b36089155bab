#include "spowl/harness/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace spowl {

using nlohmann::json;

namespace {

/// Wraps a JSON object, records which keys were read, and fails on
/// leftovers so typos never pass silently.
class StrictObject {
public:
    StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
    }
    ~StrictObject() = default;

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    bool has(const char* key) {
        used_.insert(key);
        return j_.contains(key);
    }
    const json& raw(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

CostAgg cost_agg_from_string(const std::string& s) {
    if (s == "min") return CostAgg::Min;
    if (s == "max") return CostAgg::Max;
    if (s == "avg") return CostAgg::Avg;
    throw ConfigError("cost_target_agg must be one of min/max/avg, got '" + s + "'");
}

std::string to_string(CostAgg a) {
    switch (a) {
        case CostAgg::Min: return "min";
        case CostAgg::Max: return "max";
        default: return "avg";
    }
}

}  // namespace

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Spowl: return "spowl";
        case RunMode::PolicyOnly: return "policy-only";
        case RunMode::PlanOnly: return "plan-only";
        case RunMode::CceGlobal: return "cce-global";
        case RunMode::CceLocal: return "cce-local";
        case RunMode::Unconstrained: return "unconstrained";
    }
    return "spowl";
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "spowl") return RunMode::Spowl;
    if (s == "policy-only") return RunMode::PolicyOnly;
    if (s == "plan-only") return RunMode::PlanOnly;
    if (s == "cce-global") return RunMode::CceGlobal;
    if (s == "cce-local") return RunMode::CceLocal;
    if (s == "unconstrained") return RunMode::Unconstrained;
    throw ConfigError("unknown mode '" + s + "'");
}

std::unique_ptr<Env> EnvConfig::make() const {
    if (type == "point_hazard") return std::make_unique<PointHazardEnv>(point);
    if (type == "grid") return std::make_unique<GridCMDP>(grid);
    throw ConfigError("unknown env type '" + type + "'");
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    StrictObject root(j, "config");
    if (root.has("mode")) cfg.mode = run_mode_from_string(root.raw("mode").get<std::string>());

    if (root.has("env")) {
        StrictObject env(root.raw("env"), "env");
        env.get("type", cfg.env.type);
        if (cfg.env.type == "point_hazard") {
            auto& p = cfg.env.point;
            env.get("num_hazards", p.num_hazards);
            env.get("hazard_radius", p.hazard_radius);
            env.get("episode_length", p.episode_length);
            env.get("goal_tolerance", p.goal_tolerance);
            env.get("goal_bonus", p.goal_bonus);
            env.get("shaping_coef", p.shaping_coef);
            env.get("dt", p.dt);
            env.get("accel", p.accel);
            env.get("max_speed", p.max_speed);
            env.get("spawn_clearance", p.spawn_clearance);
            env.get("obs_hazards", p.obs_hazards);
        } else if (cfg.env.type == "grid") {
            auto& g = cfg.env.grid;
            env.get("size", g.size);
            env.get("noise", g.noise);
            env.get("cell_reward", g.cell_reward);
            env.get("cell_cost", g.cell_cost);
            env.get("episode_length", g.episode_length);
            env.get("start_state", g.start_state);
            env.get("absorbing", g.absorbing);
        }
        env.finish();
    }

    if (root.has("model")) {
        StrictObject m(root.raw("model"), "model");
        auto& w = cfg.model;
        m.get("latent_dim", w.latent_dim);
        m.get("simnorm_group", w.simnorm_group);
        m.get("hidden", w.hidden);
        m.get("num_q", w.num_q);
        m.get("num_cost", w.num_cost);
        m.get("num_qc", w.num_qc);
        m.get("gamma", w.gamma);
        m.get("gamma_c", w.gamma_c);
        m.get("lambda", w.lambda);
        m.get("horizon", w.horizon);
        m.get("bins", w.bins.count);
        m.get("bin_low", w.bins.low);
        m.get("bin_high", w.bins.high);
        m.get("tau", w.tau);
        if (m.has("cost_target_agg"))
            w.cost_target_agg = cost_agg_from_string(m.raw("cost_target_agg").get<std::string>());
        m.get("consistency_coef", w.consistency_coef);
        m.get("consistency_enabled", w.consistency_enabled);
        m.get("decoder_enabled", w.decoder_enabled);
        m.get("decoder_weight", w.decoder_weight);
        m.finish();
    }

    if (root.has("policy")) {
        StrictObject p(root.raw("policy"), "policy");
        p.get("hidden", cfg.policy.hidden);
        p.get("alpha", cfg.policy.alpha);
        p.get("beta", cfg.policy.beta);
        p.get("log_std_min", cfg.policy.log_std_min);
        p.get("log_std_max", cfg.policy.log_std_max);
        p.finish();
    }

    if (root.has("lagrangian")) {
        StrictObject l(root.raw("lagrangian"), "lagrangian");
        l.get("budget", cfg.lagrangian.budget);
        l.get("nu", cfg.lagrangian.nu);
        l.get("mu_init", cfg.lagrangian.mu);
        l.get("lambda_init", cfg.lagrangian.lambda);
        l.finish();
    }

    if (root.has("planner")) {
        StrictObject p(root.raw("planner"), "planner");
        auto& pl = cfg.planner;
        p.get("horizon", pl.horizon);
        p.get("iterations", pl.iterations);
        p.get("samples", pl.samples);
        p.get("prior_samples", pl.prior_samples);
        p.get("elite_k", pl.elite_k);
        p.get("sigma_init", pl.sigma_init);
        p.get("sigma_floor", pl.sigma_floor);
        p.get("d_plan", pl.d_plan);
        p.get("score_weighted_sampling", pl.score_weighted_sampling);
        p.finish();
    }

    if (root.has("train")) {
        StrictObject t(root.raw("train"), "train");
        auto& tr = cfg.train;
        t.get("steps", tr.steps);
        t.get("warmup", tr.warmup);
        t.get("batch", tr.batch);
        t.get("updates_per_step", tr.updates_per_step);
        t.get("buffer_capacity", tr.buffer_capacity);
        t.get("model_lr", tr.model_lr);
        t.get("policy_lr", tr.policy_lr);
        t.get("seed", tr.seed);
        t.get("eval_every", tr.eval_every);
        t.get("eval_episodes", tr.eval_episodes);
        t.get("checkpoint_every", tr.checkpoint_every);
        t.finish();
    }

    root.finish();
    cfg.finalize();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void RunConfig::finalize() {
    auto env_inst = env.make();
    model.obs_dim = env_inst->obs_dim();
    model.action_dim = env_inst->action_dim();
    model.validate();
    policy.latent_dim = model.latent_dim;
    policy.action_dim = model.action_dim;
    policy.validate();
    lagrangian.validate();
    // Planner modes follow the run mode.
    switch (mode) {
        case RunMode::CceGlobal: planner.mode = PlanMode::CceGlobal; break;
        case RunMode::CceLocal: planner.mode = PlanMode::CceLocal; break;
        case RunMode::Unconstrained:
            planner.mode = PlanMode::CceGlobal;
            planner.d_plan = 1e18;      // constraint vacuous
            lagrangian.budget = 1e18;   // penalty term inert
            break;
        default: planner.mode = PlanMode::Adaptive; break;
    }
    planner.validate();
    if (train.steps < 1 || train.batch < 1 || train.warmup < 0 || train.updates_per_step < 1)
        throw ConfigError("train: bad values");
}

std::string RunConfig::to_json_text() const {
    json j;
    j["mode"] = to_string(mode);
    json e;
    e["type"] = env.type;
    if (env.type == "point_hazard") {
        const auto& p = env.point;
        e["num_hazards"] = p.num_hazards;
        e["hazard_radius"] = p.hazard_radius;
        e["episode_length"] = p.episode_length;
        e["goal_tolerance"] = p.goal_tolerance;
        e["goal_bonus"] = p.goal_bonus;
        e["shaping_coef"] = p.shaping_coef;
        e["dt"] = p.dt;
        e["accel"] = p.accel;
        e["max_speed"] = p.max_speed;
        e["spawn_clearance"] = p.spawn_clearance;
        e["obs_hazards"] = p.obs_hazards;
    } else {
        const auto& g = env.grid;
        e["size"] = g.size;
        e["noise"] = g.noise;
        e["cell_reward"] = g.cell_reward;
        e["cell_cost"] = g.cell_cost;
        e["episode_length"] = g.episode_length;
        e["start_state"] = g.start_state;
        e["absorbing"] = g.absorbing;
    }
    j["env"] = e;
    j["model"] = {{"latent_dim", model.latent_dim},
                  {"simnorm_group", model.simnorm_group},
                  {"hidden", model.hidden},
                  {"num_q", model.num_q},
                  {"num_cost", model.num_cost},
                  {"num_qc", model.num_qc},
                  {"gamma", model.gamma},
                  {"gamma_c", model.gamma_c},
                  {"lambda", model.lambda},
                  {"horizon", model.horizon},
                  {"bins", model.bins.count},
                  {"bin_low", model.bins.low},
                  {"bin_high", model.bins.high},
                  {"tau", model.tau},
                  {"cost_target_agg", to_string(model.cost_target_agg)},
                  {"consistency_coef", model.consistency_coef},
                  {"consistency_enabled", model.consistency_enabled},
                  {"decoder_enabled", model.decoder_enabled},
                  {"decoder_weight", model.decoder_weight}};
    j["policy"] = {{"hidden", policy.hidden},
                   {"alpha", policy.alpha},
                   {"beta", policy.beta},
                   {"log_std_min", policy.log_std_min},
                   {"log_std_max", policy.log_std_max}};
    j["lagrangian"] = {{"budget", lagrangian.budget},
                       {"nu", lagrangian.nu},
                       {"mu_init", lagrangian.mu},
                       {"lambda_init", lagrangian.lambda}};
    j["planner"] = {{"horizon", planner.horizon},
                    {"iterations", planner.iterations},
                    {"samples", planner.samples},
                    {"prior_samples", planner.prior_samples},
                    {"elite_k", planner.elite_k},
                    {"sigma_init", planner.sigma_init},
                    {"sigma_floor", planner.sigma_floor},
                    {"d_plan", planner.d_plan},
                    {"score_weighted_sampling", planner.score_weighted_sampling}};
    j["train"] = {{"steps", train.steps},
                  {"warmup", train.warmup},
                  {"batch", train.batch},
                  {"updates_per_step", train.updates_per_step},
                  {"buffer_capacity", train.buffer_capacity},
                  {"model_lr", train.model_lr},
                  {"policy_lr", train.policy_lr},
                  {"seed", train.seed},
                  {"eval_every", train.eval_every},
                  {"eval_episodes", train.eval_episodes},
                  {"checkpoint_every", train.checkpoint_every}};
    return j.dump(2);
}

}  // namespace spowl

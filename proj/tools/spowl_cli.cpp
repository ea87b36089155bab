#include "spowl/harness/trainer.hpp"
#include "spowl/oracles.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"SPOWL safe model-based RL laboratory"};
    app.require_subcommand(1);

    std::string config_path, run_dir = "runs/run";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode_override;

    auto* train = app.add_subcommand("train", "Train an agent from a config file");
    train->add_option("--config", config_path, "Run config (JSON)")->required();
    train->add_option("--out", run_dir, "Run directory for metrics and checkpoints");
    train->add_option("--seed", seed, "Override train.seed")->each([&](const std::string&) {
        seed_set = true;
    });
    train->add_option("--mode", mode_override,
                      "Override mode (spowl, policy-only, plan-only, cce-global, "
                      "cce-local, unconstrained)");

    std::string ckpt_path;
    int episodes = 10;
    std::uint64_t eval_seed = 1234;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    eval->add_option("--episodes", episodes, "Number of evaluation episodes");
    eval->add_option("--seed", eval_seed, "Evaluation seed base");

    std::string grid_path, ablate_out = "runs/ablate";
    auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
    ablate->add_option("--grid", grid_path, "Grid file (JSON)")->required();
    ablate->add_option("--out", ablate_out, "Output directory");

    auto* oracle = app.add_subcommand("oracle-check", "Run the independent-oracle suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            spowl::RunConfig cfg = spowl::RunConfig::from_file(config_path);
            if (seed_set) cfg.train.seed = seed;
            if (!mode_override.empty()) {
                cfg.mode = spowl::run_mode_from_string(mode_override);
                cfg.finalize();
            }
            spowl::Trainer trainer(cfg);
            std::string final_ckpt = trainer.train(run_dir);
            std::cout << "final checkpoint: " << final_ckpt << "\n";
        } else if (*eval) {
            spowl::Trainer trainer = spowl::Trainer::load_checkpoint(ckpt_path);
            spowl::EvalSummary s = trainer.evaluate(episodes, eval_seed);
            std::cout << "episodes " << s.episodes << "\n"
                      << "return " << s.return_mean << " +/- " << s.return_std << "\n"
                      << "cost   " << s.cost_mean << " +/- " << s.cost_std << "\n"
                      << "balance " << s.balance << "\n";
        } else if (*ablate) {
            spowl::run_ablation(grid_path, ablate_out);
            std::cout << "wrote " << ablate_out << "/ablate.csv\n";
        } else if (*oracle) {
            return spowl::run_oracle_checks(std::cout) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

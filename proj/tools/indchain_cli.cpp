#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "indchain/experiment.hpp"

using namespace indchain;

int main(int argc, char** argv) {
    CLI::App app{"Decentralized equilibrium learning in stochastic games with independent chains"};
    app.require_subcommand(1);

    // run ------------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run seeded experiments and write CSV/JSON records");
    std::string config_path;
    CliOverrides cli;
    std::string oracle_choice;
    run_cmd->add_option("--config", config_path, "Experiment file (JSON)");
    run_cmd->add_option("--game", cli.game, "Built-in game name (g1/g2/g3) or game file path");
    run_cmd->add_option("--mode", cli.mode, "finite | asymptotic");
    run_cmd->add_option("--episodes", cli.episodes, "Episode count K (finite) or cap (asymptotic)");
    run_cmd->add_option("--seeds", cli.seeds, "Number of independent runs");
    run_cmd->add_option("--master-seed", cli.master_seed, "Master seed for all derived streams");
    run_cmd->add_option("--gamma", cli.gamma, "Confidence failure probability");
    run_cmd->add_option("--epsilon", cli.epsilon, "Target equilibrium accuracy");
    run_cmd->add_option("--c", cli.c, "Step-size scale");
    run_cmd->add_option("--delta", cli.delta, "Exploration floor override");
    run_cmd->add_option("--out", cli.out_dir, "Output directory");
    run_cmd->add_option("--stride", cli.stride, "Episode stride for expensive diagnostics");
    run_cmd->add_option("--oracle", oracle_choice, "on | off: exact-gap evaluation per episode")
        ->check(CLI::IsMember({"on", "off"}));

    // validate --------------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "Check a game's reachability and mixing assumptions");
    std::string validate_game_arg;
    validate_cmd->add_option("game", validate_game_arg, "Built-in game name or game file path")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        ExperimentSpec spec;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "config error: cannot open " << config_path << "\n";
                return kExitConfig;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                apply_file_layer(spec, buf.str());
            } catch (const ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kExitConfig;
            }
        }
        if (!oracle_choice.empty()) cli.oracle = (oracle_choice == "on");
        apply_cli_layer(spec, cli);
        return cmd_run(spec, std::cout);
    }
    return cmd_validate(validate_game_arg, std::cout);
}

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "indchain/game.hpp"
#include "indchain/simulator.hpp"

namespace indchain {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitInfeasible = 4;

/// Fully resolved experiment parameters. Precedence when building one:
/// built-in defaults < experiment file < command-line flags.
struct ExperimentSpec {
    std::string game = "g1";      // built-in name or a JSON file path
    std::string mode = "finite";  // "finite" | "asymptotic"
    int episodes = 100;           // K (finite) or episode cap (asymptotic)
    int seeds = 1;
    std::uint64_t master_seed = 1;
    double gamma = 0.1;
    double epsilon = 0.1;  // target accuracy; drives the default delta
    double c = 1.0;        // step-size scale
    double eta_p = 0.75;   // asymptotic step exponent
    std::optional<double> delta;  // exploration floor override
    std::string out_dir = "out";
    int stride = 1;
    bool oracle = true;

    void validate() const;
};

/// Optional per-field overrides collected from command-line flags.
struct CliOverrides {
    std::optional<std::string> game, mode, out_dir;
    std::optional<int> episodes, seeds, stride;
    std::optional<std::uint64_t> master_seed;
    std::optional<double> gamma, epsilon, c, delta;
    std::optional<bool> oracle;
};

/// Applies an experiment-file layer (JSON object; unknown keys rejected).
void apply_file_layer(ExperimentSpec& spec, const std::string& json_text);
void apply_cli_layer(ExperimentSpec& spec, const CliOverrides& cli);

/// Learner configuration for one player, derived from the experiment
/// parameters and the game's certified mixing bound.
LearnerConfig build_learner_config(const ExperimentSpec& spec, const JointGame& game, int player,
                                   double tau);

/// One seeded run (seed index `run_index` under the spec's master seed).
RunRecord run_single_seed(const ExperimentSpec& spec, const JointGame& game, double tau,
                          int run_index);

struct BatchResult {
    std::vector<RunRecord> records;  // one per seed, in seed order
    std::string summary_json;
};

/// All seeds, dispatched across a small worker pool; outputs are in seed
/// order and independent of scheduling.
BatchResult run_batch(const ExperimentSpec& spec, const JointGame& game,
                      const AssumptionReport& assumptions);

/// Runs the experiment and writes run_seed<i>.csv/.json plus summary.json
/// into the output directory. Returns a process exit code.
int cmd_run(const ExperimentSpec& spec, std::ostream& log);

/// Prints the assumption report for a game; nonzero exit when alpha <= 0 or
/// a chain check fails.
int cmd_validate(const std::string& game_name_or_path, std::ostream& log);

}  // namespace indchain

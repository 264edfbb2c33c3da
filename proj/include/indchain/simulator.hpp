#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "indchain/game.hpp"
#include "indchain/learner.hpp"

namespace indchain {

/// Raised when a game fails the preconditions for running (alpha <= 0 or a
/// non-ergodic induced chain).
struct AssumptionViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a requested episode snapshot is not stored.
struct SnapshotMissingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationConfig {
    const JointGame* game = nullptr;
    std::vector<LearnerConfig> learner_configs;  // one per player
    int horizon = 1;                             // episodes to run
    std::uint64_t master_seed = 1;
    bool oracle_enabled = true;  // per-episode exact-gap evaluation against true kernels
    int record_every = 1;        // stride for expensive diagnostics and serialized snapshots
    /// Optional fixed starting occupancies (one per player); uniform otherwise.
    std::vector<OccupancyMeasure> initial_occupancies;
    /// Safety cap; a run that exceeds it in one episode halts with a report.
    long long max_steps_per_episode = 10000000;
};

struct PlayerEpisodeStats {
    double eta = 0.0;
    double update_norm = 0.0;
    double width_in_force = 1.0;  // max interval width while the episode ran
    double width_after = 1.0;     // after the end-of-episode update
    bool coverage = true;         // true kernel inside the post-update intervals
    bool confidence_ok = true;    // no interval collapse this episode
    std::vector<double> q_hat;             // occupancy iterate used this episode
    std::vector<double> reward_estimator;  // first-visit rewards over (s, a)
};

struct EpisodeRow {
    int k = 0;
    long long steps_total = 0;
    int tau_k = 0;
    std::vector<PlayerEpisodeStats> players;
    // Oracle block; NaN when not computed at this row.
    double ni_gap_weighted = std::numeric_limits<double>::quiet_NaN();
    double ni_gap_instant = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> error_partial, regret_partial, bias_partial;  // per player
};

/// Append-only per-episode record of one run. Rows always carry counters and
/// per-player stats; q-hat snapshots serialize at `record_every` stride (the
/// in-memory record from run() keeps every episode).
class RunRecord {
  public:
    std::vector<EpisodeRow> rows;
    int num_players = 0;
    int horizon = 0;
    int record_every = 1;
    std::uint64_t master_seed = 0;
    std::vector<double> deltas;  // per-player exploration floors in effect
    bool oracle_enabled = false;
    bool coverage_failed = false;
    bool halted = false;
    std::string halt_reason;

    /// Fixed column order:
    /// k,steps_total,tau_k,
    ///   update_norm_i,max_width_i,coverage_i   (per player)
    /// ni_gap_weighted,ni_gap_instant,
    ///   error_i (per player), regret_i (per player), bias_i (per player)
    std::string to_csv() const;

    std::string to_json(bool include_snapshots = true) const;
    static RunRecord from_json(const std::string& text);

    bool has_snapshot(int episode_k) const;
};

/// Runs K episodes. Within a step each learner acts on its own state only;
/// an episode ends when every learner has covered its state-action pairs
/// (players that finish early keep playing their current policy until the
/// barrier releases). Deterministic given master_seed.
RunRecord run(const SimulationConfig& config);

/// Reconstructs the joint policy at a recorded episode from its stored
/// occupancy snapshots.
std::vector<StationaryPolicy> replay_policies(const RunRecord& record, const JointGame& game,
                                              int episode_k);

}  // namespace indchain

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "indchain/confidence.hpp"
#include "indchain/convex.hpp"
#include "indchain/occupancy.hpp"
#include "indchain/rng.hpp"
#include "indchain/types.hpp"

namespace indchain {

/// Step-size sequence. finite_horizon: constant c/sqrt(K). asymptotic:
/// c/(k^p ln(k+1)) with p in (1/2, 1], which diverges in sum while its
/// square and sqrt(ln k / k)-weighted sums converge.
struct EtaSchedule {
    ScheduleMode mode = ScheduleMode::finite_horizon;
    double c = 1.0;
    int horizon = 1;   // K, finite mode
    double p = 0.75;   // asymptotic exponent

    void validate() const;
    double value(int episode_k) const;
};

/// Warm-up length before reward collection starts. finite_horizon: a
/// constant d. asymptotic: d^k = ceil(2 tau ln k).
struct WarmupSchedule {
    ScheduleMode mode = ScheduleMode::finite_horizon;
    int d = 0;
    double tau = 0.0;

    int steps(int episode_k) const;
};

/// Conservative default exploration floor, overridable from config.
double default_delta(double epsilon, int num_states, int num_actions, int num_players, double tau);

/// The finite-horizon warm-up constant ceil(tau ln((1-e^{-1/tau}) sqrt(K) / (2 min_S))),
/// clamped at zero.
int default_finite_warmup(double tau, int horizon, int min_num_states);

struct LearnerConfig {
    double delta = 0.01;
    EtaSchedule eta;
    WarmupSchedule warmup;
    WidthSchedule width;
    double epsilon_target = 0.1;
    std::uint64_t rng_seed = 0;  // action-sampling stream seed (derived by the simulator)

    void validate(int num_states, int num_actions) const;
};

enum class Phase { warming, covering, done };

/// One player's episodic learning state: occupancy iterate, induced policy,
/// visit counters, first-visit reward estimator, and the end-of-episode
/// confidence + mirror-descent update. Sees only its own states, actions,
/// and realized scalar rewards.
class Learner {
  public:
    Learner(int num_states, int num_actions, LearnerConfig config);
    /// Starts from a caller-supplied occupancy measure (projected onto the
    /// shrunk polytope if it is not already inside).
    Learner(int num_states, int num_actions, LearnerConfig config, const OccupancyMeasure& initial);

    /// Recomputes the policy from the current occupancy iterate, clears the
    /// reward estimator, and resets the unvisited set and step counter.
    void begin_episode();

    /// Samples an action from the current policy row.
    int act(int state, RngStream& rng) const;

    /// Feeds one transition. Updates counters always; during the covering
    /// segment records the first-visit reward for unvisited pairs. Returns
    /// true once every (s, a) pair has been collected this episode.
    bool observe(int s, int a, double reward, int s_next);

    struct EpisodeOutcome {
        double update_norm = 0.0;   // ||q^{k+1} - q^k||_2
        bool confidence_ok = true;  // false when an interval collapsed (run flagged)
    };

    /// End-of-episode confidence update followed by the mirror-descent step
    /// over the confidence-extended shrunk polytope. Projection infeasibility
    /// propagates as InfeasibleError.
    EpisodeOutcome end_episode();

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int episode() const { return episode_; }
    Phase phase() const { return phase_; }
    bool local_done() const { return local_done_; }
    int steps_this_episode() const { return step_; }
    int unvisited_count() const { return static_cast<int>(unvisited_.size()); }

    const OccupancyMeasure& occupancy() const { return q_hat_; }
    const StationaryPolicy& policy() const { return policy_; }
    const ConfidenceState& confidence() const { return confidence_; }
    /// First-visit reward estimator over (s, a), row-major.
    const std::vector<double>& reward_estimator() const { return reward_; }
    const LearnerConfig& config() const { return config_; }

  private:
    int S_, A_;
    LearnerConfig config_;
    OccupancyMeasure q_hat_;
    StationaryPolicy policy_;
    ConfidenceState confidence_;
    std::vector<double> reward_;        // R(s, a), set once per episode
    std::set<std::pair<int, int>> unvisited_;
    Phase phase_ = Phase::done;
    bool local_done_ = false;
    int step_ = 0;
    int warmup_steps_ = 0;
    int episode_ = 0;  // completed episodes
};

}  // namespace indchain

#pragma once

#include <cstdint>
#include <vector>

#include "indchain/convex.hpp"
#include "indchain/occupancy.hpp"
#include "indchain/types.hpp"

namespace indchain {

enum class ScheduleMode { finite_horizon, asymptotic };

/// Half-width epsilon(N, k) of the per-entry confidence interval.
///
/// finite_horizon:  sqrt((ln(n K |A||S|^2) - ln gamma) / (factor * max(1, N)))
/// asymptotic:      sqrt((ln(2 n k^2 |A||S|^2) - ln gamma) / (factor * max(1, N)))
///
/// `denominator_factor` is 2 by default (the constant the coverage analysis
/// actually uses); 1 is selectable for ablation and gives wider intervals.
struct WidthSchedule {
    ScheduleMode mode = ScheduleMode::finite_horizon;
    int num_players = 1;
    int horizon = 1;  // K, finite mode only
    double gamma = 0.1;
    int num_states = 0;
    int num_actions = 0;
    int denominator_factor = 2;

    void validate() const;
    double epsilon(int episode_k, long long visit_count) const;
};

/// Per-player visit counters, empirical kernel, and the running interval
/// bounds of the confidence polytope. Owned and mutated by exactly one
/// learner; intervals only shrink across episodes (stored intersection).
class ConfidenceState {
  public:
    ConfidenceState() = default;
    ConfidenceState(int num_states, int num_actions);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    int episode_index() const { return k_; }

    long long visits(int s, int a) const { return n_[sa(s, a)]; }
    long long transitions(int s, int a, int s2) const { return m_[sas(s, a, s2)]; }
    double empirical(int s, int a, int s2) const;

    double lower(int s, int a, int s2) const { return lower_[sas(s, a, s2)]; }
    double upper(int s, int a, int s2) const { return upper_[sas(s, a, s2)]; }
    const std::vector<double>& lower_data() const { return lower_; }
    const std::vector<double>& upper_data() const { return upper_; }

    /// M(s,a,s') += 1 and N(s,a) += 1; bounds change only at episode end.
    void record_transition(int s, int a, int s_next);

    /// Recomputes the empirical kernel and interval half-widths, intersects
    /// with the previous episode's intervals, and advances the episode index.
    ///
    /// Returns false when some entry collapsed (lower > upper) — the
    /// high-confidence event failed for this run. The offending (s,a) row is
    /// re-centered on the empirical row (dropping its stored intersection) so
    /// the run can continue; the caller records the run as a coverage
    /// failure.
    bool end_episode_update(const WidthSchedule& schedule);

    double max_width() const;
    double min_width() const;

    /// Entrywise lower - slack <= P <= upper + slack.
    bool contains(const TransitionKernel& kernel, double slack = 1e-12) const;

    /// Replaces the intervals with a box of the given half-width around a
    /// kernel (clipped to [0,1]); width 0 pins them exactly. Counters are
    /// untouched. Oracle-side helper for evaluations against known kernels.
    void pin_intervals(const TransitionKernel& center, double width);

  private:
    std::size_t sa(int s, int a) const { return static_cast<std::size_t>(s) * A_ + a; }
    std::size_t sas(int s, int a, int s2) const {
        return (static_cast<std::size_t>(s) * A_ + a) * S_ + s2;
    }
    int S_ = 0, A_ = 0;
    int k_ = 0;
    std::vector<long long> n_, m_;
    std::vector<double> lower_, upper_;
};

/// Linear description of the confidence-extended shrunk polytope in the
/// q-variables: normalization, flow balance, rho >= delta, the box
/// constraints lower*rho <= q <= upper*rho, and q >= 0. Nonemptiness is
/// checked by a phase-1 solve before returning.
LinearConstraintSystem as_constraints(const ConfidenceState& state, const ShrunkPolytopeSpec& spec);

/// Same system without interval bounds (the plain shrunk polytope).
LinearConstraintSystem shrunk_polytope_constraints(const ShrunkPolytopeSpec& spec);

}  // namespace indchain

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "indchain/types.hpp"

namespace indchain {

/// Long-run state distribution nu(s).
struct StateOccupancy {
    std::vector<double> nu;

    void validate(double tol = 1e-10) const;
};

/// Long-run state-action distribution rho(s, a), row-major.
class StateActionOccupancy {
  public:
    StateActionOccupancy() = default;
    StateActionOccupancy(int num_states, int num_actions)
        : S_(num_states), A_(num_actions), rho_(static_cast<std::size_t>(S_) * A_, 0.0) {}

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    double& at(int s, int a) { return rho_[static_cast<std::size_t>(s) * A_ + a]; }
    double at(int s, int a) const { return rho_[static_cast<std::size_t>(s) * A_ + a]; }
    const std::vector<double>& data() const { return rho_; }
    std::vector<double>& data() { return rho_; }

    void validate(double tol = 1e-10) const;

  private:
    int S_ = 0, A_ = 0;
    std::vector<double> rho_;
};

/// Long-run (s, a, s') distribution q — the learner's decision variable.
/// Flat layout is row-major over (s, a, s'), matching TransitionKernel.
class OccupancyMeasure {
  public:
    OccupancyMeasure() = default;
    OccupancyMeasure(int num_states, int num_actions)
        : S_(num_states), A_(num_actions),
          q_(static_cast<std::size_t>(S_) * A_ * S_, 0.0) {}

    /// The all-equal element 1/(|A||S|^2); always satisfies the polytope
    /// invariants.
    static OccupancyMeasure uniform(int num_states, int num_actions);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    std::size_t size() const { return q_.size(); }

    double& at(int s, int a, int s2) { return q_[idx(s, a, s2)]; }
    double at(int s, int a, int s2) const { return q_[idx(s, a, s2)]; }
    const std::vector<double>& data() const { return q_; }
    std::vector<double>& data() { return q_; }

    double row_sum(int s, int a) const {
        double t = 0.0;
        for (int s2 = 0; s2 < S_; ++s2) t += at(s, a, s2);
        return t;
    }

    StateActionOccupancy marginal_sa() const;
    StateOccupancy marginal_s() const;

    /// Normalization + flow balance within `tol`.
    void validate(double tol = 1e-10) const;

  private:
    std::size_t idx(int s, int a, int s2) const {
        return (static_cast<std::size_t>(s) * A_ + a) * S_ + s2;
    }
    int S_ = 0, A_ = 0;
    std::vector<double> q_;
};

/// Parameters of the shrunk polytope: rho(s, a) >= delta for every pair.
struct ShrunkPolytopeSpec {
    double delta = 0.0;
    int num_states = 0;
    int num_actions = 0;

    void validate() const {
        if (delta < 0.0 || (delta > 0.0 && delta >= 1.0 / (static_cast<double>(num_states) * num_actions)))
            throw StructuralError("delta must lie in [0, 1/(|S||A|)) or the shrunk polytope is empty");
    }
};

/// Unique stationary distribution of a row-major chain via direct linear
/// solve with normalization row replacement. Throws ErgodicityError when the
/// system is singular or produces a non-distribution.
std::vector<double> stationary_of_chain(const std::vector<double>& chain_row_major, int num_states);

struct OccupancyTriple {
    StateOccupancy nu;
    StateActionOccupancy rho;
    OccupancyMeasure q;
};

/// Exact occupancies of a (policy, kernel) pair: nu solves nu = nu p^pi,
/// rho = nu * pi, q = rho * P.
OccupancyTriple occupancy_from_policy(const StationaryPolicy& policy, const TransitionKernel& kernel);

struct InducedPair {
    TransitionKernel kernel;
    StationaryPolicy policy;
    bool used_uniform_fallback = false;  // some zero row was replaced by a uniform row
};

/// Induced kernel P^q and policy pi^q of an occupancy measure. Zero rows
/// (possible only outside the shrunk polytope) fall back to uniform rows and
/// set the flag.
InducedPair induced_kernel_and_policy(const OccupancyMeasure& q);

struct MembershipVerdict {
    bool member = false;
    double worst_violation = 0.0;
    std::string worst_constraint;
};

/// Checks normalization, flow balance, and rho >= delta.
MembershipVerdict check_membership(const OccupancyMeasure& q, const ShrunkPolytopeSpec& spec,
                                   double tol = 1e-9);

/// Same, plus the linearized confidence-box constraints
/// lower(s,a,s') * rho(s,a) <= q(s,a,s') <= upper(s,a,s') * rho(s,a),
/// with `lower`/`upper` kernel-shaped row-major tensors.
MembershipVerdict check_membership(const OccupancyMeasure& q, const ShrunkPolytopeSpec& spec,
                                   const std::vector<double>& lower, const std::vector<double>& upper,
                                   double tol = 1e-9);

}  // namespace indchain

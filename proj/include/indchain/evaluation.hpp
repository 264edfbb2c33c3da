#pragma once

#include <Eigen/Dense>
#include <vector>

#include "indchain/convex.hpp"
#include "indchain/game.hpp"
#include "indchain/occupancy.hpp"
#include "indchain/rng.hpp"
#include "indchain/simulator.hpp"

namespace indchain {

/// Exact expected average payoffs of a stationary joint policy under the
/// true kernels: the product-form sum over the joint table of
/// prod_j rho_j(s_j, a_j) * r_i(s, a).
std::vector<double> exact_value(const JointGame& game, const std::vector<StationaryPolicy>& policies);

/// Same product-form values evaluated at given state-action occupancies.
std::vector<double> joint_values(const JointGame& game,
                                 const std::vector<StateActionOccupancy>& rho_all);

/// Payoff gradient v_i(rho_{-i}) over (s_i, a_i), row-major. Its constant
/// extension across s' is the q-space gradient.
std::vector<double> payoff_gradient(const JointGame& game, int player,
                                    const std::vector<StateActionOccupancy>& rho_all);

/// The flow polytope of player i in rho-space under its true kernel:
/// { rho >= delta, sum rho = 1, sum_a rho(s,a) = sum_{s',a'} rho(s',a') P(s|s',a') }.
LinearConstraintSystem rho_polytope(const TransitionKernel& kernel, double delta);

struct BestResponse {
    double value = 0.0;
    StateActionOccupancy rho;
    OccupancyMeasure q;  // rho lifted through the true kernel
};

/// Exact best response over the delta-shrunk flow polytope (oracle context).
BestResponse best_response(const JointGame& game, int player,
                           const std::vector<StateActionOccupancy>& rho_all, double delta);

/// One gap evaluation at a joint profile.
struct GapReport {
    double psi_max = 0.0;  // sum over players of best-response improvement
    std::vector<double> best_response_values;
    std::vector<double> current_values;
};

GapReport ni_gap(const JointGame& game, const std::vector<StationaryPolicy>& policies,
                 const std::vector<double>& deltas);
GapReport ni_gap(const JointGame& game, const std::vector<StateActionOccupancy>& rho_all,
                 const std::vector<double>& deltas);

/// Running step-size-weighted gap: accumulates eta^k * v_i(rho_{-i}^k) per
/// player and reports
///   sum_i [ max_{rho in flow polytope} <rho, avg objective_i> - avg baseline_i ],
/// the per-player split of the weighted-average gap maximized over a single
/// comparator per player.
class WeightedGapAccumulator {
  public:
    explicit WeightedGapAccumulator(const JointGame& game);

    void add_episode(double eta, const std::vector<StateActionOccupancy>& rho_true);
    double weighted_gap(const std::vector<double>& deltas) const;
    /// The per-player maximizers of the averaged objective.
    std::vector<BestResponse> comparators(const std::vector<double>& deltas) const;
    double weight_total() const { return w_; }
    const Eigen::VectorXd& objective(int player) const { return objective_[player]; }
    double baseline(int player) const { return baseline_[player]; }

  private:
    const JointGame* game_;
    std::vector<Eigen::VectorXd> objective_;
    std::vector<double> baseline_;
    double w_ = 0.0;
};

/// Per-episode decomposition terms (already eta^k / w^K weighted) plus the
/// stationary-distribution drift and its confidence-width bound.
struct DiagnosticsRow {
    int k = 0;
    std::vector<double> error_summand;
    std::vector<double> regret_summand;
    std::vector<double> bias_summand;
    std::vector<double> nu_l1;        // ||nu_hat^k - nu^k||_1
    std::vector<double> nu_l1_bound;  // 2|S_i| / (1 - e^{-1/tau}) * width in force
};

/// Recomputes the exact decomposition from the record's per-episode
/// snapshots (requires snapshots for every episode, i.e. a record straight
/// from run()). `tau` is the certified mixing bound of the game.
std::vector<DiagnosticsRow> diagnostics(const JointGame& game, const RunRecord& record, double tau);

/// Fills the error/regret/bias partial-sum columns of the record in place.
void annotate_diagnostics(const JointGame& game, RunRecord& record, double tau);

/// Numerical check of global stability of a candidate equilibrium: samples
/// feasible occupancy profiles and returns the minimum over samples of
/// sum_i <v_i(rho_{-i}), rho*_i - rho_i>. Nonnegative (up to tolerance) for
/// a globally stable q*.
double stability_probe(const JointGame& game, const std::vector<StateActionOccupancy>& rho_star,
                       double policy_floor, int samples, RngStream& rng);

}  // namespace indchain

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace indchain {

/// Raised when a constraint system has no feasible point.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative solve exhausts its iteration cap. The message
/// carries the residual reached.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A polytope {x : E x = be, F x <= bi} in R^dimension, stored row-wise.
class LinearConstraintSystem {
  public:
    explicit LinearConstraintSystem(int dimension) : dim_(dimension) {}

    void add_equality(const Eigen::VectorXd& a, double b);
    void add_inequality(const Eigen::VectorXd& a, double b);  // <a, x> <= b

    int dimension() const { return dim_; }
    int num_equalities() const { return static_cast<int>(eq_.size()); }
    int num_inequalities() const { return static_cast<int>(ineq_.size()); }

    const Eigen::VectorXd& equality(int i) const { return eq_[i]; }
    double equality_rhs(int i) const { return eq_rhs_[i]; }
    const Eigen::VectorXd& inequality(int i) const { return ineq_[i]; }
    double inequality_rhs(int i) const { return ineq_rhs_[i]; }

    Eigen::MatrixXd equality_matrix() const;
    Eigen::VectorXd equality_rhs_vector() const;
    Eigen::MatrixXd inequality_matrix() const;
    Eigen::VectorXd inequality_rhs_vector() const;

    /// Largest constraint violation at x (0 when feasible).
    double max_violation(const Eigen::VectorXd& x) const;

    /// Phase-1 simplex nonemptiness check; throws InfeasibleError.
    void assert_feasible() const;

  private:
    int dim_;
    std::vector<Eigen::VectorXd> eq_, ineq_;
    std::vector<double> eq_rhs_, ineq_rhs_;
};

/// Only the quadratic regularizer h = (mu/2)||.||^2 is implemented; the spec
/// struct leaves room for other strongly convex choices.
struct RegularizerSpec {
    enum class Kind { quadratic };
    Kind kind = Kind::quadratic;
    double mu = 1.0;
};

/// Bregman divergence D_h(p||q); (mu/2)||p - q||^2 for the quadratic h.
double bregman(const RegularizerSpec& reg, const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Euclidean projection of z onto the polytope, computed by a dual
/// active-set method (violated constraints are added one at a time from the
/// unconstrained optimum, with partial dual steps on blocking constraints).
/// Exact up to active-set linear-solve accuracy.
Eigen::VectorXd project_onto_polytope(const LinearConstraintSystem& cs, const Eigen::VectorXd& z,
                                      int max_iterations = 100000);

/// One mirror-descent step with the quadratic regularizer:
/// argmax over the polytope of eta*<x, g> - D_h(x || current), which equals
/// the Euclidean projection of current + (eta/mu) * g.
Eigen::VectorXd omd_update(const Eigen::VectorXd& current, const Eigen::VectorXd& gradient_payoff,
                           double eta, const LinearConstraintSystem& cs, const RegularizerSpec& reg);

/// Boyle-Dykstra alternating projections onto the individual halfspaces and
/// hyperplanes. Slow but independent of the active-set path; used as a
/// verification fallback.
Eigen::VectorXd dykstra_project(const LinearConstraintSystem& cs, const Eigen::VectorXd& z,
                                int max_sweeps = 200000, double tol = 1e-12);

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    double value = 0.0;
    int pivots = 0;
};

/// Dense revised two-phase simplex with Bland's rule (no cycling). Maximizes
/// <objective, x> over the polytope; the returned point is a basic feasible
/// solution, i.e. a vertex of the lifted standard-form polytope.
LpResult solve_lp(const Eigen::VectorXd& objective, const LinearConstraintSystem& cs);

}  // namespace indchain

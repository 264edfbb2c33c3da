#include "indchain/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "indchain/types.hpp"

namespace indchain {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kRatioTol = 1e-11;
constexpr int kLpPivotCap = 10000;
}  // namespace

void LinearConstraintSystem::add_equality(const Eigen::VectorXd& a, double b) {
    if (a.size() != dim_) throw StructuralError("equality coefficient vector has wrong dimension");
    eq_.push_back(a);
    eq_rhs_.push_back(b);
}

void LinearConstraintSystem::add_inequality(const Eigen::VectorXd& a, double b) {
    if (a.size() != dim_) throw StructuralError("inequality coefficient vector has wrong dimension");
    ineq_.push_back(a);
    ineq_rhs_.push_back(b);
}

Eigen::MatrixXd LinearConstraintSystem::equality_matrix() const {
    Eigen::MatrixXd m(num_equalities(), dim_);
    for (int i = 0; i < num_equalities(); ++i) m.row(i) = eq_[i].transpose();
    return m;
}

Eigen::VectorXd LinearConstraintSystem::equality_rhs_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), eq_rhs_.size());
}

Eigen::MatrixXd LinearConstraintSystem::inequality_matrix() const {
    Eigen::MatrixXd m(num_inequalities(), dim_);
    for (int i = 0; i < num_inequalities(); ++i) m.row(i) = ineq_[i].transpose();
    return m;
}

Eigen::VectorXd LinearConstraintSystem::inequality_rhs_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(ineq_rhs_.data(), ineq_rhs_.size());
}

double LinearConstraintSystem::max_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (int i = 0; i < num_equalities(); ++i)
        worst = std::max(worst, std::abs(eq_[i].dot(x) - eq_rhs_[i]));
    for (int i = 0; i < num_inequalities(); ++i)
        worst = std::max(worst, ineq_[i].dot(x) - ineq_rhs_[i]);
    return worst;
}

// ---------------------------------------------------------------------------
// Revised simplex
// ---------------------------------------------------------------------------

namespace {

struct StandardForm {
    Eigen::MatrixXd A;  // m x n, rhs nonnegative
    Eigen::VectorXd b;
    int dim = 0;        // original dimension (x = u - w over the first 2*dim columns)
};

StandardForm to_standard_form(const LinearConstraintSystem& cs) {
    const int d = cs.dimension();
    const int me = cs.num_equalities(), mi = cs.num_inequalities();
    const int m = me + mi, n = 2 * d + mi;
    StandardForm sf;
    sf.dim = d;
    sf.A = Eigen::MatrixXd::Zero(m, n);
    sf.b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < me; ++i) {
        sf.A.row(i).segment(0, d) = cs.equality(i).transpose();
        sf.A.row(i).segment(d, d) = -cs.equality(i).transpose();
        sf.b(i) = cs.equality_rhs(i);
    }
    for (int j = 0; j < mi; ++j) {
        sf.A.row(me + j).segment(0, d) = cs.inequality(j).transpose();
        sf.A.row(me + j).segment(d, d) = -cs.inequality(j).transpose();
        sf.A(me + j, 2 * d + j) = 1.0;  // slack
        sf.b(me + j) = cs.inequality_rhs(j);
    }
    for (int i = 0; i < m; ++i)
        if (sf.b(i) < 0.0) {
            sf.A.row(i) = -sf.A.row(i);
            sf.b(i) = -sf.b(i);
        }
    return sf;
}

// Bland's rule iteration on min c^T y, A y = b, y >= 0 starting from `basis`.
LpStatus simplex_core(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                      std::vector<int>& basis, Eigen::VectorXd& xB, int& pivots) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    while (pivots < kLpPivotCap) {
        Eigen::MatrixXd B(m, m);
        for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        Eigen::MatrixXd Binv = lu.inverse();
        xB = Binv * b;

        Eigen::VectorXd cB(m);
        for (int i = 0; i < m; ++i) cB(i) = c(basis[i]);
        Eigen::VectorXd lambda = Binv.transpose() * cB;

        int entering = -1;
        std::vector<bool> is_basic(n, false);
        for (int i : basis) is_basic[i] = true;
        for (int j = 0; j < n; ++j) {
            if (is_basic[j]) continue;
            double reduced = c(j) - lambda.dot(A.col(j));
            if (reduced < -kPivotTol) {
                entering = j;  // smallest index: Bland
                break;
            }
        }
        if (entering < 0) return LpStatus::optimal;

        Eigen::VectorXd dir = Binv * A.col(entering);
        int leave_pos = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (dir(i) > kRatioTol) {
                double ratio = std::max(xB(i), 0.0) / dir(i);
                if (ratio < best_ratio - kRatioTol ||
                    (ratio < best_ratio + kRatioTol &&
                     (leave_pos < 0 || basis[i] < basis[leave_pos]))) {
                    best_ratio = ratio;
                    leave_pos = i;
                }
            }
        }
        if (leave_pos < 0) return LpStatus::unbounded;
        basis[leave_pos] = entering;
        ++pivots;
    }
    return LpStatus::iteration_limit;
}

struct Phase1Result {
    LpStatus status = LpStatus::infeasible;
    Eigen::MatrixXd A;  // artificial columns and redundant rows removed
    Eigen::VectorXd b;
    std::vector<int> basis;
    int pivots = 0;
};

Phase1Result phase1(const StandardForm& sf) {
    const int m = static_cast<int>(sf.A.rows());
    const int n = static_cast<int>(sf.A.cols());
    Phase1Result res;

    Eigen::MatrixXd A1(m, n + m);
    A1.leftCols(n) = sf.A;
    A1.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
    c1.tail(m).setOnes();

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;
    Eigen::VectorXd xB;
    LpStatus st = simplex_core(A1, sf.b, c1, basis, xB, res.pivots);
    if (st == LpStatus::iteration_limit) {
        res.status = st;
        return res;
    }
    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n) infeasibility += std::max(xB(i), 0.0);
    if (infeasibility > kFeasTol) {
        res.status = LpStatus::infeasible;
        return res;
    }

    // Drive remaining zero-level artificials out of the basis; rows where no
    // structural pivot exists are redundant and get dropped.
    Eigen::MatrixXd B(m, m);
    for (int i = 0; i < m; ++i) B.col(i) = A1.col(basis[i]);
    Eigen::MatrixXd Binv = B.partialPivLu().inverse();
    std::vector<int> redundant;
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        Eigen::RowVectorXd row = Binv.row(i) * sf.A;
        int pivot_col = -1;
        std::vector<bool> is_basic(n, false);
        for (int bj : basis)
            if (bj < n) is_basic[bj] = true;
        for (int j = 0; j < n; ++j)
            if (!is_basic[j] && std::abs(row(j)) > kPivotTol) {
                pivot_col = j;
                break;
            }
        if (pivot_col >= 0) {
            basis[i] = pivot_col;
            for (int r = 0; r < m; ++r) B.col(r) = A1.col(basis[r]);
            Binv = B.partialPivLu().inverse();
        } else {
            redundant.push_back(i);
        }
    }

    std::vector<int> keep;
    for (int i = 0; i < m; ++i)
        if (std::find(redundant.begin(), redundant.end(), i) == redundant.end()) keep.push_back(i);
    res.A.resize(static_cast<int>(keep.size()), n);
    res.b.resize(static_cast<int>(keep.size()));
    res.basis.clear();
    for (std::size_t r = 0; r < keep.size(); ++r) {
        res.A.row(static_cast<int>(r)) = sf.A.row(keep[r]);
        res.b(static_cast<int>(r)) = sf.b(keep[r]);
        res.basis.push_back(basis[keep[r]]);
    }
    res.status = LpStatus::optimal;
    return res;
}

}  // namespace

void LinearConstraintSystem::assert_feasible() const {
    StandardForm sf = to_standard_form(*this);
    Phase1Result p1 = phase1(sf);
    if (p1.status == LpStatus::infeasible)
        throw InfeasibleError("constraint system has no feasible point");
    if (p1.status == LpStatus::iteration_limit)
        throw NumericalError("phase-1 simplex hit the pivot cap");
}

LpResult solve_lp(const Eigen::VectorXd& objective, const LinearConstraintSystem& cs) {
    if (objective.size() != cs.dimension())
        throw StructuralError("objective dimension mismatch");
    StandardForm sf = to_standard_form(cs);
    Phase1Result p1 = phase1(sf);
    LpResult out;
    out.pivots = p1.pivots;
    if (p1.status != LpStatus::optimal) {
        out.status = p1.status;
        return out;
    }

    const int d = cs.dimension();
    const int n = static_cast<int>(p1.A.cols());
    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n);
    c2.segment(0, d) = -objective;  // maximize => minimize the negation
    c2.segment(d, d) = objective;

    Eigen::VectorXd xB;
    LpStatus st = simplex_core(p1.A, p1.b, c2, p1.basis, xB, out.pivots);
    if (st != LpStatus::optimal) {
        out.status = st;
        return out;
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < p1.basis.size(); ++i) y(p1.basis[i]) = std::max(xB(static_cast<int>(i)), 0.0);
    out.x = y.segment(0, d) - y.segment(d, d);
    out.value = objective.dot(out.x);
    out.status = LpStatus::optimal;
    return out;
}

// ---------------------------------------------------------------------------
// Dual active-set projection
// ---------------------------------------------------------------------------

double bregman(const RegularizerSpec& reg, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (reg.kind != RegularizerSpec::Kind::quadratic)
        throw StructuralError("only the quadratic regularizer is implemented");
    if (reg.mu <= 0.0) throw StructuralError("strong convexity parameter must be positive");
    return 0.5 * reg.mu * (p - q).squaredNorm();
}

Eigen::VectorXd project_onto_polytope(const LinearConstraintSystem& cs, const Eigen::VectorXd& z,
                                      int max_iterations) {
    const int d = cs.dimension();
    const int me = cs.num_equalities();
    const int mi = cs.num_inequalities();
    if (z.size() != d) throw StructuralError("projection point has wrong dimension");

    Eigen::MatrixXd E = cs.equality_matrix();
    Eigen::VectorXd be = cs.equality_rhs_vector();

    // Start from the minimizer subject to the equalities only.
    Eigen::VectorXd x = z;
    if (me > 0) {
        Eigen::MatrixXd gram = E * E.transpose();
        Eigen::VectorXd lambda = gram.completeOrthogonalDecomposition().solve(E * z - be);
        x = z - E.transpose() * lambda;
        if ((E * x - be).lpNorm<Eigen::Infinity>() > kFeasTol)
            throw InfeasibleError("equality constraints are inconsistent");
    }

    std::vector<int> active;      // inequality indices in the working set
    std::vector<double> duals;    // nonnegative multipliers, parallel to `active`

    auto working_normals = [&]() {
        Eigen::MatrixXd N(d, me + static_cast<int>(active.size()));
        for (int i = 0; i < me; ++i) N.col(i) = cs.equality(i);
        for (std::size_t i = 0; i < active.size(); ++i)
            N.col(me + static_cast<int>(i)) = cs.inequality(active[i]);
        return N;
    };

    int iterations = 0;
    while (iterations++ < max_iterations) {
        // Most violated inactive inequality.
        int worst = -1;
        double worst_violation = 1e-11;
        for (int j = 0; j < mi; ++j) {
            if (std::find(active.begin(), active.end(), j) != active.end()) continue;
            double v = cs.inequality(j).dot(x) - cs.inequality_rhs(j);
            if (v > worst_violation) {
                worst_violation = v;
                worst = j;
            }
        }
        if (worst < 0) break;

        const Eigen::VectorXd& n_new = cs.inequality(worst);
        const double b_new = cs.inequality_rhs(worst);
        double accumulated = 0.0;

        bool added = false;
        while (iterations++ < max_iterations) {
            Eigen::MatrixXd N = working_normals();
            Eigen::VectorXd coef;
            Eigen::VectorXd zdir;
            if (N.cols() > 0) {
                coef = N.completeOrthogonalDecomposition().solve(n_new);
                zdir = n_new - N * coef;
            } else {
                coef.resize(0);
                zdir = n_new;
            }
            const double step_scale = zdir.squaredNorm();
            const bool dependent = step_scale <= 1e-20 * std::max(1.0, n_new.squaredNorm());

            // Blocking constraint: first active inequality whose multiplier
            // would cross zero.
            double t_partial = std::numeric_limits<double>::infinity();
            int blocker = -1;
            for (std::size_t i = 0; i < active.size(); ++i) {
                double k = coef.size() > 0 ? coef(me + static_cast<int>(i)) : 0.0;
                if (k > 1e-12) {
                    double t = duals[i] / k;
                    if (t < t_partial) {
                        t_partial = t;
                        blocker = static_cast<int>(i);
                    }
                }
            }

            if (dependent) {
                if (blocker < 0)
                    throw InfeasibleError("constraint system has no feasible point (projection)");
                double t = std::max(t_partial, 0.0);
                for (std::size_t i = 0; i < active.size(); ++i)
                    duals[i] -= t * coef(me + static_cast<int>(i));
                accumulated += t;
                active.erase(active.begin() + blocker);
                duals.erase(duals.begin() + blocker);
                continue;
            }

            double violation = n_new.dot(x) - b_new;
            double t_full = violation / step_scale;
            double t = std::max(std::min(t_full, t_partial), 0.0);

            x -= t * zdir;
            for (std::size_t i = 0; i < active.size(); ++i)
                duals[i] -= t * coef(me + static_cast<int>(i));
            accumulated += t;

            if (t_full <= t_partial) {
                active.push_back(worst);
                duals.push_back(accumulated);
                added = true;
                break;
            }
            active.erase(active.begin() + blocker);
            duals.erase(duals.begin() + blocker);
        }
        if (!added && iterations >= max_iterations) break;
    }

    double residual = cs.max_violation(x);
    if (residual > kFeasTol)
        throw NumericalError("projection did not converge within the iteration cap; residual " +
                             std::to_string(residual));
    return x;
}

Eigen::VectorXd omd_update(const Eigen::VectorXd& current, const Eigen::VectorXd& gradient_payoff,
                           double eta, const LinearConstraintSystem& cs, const RegularizerSpec& reg) {
    if (reg.kind != RegularizerSpec::Kind::quadratic)
        throw StructuralError("only the quadratic regularizer is implemented");
    if (reg.mu <= 0.0) throw StructuralError("strong convexity parameter must be positive");
    Eigen::VectorXd target = current + (eta / reg.mu) * gradient_payoff;
    try {
        return project_onto_polytope(cs, target);
    } catch (const NumericalError&) {
        // Alternating-projection fallback; slower, but independent of the
        // active-set path.
        Eigen::VectorXd x = dykstra_project(cs, target, 200000, 1e-11);
        if (cs.max_violation(x) > kFeasTol) throw;
        return x;
    }
}

Eigen::VectorXd dykstra_project(const LinearConstraintSystem& cs, const Eigen::VectorXd& z,
                                int max_sweeps, double tol) {
    const int me = cs.num_equalities(), mi = cs.num_inequalities();
    Eigen::VectorXd x = z;
    std::vector<Eigen::VectorXd> corr(me + mi, Eigen::VectorXd::Zero(z.size()));
    std::vector<double> norm2(me + mi);
    for (int i = 0; i < me; ++i) norm2[i] = cs.equality(i).squaredNorm();
    for (int j = 0; j < mi; ++j) norm2[me + j] = cs.inequality(j).squaredNorm();

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double moved = 0.0;
        for (int i = 0; i < me + mi; ++i) {
            if (norm2[i] <= 0.0) continue;
            const Eigen::VectorXd& a = i < me ? cs.equality(i) : cs.inequality(i - me);
            const double b = i < me ? cs.equality_rhs(i) : cs.inequality_rhs(i - me);
            Eigen::VectorXd y = x + corr[i];
            double overshoot = a.dot(y) - b;
            Eigen::VectorXd projected = (i < me || overshoot > 0.0) ? Eigen::VectorXd(y - (overshoot / norm2[i]) * a)
                                                                    : y;
            corr[i] = y - projected;
            moved = std::max(moved, (projected - x).lpNorm<Eigen::Infinity>());
            x = projected;
        }
        if (moved < tol && cs.max_violation(x) < tol * 10) break;
    }
    return x;
}

}  // namespace indchain

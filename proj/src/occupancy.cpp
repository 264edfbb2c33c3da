#include "indchain/occupancy.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace indchain {

void StateOccupancy::validate(double tol) const {
    double sum = 0.0;
    for (double v : nu) {
        if (v < -tol) throw StructuralError("negative state occupancy entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw StructuralError("state occupancy does not sum to 1");
}

void StateActionOccupancy::validate(double tol) const {
    double sum = 0.0;
    for (double v : rho_) {
        if (v < -tol) throw StructuralError("negative state-action occupancy entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) throw StructuralError("state-action occupancy does not sum to 1");
}

OccupancyMeasure OccupancyMeasure::uniform(int num_states, int num_actions) {
    OccupancyMeasure q(num_states, num_actions);
    const double v = 1.0 / static_cast<double>(q.q_.size());
    for (auto& e : q.q_) e = v;
    return q;
}

StateActionOccupancy OccupancyMeasure::marginal_sa() const {
    StateActionOccupancy rho(S_, A_);
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a) rho.at(s, a) = row_sum(s, a);
    return rho;
}

StateOccupancy OccupancyMeasure::marginal_s() const {
    StateOccupancy nu;
    nu.nu.assign(S_, 0.0);
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a) nu.nu[s] += row_sum(s, a);
    return nu;
}

void OccupancyMeasure::validate(double tol) const {
    double total = 0.0;
    for (double v : q_) {
        if (v < -tol) throw StructuralError("negative occupancy entry");
        total += v;
    }
    if (std::abs(total - 1.0) > tol) throw StructuralError("occupancy measure does not sum to 1");
    for (int s = 0; s < S_; ++s) {
        double in = 0.0, out = 0.0;
        for (int a = 0; a < A_; ++a)
            for (int s2 = 0; s2 < S_; ++s2) {
                in += at(s2, a, s);
                out += at(s, a, s2);
            }
        if (std::abs(in - out) > tol)
            throw StructuralError("flow balance violated at state " + std::to_string(s));
    }
}

std::vector<double> stationary_of_chain(const std::vector<double>& chain, int S) {
    // Solve (p^T - I) nu = 0 with the last equation replaced by sum(nu) = 1.
    Eigen::MatrixXd A(S, S);
    for (int r = 0; r < S; ++r)
        for (int c = 0; c < S; ++c) A(r, c) = chain[c * S + r] - (r == c ? 1.0 : 0.0);
    for (int c = 0; c < S; ++c) A(S - 1, c) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(S);
    b(S - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        throw ErgodicityError("stationary system is singular: no unique stationary distribution");
    Eigen::VectorXd nu = lu.solve(b);

    double residual = (A * nu - b).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
        throw ErgodicityError("stationary solve residual " + std::to_string(residual) + " too large");
    std::vector<double> out(S);
    for (int s = 0; s < S; ++s) {
        if (nu(s) < -1e-10)
            throw ErgodicityError("stationary solution has a negative component");
        out[s] = std::max(nu(s), 0.0);
    }
    return out;
}

OccupancyTriple occupancy_from_policy(const StationaryPolicy& policy, const TransitionKernel& kernel) {
    const int S = kernel.num_states(), A = kernel.num_actions();
    std::vector<double> chain(static_cast<std::size_t>(S) * S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2)
                chain[static_cast<std::size_t>(s) * S + s2] += policy.at(s, a) * kernel.at(s, a, s2);

    OccupancyTriple t;
    t.nu.nu = stationary_of_chain(chain, S);
    t.rho = StateActionOccupancy(S, A);
    t.q = OccupancyMeasure(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            t.rho.at(s, a) = t.nu.nu[s] * policy.at(s, a);
            for (int s2 = 0; s2 < S; ++s2) t.q.at(s, a, s2) = t.rho.at(s, a) * kernel.at(s, a, s2);
        }
    return t;
}

InducedPair induced_kernel_and_policy(const OccupancyMeasure& q) {
    const int S = q.num_states(), A = q.num_actions();
    InducedPair out;
    out.kernel = TransitionKernel(S, A);
    out.policy = StationaryPolicy(S, A);

    std::vector<double> state_mass(S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) state_mass[s] += q.row_sum(s, a);

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double rs = q.row_sum(s, a);
            if (rs <= 0.0) {
                out.used_uniform_fallback = true;
                for (int s2 = 0; s2 < S; ++s2) out.kernel.at(s, a, s2) = 1.0 / S;
            } else {
                for (int s2 = 0; s2 < S; ++s2) out.kernel.at(s, a, s2) = q.at(s, a, s2) / rs;
            }
            if (state_mass[s] <= 0.0) {
                out.used_uniform_fallback = true;
                out.policy.at(s, a) = 1.0 / A;
            } else {
                out.policy.at(s, a) = rs / state_mass[s];
            }
        }
    }
    return out;
}

namespace {

void consider(MembershipVerdict& v, double violation, const std::string& label) {
    if (violation > v.worst_violation) {
        v.worst_violation = violation;
        v.worst_constraint = label;
    }
}

MembershipVerdict check_core(const OccupancyMeasure& q, const ShrunkPolytopeSpec& spec) {
    MembershipVerdict v;
    v.worst_violation = 0.0;
    const int S = q.num_states(), A = q.num_actions();

    double total = 0.0;
    for (double e : q.data()) {
        total += e;
        consider(v, -e, "nonnegativity");
    }
    consider(v, std::abs(total - 1.0), "normalization");

    for (int s = 0; s < S; ++s) {
        double in = 0.0, out = 0.0;
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2) {
                in += q.at(s2, a, s);
                out += q.at(s, a, s2);
            }
        consider(v, std::abs(in - out), "flow balance at state " + std::to_string(s));
    }
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            consider(v, spec.delta - q.row_sum(s, a),
                     "rho floor at (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
    return v;
}

}  // namespace

MembershipVerdict check_membership(const OccupancyMeasure& q, const ShrunkPolytopeSpec& spec,
                                   double tol) {
    MembershipVerdict v = check_core(q, spec);
    v.member = v.worst_violation <= tol;
    return v;
}

MembershipVerdict check_membership(const OccupancyMeasure& q, const ShrunkPolytopeSpec& spec,
                                   const std::vector<double>& lower, const std::vector<double>& upper,
                                   double tol) {
    MembershipVerdict v = check_core(q, spec);
    const int S = q.num_states(), A = q.num_actions();
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const double rs = q.row_sum(s, a);
            for (int s2 = 0; s2 < S; ++s2) {
                const std::size_t f = (static_cast<std::size_t>(s) * A + a) * S + s2;
                const std::string tag = "(s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                                        ", s'=" + std::to_string(s2) + ")";
                consider(v, lower[f] * rs - q.at(s, a, s2), "confidence lower bound at " + tag);
                consider(v, q.at(s, a, s2) - upper[f] * rs, "confidence upper bound at " + tag);
            }
        }
    v.member = v.worst_violation <= tol;
    return v;
}

}  // namespace indchain

#include "indchain/confidence.hpp"

#include <algorithm>
#include <cmath>

namespace indchain {

void WidthSchedule::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0) throw StructuralError("gamma must lie in (0, 1)");
    if (mode == ScheduleMode::finite_horizon && horizon < 1)
        throw StructuralError("finite-horizon schedule needs K >= 1");
    if (num_players < 1 || num_states < 1 || num_actions < 1)
        throw StructuralError("width schedule shape is empty");
    if (denominator_factor != 1 && denominator_factor != 2)
        throw StructuralError("denominator factor must be 1 or 2");
}

double WidthSchedule::epsilon(int episode_k, long long visit_count) const {
    const double shape = static_cast<double>(num_actions) * num_states * num_states;
    double log_term;
    if (mode == ScheduleMode::finite_horizon) {
        log_term = std::log(static_cast<double>(num_players) * horizon * shape) - std::log(gamma);
    } else {
        const double k = static_cast<double>(std::max(episode_k, 1));
        log_term = std::log(2.0 * num_players * k * k * shape) - std::log(gamma);
    }
    const double denom = denominator_factor * static_cast<double>(std::max<long long>(1, visit_count));
    return std::sqrt(log_term / denom);
}

ConfidenceState::ConfidenceState(int num_states, int num_actions)
    : S_(num_states), A_(num_actions),
      n_(static_cast<std::size_t>(S_) * A_, 0),
      m_(static_cast<std::size_t>(S_) * A_ * S_, 0),
      lower_(static_cast<std::size_t>(S_) * A_ * S_, 0.0),
      upper_(static_cast<std::size_t>(S_) * A_ * S_, 1.0) {}

double ConfidenceState::empirical(int s, int a, int s2) const {
    return static_cast<double>(m_[sas(s, a, s2)]) /
           static_cast<double>(std::max<long long>(1, n_[sa(s, a)]));
}

void ConfidenceState::record_transition(int s, int a, int s_next) {
    if (s < 0 || s >= S_ || a < 0 || a >= A_ || s_next < 0 || s_next >= S_)
        throw StructuralError("transition record out of range");
    ++m_[sas(s, a, s_next)];
    ++n_[sa(s, a)];
}

bool ConfidenceState::end_episode_update(const WidthSchedule& schedule) {
    schedule.validate();
    ++k_;
    bool collapsed = false;
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a) {
            const double eps = schedule.epsilon(k_, n_[sa(s, a)]);
            bool row_ok = true;
            for (int s2 = 0; s2 < S_; ++s2) {
                const std::size_t f = sas(s, a, s2);
                const double center = empirical(s, a, s2);
                const double lo = std::max(lower_[f], std::max(0.0, center - eps));
                const double hi = std::min(upper_[f], std::min(1.0, center + eps));
                if (lo > hi + 1e-15) row_ok = false;
            }
            if (row_ok) {
                for (int s2 = 0; s2 < S_; ++s2) {
                    const std::size_t f = sas(s, a, s2);
                    const double center = empirical(s, a, s2);
                    lower_[f] = std::max(lower_[f], std::max(0.0, center - eps));
                    upper_[f] = std::min(upper_[f], std::min(1.0, center + eps));
                }
            } else {
                // The running intersection excluded the empirical row: the
                // high-confidence event failed. Re-center on the fresh
                // interval so the run can keep going, and report it.
                collapsed = true;
                for (int s2 = 0; s2 < S_; ++s2) {
                    const std::size_t f = sas(s, a, s2);
                    const double center = empirical(s, a, s2);
                    lower_[f] = std::max(0.0, center - eps);
                    upper_[f] = std::min(1.0, center + eps);
                }
            }
        }
    return !collapsed;
}

double ConfidenceState::max_width() const {
    double w = 0.0;
    for (std::size_t f = 0; f < lower_.size(); ++f) w = std::max(w, upper_[f] - lower_[f]);
    return w;
}

double ConfidenceState::min_width() const {
    double w = 1.0;
    for (std::size_t f = 0; f < lower_.size(); ++f) w = std::min(w, upper_[f] - lower_[f]);
    return w;
}

void ConfidenceState::pin_intervals(const TransitionKernel& center, double width) {
    if (center.num_states() != S_ || center.num_actions() != A_)
        throw StructuralError("kernel shape does not match the confidence state");
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a)
            for (int s2 = 0; s2 < S_; ++s2) {
                const std::size_t f = sas(s, a, s2);
                lower_[f] = std::max(0.0, center.at(s, a, s2) - width);
                upper_[f] = std::min(1.0, center.at(s, a, s2) + width);
            }
}

bool ConfidenceState::contains(const TransitionKernel& kernel, double slack) const {
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a)
            for (int s2 = 0; s2 < S_; ++s2) {
                const double p = kernel.at(s, a, s2);
                const std::size_t f = sas(s, a, s2);
                if (p < lower_[f] - slack || p > upper_[f] + slack) return false;
            }
    return true;
}

namespace {

LinearConstraintSystem base_polytope(int S, int A, double delta) {
    const int dim = S * A * S;
    LinearConstraintSystem cs(dim);
    auto flat = [&](int s, int a, int s2) { return (s * A + a) * S + s2; };

    Eigen::VectorXd ones = Eigen::VectorXd::Ones(dim);
    cs.add_equality(ones, 1.0);

    for (int s = 0; s < S; ++s) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2) {
                row(flat(s2, a, s)) += 1.0;  // inflow
                row(flat(s, a, s2)) -= 1.0;  // outflow
            }
        cs.add_equality(row, 0.0);
    }

    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
            for (int s2 = 0; s2 < S; ++s2) row(flat(s, a, s2)) = -1.0;
            cs.add_inequality(row, -delta);  // rho(s,a) >= delta
        }

    for (int f = 0; f < dim; ++f) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        row(f) = -1.0;
        cs.add_inequality(row, 0.0);  // q >= 0
    }
    return cs;
}

}  // namespace

LinearConstraintSystem shrunk_polytope_constraints(const ShrunkPolytopeSpec& spec) {
    spec.validate();
    LinearConstraintSystem cs = base_polytope(spec.num_states, spec.num_actions, spec.delta);
    cs.assert_feasible();
    return cs;
}

LinearConstraintSystem as_constraints(const ConfidenceState& state, const ShrunkPolytopeSpec& spec) {
    spec.validate();
    const int S = state.num_states(), A = state.num_actions();
    if (S != spec.num_states || A != spec.num_actions)
        throw StructuralError("confidence state and polytope spec shapes differ");
    LinearConstraintSystem cs = base_polytope(S, A, spec.delta);
    const int dim = S * A * S;
    auto flat = [&](int s, int a, int s2) { return (s * A + a) * S + s2; };

    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2) {
                const double lo = state.lower(s, a, s2);
                const double hi = state.upper(s, a, s2);
                if (lo > hi)
                    throw InfeasibleError("confidence interval empty at (s=" + std::to_string(s) +
                                          ", a=" + std::to_string(a) + ", s'=" + std::to_string(s2) + ")");
                // lower * rho(s,a) - q(s,a,s') <= 0
                if (lo > 0.0) {
                    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
                    for (int t = 0; t < S; ++t) row(flat(s, a, t)) += lo;
                    row(flat(s, a, s2)) -= 1.0;
                    cs.add_inequality(row, 0.0);
                }
                // q(s,a,s') - upper * rho(s,a) <= 0
                if (hi < 1.0) {
                    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
                    row(flat(s, a, s2)) = 1.0;
                    for (int t = 0; t < S; ++t) row(flat(s, a, t)) -= hi;
                    cs.add_inequality(row, 0.0);
                }
            }
    cs.assert_feasible();
    return cs;
}

}  // namespace indchain

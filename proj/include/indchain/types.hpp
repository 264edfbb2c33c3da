#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace indchain {

/// Raised when a tensor fails a structural invariant (off-simplex row,
/// negative probability, bad shape). The message names the offending index.
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an induced Markov chain has no unique stationary distribution.
struct ErgodicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// P(s' | s, a) for one player, stored dense row-major over (s, a, s').
class TransitionKernel {
  public:
    TransitionKernel() = default;
    TransitionKernel(int num_states, int num_actions)
        : S_(num_states), A_(num_actions),
          p_(static_cast<std::size_t>(S_) * A_ * S_, 0.0) {}

    int num_states() const { return S_; }
    int num_actions() const { return A_; }

    double& at(int s, int a, int s2) { return p_[idx(s, a, s2)]; }
    double at(int s, int a, int s2) const { return p_[idx(s, a, s2)]; }

    const std::vector<double>& data() const { return p_; }
    std::vector<double>& data() { return p_; }

    /// Every (s, a) slice must be a distribution within `tol`.
    void validate(double tol = 1e-12) const {
        for (int s = 0; s < S_; ++s)
            for (int a = 0; a < A_; ++a) {
                double sum = 0.0;
                for (int s2 = 0; s2 < S_; ++s2) {
                    double v = at(s, a, s2);
                    if (v < -tol || v > 1.0 + tol)
                        throw StructuralError("kernel entry out of [0,1] at (s=" + std::to_string(s) +
                                              ", a=" + std::to_string(a) + ", s'=" + std::to_string(s2) + ")");
                    sum += v;
                }
                if (std::abs(sum - 1.0) > tol)
                    throw StructuralError("kernel row off simplex at (s=" + std::to_string(s) +
                                          ", a=" + std::to_string(a) + "), sum=" + std::to_string(sum));
            }
    }

  private:
    std::size_t idx(int s, int a, int s2) const {
        return (static_cast<std::size_t>(s) * A_ + a) * S_ + s2;
    }
    int S_ = 0, A_ = 0;
    std::vector<double> p_;
};

/// pi(a | s) for one player; each state row is a distribution over actions.
class StationaryPolicy {
  public:
    StationaryPolicy() = default;
    StationaryPolicy(int num_states, int num_actions)
        : S_(num_states), A_(num_actions),
          p_(static_cast<std::size_t>(S_) * A_, 0.0) {}

    static StationaryPolicy uniform(int num_states, int num_actions) {
        StationaryPolicy pi(num_states, num_actions);
        for (auto& v : pi.p_) v = 1.0 / num_actions;
        return pi;
    }

    int num_states() const { return S_; }
    int num_actions() const { return A_; }

    double& at(int s, int a) { return p_[static_cast<std::size_t>(s) * A_ + a]; }
    double at(int s, int a) const { return p_[static_cast<std::size_t>(s) * A_ + a]; }

    const double* row(int s) const { return p_.data() + static_cast<std::size_t>(s) * A_; }
    const std::vector<double>& data() const { return p_; }
    std::vector<double>& data() { return p_; }

    void validate(double tol = 1e-12) const {
        for (int s = 0; s < S_; ++s) {
            double sum = 0.0;
            for (int a = 0; a < A_; ++a) {
                if (at(s, a) < -tol)
                    throw StructuralError("negative policy entry at (s=" + std::to_string(s) +
                                          ", a=" + std::to_string(a) + ")");
                sum += at(s, a);
            }
            if (std::abs(sum - 1.0) > tol)
                throw StructuralError("policy row off simplex at s=" + std::to_string(s));
        }
    }

    double min_entry() const {
        double m = 1.0;
        for (double v : p_) m = std::min(m, v);
        return m;
    }

  private:
    int S_ = 0, A_ = 0;
    std::vector<double> p_;
};

}  // namespace indchain

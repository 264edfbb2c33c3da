#include "indchain/learner.hpp"

#include <cmath>

namespace indchain {

void EtaSchedule::validate() const {
    if (c <= 0.0) throw StructuralError("step-size scale c must be positive");
    if (mode == ScheduleMode::finite_horizon) {
        if (horizon < 1) throw StructuralError("finite-horizon step size needs K >= 1");
    } else {
        if (p <= 0.5 || p > 1.0)
            throw StructuralError("asymptotic step exponent must lie in (1/2, 1]");
    }
}

double EtaSchedule::value(int k) const {
    if (mode == ScheduleMode::finite_horizon) return c / std::sqrt(static_cast<double>(horizon));
    const double kk = static_cast<double>(std::max(k, 1));
    return c / (std::pow(kk, p) * std::log(kk + 1.0));
}

int WarmupSchedule::steps(int k) const {
    if (mode == ScheduleMode::finite_horizon) return std::max(d, 0);
    if (tau <= 0.0 || k <= 1) return 0;
    return static_cast<int>(std::ceil(2.0 * tau * std::log(static_cast<double>(k))));
}

double default_delta(double epsilon, int num_states, int num_actions, int num_players, double tau) {
    double delta = epsilon /
        (4.0 * num_states * num_actions * num_players * (tau + 1.0));
    // Keep the shrunk polytope nonempty regardless of the inputs.
    return std::min(delta, 0.5 / (static_cast<double>(num_states) * num_actions));
}

int default_finite_warmup(double tau, int horizon, int min_num_states) {
    if (tau <= 0.0) return 0;
    const double contraction = 1.0 - std::exp(-1.0 / tau);
    const double arg = contraction * std::sqrt(static_cast<double>(horizon)) / (2.0 * min_num_states);
    if (arg <= 1.0) return 0;
    return static_cast<int>(std::ceil(tau * std::log(arg)));
}

void LearnerConfig::validate(int num_states, int num_actions) const {
    if (delta <= 0.0 || delta >= 1.0 / (static_cast<double>(num_states) * num_actions))
        throw StructuralError("delta must lie in (0, 1/(|S||A|))");
    eta.validate();
    width.validate();
    if (width.num_states != num_states || width.num_actions != num_actions)
        throw StructuralError("width schedule shape does not match the learner's spaces");
}

Learner::Learner(int num_states, int num_actions, LearnerConfig config)
    : Learner(num_states, num_actions, std::move(config),
              OccupancyMeasure::uniform(num_states, num_actions)) {}

Learner::Learner(int num_states, int num_actions, LearnerConfig config,
                 const OccupancyMeasure& initial)
    : S_(num_states), A_(num_actions), config_(std::move(config)),
      q_hat_(initial), confidence_(num_states, num_actions),
      reward_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {
    config_.validate(S_, A_);
    if (initial.num_states() != S_ || initial.num_actions() != A_)
        throw StructuralError("initial occupancy shape mismatch");

    ShrunkPolytopeSpec spec{config_.delta, S_, A_};
    if (!check_membership(q_hat_, spec, 1e-10).member) {
        LinearConstraintSystem cs = shrunk_polytope_constraints(spec);
        Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(q_hat_.data().data(), q_hat_.size());
        Eigen::VectorXd projected = project_onto_polytope(cs, z);
        for (std::size_t f = 0; f < q_hat_.size(); ++f) q_hat_.data()[f] = projected(static_cast<int>(f));
    }
    policy_ = induced_kernel_and_policy(q_hat_).policy;
}

void Learner::begin_episode() {
    policy_ = induced_kernel_and_policy(q_hat_).policy;
    std::fill(reward_.begin(), reward_.end(), 0.0);
    unvisited_.clear();
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a) unvisited_.insert({s, a});
    step_ = 0;
    warmup_steps_ = config_.warmup.steps(episode_ + 1);
    phase_ = warmup_steps_ > 0 ? Phase::warming : Phase::covering;
    local_done_ = false;
}

int Learner::act(int state, RngStream& rng) const {
    if (phase_ == Phase::done) throw StructuralError("act() called outside an episode");
    return rng.sample_categorical(std::span<const double>(policy_.row(state), A_));
}

bool Learner::observe(int s, int a, double reward, int s_next) {
    if (phase_ == Phase::done) throw StructuralError("observe() called outside an episode");
    if (reward < 0.0 || reward > 1.0) throw StructuralError("reward outside [0,1]");
    confidence_.record_transition(s, a, s_next);

    const int t = step_++;
    if (t >= warmup_steps_) {
        phase_ = Phase::covering;
        auto it = unvisited_.find({s, a});
        if (it != unvisited_.end()) {
            unvisited_.erase(it);
            reward_[static_cast<std::size_t>(s) * A_ + a] = reward;
            if (unvisited_.empty()) local_done_ = true;
        }
    }
    return local_done_;
}

Learner::EpisodeOutcome Learner::end_episode() {
    EpisodeOutcome out;
    out.confidence_ok = confidence_.end_episode_update(config_.width);

    ShrunkPolytopeSpec spec{config_.delta, S_, A_};
    LinearConstraintSystem cs = as_constraints(confidence_, spec);

    // Expand R from (s, a) to (s, a, s') by copying across s'.
    Eigen::VectorXd gradient(static_cast<int>(q_hat_.size()));
    for (int s = 0; s < S_; ++s)
        for (int a = 0; a < A_; ++a)
            for (int s2 = 0; s2 < S_; ++s2)
                gradient((s * A_ + a) * S_ + s2) = reward_[static_cast<std::size_t>(s) * A_ + a];

    const int k = episode_ + 1;
    Eigen::VectorXd current = Eigen::Map<const Eigen::VectorXd>(q_hat_.data().data(), q_hat_.size());
    RegularizerSpec reg;
    Eigen::VectorXd next = omd_update(current, gradient, config_.eta.value(k), cs, reg);

    out.update_norm = (next - current).norm();
    for (std::size_t f = 0; f < q_hat_.size(); ++f) q_hat_.data()[f] = next(static_cast<int>(f));
    ++episode_;
    phase_ = Phase::done;
    local_done_ = false;
    return out;
}

}  // namespace indchain

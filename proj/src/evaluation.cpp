#include "indchain/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace indchain {

std::vector<double> joint_values(const JointGame& game,
                                 const std::vector<StateActionOccupancy>& rho_all) {
    const int n = game.num_players();
    std::vector<double> values(n, 0.0);
    std::vector<int> js(n), ja(n);
    const std::size_t table = game.joint_table_size();
    for (std::size_t f = 0; f < table; ++f) {
        game.unflatten(f, js, ja);
        double w = 1.0;
        for (int j = 0; j < n; ++j) w *= rho_all[j].at(js[j], ja[j]);
        if (w == 0.0) continue;
        for (int i = 0; i < n; ++i) values[i] += w * game.reward_flat(i, f);
    }
    return values;
}

std::vector<double> exact_value(const JointGame& game,
                                const std::vector<StationaryPolicy>& policies) {
    const int n = game.num_players();
    std::vector<StateActionOccupancy> rho(n);
    for (int j = 0; j < n; ++j)
        rho[j] = occupancy_from_policy(policies[j], game.player(j).kernel).rho;
    return joint_values(game, rho);
}

std::vector<double> payoff_gradient(const JointGame& game, int player,
                                    const std::vector<StateActionOccupancy>& rho_all) {
    const int n = game.num_players();
    const int S = game.player(player).num_states, A = game.player(player).num_actions;
    std::vector<double> v(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<int> js(n), ja(n);
    const std::size_t table = game.joint_table_size();
    for (std::size_t f = 0; f < table; ++f) {
        game.unflatten(f, js, ja);
        double w = 1.0;
        for (int j = 0; j < n; ++j)
            if (j != player) w *= rho_all[j].at(js[j], ja[j]);
        if (w == 0.0) continue;
        v[static_cast<std::size_t>(js[player]) * A + ja[player]] += w * game.reward_flat(player, f);
    }
    return v;
}

LinearConstraintSystem rho_polytope(const TransitionKernel& kernel, double delta) {
    const int S = kernel.num_states(), A = kernel.num_actions();
    const int dim = S * A;
    LinearConstraintSystem cs(dim);
    auto flat = [&](int s, int a) { return s * A + a; };

    cs.add_equality(Eigen::VectorXd::Ones(dim), 1.0);
    for (int s = 0; s < S; ++s) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        for (int a = 0; a < A; ++a) row(flat(s, a)) += 1.0;
        for (int s2 = 0; s2 < S; ++s2)
            for (int a2 = 0; a2 < A; ++a2) row(flat(s2, a2)) -= kernel.at(s2, a2, s);
        cs.add_equality(row, 0.0);
    }
    for (int f = 0; f < dim; ++f) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
        row(f) = -1.0;
        cs.add_inequality(row, -delta);
    }
    return cs;
}

BestResponse best_response(const JointGame& game, int player,
                           const std::vector<StateActionOccupancy>& rho_all, double delta) {
    const auto& kernel = game.player(player).kernel;
    const int S = kernel.num_states(), A = kernel.num_actions();
    std::vector<double> v = payoff_gradient(game, player, rho_all);

    LinearConstraintSystem cs = rho_polytope(kernel, delta);
    Eigen::VectorXd objective = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    LpResult lp = solve_lp(objective, cs);
    if (lp.status == LpStatus::infeasible)
        throw InfeasibleError("best-response polytope is empty; delta too large for player " +
                              std::to_string(player));
    if (lp.status != LpStatus::optimal)
        throw NumericalError("best-response LP did not reach optimality");

    BestResponse br;
    br.value = lp.value;
    br.rho = StateActionOccupancy(S, A);
    for (int f = 0; f < S * A; ++f) br.rho.data()[f] = std::max(lp.x(f), 0.0);
    br.q = OccupancyMeasure(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2)
                br.q.at(s, a, s2) = br.rho.at(s, a) * kernel.at(s, a, s2);
    return br;
}

GapReport ni_gap(const JointGame& game, const std::vector<StateActionOccupancy>& rho_all,
                 const std::vector<double>& deltas) {
    const int n = game.num_players();
    GapReport report;
    report.current_values = joint_values(game, rho_all);
    report.best_response_values.resize(n);
    for (int i = 0; i < n; ++i) {
        report.best_response_values[i] = best_response(game, i, rho_all, deltas[i]).value;
        report.psi_max += report.best_response_values[i] - report.current_values[i];
    }
    return report;
}

GapReport ni_gap(const JointGame& game, const std::vector<StationaryPolicy>& policies,
                 const std::vector<double>& deltas) {
    const int n = game.num_players();
    std::vector<StateActionOccupancy> rho(n);
    for (int j = 0; j < n; ++j)
        rho[j] = occupancy_from_policy(policies[j], game.player(j).kernel).rho;
    return ni_gap(game, rho, deltas);
}

WeightedGapAccumulator::WeightedGapAccumulator(const JointGame& game) : game_(&game) {
    const int n = game.num_players();
    objective_.resize(n);
    baseline_.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto& p = game.player(i);
        objective_[i] = Eigen::VectorXd::Zero(p.num_states * p.num_actions);
    }
}

void WeightedGapAccumulator::add_episode(double eta,
                                         const std::vector<StateActionOccupancy>& rho_true) {
    const int n = game_->num_players();
    for (int i = 0; i < n; ++i) {
        std::vector<double> v = payoff_gradient(*game_, i, rho_true);
        Eigen::Map<const Eigen::VectorXd> vm(v.data(), v.size());
        Eigen::Map<const Eigen::VectorXd> rm(rho_true[i].data().data(), v.size());
        objective_[i] += eta * vm;
        baseline_[i] += eta * vm.dot(rm);
    }
    w_ += eta;
}

std::vector<BestResponse> WeightedGapAccumulator::comparators(
    const std::vector<double>& deltas) const {
    const int n = game_->num_players();
    std::vector<BestResponse> out(n);
    for (int i = 0; i < n; ++i) {
        const auto& kernel = game_->player(i).kernel;
        LinearConstraintSystem cs = rho_polytope(kernel, deltas[i]);
        LpResult lp = solve_lp(objective_[i] / w_, cs);
        if (lp.status != LpStatus::optimal)
            throw NumericalError("weighted-gap LP failed for player " + std::to_string(i));
        out[i].value = lp.value;
        const int S = kernel.num_states(), A = kernel.num_actions();
        out[i].rho = StateActionOccupancy(S, A);
        for (int f = 0; f < S * A; ++f) out[i].rho.data()[f] = std::max(lp.x(f), 0.0);
        out[i].q = OccupancyMeasure(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                for (int s2 = 0; s2 < S; ++s2)
                    out[i].q.at(s, a, s2) = out[i].rho.at(s, a) * kernel.at(s, a, s2);
    }
    return out;
}

double WeightedGapAccumulator::weighted_gap(const std::vector<double>& deltas) const {
    if (w_ <= 0.0) return 0.0;
    std::vector<BestResponse> best = comparators(deltas);
    double gap = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) gap += best[i].value - baseline_[i] / w_;
    return gap;
}

namespace {

OccupancyMeasure snapshot_to_occupancy(const std::vector<double>& flat, int S, int A) {
    OccupancyMeasure q(S, A);
    q.data() = flat;
    return q;
}

}  // namespace

std::vector<DiagnosticsRow> diagnostics(const JointGame& game, const RunRecord& record, double tau) {
    const int n = game.num_players();
    const int K = static_cast<int>(record.rows.size());
    for (const auto& row : record.rows)
        for (const auto& ps : row.players)
            if (ps.q_hat.empty())
                throw SnapshotMissingError(
                    "diagnostics need per-episode snapshots; this record only stores stride " +
                    std::to_string(record.record_every));

    // Reconstruct per-episode true and estimated occupancies.
    std::vector<std::vector<StateActionOccupancy>> rho_true(K);
    std::vector<std::vector<StateActionOccupancy>> rho_hat(K);
    std::vector<std::vector<StateOccupancy>> nu_true(K), nu_hat(K);
    WeightedGapAccumulator acc(game);

    for (int k = 0; k < K; ++k) {
        rho_true[k].resize(n);
        rho_hat[k].resize(n);
        nu_true[k].resize(n);
        nu_hat[k].resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& p = game.player(i);
            OccupancyMeasure q_hat = snapshot_to_occupancy(record.rows[k].players[i].q_hat,
                                                           p.num_states, p.num_actions);
            InducedPair induced = induced_kernel_and_policy(q_hat);
            auto true_occ = occupancy_from_policy(induced.policy, p.kernel);
            auto hat_occ = occupancy_from_policy(induced.policy, induced.kernel);
            rho_true[k][i] = true_occ.rho;
            nu_true[k][i] = true_occ.nu;
            rho_hat[k][i] = hat_occ.rho;
            nu_hat[k][i] = hat_occ.nu;
        }
        acc.add_episode(record.rows[k].players[0].eta, rho_true[k]);
    }

    // Comparator rho*_i: maximizer of the run-averaged objective at each
    // player's recorded exploration floor.
    if (static_cast<int>(record.deltas.size()) != n)
        throw StructuralError("record is missing its per-player exploration floors");
    std::vector<BestResponse> star = acc.comparators(record.deltas);

    const double w_total = acc.weight_total();
    const double contraction = tau > 0.0 ? 1.0 - std::exp(-1.0 / tau) : 1.0;

    std::vector<DiagnosticsRow> out(K);
    for (int k = 0; k < K; ++k) {
        DiagnosticsRow& row = out[k];
        row.k = record.rows[k].k;
        row.error_summand.resize(n);
        row.regret_summand.resize(n);
        row.bias_summand.resize(n);
        row.nu_l1.resize(n);
        row.nu_l1_bound.resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& p = game.player(i);
            const double scale = record.rows[k].players[i].eta / w_total;
            std::vector<double> v = payoff_gradient(game, i, rho_true[k]);
            Eigen::Map<const Eigen::VectorXd> vm(v.data(), v.size());
            Eigen::Map<const Eigen::VectorXd> rt(rho_true[k][i].data().data(), v.size());
            Eigen::Map<const Eigen::VectorXd> rh(rho_hat[k][i].data().data(), v.size());
            Eigen::Map<const Eigen::VectorXd> rs(star[i].rho.data().data(), v.size());
            Eigen::Map<const Eigen::VectorXd> rw(record.rows[k].players[i].reward_estimator.data(),
                                                 v.size());
            row.error_summand[i] = scale * vm.dot(rh - rt);
            row.regret_summand[i] = scale * rw.dot(rs - rh);
            row.bias_summand[i] = scale * (vm - rw).dot(rs - rh);

            double l1 = 0.0;
            for (int s = 0; s < p.num_states; ++s)
                l1 += std::abs(nu_hat[k][i].nu[s] - nu_true[k][i].nu[s]);
            row.nu_l1[i] = l1;
            row.nu_l1_bound[i] = 2.0 * p.num_states / contraction *
                                 record.rows[k].players[i].width_in_force;
        }
    }
    return out;
}

void annotate_diagnostics(const JointGame& game, RunRecord& record, double tau) {
    if (record.rows.empty()) return;
    std::vector<DiagnosticsRow> rows = diagnostics(game, record, tau);
    const int n = game.num_players();
    std::vector<double> err(n, 0.0), reg(n, 0.0), bia(n, 0.0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        for (int i = 0; i < n; ++i) {
            err[i] += rows[k].error_summand[i];
            reg[i] += rows[k].regret_summand[i];
            bia[i] += rows[k].bias_summand[i];
        }
        record.rows[k].error_partial = err;
        record.rows[k].regret_partial = reg;
        record.rows[k].bias_partial = bia;
    }
}

double stability_probe(const JointGame& game, const std::vector<StateActionOccupancy>& rho_star,
                       double policy_floor, int samples, RngStream& rng) {
    const int n = game.num_players();
    double worst = std::numeric_limits<double>::infinity();
    for (int it = 0; it < samples; ++it) {
        std::vector<StateActionOccupancy> rho(n);
        for (int i = 0; i < n; ++i) {
            const auto& p = game.player(i);
            StationaryPolicy pi(p.num_states, p.num_actions);
            for (int s = 0; s < p.num_states; ++s) {
                double total = 0.0;
                std::vector<double> raw(p.num_actions);
                for (int a = 0; a < p.num_actions; ++a) {
                    raw[a] = policy_floor + rng.next_double();
                    total += raw[a];
                }
                for (int a = 0; a < p.num_actions; ++a) pi.at(s, a) = raw[a] / total;
            }
            rho[i] = occupancy_from_policy(pi, p.kernel).rho;
        }
        double value = 0.0;
        for (int i = 0; i < n; ++i) {
            std::vector<double> v = payoff_gradient(game, i, rho);
            Eigen::Map<const Eigen::VectorXd> vm(v.data(), v.size());
            Eigen::Map<const Eigen::VectorXd> ri(rho[i].data().data(), v.size());
            Eigen::Map<const Eigen::VectorXd> rs(rho_star[i].data().data(), v.size());
            value += vm.dot(rs - ri);
        }
        worst = std::min(worst, value);
    }
    return worst;
}

}  // namespace indchain

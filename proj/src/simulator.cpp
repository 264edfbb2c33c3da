#include "indchain/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "indchain/evaluation.hpp"

namespace indchain {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RunRecord run(const SimulationConfig& config) {
    if (config.game == nullptr) throw StructuralError("simulation config has no game");
    const JointGame& game = *config.game;
    const int n = game.num_players();
    if (static_cast<int>(config.learner_configs.size()) != n)
        throw StructuralError("expected one learner config per player");

    AssumptionReport assumptions = validate_game(game);
    if (assumptions.alpha <= 0.0 || !assumptions.ergodic) {
        std::string detail = assumptions.violations.empty() ? "" : (": " + assumptions.violations[0]);
        throw AssumptionViolationError("game fails the reachability/ergodicity preconditions" + detail);
    }

    std::vector<Learner> learners;
    std::vector<RngStream> action_rng, kernel_rng;
    learners.reserve(n);
    for (int i = 0; i < n; ++i) {
        LearnerConfig cfg = config.learner_configs[i];
        cfg.rng_seed = derive_seed(config.master_seed, seed_purpose::kAction, i);
        const auto& p = game.player(i);
        if (!config.initial_occupancies.empty())
            learners.emplace_back(p.num_states, p.num_actions, cfg, config.initial_occupancies[i]);
        else
            learners.emplace_back(p.num_states, p.num_actions, cfg);
        action_rng.emplace_back(cfg.rng_seed);
        kernel_rng.emplace_back(derive_seed(config.master_seed, seed_purpose::kKernel, i));
    }

    RunRecord record;
    record.num_players = n;
    record.horizon = config.horizon;
    record.record_every = std::max(config.record_every, 1);
    record.master_seed = config.master_seed;
    record.oracle_enabled = config.oracle_enabled;
    for (int i = 0; i < n; ++i) record.deltas.push_back(config.learner_configs[i].delta);

    WeightedGapAccumulator gap_acc(game);

    std::vector<int> state(n, 0), next_state(n), action(n);
    std::vector<double> reward(n);
    long long steps_total = 0;

    for (int k = 1; k <= config.horizon && !record.halted; ++k) {
        for (auto& l : learners) l.begin_episode();

        std::vector<char> done(n, 0);
        long long tau = 0;
        while (true) {
            for (int i = 0; i < n; ++i) action[i] = learners[i].act(state[i], action_rng[i]);
            joint_step(game, state, action, kernel_rng, next_state, reward);
            for (int i = 0; i < n; ++i)
                done[i] = learners[i].observe(state[i], action[i], reward[i], next_state[i]) ? 1 : 0;
            state = next_state;
            ++tau;
            ++steps_total;
            bool all_done = true;
            for (char d : done) all_done &= (d != 0);
            if (all_done) break;
            if (tau >= config.max_steps_per_episode) {
                record.halted = true;
                record.halt_reason = "episode " + std::to_string(k) + " exceeded the step cap";
                break;
            }
        }
        if (record.halted) break;

        EpisodeRow row;
        row.k = k;
        row.steps_total = steps_total;
        row.tau_k = static_cast<int>(tau);
        row.players.resize(n);
        for (int i = 0; i < n; ++i) {
            auto& ps = row.players[i];
            ps.eta = learners[i].config().eta.value(k);
            ps.width_in_force = learners[i].confidence().max_width();
            ps.q_hat = learners[i].occupancy().data();
            ps.reward_estimator = learners[i].reward_estimator();
        }

        for (int i = 0; i < n && !record.halted; ++i) {
            try {
                Learner::EpisodeOutcome outcome = learners[i].end_episode();
                row.players[i].update_norm = outcome.update_norm;
                row.players[i].confidence_ok = outcome.confidence_ok;
                if (!outcome.confidence_ok) record.coverage_failed = true;
            } catch (const InfeasibleError& e) {
                record.halted = true;
                record.halt_reason = "player " + std::to_string(i) + ", episode " +
                                     std::to_string(k) + ": " + e.what();
            }
        }
        for (int i = 0; i < n; ++i) {
            row.players[i].width_after = learners[i].confidence().max_width();
            row.players[i].coverage = learners[i].confidence().contains(game.player(i).kernel);
            if (!row.players[i].coverage) record.coverage_failed = true;
        }

        if (config.oracle_enabled && !record.halted) {
            std::vector<StateActionOccupancy> rho_true(n);
            for (int i = 0; i < n; ++i) {
                OccupancyMeasure q(game.player(i).num_states, game.player(i).num_actions);
                q.data() = row.players[i].q_hat;
                InducedPair induced = induced_kernel_and_policy(q);
                rho_true[i] = occupancy_from_policy(induced.policy, game.player(i).kernel).rho;
            }
            gap_acc.add_episode(row.players[0].eta, rho_true);
            if (k % record.record_every == 0 || k == config.horizon) {
                row.ni_gap_weighted = gap_acc.weighted_gap(record.deltas);
                row.ni_gap_instant = ni_gap(game, rho_true, record.deltas).psi_max;
            }
        }
        record.rows.push_back(std::move(row));
    }

    if (config.oracle_enabled && !record.rows.empty() && !record.halted)
        annotate_diagnostics(game, record, assumptions.tau_bound);
    return record;
}

std::vector<StationaryPolicy> replay_policies(const RunRecord& record, const JointGame& game,
                                              int episode_k) {
    const EpisodeRow* found = nullptr;
    std::string available;
    for (const auto& row : record.rows) {
        const bool has_snapshot = !row.players.empty() && !row.players[0].q_hat.empty();
        if (!has_snapshot) continue;
        if (row.k == episode_k) found = &row;
        if (!available.empty()) available += ",";
        available += std::to_string(row.k);
    }
    if (found == nullptr)
        throw SnapshotMissingError("no snapshot stored for episode " + std::to_string(episode_k) +
                                   "; available episodes: " + available);
    std::vector<StationaryPolicy> policies;
    for (int i = 0; i < game.num_players(); ++i) {
        const auto& p = game.player(i);
        OccupancyMeasure q(p.num_states, p.num_actions);
        q.data() = found->players[i].q_hat;
        policies.push_back(induced_kernel_and_policy(q).policy);
    }
    return policies;
}

bool RunRecord::has_snapshot(int episode_k) const {
    for (const auto& row : rows)
        if (row.k == episode_k)
            return !row.players.empty() && !row.players[0].q_hat.empty();
    return false;
}

std::string RunRecord::to_csv() const {
    std::ostringstream out;
    out << "k,steps_total,tau_k";
    for (int i = 0; i < num_players; ++i)
        out << ",update_norm_" << i << ",max_width_" << i << ",coverage_" << i;
    out << ",ni_gap_weighted,ni_gap_instant";
    for (int i = 0; i < num_players; ++i) out << ",error_" << i;
    for (int i = 0; i < num_players; ++i) out << ",regret_" << i;
    for (int i = 0; i < num_players; ++i) out << ",bias_" << i;
    out << "\n";

    for (const auto& row : rows) {
        out << row.k << "," << row.steps_total << "," << row.tau_k;
        for (int i = 0; i < num_players; ++i) {
            const auto& ps = row.players[i];
            out << "," << fmt(ps.update_norm) << "," << fmt(ps.width_in_force) << ","
                << (ps.coverage ? 1 : 0);
        }
        out << "," << fmt(row.ni_gap_weighted) << "," << fmt(row.ni_gap_instant);
        auto emit_block = [&](const std::vector<double>& block) {
            for (int i = 0; i < num_players; ++i)
                out << "," << (i < static_cast<int>(block.size())
                                   ? fmt(block[i])
                                   : std::string("nan"));
        };
        emit_block(row.error_partial);
        emit_block(row.regret_partial);
        emit_block(row.bias_partial);
        out << "\n";
    }
    return out.str();
}

std::string RunRecord::to_json(bool include_snapshots) const {
    json doc;
    doc["num_players"] = num_players;
    doc["horizon"] = horizon;
    doc["record_every"] = record_every;
    doc["master_seed"] = master_seed;
    doc["deltas"] = deltas;
    doc["oracle_enabled"] = oracle_enabled;
    doc["coverage_failed"] = coverage_failed;
    doc["halted"] = halted;
    doc["halt_reason"] = halt_reason;
    doc["rows"] = json::array();
    for (const auto& row : rows) {
        json r;
        r["k"] = row.k;
        r["steps_total"] = row.steps_total;
        r["tau_k"] = row.tau_k;
        if (std::isfinite(row.ni_gap_weighted)) r["ni_gap_weighted"] = row.ni_gap_weighted;
        if (std::isfinite(row.ni_gap_instant)) r["ni_gap_instant"] = row.ni_gap_instant;
        if (!row.error_partial.empty()) {
            r["error_partial"] = row.error_partial;
            r["regret_partial"] = row.regret_partial;
            r["bias_partial"] = row.bias_partial;
        }
        r["players"] = json::array();
        const bool snapshot_row = include_snapshots &&
                                  (row.k % record_every == 0 || row.k == horizon || row.k == 1);
        for (const auto& ps : row.players) {
            json pj;
            pj["eta"] = ps.eta;
            pj["update_norm"] = ps.update_norm;
            pj["width_in_force"] = ps.width_in_force;
            pj["width_after"] = ps.width_after;
            pj["coverage"] = ps.coverage;
            pj["confidence_ok"] = ps.confidence_ok;
            if (snapshot_row) {
                pj["q_hat"] = ps.q_hat;
                pj["reward_estimator"] = ps.reward_estimator;
            }
            r["players"].push_back(std::move(pj));
        }
        doc["rows"].push_back(std::move(r));
    }
    return doc.dump(2);
}

RunRecord RunRecord::from_json(const std::string& text) {
    json doc = json::parse(text);
    RunRecord rec;
    rec.num_players = doc.at("num_players").get<int>();
    rec.horizon = doc.at("horizon").get<int>();
    rec.record_every = doc.at("record_every").get<int>();
    rec.master_seed = doc.at("master_seed").get<std::uint64_t>();
    rec.deltas = doc.at("deltas").get<std::vector<double>>();
    rec.oracle_enabled = doc.at("oracle_enabled").get<bool>();
    rec.coverage_failed = doc.at("coverage_failed").get<bool>();
    rec.halted = doc.at("halted").get<bool>();
    rec.halt_reason = doc.at("halt_reason").get<std::string>();
    for (const auto& r : doc.at("rows")) {
        EpisodeRow row;
        row.k = r.at("k").get<int>();
        row.steps_total = r.at("steps_total").get<long long>();
        row.tau_k = r.at("tau_k").get<int>();
        if (r.contains("ni_gap_weighted")) row.ni_gap_weighted = r["ni_gap_weighted"].get<double>();
        if (r.contains("ni_gap_instant")) row.ni_gap_instant = r["ni_gap_instant"].get<double>();
        if (r.contains("error_partial")) {
            row.error_partial = r["error_partial"].get<std::vector<double>>();
            row.regret_partial = r["regret_partial"].get<std::vector<double>>();
            row.bias_partial = r["bias_partial"].get<std::vector<double>>();
        }
        for (const auto& pj : r.at("players")) {
            PlayerEpisodeStats ps;
            ps.eta = pj.at("eta").get<double>();
            ps.update_norm = pj.at("update_norm").get<double>();
            ps.width_in_force = pj.at("width_in_force").get<double>();
            ps.width_after = pj.at("width_after").get<double>();
            ps.coverage = pj.at("coverage").get<bool>();
            ps.confidence_ok = pj.at("confidence_ok").get<bool>();
            if (pj.contains("q_hat")) {
                ps.q_hat = pj["q_hat"].get<std::vector<double>>();
                ps.reward_estimator = pj["reward_estimator"].get<std::vector<double>>();
            }
            row.players.push_back(std::move(ps));
        }
        rec.rows.push_back(std::move(row));
    }
    return rec;
}

}  // namespace indchain

#include "indchain/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "indchain/evaluation.hpp"
#include "indchain/learner.hpp"
#include "indchain/rng.hpp"

namespace indchain {

using nlohmann::json;

void ExperimentSpec::validate() const {
    if (mode != "finite" && mode != "asymptotic")
        throw ConfigError("mode must be 'finite' or 'asymptotic', got '" + mode + "'");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must lie in (0, 1)");
    if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
    if (c <= 0.0) throw ConfigError("c must be positive");
    if (eta_p <= 0.5 || eta_p > 1.0) throw ConfigError("eta exponent must lie in (1/2, 1]");
    if (delta && *delta <= 0.0) throw ConfigError("delta must be positive");
    if (game.empty()) throw ConfigError("game must be set");
}

void apply_file_layer(ExperimentSpec& spec, const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("experiment file: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("experiment file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "game") spec.game = value.get<std::string>();
            else if (key == "mode") spec.mode = value.get<std::string>();
            else if (key == "episodes") spec.episodes = value.get<int>();
            else if (key == "seeds") spec.seeds = value.get<int>();
            else if (key == "master_seed") spec.master_seed = value.get<std::uint64_t>();
            else if (key == "gamma") spec.gamma = value.get<double>();
            else if (key == "epsilon") spec.epsilon = value.get<double>();
            else if (key == "c") spec.c = value.get<double>();
            else if (key == "eta_p") spec.eta_p = value.get<double>();
            else if (key == "delta") spec.delta = value.get<double>();
            else if (key == "out") spec.out_dir = value.get<std::string>();
            else if (key == "stride") spec.stride = value.get<int>();
            else if (key == "oracle") spec.oracle = value.get<bool>();
            else throw ConfigError("experiment file: unknown field '" + key + "'");
        } catch (const json::exception& e) {
            throw ConfigError("experiment file: field '" + key + "': " + e.what());
        }
    }
}

void apply_cli_layer(ExperimentSpec& spec, const CliOverrides& cli) {
    if (cli.game) spec.game = *cli.game;
    if (cli.mode) spec.mode = *cli.mode;
    if (cli.out_dir) spec.out_dir = *cli.out_dir;
    if (cli.episodes) spec.episodes = *cli.episodes;
    if (cli.seeds) spec.seeds = *cli.seeds;
    if (cli.stride) spec.stride = *cli.stride;
    if (cli.master_seed) spec.master_seed = *cli.master_seed;
    if (cli.gamma) spec.gamma = *cli.gamma;
    if (cli.epsilon) spec.epsilon = *cli.epsilon;
    if (cli.c) spec.c = *cli.c;
    if (cli.delta) spec.delta = *cli.delta;
    if (cli.oracle) spec.oracle = *cli.oracle;
}

LearnerConfig build_learner_config(const ExperimentSpec& spec, const JointGame& game, int player,
                                   double tau) {
    const auto& p = game.player(player);
    const ScheduleMode mode =
        spec.mode == "finite" ? ScheduleMode::finite_horizon : ScheduleMode::asymptotic;

    LearnerConfig cfg;
    cfg.epsilon_target = spec.epsilon;
    cfg.delta = spec.delta
                    ? *spec.delta
                    : default_delta(spec.epsilon, p.num_states, p.num_actions, game.num_players(), tau);

    cfg.eta.mode = mode;
    cfg.eta.c = spec.c;
    cfg.eta.horizon = spec.episodes;
    cfg.eta.p = spec.eta_p;

    cfg.warmup.mode = mode;
    cfg.warmup.tau = tau;
    if (mode == ScheduleMode::finite_horizon) {
        int min_states = game.player(0).num_states;
        for (int j = 1; j < game.num_players(); ++j)
            min_states = std::min(min_states, game.player(j).num_states);
        cfg.warmup.d = default_finite_warmup(tau, spec.episodes, min_states);
    }

    cfg.width.mode = mode;
    cfg.width.num_players = game.num_players();
    cfg.width.horizon = spec.episodes;
    cfg.width.gamma = spec.gamma;
    cfg.width.num_states = p.num_states;
    cfg.width.num_actions = p.num_actions;
    return cfg;
}

RunRecord run_single_seed(const ExperimentSpec& spec, const JointGame& game, double tau,
                          int run_index) {
    SimulationConfig sim;
    sim.game = &game;
    sim.horizon = spec.episodes;
    sim.master_seed = derive_seed(spec.master_seed, seed_purpose::kBatch, run_index);
    sim.oracle_enabled = spec.oracle;
    sim.record_every = spec.stride;
    for (int i = 0; i < game.num_players(); ++i)
        sim.learner_configs.push_back(build_learner_config(spec, game, i, tau));
    return run(sim);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = p * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

json make_summary(const ExperimentSpec& spec, const std::vector<RunRecord>& records) {
    json doc;
    doc["mode"] = spec.mode;
    doc["K"] = spec.episodes;
    doc["seeds"] = spec.seeds;

    // Gap trajectories across seeds at the recorded episodes.
    std::vector<int> recorded_ks;
    if (!records.empty())
        for (const auto& row : records[0].rows)
            if (std::isfinite(row.ni_gap_weighted)) recorded_ks.push_back(row.k);

    json gap_episodes = json::array(), med = json::array(), q25 = json::array(), q75 = json::array();
    for (int k : recorded_ks) {
        std::vector<double> gaps;
        for (const auto& rec : records)
            for (const auto& row : rec.rows)
                if (row.k == k && std::isfinite(row.ni_gap_weighted)) gaps.push_back(row.ni_gap_weighted);
        if (gaps.empty()) continue;
        gap_episodes.push_back(k);
        med.push_back(quantile(gaps, 0.5));
        q25.push_back(quantile(gaps, 0.25));
        q75.push_back(quantile(gaps, 0.75));
    }
    doc["gap_episodes"] = gap_episodes;
    doc["gap_median"] = med;
    doc["gap_q25"] = q25;
    doc["gap_q75"] = q75;

    int covered = 0;
    double episode_len_sum = 0.0;
    long long episode_count = 0;
    for (const auto& rec : records) {
        if (!rec.coverage_failed) ++covered;
        for (const auto& row : rec.rows) {
            episode_len_sum += row.tau_k;
            ++episode_count;
        }
    }
    doc["coverage_fraction"] = records.empty() ? 0.0 : static_cast<double>(covered) / records.size();
    doc["mean_episode_len"] = episode_count == 0 ? 0.0 : episode_len_sum / episode_count;
    return doc;
}

}  // namespace

BatchResult run_batch(const ExperimentSpec& spec, const JointGame& game,
                      const AssumptionReport& assumptions) {
    BatchResult result;
    result.records.resize(spec.seeds);

    const int workers = std::max(1, std::min<int>(std::thread::hardware_concurrency(), spec.seeds));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto work = [&]() {
        while (true) {
            int idx = next.fetch_add(1);
            if (idx >= spec.seeds || failed.load()) return;
            try {
                result.records[idx] = run_single_seed(spec, game, assumptions.tau_bound, idx);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                failure = e.what();
                return;
            }
        }
    };
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failed.load()) throw std::runtime_error(failure);

    result.summary_json = make_summary(spec, result.records).dump(2);
    return result;
}

int cmd_run(const ExperimentSpec& spec, std::ostream& log) {
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::optional<JointGame> game;
    AssumptionReport assumptions;
    try {
        game.emplace(load_game(spec.game));
        assumptions = validate_game(*game);
    } catch (const StructuralError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (assumptions.alpha <= 0.0 || !assumptions.ergodic) {
        log << "assumption violation: alpha=" << assumptions.alpha;
        for (const auto& v : assumptions.violations) log << "; " << v;
        log << "\n";
        return kExitAssumption;
    }

    BatchResult batch;
    try {
        batch = run_batch(spec, *game, assumptions);
    } catch (const AssumptionViolationError& e) {
        log << "assumption violation: " << e.what() << "\n";
        return kExitAssumption;
    } catch (const std::exception& e) {
        log << "runtime failure: " << e.what() << "\n";
        return kExitInfeasible;
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) {
        log << "config error: cannot create output directory " << spec.out_dir << "\n";
        return kExitConfig;
    }
    bool any_halted = false;
    for (int j = 0; j < spec.seeds; ++j) {
        char name[64];
        std::snprintf(name, sizeof(name), "run_seed%03d", j);
        std::ofstream csv(fs::path(spec.out_dir) / (std::string(name) + ".csv"), std::ios::binary);
        csv << batch.records[j].to_csv();
        std::ofstream jsn(fs::path(spec.out_dir) / (std::string(name) + ".json"), std::ios::binary);
        jsn << batch.records[j].to_json(true);
        if (batch.records[j].halted) {
            any_halted = true;
            log << "seed " << j << " halted: " << batch.records[j].halt_reason << "\n";
        }
    }
    std::ofstream summary(fs::path(spec.out_dir) / "summary.json", std::ios::binary);
    summary << batch.summary_json;

    json s = json::parse(batch.summary_json);
    log << "wrote " << spec.seeds << " run(s) to " << spec.out_dir
        << "; coverage_fraction=" << fmt(s["coverage_fraction"].get<double>())
        << ", mean_episode_len=" << fmt(s["mean_episode_len"].get<double>()) << "\n";
    return any_halted ? kExitInfeasible : kExitOk;
}

int cmd_validate(const std::string& game_name_or_path, std::ostream& log) {
    std::optional<JointGame> game;
    try {
        game.emplace(load_game(game_name_or_path));
    } catch (const StructuralError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    AssumptionReport report = validate_game(*game);
    log << "alpha=" << fmt(report.alpha) << "\n";
    log << "tau_bound=" << fmt(report.tau_bound) << "\n";
    log << "ergodic=" << (report.ergodic ? "true" : "false") << "\n";
    for (const auto& v : report.violations) log << "violation: " << v << "\n";
    return (report.alpha > 0.0 && report.ergodic) ? kExitOk : kExitAssumption;
}

}  // namespace indchain

#include <doctest.h>

#include <sstream>
#include <type_traits>

#include "indchain/evaluation.hpp"
#include "indchain/game.hpp"
#include "indchain/simulator.hpp"

using namespace indchain;

namespace {

LearnerConfig sim_config(int S, int A, int n, int K, double delta = 0.02, int warmup_d = 0) {
    LearnerConfig cfg;
    cfg.delta = delta;
    cfg.eta.mode = ScheduleMode::finite_horizon;
    cfg.eta.horizon = K;
    cfg.warmup.mode = ScheduleMode::finite_horizon;
    cfg.warmup.d = warmup_d;
    cfg.width.mode = ScheduleMode::finite_horizon;
    cfg.width.num_players = n;
    cfg.width.horizon = K;
    cfg.width.gamma = 0.1;
    cfg.width.num_states = S;
    cfg.width.num_actions = A;
    return cfg;
}

JointGame trivial_game() {
    TransitionKernel k(1, 1);
    k.at(0, 0, 0) = 1.0;
    std::vector<PlayerModel> players = {PlayerModel{0, 1, 1, k}};
    std::vector<std::vector<double>> rewards = {{0.42}};
    return JointGame(std::move(players), std::move(rewards));
}

}  // namespace

// The learner-facing surface carries only the player's own scalars: no joint
// state, no other players, no kernels.
static_assert(std::is_same_v<decltype(&Learner::observe), bool (Learner::*)(int, int, double, int)>);
static_assert(std::is_same_v<decltype(&Learner::act), int (Learner::*)(int, RngStream&) const>);

TEST_CASE("trivial one-point game: episode length d+1 and fixed iterate") {
    JointGame g = trivial_game();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 6;
    sim.master_seed = 1;
    sim.oracle_enabled = false;
    LearnerConfig cfg = sim_config(1, 1, 1, 6, 0.5, 4);
    cfg.delta = 0.5;  // valid floor below 1/(|S||A|) = 1
    sim.learner_configs = {cfg};
    RunRecord rec = run(sim);
    REQUIRE_FALSE(rec.halted);
    REQUIRE(rec.rows.size() == 6);
    for (const auto& row : rec.rows) {
        CHECK(row.tau_k == 5);  // d + 1
        CHECK(row.players[0].reward_estimator[0] == doctest::Approx(0.42));
        CHECK(row.players[0].q_hat[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("identical master seeds give byte-identical records") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 10;
    sim.master_seed = 314;
    sim.oracle_enabled = true;
    sim.record_every = 5;
    sim.learner_configs = {sim_config(2, 2, 2, 10), sim_config(2, 2, 2, 10)};
    RunRecord a = run(sim);
    RunRecord b = run(sim);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.to_json() == b.to_json());
    sim.master_seed = 315;
    RunRecord c = run(sim);
    CHECK(a.to_csv() != c.to_csv());
}

TEST_CASE("players advance in lockstep through the episode barrier") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 12;
    sim.master_seed = 9;
    sim.oracle_enabled = false;
    // player 1 needs a long warm-up; the barrier makes every episode at least
    // that long even though player 2 could finish within a handful of steps
    sim.learner_configs = {sim_config(2, 2, 2, 12, 0.02, 50), sim_config(2, 2, 2, 12, 0.02, 0)};
    RunRecord rec = run(sim);
    REQUIRE_FALSE(rec.halted);
    for (const auto& row : rec.rows) CHECK(row.tau_k >= 51);
}

TEST_CASE("mean episode length obeys the loose cover-time bound") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 100;
    sim.master_seed = 21;
    sim.oracle_enabled = false;
    sim.learner_configs = {sim_config(2, 2, 2, 100, 0.05, 20), sim_config(2, 2, 2, 100, 0.05, 20)};
    RunRecord rec = run(sim);
    REQUIRE_FALSE(rec.halted);
    double mean_len = static_cast<double>(rec.rows.back().steps_total) / 100.0;
    CHECK(mean_len <= 20.0 + 200.0);
    CHECK(mean_len >= 21.0);  // warm-up plus at least one covering step
}

TEST_CASE("replay at episode 1 returns the uniform policies") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 8;
    sim.master_seed = 77;
    sim.oracle_enabled = false;
    sim.record_every = 4;
    sim.learner_configs = {sim_config(2, 2, 2, 8), sim_config(2, 2, 2, 8)};
    RunRecord rec = run(sim);
    auto pols = replay_policies(rec, g, 1);
    for (const auto& pi : pols)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) CHECK(pi.at(s, a) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("replay after a json round trip only serves stride episodes") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 9;
    sim.master_seed = 78;
    sim.oracle_enabled = false;
    sim.record_every = 3;
    sim.learner_configs = {sim_config(2, 2, 2, 9), sim_config(2, 2, 2, 9)};
    RunRecord rec = run(sim);
    RunRecord loaded = RunRecord::from_json(rec.to_json(true));
    CHECK(loaded.has_snapshot(3));
    CHECK(loaded.has_snapshot(9));
    CHECK_FALSE(loaded.has_snapshot(2));
    auto pols = replay_policies(loaded, g, 3);
    auto direct = replay_policies(rec, g, 3);
    for (int i = 0; i < 2; ++i)
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                CHECK(pols[i].at(s, a) == doctest::Approx(direct[i].at(s, a)).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(replay_policies(loaded, g, 2), doctest::Contains("available episodes"),
                         SnapshotMissingError);
}

TEST_CASE("csv has the fixed schema and row shape") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 4;
    sim.master_seed = 3;
    sim.oracle_enabled = true;
    sim.learner_configs = {sim_config(2, 2, 2, 4), sim_config(2, 2, 2, 4)};
    RunRecord rec = run(sim);
    std::istringstream csv(rec.to_csv());
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "k,steps_total,tau_k,update_norm_0,max_width_0,coverage_0,update_norm_1,max_width_1,"
          "coverage_1,ni_gap_weighted,ni_gap_instant,error_0,error_1,regret_0,regret_1,bias_0,bias_1");
    int rows = 0;
    std::string line;
    const auto columns = [](const std::string& text) {
        return 1 + static_cast<int>(std::count(text.begin(), text.end(), ','));
    };
    const int expected_cols = columns(header);
    while (std::getline(csv, line)) {
        CHECK(columns(line) == expected_cols);
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("a non-ergodic game is rejected before running") {
    TransitionKernel k(2, 1);
    k.at(0, 0, 0) = 1.0;
    k.at(1, 0, 1) = 1.0;
    std::vector<PlayerModel> players = {PlayerModel{0, 2, 1, k}};
    std::vector<std::vector<double>> rewards(1, std::vector<double>(2, 0.0));
    JointGame g(std::move(players), std::move(rewards));
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 2;
    sim.learner_configs = {sim_config(2, 1, 1, 2, 0.1)};
    CHECK_THROWS_AS(run(sim), AssumptionViolationError);
}

#include <doctest.h>

#include <array>
#include <cmath>

#include "indchain/evaluation.hpp"
#include "indchain/game.hpp"
#include "indchain/learner.hpp"
#include "test_util.hpp"

using namespace indchain;

namespace {

LearnerConfig basic_config(int S, int A, int n = 2, int K = 100, double delta = 0.02) {
    LearnerConfig cfg;
    cfg.delta = delta;
    cfg.eta.mode = ScheduleMode::finite_horizon;
    cfg.eta.c = 1.0;
    cfg.eta.horizon = K;
    cfg.warmup.mode = ScheduleMode::finite_horizon;
    cfg.warmup.d = 0;
    cfg.width.mode = ScheduleMode::finite_horizon;
    cfg.width.num_players = n;
    cfg.width.horizon = K;
    cfg.width.gamma = 0.1;
    cfg.width.num_states = S;
    cfg.width.num_actions = A;
    return cfg;
}

}  // namespace

TEST_CASE("step-size schedules validate their parameter ranges") {
    EtaSchedule eta;
    eta.mode = ScheduleMode::asymptotic;
    eta.p = 0.4;
    CHECK_THROWS_AS(eta.validate(), StructuralError);
    eta.p = 0.75;
    CHECK_NOTHROW(eta.validate());
    CHECK(eta.value(2) == doctest::Approx(1.0 / (std::pow(2.0, 0.75) * std::log(3.0))));
}

TEST_CASE("asymptotic step sizes have the required summability profile") {
    EtaSchedule eta;
    eta.mode = ScheduleMode::asymptotic;
    eta.p = 0.75;
    double sum = 0.0, sum_sq = 0.0, sum_mixed = 0.0;
    double sum_first_half = 0.0;
    const int N = 2000000;
    for (int k = 1; k <= N; ++k) {
        const double e = eta.value(k);
        sum += e;
        sum_sq += e * e;
        sum_mixed += e * std::sqrt(std::log(std::max(k, 2)) / k);
        if (k == N / 2) sum_first_half = sum;
    }
    // divergent total: the second half keeps contributing materially
    CHECK(sum - sum_first_half > 0.1 * sum_first_half);
    // convergent square and mixed sums: long tails are negligible
    CHECK(sum_sq < 3.1);
    CHECK(sum_mixed < 7.0);
    // nonincreasing
    for (int k = 1; k < 100; ++k) CHECK(eta.value(k + 1) <= eta.value(k));
}

TEST_CASE("default delta stays inside the valid range") {
    const double d = default_delta(0.1, 2, 2, 2, 8.96);
    CHECK(d > 0.0);
    CHECK(d < 1.0 / 4);
    CHECK(default_delta(100.0, 2, 2, 1, 0.0) < 1.0 / 4);  // clamped for absurd epsilon
}

TEST_CASE("uniform start gives the uniform policy and a full unvisited set") {
    Learner l(2, 2, basic_config(2, 2));
    l.begin_episode();
    CHECK(l.policy().at(0, 0) == doctest::Approx(0.5));
    CHECK(l.policy().at(1, 1) == doctest::Approx(0.5));
    CHECK(l.unvisited_count() == 4);
    CHECK(l.steps_this_episode() == 0);
}

TEST_CASE("policy formula matches the row-normalized occupancy") {
    // build an occupancy whose policy concentrates on (s=0, a=1), then check
    // begin_episode reproduces exactly that policy from the iterate
    RngStream rng(71);
    TransitionKernel P = testutil::random_kernel(2, 2, rng);
    StationaryPolicy target(2, 2);
    target.at(0, 0) = 0.03;
    target.at(0, 1) = 0.97;
    target.at(1, 0) = 0.60;
    target.at(1, 1) = 0.40;
    OccupancyMeasure q = occupancy_from_policy(target, P).q;
    Learner l(2, 2, basic_config(2, 2, 2, 100, 0.0005), q);
    l.begin_episode();
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            CHECK(l.policy().at(s, a) == doctest::Approx(target.at(s, a)).epsilon(1e-12));
}

TEST_CASE("act follows point-mass and uniform rows") {
    Learner l(2, 2, basic_config(2, 2));
    l.begin_episode();
    RngStream rng(5);
    std::array<int, 2> counts{};
    for (int t = 0; t < 100000; ++t) ++counts[l.act(0, rng)];
    const double freq = static_cast<double>(counts[0]) / 100000;
    CHECK(std::abs(freq - 0.5) < 3.0 * 0.5 / std::sqrt(100000.0));
}

TEST_CASE("every action of a floor-bounded row appears within 10/delta draws") {
    // rows at the floor: pi = (0.1, 0.9); failure odds (1-0.1)^100 ~ 2.7e-5
    OccupancyMeasure q(2, 2);
    for (int s = 0; s < 2; ++s) {
        q.at(s, 0, 0) = 0.025;
        q.at(s, 0, 1) = 0.025;
        q.at(s, 1, 0) = 0.225;
        q.at(s, 1, 1) = 0.225;
    }
    Learner l(2, 2, basic_config(2, 2, 2, 100, 0.04), q);
    l.begin_episode();
    RngStream rng(17);
    std::array<bool, 2> seen{};
    for (int t = 0; t < 100; ++t) seen[l.act(0, rng)] = true;
    CHECK(seen[0]);
    CHECK(seen[1]);
}

TEST_CASE("warm-up steps never write the reward estimator") {
    LearnerConfig cfg = basic_config(2, 2);
    cfg.warmup.d = 10;
    Learner l(2, 2, cfg);
    l.begin_episode();
    CHECK(l.phase() == Phase::warming);
    for (int t = 0; t < 10; ++t) {
        bool done = l.observe(t % 2, t % 2, 1.0, (t + 1) % 2);
        CHECK_FALSE(done);
    }
    for (double r : l.reward_estimator()) CHECK(r == 0.0);
    CHECK(l.unvisited_count() == 4);
    // counters did update during warm-up
    long long total = 0;
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) total += l.confidence().visits(s, a);
    CHECK(total == 10);
}

TEST_CASE("reward estimator is first-visit set-once") {
    LearnerConfig cfg = basic_config(2, 2);
    Learner l(2, 2, cfg);
    l.begin_episode();
    l.observe(1, 0, 0.7, 0);
    CHECK(l.reward_estimator()[2] == doctest::Approx(0.7));
    l.observe(1, 0, 0.2, 1);
    CHECK(l.reward_estimator()[2] == doctest::Approx(0.7));
    CHECK(l.unvisited_count() == 3);
}

TEST_CASE("local done exactly when all pairs are collected") {
    Learner l(2, 2, basic_config(2, 2));
    l.begin_episode();
    CHECK_FALSE(l.observe(0, 0, 0.1, 0));
    CHECK_FALSE(l.observe(0, 1, 0.1, 1));
    CHECK_FALSE(l.observe(1, 0, 0.1, 0));
    CHECK(l.observe(1, 1, 0.1, 1));
    CHECK(l.local_done());
    CHECK(l.unvisited_count() == 0);
}

TEST_CASE("constant rewards keep the iterate normalized and feasible") {
    Learner l(2, 2, basic_config(2, 2));
    RngStream rng(3);
    for (int k = 0; k < 5; ++k) {
        l.begin_episode();
        int s = 0;
        while (!l.local_done()) {
            int a = l.act(s, rng);
            int s2 = static_cast<int>(rng.next_u64() % 2);
            l.observe(s, a, 0.8, s2);
            s = s2;
        }
        l.end_episode();
        double total = 0.0;
        for (double v : l.occupancy().data()) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        ShrunkPolytopeSpec spec{l.config().delta, 2, 2};
        CHECK(check_membership(l.occupancy(), spec, 1e-8).member);
    }
}

TEST_CASE("policy entries stay above the exploration floor across updates") {
    JointGame g = make_g1();
    SimulationConfig sim;
    sim.game = &g;
    sim.horizon = 30;
    sim.master_seed = 5;
    sim.oracle_enabled = false;
    sim.learner_configs = {basic_config(2, 2, 2, 30), basic_config(2, 2, 2, 30)};
    RunRecord rec = run(sim);
    REQUIRE_FALSE(rec.halted);
    for (const auto& row : rec.rows)
        for (const auto& ps : row.players) {
            OccupancyMeasure q(2, 2);
            q.data() = ps.q_hat;
            StationaryPolicy pi = induced_kernel_and_policy(q).policy;
            CHECK(pi.min_entry() >= 0.02 - 1e-8);
        }
}

TEST_CASE("mirror steps with pinned intervals converge to the lp optimum") {
    // Single-player problem with a deterministic reward vector: iterating the
    // end-of-episode update against exact intervals drives <q, r> to the LP
    // optimum over the shrunk polytope.
    RngStream rng(61);
    TransitionKernel P = testutil::random_kernel(2, 2, rng);
    ConfidenceState conf(2, 2);
    conf.pin_intervals(P, 0.0);
    ShrunkPolytopeSpec spec{0.02, 2, 2};
    LinearConstraintSystem cs = as_constraints(conf, spec);

    std::vector<double> r = {0.9, 0.2, 0.55, 0.7};  // r(s,a)
    Eigen::VectorXd gradient(8);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int s2 = 0; s2 < 2; ++s2) gradient((s * 2 + a) * 2 + s2) = r[s * 2 + a];

    // independent optimum from the rho-space LP
    LinearConstraintSystem flow = rho_polytope(P, 0.02);
    LpResult lp = solve_lp(Eigen::Map<const Eigen::VectorXd>(r.data(), 4), flow);
    REQUIRE(lp.status == LpStatus::optimal);

    OccupancyMeasure q = OccupancyMeasure::uniform(2, 2);
    RegularizerSpec reg;
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(q.data().data(), 8);
    const double eta = 1.0 / std::sqrt(500.0);
    double value = 0.0;
    for (int k = 1; k <= 500; ++k) {
        x = omd_update(x, gradient, eta, cs, reg);
        value = 0.0;
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
                value += (x((s * 2 + a) * 2) + x((s * 2 + a) * 2 + 1)) * r[s * 2 + a];
    }
    CHECK(std::abs(value - lp.value) < 1e-3);
}

TEST_CASE("learning a single-player game approaches its best stationary value") {
    RngStream rng(67);
    TransitionKernel P = testutil::random_kernel(2, 2, rng, 0.3);
    std::vector<PlayerModel> players = {PlayerModel{0, 2, 2, P}};
    std::vector<std::vector<double>> rewards(1);
    rewards[0] = {0.9, 0.2, 0.55, 0.7};  // depends on own (s,a) only
    JointGame solo(std::move(players), std::move(rewards));

    LearnerConfig cfg = basic_config(2, 2, 1, 600, 0.02);
    cfg.eta.mode = ScheduleMode::asymptotic;
    cfg.width.mode = ScheduleMode::asymptotic;
    cfg.warmup.mode = ScheduleMode::asymptotic;
    cfg.warmup.tau = 2.0;

    SimulationConfig sim;
    sim.game = &solo;
    sim.horizon = 600;
    sim.master_seed = 11;
    sim.oracle_enabled = false;
    sim.learner_configs = {cfg};
    RunRecord rec = run(sim);
    REQUIRE_FALSE(rec.halted);

    auto pol = replay_policies(rec, solo, 600);
    auto rho = occupancy_from_policy(pol[0], P).rho;
    const double r[4] = {0.9, 0.2, 0.55, 0.7};
    double value = 0.0;
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) value += rho.at(s, a) * r[s * 2 + a];
    LpResult lp = solve_lp(Eigen::Vector4d(0.9, 0.2, 0.55, 0.7), rho_polytope(P, 0.02));
    CHECK(value > lp.value - 0.02);
}

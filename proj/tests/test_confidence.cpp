#include <doctest.h>

#include <cmath>

#include "indchain/confidence.hpp"
#include "indchain/game.hpp"
#include "indchain/occupancy.hpp"
#include "test_util.hpp"

using namespace indchain;

namespace {
WidthSchedule g1_schedule() {
    WidthSchedule ws;
    ws.mode = ScheduleMode::finite_horizon;
    ws.num_players = 2;
    ws.horizon = 100;
    ws.gamma = 0.1;
    ws.num_states = 2;
    ws.num_actions = 2;
    return ws;
}
}  // namespace

TEST_CASE("a single recorded transition updates both counters") {
    ConfidenceState cs(2, 2);
    cs.record_transition(0, 0, 1);
    CHECK(cs.visits(0, 0) == 1);
    CHECK(cs.transitions(0, 0, 1) == 1);
    CHECK(cs.transitions(0, 0, 0) == 0);
    CHECK(cs.visits(0, 1) == 0);
    CHECK(cs.visits(1, 0) == 0);
}

TEST_CASE("empirical frequency concentrates on the sampling distribution") {
    ConfidenceState cs(2, 2);
    RngStream rng(3);
    const int n = 100;
    for (int t = 0; t < n; ++t) {
        double row[2] = {0.9, 0.1};
        cs.record_transition(0, 0, rng.sample_categorical(row));
    }
    CHECK(cs.visits(0, 0) == n);
    CHECK(std::abs(cs.empirical(0, 0, 0) - 0.9) < 0.09);
}

TEST_CASE("visit counter equals the sum of transition counters") {
    ConfidenceState cs(3, 2);
    RngStream rng(91);
    for (int t = 0; t < 10000; ++t)
        cs.record_transition(static_cast<int>(rng.next_u64() % 3),
                             static_cast<int>(rng.next_u64() % 2),
                             static_cast<int>(rng.next_u64() % 3));
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) {
            long long total = 0;
            for (int s2 = 0; s2 < 3; ++s2) total += cs.transitions(s, a, s2);
            CHECK(cs.visits(s, a) == total);
        }
}

TEST_CASE("width formula at the documented operating point") {
    // n=2, K=100, |A|=2, |S|=2, gamma=0.1, N=25:
    // sqrt((ln 1600 + ln 10) / 50) = 0.44001
    WidthSchedule ws = g1_schedule();
    CHECK(ws.epsilon(1, 25) == doctest::Approx(0.44001).epsilon(1e-4));
}

TEST_CASE("asymptotic width uses the episode index") {
    WidthSchedule ws = g1_schedule();
    ws.mode = ScheduleMode::asymptotic;
    // ln(2 n k^2 |A||S|^2) - ln(gamma) over 2 max(1, N)
    const double expect = std::sqrt((std::log(2.0 * 2 * 9 * 8) - std::log(0.1)) / (2.0 * 25));
    CHECK(ws.epsilon(3, 25) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("unvisited rows keep intervals [0, min(eps,1)]") {
    ConfidenceState cs(2, 2);
    cs.record_transition(0, 0, 0);  // only (0,0) visited
    WidthSchedule ws = g1_schedule();
    const bool ok = cs.end_episode_update(ws);
    CHECK(ok);
    const double eps_unvisited = ws.epsilon(1, 0);
    CHECK(cs.lower(1, 1, 0) == doctest::Approx(0.0));
    CHECK(cs.upper(1, 1, 0) == doctest::Approx(std::min(eps_unvisited, 1.0)).epsilon(1e-12));
}

TEST_CASE("intervals shrink monotonically across episodes") {
    ConfidenceState cs(2, 2);
    RngStream rng(8);
    WidthSchedule ws = g1_schedule();
    double prev_max = 1.0;
    for (int k = 0; k < 5; ++k) {
        for (int t = 0; t < 200; ++t) {
            int s = static_cast<int>(rng.next_u64() % 2);
            int a = static_cast<int>(rng.next_u64() % 2);
            double row[2] = {0.7, 0.3};
            cs.record_transition(s, a, rng.sample_categorical(row));
        }
        std::vector<double> lo = cs.lower_data(), hi = cs.upper_data();
        CHECK(cs.end_episode_update(ws));
        for (std::size_t f = 0; f < lo.size(); ++f) {
            CHECK(cs.lower_data()[f] >= lo[f] - 1e-15);
            CHECK(cs.upper_data()[f] <= hi[f] + 1e-15);
        }
        CHECK(cs.max_width() <= prev_max + 1e-15);
        prev_max = cs.max_width();
    }
}

TEST_CASE("width bound decays like sqrt(1/k) once every pair is visited") {
    JointGame g = make_g1();
    ConfidenceState cs(2, 2);
    WidthSchedule ws = g1_schedule();
    RngStream rng(12);
    const double log_term = std::log(2.0 * 100 * 8) - std::log(0.1);
    for (int k = 1; k <= 30; ++k) {
        // visit every pair at least once per episode, sampling true rows
        for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a) {
                const double row[2] = {g.player(0).kernel.at(s, a, 0), g.player(0).kernel.at(s, a, 1)};
                cs.record_transition(s, a, rng.sample_categorical(row));
            }
        cs.end_episode_update(ws);
        CHECK(cs.max_width() <= 2.0 * std::sqrt(log_term / (2.0 * k)) + 1e-12);
    }
}

TEST_CASE("interval collapse is reported and recovered") {
    ConfidenceState cs(2, 1);
    WidthSchedule ws = g1_schedule();
    ws.num_actions = 1;
    // Episode 1: 400 samples all landing on state 0 -> tight box near 1.
    for (int t = 0; t < 400; ++t) cs.record_transition(0, 0, 0);
    CHECK(cs.end_episode_update(ws));
    CHECK(cs.lower(0, 0, 0) > 0.7);
    // Episode 2: overwhelm with samples of state 1; empirical moves far away.
    for (int t = 0; t < 40000; ++t) cs.record_transition(0, 0, 1);
    const bool ok = cs.end_episode_update(ws);
    CHECK_FALSE(ok);
    CHECK(cs.lower(0, 0, 0) <= cs.upper(0, 0, 0));  // recovered to a usable box
}

TEST_CASE("constraints with vacuous intervals reduce to the plain polytope") {
    ConfidenceState cs(2, 2);
    ShrunkPolytopeSpec spec{0.0, 2, 2};
    LinearConstraintSystem sys = as_constraints(cs, spec);
    OccupancyMeasure q = OccupancyMeasure::uniform(2, 2);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(q.data().data(), q.size());
    CHECK(sys.max_violation(x) <= 1e-12);
}

TEST_CASE("constraints pinned at the true kernel accept its occupancies") {
    JointGame g = make_g1();
    ConfidenceState cs(2, 2);
    cs.pin_intervals(g.player(0).kernel, 0.0);
    ShrunkPolytopeSpec spec{0.01, 2, 2};
    LinearConstraintSystem sys = as_constraints(cs, spec);
    OccupancyMeasure q = occupancy_from_policy(StationaryPolicy::uniform(2, 2), g.player(0).kernel).q;
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(q.data().data(), q.size());
    CHECK(sys.max_violation(x) <= 1e-10);
}

TEST_CASE("degenerate intervals whose rows cannot sum to one are infeasible") {
    ConfidenceState cs(2, 2);
    TransitionKernel fake(2, 2);
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int s2 = 0; s2 < 2; ++s2) fake.data()[(s * 2 + a) * 2 + s2] = 0.4;
    cs.pin_intervals(fake, 0.0);  // every entry pinned at 0.4, rows sum to 0.8
    ShrunkPolytopeSpec spec{0.01, 2, 2};
    CHECK_THROWS_AS(as_constraints(cs, spec), InfeasibleError);
}

TEST_CASE("short seeded runs keep the true kernel covered") {
    JointGame g = make_g1();
    int covered = 0;
    for (int seed = 0; seed < 20; ++seed) {
        ConfidenceState cs(2, 2);
        WidthSchedule ws = g1_schedule();
        ws.horizon = 20;
        RngStream rng(1000 + seed);
        bool all = true;
        for (int k = 1; k <= 20; ++k) {
            for (int s = 0; s < 2; ++s)
                for (int a = 0; a < 2; ++a)
                    for (int rep = 0; rep < 3; ++rep) {
                        const double row[2] = {g.player(0).kernel.at(s, a, 0),
                                               g.player(0).kernel.at(s, a, 1)};
                        cs.record_transition(s, a, rng.sample_categorical(row));
                    }
            cs.end_episode_update(ws);
            all = all && cs.contains(g.player(0).kernel);
        }
        if (all) ++covered;
    }
    CHECK(covered >= 18);
}

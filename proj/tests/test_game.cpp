#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "indchain/game.hpp"
#include "indchain/occupancy.hpp"
#include "test_util.hpp"

using namespace indchain;

TEST_CASE("g1 assumption report") {
    JointGame g = make_g1();
    AssumptionReport rep = validate_game(g);
    // sum over the two actions of P(s'|s,a) is 0.9+0.1 for every (s,s') pair
    CHECK(rep.alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.ergodic);
    CHECK(rep.alpha > 0.5);
    CHECK(rep.tau_bound > 0.0);
}

TEST_CASE("uniform kernel alpha is |A|/|S|") {
    TransitionKernel k(4, 3);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a)
            for (int s2 = 0; s2 < 4; ++s2) k.at(s, a, s2) = 0.25;
    std::vector<PlayerModel> players = {PlayerModel{0, 4, 3, k}};
    std::vector<std::vector<double>> rewards(1, std::vector<double>(4 * 3, 0.5));
    JointGame g(std::move(players), std::move(rewards));
    AssumptionReport rep = validate_game(g);
    CHECK(rep.alpha == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rep.ergodic);
}

TEST_CASE("unreachable state forces alpha 0 and non-ergodic") {
    TransitionKernel k(2, 2);
    for (int a = 0; a < 2; ++a) {
        k.at(0, a, 0) = 1.0;  // state 1 never entered
        k.at(1, a, 0) = 1.0;
    }
    std::vector<PlayerModel> players = {PlayerModel{0, 2, 2, k}};
    std::vector<std::vector<double>> rewards(1, std::vector<double>(4, 0.0));
    JointGame g(std::move(players), std::move(rewards));
    AssumptionReport rep = validate_game(g);
    CHECK(rep.alpha == doctest::Approx(0.0));
    CHECK_FALSE(rep.ergodic);
    CHECK_FALSE(rep.violations.empty());
}

TEST_CASE("malformed kernel names the offending index") {
    TransitionKernel k(2, 2);
    k.at(0, 0, 0) = 0.7;  // row sums to 0.7
    k.at(0, 1, 0) = 1.0;
    k.at(1, 0, 1) = 1.0;
    k.at(1, 1, 1) = 1.0;
    PlayerModel p{0, 2, 2, k};
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("(s=0, a=0)"), StructuralError);
}

TEST_CASE("joint_step point-mass kernel is deterministic") {
    TransitionKernel k(3, 1);
    k.at(0, 0, 2) = 1.0;
    k.at(1, 0, 0) = 1.0;
    k.at(2, 0, 1) = 1.0;
    std::vector<PlayerModel> players = {PlayerModel{0, 3, 1, k}};
    std::vector<std::vector<double>> rewards(1, std::vector<double>(3, 0.0));
    JointGame g(std::move(players), std::move(rewards));

    std::vector<RngStream> rngs;
    rngs.emplace_back(123);
    std::array<int, 1> s{0}, a{0}, next{};
    std::array<double, 1> r{};
    for (int t = 0; t < 50; ++t) {
        joint_step(g, s, a, rngs, next, r);
        CHECK(next[0] == (s[0] + 2) % 3);
        s[0] = next[0];
    }
}

TEST_CASE("joint_step empirical stay frequency matches the kernel") {
    JointGame g = make_g1();
    std::vector<RngStream> rngs;
    rngs.emplace_back(7);
    rngs.emplace_back(8);
    std::array<int, 2> s{0, 0}, a{0, 0}, next{};
    std::array<double, 2> r{};
    int stays = 0;
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        joint_step(g, s, a, rngs, next, r);
        if (next[0] == 0) ++stays;
    }
    CHECK(static_cast<double>(stays) / trials == doctest::Approx(0.9).epsilon(0.011));
}

TEST_CASE("g1 reward lookup") {
    JointGame g = make_g1();
    std::array<int, 2> s{0, 0};
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
            std::array<int, 2> a{a1, a2};
            CHECK(g.reward(0, s, a) == 1.0);
            CHECK(g.reward(1, s, a) == 0.0);
        }
}

TEST_CASE("joint next-state distribution factorizes (chi-square)") {
    JointGame g = make_g1();
    std::vector<RngStream> rngs;
    rngs.emplace_back(41);
    rngs.emplace_back(42);
    std::array<int, 2> s{0, 1}, a{0, 1}, next{};
    std::array<double, 2> r{};
    std::array<long long, 4> counts{};
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) {
        joint_step(g, s, a, rngs, next, r);
        counts[next[0] * 2 + next[1]]++;
    }
    // expected cell mass = product of the two kernel rows
    std::array<double, 4> expected{};
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
            expected[s1 * 2 + s2] =
                g.player(0).kernel.at(0, 0, s1) * g.player(1).kernel.at(1, 1, s2) * trials;
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i)
        chi2 += (counts[i] - expected[i]) * (counts[i] - expected[i]) / expected[i];
    CHECK(chi2 < 16.27);  // 99.9% quantile at 3 degrees of freedom
}

TEST_CASE("sampled rewards stay in [0,1] on a random game") {
    RngStream gen(99);
    std::vector<PlayerModel> players;
    for (int i = 0; i < 2; ++i)
        players.push_back(PlayerModel{i, 3, 2, testutil::random_kernel(3, 2, gen)});
    std::vector<std::vector<double>> rewards(2, std::vector<double>(3 * 3 * 2 * 2));
    for (auto& tensor : rewards)
        for (auto& v : tensor) v = gen.next_double();
    JointGame g(std::move(players), std::move(rewards));

    std::vector<RngStream> rngs;
    rngs.emplace_back(1);
    rngs.emplace_back(2);
    std::array<int, 2> s{0, 0}, a{0, 0}, next{};
    std::array<double, 2> r{};
    for (int t = 0; t < 20000; ++t) {
        a = {static_cast<int>(gen.next_u64() % 2), static_cast<int>(gen.next_u64() % 2)};
        joint_step(g, s, a, rngs, next, r);
        CHECK(r[0] >= 0.0);
        CHECK(r[0] <= 1.0);
        CHECK(r[1] >= 0.0);
        CHECK(r[1] <= 1.0);
        s = next;
    }
}

TEST_CASE("game json round trip") {
    JointGame g = make_g3();
    std::string text = game_to_json_text(g);
    JointGame loaded = game_from_json_text(text);
    REQUIRE(loaded.num_players() == g.num_players());
    for (int i = 0; i < g.num_players(); ++i) {
        CHECK(loaded.player(i).num_states == g.player(i).num_states);
        for (std::size_t f = 0; f < g.player(i).kernel.data().size(); ++f)
            CHECK(loaded.player(i).kernel.data()[f] ==
                  doctest::Approx(g.player(i).kernel.data()[f]).epsilon(1e-12));
        for (std::size_t f = 0; f < g.joint_table_size(); ++f)
            CHECK(loaded.reward_flat(i, f) == doctest::Approx(g.reward_flat(i, f)).epsilon(1e-12));
    }
}

TEST_CASE("loader rejects rows far off the simplex and names the row") {
    std::string text = R"({
      "players": [{"num_states": 2, "num_actions": 1,
                   "kernel": [[[0.5, 0.4]], [[0.5, 0.5]]]}],
      "rewards": [[[[0.0],[0.0]],[[0.0],[0.0]]]]
    })";
    CHECK_THROWS_WITH_AS(game_from_json_text(text), doctest::Contains("(s=0, a=0)"), StructuralError);
}

TEST_CASE("loader renormalizes tiny simplex deviations") {
    std::string text = R"({
      "players": [{"num_states": 2, "num_actions": 1,
                   "kernel": [[[0.50000000003, 0.5]], [[0.5, 0.5]]]}],
      "rewards": [[[[0.25],[0.25]],[[0.25],[0.25]]]]
    })";
    JointGame g = game_from_json_text(text);
    double total = g.player(0).kernel.at(0, 0, 0) + g.player(0).kernel.at(0, 0, 1);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("loader reports missing kernel rows") {
    std::string text = R"({
      "players": [{"num_states": 2, "num_actions": 2,
                   "kernel": [[[1.0, 0.0]], [[0.5, 0.5], [0.5, 0.5]]]}],
      "rewards": [[[[0,0],[0,0]],[[0,0],[0,0]]]]
    })";
    CHECK_THROWS_WITH_AS(game_from_json_text(text),
                         doctest::Contains("state 0 must list one row per action"), StructuralError);
}

TEST_CASE("reward values outside [0,1] are rejected") {
    TransitionKernel k(1, 1);
    k.at(0, 0, 0) = 1.0;
    std::vector<PlayerModel> players = {PlayerModel{0, 1, 1, k}};
    std::vector<std::vector<double>> rewards = {{1.5}};
    CHECK_THROWS_AS(JointGame(std::move(players), std::move(rewards)), StructuralError);
}

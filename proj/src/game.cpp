#include "indchain/game.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "indchain/occupancy.hpp"

namespace indchain {

using nlohmann::json;

void PlayerModel::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw StructuralError("player " + std::to_string(player_id) + " has empty state or action set");
    if (kernel.num_states() != num_states || kernel.num_actions() != num_actions)
        throw StructuralError("player " + std::to_string(player_id) + " kernel shape mismatch");
    kernel.validate();
}

JointGame::JointGame(std::vector<PlayerModel> players, std::vector<std::vector<double>> rewards)
    : players_(std::move(players)), rewards_(std::move(rewards)) {
    if (players_.empty()) throw StructuralError("game has no players");
    for (const auto& p : players_) p.validate();
    if (rewards_.size() != players_.size())
        throw StructuralError("expected one reward tensor per player");
    table_size_ = 1;
    for (const auto& p : players_) table_size_ *= static_cast<std::size_t>(p.num_states);
    for (const auto& p : players_) table_size_ *= static_cast<std::size_t>(p.num_actions);
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
        if (rewards_[i].size() != table_size_)
            throw StructuralError("reward tensor " + std::to_string(i) + " has wrong size");
        for (double r : rewards_[i])
            if (r < 0.0 || r > 1.0)
                throw StructuralError("reward value outside [0,1] in tensor " + std::to_string(i));
    }
}

std::size_t JointGame::flat_index(std::span<const int> joint_state,
                                  std::span<const int> joint_action) const {
    std::size_t idx = 0;
    for (int i = 0; i < num_players(); ++i) idx = idx * players_[i].num_states + joint_state[i];
    for (int i = 0; i < num_players(); ++i) idx = idx * players_[i].num_actions + joint_action[i];
    return idx;
}

void JointGame::unflatten(std::size_t flat, std::span<int> joint_state,
                          std::span<int> joint_action) const {
    for (int i = num_players() - 1; i >= 0; --i) {
        joint_action[i] = static_cast<int>(flat % players_[i].num_actions);
        flat /= players_[i].num_actions;
    }
    for (int i = num_players() - 1; i >= 0; --i) {
        joint_state[i] = static_cast<int>(flat % players_[i].num_states);
        flat /= players_[i].num_states;
    }
}

double JointGame::reward(int i, std::span<const int> joint_state,
                         std::span<const int> joint_action) const {
    return rewards_[i][flat_index(joint_state, joint_action)];
}

void joint_step(const JointGame& game, std::span<const int> joint_state,
                std::span<const int> joint_action, std::span<RngStream> kernel_rngs,
                std::span<int> next_state_out, std::span<double> reward_out) {
    const std::size_t flat = game.flat_index(joint_state, joint_action);
    const int n = game.num_players();
    for (int i = 0; i < n; ++i) {
        const auto& k = game.player(i).kernel;
        const int S = k.num_states();
        const double* row = k.data().data() +
            (static_cast<std::size_t>(joint_state[i]) * k.num_actions() + joint_action[i]) * S;
        next_state_out[i] = kernel_rngs[i].sample_categorical(std::span<const double>(row, S));
    }
    for (int i = 0; i < n; ++i) reward_out[i] = game.reward_flat(i, flat);
}

namespace {

// Largest singular value of the chain's action on the zero-sum subspace,
// i.e. of P^T restricted to {x : 1^T x = 0}.
double zero_sum_contraction(const Eigen::MatrixXd& chain) {
    const int S = static_cast<int>(chain.rows());
    if (S <= 1) return 0.0;
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(S, S) -
                           Eigen::MatrixXd::Constant(S, S, 1.0 / S);
    Eigen::MatrixXd restricted = proj * chain.transpose() * proj;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(restricted);
    return svd.singularValues()(0);
}

// One-step contraction when available, else the m-step geometric mean for the
// smallest power that contracts. Returns >= 1 if no power up to the cap does.
double eventual_contraction(const Eigen::MatrixXd& chain) {
    double sigma = zero_sum_contraction(chain);
    if (sigma < 1.0 - 1e-9) return sigma;
    Eigen::MatrixXd power = chain;
    for (int m = 2; m <= 64; m *= 2) {
        power = power * power;
        double s = zero_sum_contraction(power);
        if (s < 1.0 - 1e-9) return std::pow(s, 1.0 / m);
    }
    return sigma;
}

Eigen::MatrixXd induced_chain(const TransitionKernel& kernel, const StationaryPolicy& pi) {
    const int S = kernel.num_states(), A = kernel.num_actions();
    Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(S, S);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2) chain(s, s2) += pi.at(s, a) * kernel.at(s, a, s2);
    return chain;
}

// Deterministic policies blended toward uniform; capped enumeration keeps the
// grid small for larger shapes.
std::vector<StationaryPolicy> policy_grid(int S, int A) {
    std::vector<StationaryPolicy> grid;
    grid.push_back(StationaryPolicy::uniform(S, A));
    long long combos = 1;
    for (int s = 0; s < S; ++s) {
        combos *= A;
        if (combos > 256) { combos = 256; break; }
    }
    const double blends[] = {0.0, 0.25, 0.5, 0.75};
    for (long long c = 0; c < combos; ++c) {
        long long rem = c;
        std::vector<int> choice(S);
        for (int s = 0; s < S; ++s) {
            choice[s] = static_cast<int>(rem % A);
            rem /= A;
        }
        for (double lambda : blends) {
            StationaryPolicy pi(S, A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a)
                    pi.at(s, a) = lambda / A + (a == choice[s] ? 1.0 - lambda : 0.0);
            grid.push_back(pi);
        }
    }
    return grid;
}

}  // namespace

AssumptionReport validate_game(const JointGame& game) {
    AssumptionReport report;
    report.alpha = 1.0;
    report.ergodic = true;
    double worst_sigma = 0.0;

    for (int i = 0; i < game.num_players(); ++i) {
        const auto& k = game.player(i).kernel;
        const int S = k.num_states(), A = k.num_actions();
        for (int s = 0; s < S; ++s)
            for (int s2 = 0; s2 < S; ++s2) {
                double reach = 0.0;
                for (int a = 0; a < A; ++a) reach += k.at(s, a, s2);
                report.alpha = std::min(report.alpha, reach);
                if (reach <= 0.0) {
                    report.ergodic = false;
                    report.violations.push_back("player " + std::to_string(i) + ": state " +
                                                std::to_string(s2) + " unreachable from state " +
                                                std::to_string(s) + " under every action");
                }
            }

        for (const auto& pi : policy_grid(S, A)) {
            Eigen::MatrixXd chain = induced_chain(k, pi);
            double sigma = eventual_contraction(chain);
            if (sigma >= 1.0 - 1e-9) {
                report.ergodic = false;
                report.violations.push_back("player " + std::to_string(i) +
                                            ": an induced chain fails to contract");
                continue;
            }
            worst_sigma = std::max(worst_sigma, sigma);
            std::vector<double> rows(static_cast<std::size_t>(S) * S);
            for (int r = 0; r < S; ++r)
                for (int cidx = 0; cidx < S; ++cidx) rows[r * S + cidx] = chain(r, cidx);
            try {
                stationary_of_chain(rows, S);
            } catch (const ErgodicityError&) {
                report.ergodic = false;
                report.violations.push_back("player " + std::to_string(i) +
                                            ": induced chain has no unique stationary distribution");
            }
        }
    }

    if (worst_sigma <= 0.0)
        report.tau_bound = 0.0;  // one-state chains mix instantly
    else
        report.tau_bound = 2.0 * (-1.0 / std::log(worst_sigma));
    if (report.alpha <= 0.0) report.ergodic = false;
    return report;
}

// ---------------------------------------------------------------------------
// Built-in games
// ---------------------------------------------------------------------------

namespace {

TransitionKernel sticky_kernel(double stay0, double stay1) {
    TransitionKernel k(2, 2);
    for (int s = 0; s < 2; ++s) {
        k.at(s, 0, s) = stay0;
        k.at(s, 0, 1 - s) = 1.0 - stay0;
        k.at(s, 1, s) = stay1;
        k.at(s, 1, 1 - s) = 1.0 - stay1;
    }
    return k;
}

}  // namespace

JointGame make_g1() {
    std::vector<PlayerModel> players(2);
    for (int i = 0; i < 2; ++i)
        players[i] = PlayerModel{i, 2, 2, sticky_kernel(0.9, 0.1)};
    // r_1 = 1 when the two states match, r_2 = 1 - r_1; actions do not pay.
    std::vector<std::vector<double>> rewards(2, std::vector<double>(16, 0.0));
    for (std::size_t f = 0; f < 16; ++f) {
        const int s1 = static_cast<int>(f / 8) & 1;
        const int s2 = static_cast<int>(f / 4) & 1;
        rewards[0][f] = (s1 == s2) ? 1.0 : 0.0;
        rewards[1][f] = 1.0 - rewards[0][f];
    }
    return JointGame(std::move(players), std::move(rewards));
}

JointGame make_g2() {
    std::vector<PlayerModel> players(2);
    for (int i = 0; i < 2; ++i) {
        TransitionKernel k(1, 2);
        k.at(0, 0, 0) = 1.0;
        k.at(0, 1, 0) = 1.0;
        players[i] = PlayerModel{i, 1, 2, k};
    }
    // Matching pennies scaled into [0,1]: row player wants to match.
    std::vector<std::vector<double>> rewards(2, std::vector<double>(4, 0.0));
    for (int a0 = 0; a0 < 2; ++a0)
        for (int a1 = 0; a1 < 2; ++a1) {
            rewards[0][a0 * 2 + a1] = (a0 == a1) ? 1.0 : 0.0;
            rewards[1][a0 * 2 + a1] = 1.0 - rewards[0][a0 * 2 + a1];
        }
    return JointGame(std::move(players), std::move(rewards));
}

JointGame make_g3() {
    std::vector<PlayerModel> players(3);
    for (int i = 0; i < 3; ++i)
        players[i] = PlayerModel{i, 2, 2, sticky_kernel(0.9, 0.1)};
    RngStream rng(0x6733u);
    std::vector<std::vector<double>> rewards(3, std::vector<double>(64));
    for (auto& tensor : rewards)
        for (auto& v : tensor) v = rng.next_double();
    return JointGame(std::move(players), std::move(rewards));
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

namespace {

void flatten_rewards(const json& node, const std::vector<int>& dims, std::size_t level,
                     std::vector<double>& out, int player) {
    if (level == dims.size()) {
        if (!node.is_number())
            throw StructuralError("reward tensor " + std::to_string(player) + ": expected a number");
        double v = node.get<double>();
        if (v < 0.0 || v > 1.0)
            throw StructuralError("reward tensor " + std::to_string(player) + ": value outside [0,1]");
        out.push_back(v);
        return;
    }
    if (!node.is_array() || static_cast<int>(node.size()) != dims[level])
        throw StructuralError("reward tensor " + std::to_string(player) + ": expected array of length " +
                              std::to_string(dims[level]) + " at depth " + std::to_string(level));
    for (const auto& child : node) flatten_rewards(child, dims, level + 1, out, player);
}

json nest_rewards(const std::vector<double>& flat, const std::vector<int>& dims, std::size_t level,
                  std::size_t& cursor) {
    if (level == dims.size()) return flat[cursor++];
    json arr = json::array();
    for (int i = 0; i < dims[level]; ++i) arr.push_back(nest_rewards(flat, dims, level + 1, cursor));
    return arr;
}

}  // namespace

JointGame game_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw StructuralError(std::string("game file parse error: ") + e.what());
    }
    if (!doc.contains("players") || !doc["players"].is_array() || doc["players"].empty())
        throw StructuralError("game file: missing or empty 'players' array");
    if (!doc.contains("rewards") || !doc["rewards"].is_array())
        throw StructuralError("game file: missing 'rewards' array");

    std::vector<PlayerModel> players;
    for (std::size_t i = 0; i < doc["players"].size(); ++i) {
        const auto& pj = doc["players"][i];
        PlayerModel p;
        p.player_id = static_cast<int>(i);
        p.num_states = pj.at("num_states").get<int>();
        p.num_actions = pj.at("num_actions").get<int>();
        if (p.num_states <= 0 || p.num_actions <= 0)
            throw StructuralError("player " + std::to_string(i) + ": nonpositive space size");
        p.kernel = TransitionKernel(p.num_states, p.num_actions);
        const auto& kj = pj.at("kernel");
        if (!kj.is_array() || static_cast<int>(kj.size()) != p.num_states)
            throw StructuralError("player " + std::to_string(i) + ": kernel must have one row set per state");
        for (int s = 0; s < p.num_states; ++s) {
            if (!kj[s].is_array() || static_cast<int>(kj[s].size()) != p.num_actions)
                throw StructuralError("player " + std::to_string(i) + ": kernel state " + std::to_string(s) +
                                      " must list one row per action");
            for (int a = 0; a < p.num_actions; ++a) {
                const auto& row = kj[s][a];
                if (!row.is_array() || static_cast<int>(row.size()) != p.num_states)
                    throw StructuralError("player " + std::to_string(i) + ": kernel row at (s=" +
                                          std::to_string(s) + ", a=" + std::to_string(a) +
                                          ") has wrong length");
                double sum = 0.0;
                for (int s2 = 0; s2 < p.num_states; ++s2) {
                    double v = row[s2].get<double>();
                    if (v < 0.0)
                        throw StructuralError("player " + std::to_string(i) + ": negative kernel entry at (s=" +
                                              std::to_string(s) + ", a=" + std::to_string(a) + ", s'=" +
                                              std::to_string(s2) + ")");
                    p.kernel.at(s, a, s2) = v;
                    sum += v;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw StructuralError("player " + std::to_string(i) + ": kernel row off simplex at (s=" +
                                          std::to_string(s) + ", a=" + std::to_string(a) + "), sum=" +
                                          std::to_string(sum));
                for (int s2 = 0; s2 < p.num_states; ++s2) p.kernel.at(s, a, s2) /= sum;
            }
        }
        players.push_back(std::move(p));
    }

    std::vector<int> dims;
    for (const auto& p : players) dims.push_back(p.num_states);
    for (const auto& p : players) dims.push_back(p.num_actions);
    if (doc["rewards"].size() != players.size())
        throw StructuralError("game file: expected one reward tensor per player");
    std::vector<std::vector<double>> rewards;
    for (std::size_t i = 0; i < players.size(); ++i) {
        std::vector<double> flat;
        flatten_rewards(doc["rewards"][i], dims, 0, flat, static_cast<int>(i));
        rewards.push_back(std::move(flat));
    }
    return JointGame(std::move(players), std::move(rewards));
}

std::string game_to_json_text(const JointGame& game) {
    json doc;
    doc["players"] = json::array();
    for (const auto& p : game.players()) {
        json kernel = json::array();
        for (int s = 0; s < p.num_states; ++s) {
            json per_action = json::array();
            for (int a = 0; a < p.num_actions; ++a) {
                json row = json::array();
                for (int s2 = 0; s2 < p.num_states; ++s2) row.push_back(p.kernel.at(s, a, s2));
                per_action.push_back(row);
            }
            kernel.push_back(per_action);
        }
        doc["players"].push_back({{"num_states", p.num_states},
                                  {"num_actions", p.num_actions},
                                  {"kernel", kernel}});
    }
    std::vector<int> dims;
    for (const auto& p : game.players()) dims.push_back(p.num_states);
    for (const auto& p : game.players()) dims.push_back(p.num_actions);
    doc["rewards"] = json::array();
    for (int i = 0; i < game.num_players(); ++i) {
        std::vector<double> flat(game.joint_table_size());
        for (std::size_t f = 0; f < flat.size(); ++f) flat[f] = game.reward_flat(i, f);
        std::size_t cursor = 0;
        doc["rewards"].push_back(nest_rewards(flat, dims, 0, cursor));
    }
    return doc.dump(2);
}

JointGame load_game(const std::string& name_or_path) {
    if (name_or_path == "g1") return make_g1();
    if (name_or_path == "g2") return make_g2();
    if (name_or_path == "g3") return make_g3();
    std::ifstream in(name_or_path);
    if (!in) throw StructuralError("cannot open game file: " + name_or_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return game_from_json_text(buf.str());
}

}  // namespace indchain

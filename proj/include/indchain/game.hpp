#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "indchain/rng.hpp"
#include "indchain/types.hpp"

namespace indchain {

/// One player's state/action space and true transition kernel. The kernel is
/// simulator/evaluator-side knowledge; learners never see it.
struct PlayerModel {
    int player_id = 0;
    int num_states = 0;
    int num_actions = 0;
    TransitionKernel kernel;

    void validate() const;
};

/// n-player stochastic game with independent per-player chains and joint
/// reward tensors r_i(s, a) in [0,1], indexed [s_1]...[s_n][a_1]...[a_n]
/// row-major. Immutable after construction; safe to share across threads.
class JointGame {
  public:
    JointGame(std::vector<PlayerModel> players, std::vector<std::vector<double>> rewards);

    int num_players() const { return static_cast<int>(players_.size()); }
    const PlayerModel& player(int i) const { return players_[i]; }
    const std::vector<PlayerModel>& players() const { return players_; }

    /// r_i at a joint state/action profile.
    double reward(int i, std::span<const int> joint_state, std::span<const int> joint_action) const;
    double reward_flat(int i, std::size_t flat) const { return rewards_[i][flat]; }

    /// Flat index into a reward tensor: states vary slowest, actions fastest.
    std::size_t flat_index(std::span<const int> joint_state, std::span<const int> joint_action) const;
    std::size_t joint_table_size() const { return table_size_; }

    /// Inverse of flat_index.
    void unflatten(std::size_t flat, std::span<int> joint_state, std::span<int> joint_action) const;

  private:
    std::vector<PlayerModel> players_;
    std::vector<std::vector<double>> rewards_;  // one flat tensor per player
    std::size_t table_size_ = 0;
};

/// Validation findings: the reachability constant alpha, a certified mixing
/// bound, and an ergodicity verdict over a policy grid.
struct AssumptionReport {
    double alpha = 0.0;       // min over players,(s,s') of sum_a P(s'|s,a)
    double tau_bound = 0.0;   // mixing-time bound from the true kernels
    bool ergodic = false;
    std::vector<std::string> violations;
};

/// Checks structural invariants, computes alpha, and certifies a mixing
/// bound tau by maximising the induced-chain contraction over a grid of
/// randomized policies (safety factor 2). Uses true kernels; never exposed
/// to learners.
AssumptionReport validate_game(const JointGame& game);

/// Advances the joint state one step: each player's next state is drawn
/// independently from its own kernel row, rewards are read from the joint
/// tensors. `kernel_rngs` holds one externally owned stream per player.
void joint_step(const JointGame& game, std::span<const int> joint_state,
                std::span<const int> joint_action, std::span<RngStream> kernel_rngs,
                std::span<int> next_state_out, std::span<double> reward_out);

/// Built-in instances used by tests and experiments.
/// g1: 2 players, |S|=|A|=2, sticky/slippery kernel, zero-sum state-matching rewards.
/// g2: 2 players, 1 state, matching-pennies rewards in [0,1].
/// g3: 3 players, |S|=|A|=2, seeded random rewards.
JointGame make_g1();
JointGame make_g2();
JointGame make_g3();

/// Resolves "g1"/"g2"/"g3" to a built-in, anything else as a JSON file path.
JointGame load_game(const std::string& name_or_path);

/// Game-definition file I/O. The loader rejects kernel rows off the simplex
/// by more than 1e-9 and renormalizes smaller deviations.
JointGame game_from_json_text(const std::string& text);
std::string game_to_json_text(const JointGame& game);

}  // namespace indchain

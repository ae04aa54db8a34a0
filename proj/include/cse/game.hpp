#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cse {

// Probability tolerances: user input is validated at 1e-12, derived
// quantities (propagated beliefs, path measures) at 1e-10.
inline constexpr double kInputTol = 1e-12;
inline constexpr double kDerivedTol = 1e-10;
// Below this a cursed-Bayes denominator counts as numerically off-path.
inline constexpr double kOffPathTol = 1e-300;

struct GameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositivePrior : GameError { using GameError::GameError; };
struct RaggedTree : GameError { using GameError::GameError; };
struct EmptyActionSet : GameError { using GameError::GameError; };
struct PayoffMissing : GameError { using GameError::GameError; };
struct UnknownType : GameError { using GameError::GameError; };
struct StageOutOfRange : GameError { using GameError::GameError; };

// Structured game description, the input to MultiStageGame::build.
// Paths are lists of joint action label tuples, one label per player.
struct GameSpec {
  std::vector<std::string> players;
  int stages = 1;
  std::vector<std::vector<std::string>> types;  // [player][type label]

  struct PriorEntry {
    std::vector<std::string> profile;  // one type label per player
    double weight = 0.0;               // weights are normalized on load
  };
  std::vector<PriorEntry> prior;

  // Stage-uniform action sets ([player][label]); empty if per-history.
  std::vector<std::vector<std::string>> uniform_actions;

  struct ActionEntry {
    std::vector<std::vector<std::string>> history_path;
    std::string player;
    std::vector<std::string> labels;
  };
  std::vector<ActionEntry> per_history_actions;

  struct PayoffEntry {
    std::vector<std::vector<std::string>> terminal_path;
    std::vector<std::string> type_profile;
    std::vector<double> utilities;  // one per player
  };
  std::vector<PayoffEntry> payoffs;
};

// One node of the public-history tree. Simultaneous moves: each
// non-terminal node carries an action set per player and one child per
// joint action profile (player-major mixed radix, last player fastest).
struct HistoryNode {
  int depth = 0;
  int parent = -1;
  int incoming = -1;  // joint action index at the parent
  std::vector<std::vector<std::string>> actions;  // [player][action]; empty at terminals
  std::vector<int> action_count;                  // per player
  std::vector<int> stride;                        // joint = sum a_i * stride[i]
  int num_joint = 0;
  std::vector<int> children;  // child node id per joint action
  int terminal_index = -1;    // dense index among terminal nodes, else -1
  int nonterminal_index = -1; // dense index among non-terminal nodes, else -1
};

// A finite multi-stage game with observed actions: n players, T stages,
// finite type sets with a full-support common prior, per-history action
// sets independent of types, and terminal payoffs u_i(h^T, theta).
// Immutable after construction; safe to share across threads.
class MultiStageGame : public std::enable_shared_from_this<MultiStageGame> {
 public:
  static std::shared_ptr<const MultiStageGame> build(const GameSpec& spec);
  std::shared_ptr<const MultiStageGame> ptr() const { return shared_from_this(); }

  const GameSpec& spec() const { return spec_; }
  int num_players() const { return n_; }
  int stages() const { return stages_; }
  const std::vector<std::string>& players() const { return spec_.players; }
  const std::vector<std::vector<std::string>>& type_sets() const { return spec_.types; }
  int num_types(int player) const { return static_cast<int>(spec_.types[player].size()); }
  int num_type_profiles() const { return num_type_profiles_; }

  // Full type profiles are indexed player-major (last player fastest).
  int type_profile_index(const std::vector<int>& types) const;
  std::vector<int> type_profile(int tp) const;

  // Opponent type profiles of player i, indexed over players j != i in
  // player order (last fastest).
  int num_opp_profiles(int i) const { return opp_count_[i]; }
  int compose(int i, int theta_i, int op) const {
    return opp_base_[i][op] + theta_i * type_stride_[i];
  }
  int opp_of(int i, int tp) const { return opp_index_[i][tp]; }
  int own_of(int i, int tp) const { return (tp / type_stride_[i]) % num_types(i); }

  const std::vector<double>& prior() const { return prior_; }
  // F(theta_-i | theta_i); throws UnknownType.
  std::vector<double> conditional_prior(int i, int theta_i) const;

  // History tree access.
  const std::vector<HistoryNode>& nodes() const { return nodes_; }
  const HistoryNode& node(int h) const { return nodes_[h]; }
  int root() const { return 0; }
  bool is_terminal(int h) const { return nodes_[h].terminal_index >= 0; }
  int num_terminals() const { return num_terminals_; }
  int num_nonterminal() const { return num_nonterminal_; }
  // Non-terminal nodes in BFS order; children always follow parents.
  const std::vector<int>& nonterminal_nodes() const { return nonterminal_nodes_; }
  const std::vector<int>& terminal_nodes() const { return terminal_nodes_; }
  // All histories at depth t in lexicographic (BFS) order; throws StageOutOfRange.
  std::vector<int> histories_at(int t) const;

  // Joint-action helpers at history h, from player i's perspective:
  // the opponents' profile index oa runs over prod_{j!=i} |A_j(h)|.
  int num_opp_actions(int i, int h) const { return opp_action_count_[h][i]; }
  int joint_action(int i, int h, int own_action, int oa) const {
    return opp_action_base_[h][i][oa] + own_action * nodes_[h].stride[i];
  }

  double payoff(int terminal_h, int tp, int player) const {
    return payoffs_[(static_cast<size_t>(nodes_[terminal_h].terminal_index) *
                     num_type_profiles_ + tp) * n_ + player];
  }

  // Slash-joined joint action labels, omitting players whose action set
  // at that point is a singleton; "-" when every player's set is.
  std::string history_path(int h) const;
  // Inverse of history_path plus full-tuple path lookup.
  int find_history(const std::vector<std::vector<std::string>>& path) const;

  // Dense strategy / belief cell layout. A cell is (player, type,
  // non-terminal history). Strategy blocks have length |A_i(h)|, belief
  // blocks length num_opp_profiles(i).
  int strategy_offset(int i, int theta_i, int h) const {
    return strat_off_[static_cast<size_t>(nodes_[h].nonterminal_index) * n_ + i] +
           theta_i * nodes_[h].action_count[i];
  }
  int strategy_size() const { return strat_size_; }
  int belief_offset(int i, int theta_i, int h) const {
    return belief_off_[static_cast<size_t>(nodes_[h].nonterminal_index) * n_ + i] +
           theta_i * opp_count_[i];
  }
  int belief_size() const { return belief_size_; }
  // Dense index of the (i, theta_i, h) cell itself.
  int cell_index(int i, int theta_i, int h) const {
    return cell_off_[static_cast<size_t>(nodes_[h].nonterminal_index) * n_ + i] + theta_i;
  }
  int cell_count() const { return cell_count_; }

  int type_stride(int i) const { return type_stride_[i]; }

 private:
  MultiStageGame() = default;
  void index_profiles();
  void index_layout();
  void validate() const;

  GameSpec spec_;
  int n_ = 0;
  int stages_ = 0;
  int num_type_profiles_ = 1;
  std::vector<int> type_stride_;
  std::vector<int> opp_count_;
  std::vector<std::vector<int>> opp_base_;   // [i][op] -> tp with theta_i = 0
  std::vector<std::vector<int>> opp_index_;  // [i][tp] -> op
  std::vector<double> prior_;

  std::vector<HistoryNode> nodes_;
  std::vector<int> nonterminal_nodes_;
  std::vector<int> terminal_nodes_;
  int num_terminals_ = 0;
  int num_nonterminal_ = 0;
  std::vector<std::vector<int>> opp_action_count_;             // [h][i]
  std::vector<std::vector<std::vector<int>>> opp_action_base_; // [h][i][oa]

  std::vector<double> payoffs_;
  std::vector<int> strat_off_;
  std::vector<int> belief_off_;
  std::vector<int> cell_off_;
  int strat_size_ = 0;
  int belief_size_ = 0;
  int cell_count_ = 0;
};

using GamePtr = std::shared_ptr<const MultiStageGame>;

}  // namespace cse

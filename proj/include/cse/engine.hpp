#pragma once

#include "cse/strategy.hpp"

namespace cse {

struct OffPathHistory : GameError { using GameError::GameError; };
struct TerminalConditioning : GameError { using GameError::GameError; };

// A player's distorted view of the opponents' play, per history.
//
//   average(oa | h, theta_i)         = sum_op mu_i(op | h, theta_i) * prod_{j!=i} sigma_j(a_j | h, theta_j)
//   perceived(oa | h, theta_i, op)   = chi * average + (1 - chi) * true product
//
// At chi = 0 the perception is the true strategy; at chi = 1 it is the
// belief-averaged play, identical for every opponent profile.
struct CursedPerception {
  double chi = 0.0;
  GamePtr game;
  std::vector<double> average;    // blocks of num_opp_actions(i,h), row per theta
  std::vector<double> perceived;  // blocks of num_opp_actions(i,h), row per (theta, op)
  std::vector<int> avg_off;       // per (nonterminal, player)
  std::vector<int> perc_off;

  std::span<const double> average_at(int i, int theta_i, int h) const {
    int oa = game->num_opp_actions(i, h);
    return {average.data() +
                avg_off[static_cast<size_t>(game->node(h).nonterminal_index) * game->num_players() + i] +
                static_cast<size_t>(theta_i) * oa,
            static_cast<size_t>(oa)};
  }
  std::span<const double> perceived_at(int i, int theta_i, int op, int h) const {
    int oa = game->num_opp_actions(i, h);
    return {perceived.data() +
                perc_off[static_cast<size_t>(game->node(h).nonterminal_index) * game->num_players() + i] +
                (static_cast<size_t>(theta_i) * game->num_opp_profiles(i) + op) * oa,
            static_cast<size_t>(oa)};
  }
};

// sigma_bar_{-i}(a_{-i} | h, theta_i): opponents' joint action distribution
// averaged over the observer's current belief about their types.
std::vector<double> average_strategy(const MultiStageGame& game,
                                     const BehavioralStrategyProfile& strategy,
                                     const BeliefSystem& beliefs,
                                     int i, int theta_i, int h);

// Builds average + perceived play for every (player, type, history, opp profile).
CursedPerception cursed_perception(const MultiStageGame& game,
                                   const BehavioralStrategyProfile& strategy,
                                   const BeliefSystem& beliefs, double chi);
void rebuild_perception(const MultiStageGame& game,
                        const BehavioralStrategyProfile& strategy,
                        const BeliefSystem& beliefs, double chi,
                        CursedPerception& out);

// One cursed-Bayes update. `true_likelihood[op]` is the probability the
// opponents play the observed joint action under their true strategies.
// The update divides by the belief-averaged perceived likelihood, which
// algebraically equals the belief-averaged true likelihood; a vanishing
// denominator throws OffPathHistory. The result also satisfies the
// mixture identity chi * prior + (1 - chi) * Bayes(prior, likelihood).
std::vector<double> cursed_bayes_step(const std::vector<double>& prior_belief,
                                      const std::vector<double>& true_likelihood,
                                      double chi);

// Forward pass from the root applying cursed_bayes_step along every edge.
// Requires a totally mixed profile so no history is off-path.
BeliefSystem propagate_beliefs(const MultiStageGame& game,
                               const BehavioralStrategyProfile& strategy,
                               double chi);
// Storage-reusing variant for iteration loops; throws NotTotallyMixed on
// any zero-probability edge.
void propagate_beliefs_into(const MultiStageGame& game,
                            const BehavioralStrategyProfile& strategy,
                            double chi, BeliefSystem& out);

// Same pass for profiles that may contain zeros: entries whose update
// denominator vanishes (and their descendants) are left at zero and
// flagged underived for the caller to fill.
BeliefSystem propagate_beliefs_lenient(const MultiStageGame& game,
                                       const BehavioralStrategyProfile& strategy,
                                       double chi);

// Re-propagates observer (i, theta)'s beliefs below history h from the
// stored entry at h (used after an off-path entry is chosen by hand).
void propagate_below(const MultiStageGame& game,
                     const BehavioralStrategyProfile& strategy, double chi,
                     int i, int theta_i, int h, BeliefSystem& beliefs);

// rho_i^chi: perceived conditional distribution over terminal histories
// from `from`, for a fixed full type profile. Own moves follow
// `own_policy` (player i's rows), opponents the cursed perception.
std::vector<double> terminal_distribution(const MultiStageGame& game,
                                          const BehavioralStrategyProfile& own_policy,
                                          const CursedPerception& perception,
                                          int i, int tp, int from);

// Conditional expected payoff E u_i(sigma | h, theta_i) under the
// assessment's beliefs and the perception induced by them. When
// `deviation` is given, player i's own rows are taken from it from h on.
double expected_utility(const MultiStageGame& game, const Assessment& assessment,
                        int i, int theta_i, int h,
                        const BehavioralStrategyProfile* deviation = nullptr);

struct BeliefViolation {
  int player, type, history, opp_profile;
  double value, bound;
};

// mu(op | h^t) >= chi * mu(op | h^{t-1}) - 1e-9, on and off path.
std::vector<BeliefViolation> check_dampened_updating(const Assessment& assessment);
// mu(op | h^t) >= chi^t * F(op | theta_i) - 1e-9.
std::vector<BeliefViolation> check_belief_floor(const Assessment& assessment);

// --- shared bottom-up machinery -------------------------------------------

// The cursed view of the opponents' play for one fixed observer (i, theta):
// per non-terminal history a (opp profile) x (opp joint action) block.
// This is the hot-path companion of CursedPerception.
struct ObserverPerception {
  GamePtr game;
  int player = 0, type = 0;
  double chi = 0.0;
  std::vector<double> perceived;
  std::vector<int> off;  // per nonterminal index

  const double* at(int h, int op) const {
    return perceived.data() + off[game->node(h).nonterminal_index] +
           static_cast<size_t>(op) * game->num_opp_actions(player, h);
  }
};

void rebuild_observer_perception(const MultiStageGame& game,
                                 const BehavioralStrategyProfile& strategy,
                                 const BeliefSystem& beliefs, double chi,
                                 int i, int theta_i, ObserverPerception& out);
ObserverPerception observer_perception(const MultiStageGame& game,
                                       const BehavioralStrategyProfile& strategy,
                                       const BeliefSystem& beliefs, double chi,
                                       int i, int theta_i);

// For a fixed observer (i, theta): walks non-terminal histories in reverse
// BFS order and calls mix(h, Q, na, op_count, Vrow) where
//   Q[a * op_count + op] = sum_oa perceived(oa | h, theta, op) * value(child(a, oa), op)
// and value(terminal, op) = u_i(terminal, (theta, op)). The callback fills
// Vrow[op] with the value of the chosen own mixture at h. Children always
// follow parents in BFS order, so one reverse sweep suffices.
template <class Mix>
void backward_pass(const MultiStageGame& game, const ObserverPerception& perc,
                   std::vector<double>& V, std::vector<double>& Qbuf, Mix&& mix) {
  const int i = perc.player;
  const int theta_i = perc.type;
  const int op_count = game.num_opp_profiles(i);
  V.assign(game.nodes().size() * static_cast<size_t>(op_count), 0.0);
  const auto& nt = game.nonterminal_nodes();
  for (auto it = nt.rbegin(); it != nt.rend(); ++it) {
    int h = *it;
    const HistoryNode& node = game.node(h);
    const int na = node.action_count[i];
    const int oa_count = game.num_opp_actions(i, h);
    Qbuf.assign(static_cast<size_t>(na) * op_count, 0.0);
    for (int op = 0; op < op_count; ++op) {
      const double* perceived = perc.at(h, op);
      const int tp = game.compose(i, theta_i, op);
      for (int a = 0; a < na; ++a) {
        double q = 0.0;
        for (int oa = 0; oa < oa_count; ++oa) {
          int child = node.children[game.joint_action(i, h, a, oa)];
          double v = game.is_terminal(child)
                         ? game.payoff(child, tp, i)
                         : V[static_cast<size_t>(child) * op_count + op];
          q += perceived[oa] * v;
        }
        Qbuf[static_cast<size_t>(a) * op_count + op] = q;
      }
    }
    mix(h, Qbuf.data(), na, op_count, V.data() + static_cast<size_t>(h) * op_count);
  }
}

}  // namespace cse

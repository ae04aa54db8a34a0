#include "cse/strategy.hpp"

#include <cmath>

namespace cse {

BehavioralStrategyProfile BehavioralStrategyProfile::uniform(GamePtr g) {
  BehavioralStrategyProfile out(std::move(g));
  const auto& game = *out.game;
  for (int h : game.nonterminal_nodes())
    for (int i = 0; i < game.num_players(); ++i) {
      int na = game.node(h).action_count[i];
      for (int t = 0; t < game.num_types(i); ++t) {
        auto row = out.at(i, t, h);
        for (int a = 0; a < na; ++a) row[a] = 1.0 / na;
      }
    }
  return out;
}

bool BehavioralStrategyProfile::totally_mixed(double floor) const {
  for (double p : data)
    if (p < floor) {
      // Entries belong to rows of varying length; a zero is only legal if
      // it is not part of any row, which never happens, so scan plainly.
      return false;
    }
  return true;
}

double BehavioralStrategyProfile::sup_distance(const BehavioralStrategyProfile& other) const {
  double d = 0.0;
  for (size_t k = 0; k < data.size(); ++k)
    d = std::max(d, std::abs(data[k] - other.data[k]));
  return d;
}

void BehavioralStrategyProfile::project_to_epsilon(double eps) {
  const auto& g = *game;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i) {
      int na = g.node(h).action_count[i];
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = at(i, t, h);
        double shrink = 1.0 - na * eps;
        for (int a = 0; a < na; ++a) row[a] = shrink * row[a] + eps;
      }
    }
}

void BehavioralStrategyProfile::check_valid(double tol) const {
  const auto& g = *game;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = at(i, t, h);
        double sum = 0.0;
        for (double p : row) {
          if (p < -tol) throw GameError("negative strategy probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > tol)
          throw GameError("strategy row does not sum to 1");
      }
}

void BeliefSystem::check_valid(double tol) const {
  const auto& g = *game;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = at(i, t, h);
        double sum = 0.0;
        for (double p : row) {
          if (p < -tol) throw GameError("negative belief probability");
          sum += p;
        }
        if (std::abs(sum - 1.0) > tol)
          throw GameError("belief row does not sum to 1");
      }
}

}  // namespace cse

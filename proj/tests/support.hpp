#pragma once

// Shared helpers for the test suites: small hand-built specs, a random
// game generator, and an independent plain-Bayes propagation oracle used
// to cross-check the chi = 0 boundary.

#include <random>
#include <sstream>

#include "cse/engine.hpp"
#include "cse/game.hpp"

namespace testutil {

using namespace cse;

// The two-type sender / single-type receiver signaling game used across the
// suites (types 1:3, messages {A,B}, responses {L,R}).
inline GameSpec signaling_example_spec() {
  GameSpec s;
  s.players = {"sender", "receiver"};
  s.stages = 2;
  s.types = {{"t1", "t2"}, {"r"}};
  s.prior = {{{"t1", "r"}, 1.0}, {{"t2", "r"}, 3.0}};
  s.per_history_actions = {
      {{}, "sender", {"A", "B"}},
      {{}, "receiver", {"w"}},
      {{{"A", "w"}}, "sender", {"n"}},
      {{{"A", "w"}}, "receiver", {"L", "R"}},
      {{{"B", "w"}}, "sender", {"n"}},
      {{{"B", "w"}}, "receiver", {"L", "R"}},
  };
  auto pay = [&](const char* m, const char* a, const char* t, double us, double ur) {
    s.payoffs.push_back({{{m, "w"}, {"n", a}}, {t, "r"}, {us, ur}});
  };
  pay("A", "L", "t1", 2, 2);
  pay("A", "R", "t1", -1, 4);
  pay("B", "L", "t1", 4, -1);
  pay("B", "R", "t1", 1, 0);
  pay("A", "L", "t2", 2, 1);
  pay("A", "R", "t2", -1, 0);
  pay("B", "L", "t2", 4, -2);
  pay("B", "R", "t2", 1, 0);
  return s;
}

// Uniform random finite game. Dimensions are sampled within the given
// bounds but the terminal count is capped so property suites stay fast.
inline GameSpec random_game_spec(std::mt19937_64& rng, int max_players = 3,
                                 int max_types = 3, int max_stages = 2,
                                 int max_actions = 2, long max_terminals = 512) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::uniform_real_distribution<double> pay(-5.0, 5.0);
  GameSpec spec;
  for (int attempt = 0;; ++attempt) {
    spec = GameSpec{};
    int n = 1 + static_cast<int>(rng() % max_players);
    int T = 1 + static_cast<int>(rng() % max_stages);
    spec.stages = T;
    long terms = 1;
    spec.uniform_actions.clear();
    for (int i = 0; i < n; ++i) {
      spec.players.push_back("p" + std::to_string(i));
      int na = 1 + static_cast<int>(rng() % max_actions);
      std::vector<std::string> acts;
      for (int a = 0; a < na; ++a) acts.push_back("a" + std::to_string(a));
      spec.uniform_actions.push_back(acts);
      int nt = 1 + static_cast<int>(rng() % max_types);
      std::vector<std::string> types;
      for (int t = 0; t < nt; ++t) types.push_back("t" + std::to_string(t));
      spec.types.push_back(types);
    }
    long per_stage = 1;
    for (const auto& a : spec.uniform_actions) per_stage *= a.size();
    for (int t = 0; t < T; ++t) terms *= per_stage;
    if (terms > max_terminals && attempt < 100) continue;

    // strictly positive prior over all type profiles
    std::vector<int> idx(n, 0);
    while (true) {
      GameSpec::PriorEntry e;
      for (int i = 0; i < n; ++i) e.profile.push_back(spec.types[i][idx[i]]);
      e.weight = unif(rng);
      spec.prior.push_back(e);
      int k = n - 1;
      while (k >= 0 && ++idx[k] == static_cast<int>(spec.types[k].size())) idx[k--] = 0;
      if (k < 0) break;
    }
    break;
  }
  // terminal paths: every length-T sequence of joint action tuples
  const int n = static_cast<int>(spec.players.size());
  std::vector<std::vector<std::string>> joints;
  {
    std::vector<int> idx(n, 0);
    while (true) {
      std::vector<std::string> tuple;
      for (int i = 0; i < n; ++i) tuple.push_back(spec.uniform_actions[i][idx[i]]);
      joints.push_back(tuple);
      int k = n - 1;
      while (k >= 0 && ++idx[k] == static_cast<int>(spec.uniform_actions[k].size()))
        idx[k--] = 0;
      if (k < 0) break;
    }
  }
  std::vector<std::vector<std::vector<std::string>>> paths = {{}};
  for (int t = 0; t < spec.stages; ++t) {
    std::vector<std::vector<std::vector<std::string>>> next;
    for (const auto& p : paths)
      for (const auto& j : joints) {
        auto q = p;
        q.push_back(j);
        next.push_back(std::move(q));
      }
    paths = std::move(next);
  }
  std::vector<std::vector<int>> type_profiles = {{}};
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<int>> next;
    for (const auto& p : type_profiles)
      for (int t = 0; t < static_cast<int>(spec.types[i].size()); ++t) {
        auto q = p;
        q.push_back(t);
        next.push_back(std::move(q));
      }
    type_profiles = std::move(next);
  }
  for (const auto& path : paths)
    for (const auto& tv : type_profiles) {
      GameSpec::PayoffEntry e;
      e.terminal_path = path;
      for (int i = 0; i < n; ++i) e.type_profile.push_back(spec.types[i][tv[i]]);
      for (int i = 0; i < n; ++i) e.utilities.push_back(pay(rng));
      spec.payoffs.push_back(e);
    }
  return spec;
}

inline GamePtr random_game(std::mt19937_64& rng, int max_players = 3, int max_types = 3,
                           int max_stages = 2, int max_actions = 2,
                           long max_terminals = 512) {
  return MultiStageGame::build(
      random_game_spec(rng, max_players, max_types, max_stages, max_actions, max_terminals));
}

inline BehavioralStrategyProfile random_mixed_profile(GamePtr game, std::mt19937_64& rng,
                                                      double floor = 0.02) {
  BehavioralStrategyProfile out(game);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int h : game->nonterminal_nodes())
    for (int i = 0; i < game->num_players(); ++i) {
      int na = game->node(h).action_count[i];
      for (int t = 0; t < game->num_types(i); ++t) {
        auto row = out.at(i, t, h);
        double sum = 0.0;
        for (int a = 0; a < na; ++a) {
          row[a] = floor + unif(rng);
          sum += row[a];
        }
        for (int a = 0; a < na; ++a) row[a] /= sum;
      }
    }
  return out;
}

// Plain Bayes posterior propagation, written independently of the engine:
// mu(op | h, a) is proportional to mu(op | h) * prod_j sigma_j(a_j | theta_j).
inline BeliefSystem plain_bayes_propagation(const MultiStageGame& g,
                                            const BehavioralStrategyProfile& sigma) {
  BeliefSystem out(sigma.game);
  for (int i = 0; i < g.num_players(); ++i)
    for (int t = 0; t < g.num_types(i); ++t) {
      auto cp = g.conditional_prior(i, t);
      auto row = out.at(i, t, g.root());
      for (size_t k = 0; k < cp.size(); ++k) row[k] = cp[k];
    }
  for (int h : g.nonterminal_nodes()) {
    const auto& node = g.node(h);
    for (int joint = 0; joint < node.num_joint; ++joint) {
      int child = node.children[joint];
      if (g.is_terminal(child)) continue;
      for (int i = 0; i < g.num_players(); ++i)
        for (int t = 0; t < g.num_types(i); ++t) {
          auto mu = out.at(i, t, h);
          auto next = out.at(i, t, child);
          double total = 0.0;
          for (int op = 0; op < g.num_opp_profiles(i); ++op) {
            int tp = g.compose(i, 0, op);
            double lk = 1.0;
            for (int j = 0; j < g.num_players(); ++j) {
              if (j == i) continue;
              int aj = (joint / node.stride[j]) % node.action_count[j];
              int theta_j = (tp / g.type_stride(j)) % g.num_types(j);
              lk *= sigma.at(j, theta_j, h)[aj];
            }
            next[op] = mu[op] * lk;
            total += next[op];
          }
          for (int op = 0; op < g.num_opp_profiles(i); ++op) next[op] /= total;
        }
    }
  }
  return out;
}

}  // namespace testutil

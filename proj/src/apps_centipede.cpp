#include <cmath>

#include "cse/apps.hpp"

namespace cse::apps {

namespace {

// take payoffs by stage: T1..T4 then pass-through at the end
constexpr double kPay1[5] = {4, 2, 16, 8, 64};
constexpr double kPay2[5] = {1, 8, 4, 32, 16};

}  // namespace

GameSpec centipede_spec(double alpha) {
  if (alpha <= 0.0 || alpha > 1.0 / 7.0)
    throw GameError("altruist probability must lie in (0, 1/7]");
  GameSpec s;
  s.players = {"p1", "p2"};
  s.stages = 4;
  s.types = {{"altruistic", "selfish"}, {"s"}};
  s.prior = {{{"altruistic", "s"}, alpha}, {{"selfish", "s"}, 1.0 - alpha}};

  // alternating moves via singleton sets; an early Take absorbs the rest of
  // the horizon
  struct Node {
    std::vector<std::vector<std::string>> path;
    int depth;
    int ended;  // stage index of the take that ended play, -1 live, 4 = P4 end
  };
  std::vector<Node> queue{{{}, 0, -1}};
  auto mover = [](int depth) { return depth % 2 == 0 ? 0 : 1; };  // p1 at stages 1,3
  while (!queue.empty()) {
    Node n = queue.back();
    queue.pop_back();
    if (n.depth == 4) {
      // terminal payoffs from the stage where play stopped
      int idx = n.ended < 0 ? 4 : n.ended;
      double u1 = kPay1[idx], u2 = kPay2[idx];
      s.payoffs.push_back({n.path, {"selfish", "s"}, {u1, u2}});
      s.payoffs.push_back({n.path, {"altruistic", "s"}, {u1 + u2, u2}});
      continue;
    }
    if (n.ended >= 0) {
      s.per_history_actions.push_back({n.path, "p1", {"e"}});
      s.per_history_actions.push_back({n.path, "p2", {"e"}});
      auto next = n.path;
      next.push_back({"e", "e"});
      queue.push_back({next, n.depth + 1, n.ended});
      continue;
    }
    int mv = mover(n.depth);
    std::string take = "T" + std::to_string(n.depth + 1);
    std::string pass = "P" + std::to_string(n.depth + 1);
    s.per_history_actions.push_back({n.path, s.players[mv], {take, pass}});
    s.per_history_actions.push_back({n.path, s.players[1 - mv], {"w"}});
    for (int choice = 0; choice < 2; ++choice) {
      auto next = n.path;
      std::vector<std::string> tuple(2);
      tuple[mv] = choice == 0 ? take : pass;
      tuple[1 - mv] = "w";
      next.push_back(tuple);
      int ended = (choice == 0) ? n.depth : (n.depth == 3 ? 4 : -1);
      queue.push_back({next, n.depth + 1, ended});
    }
  }
  return s;
}

GamePtr gen_centipede(double alpha) { return MultiStageGame::build(centipede_spec(alpha)); }

CentipedeOracle centipede_oracle(double alpha, double chi) {
  if (alpha <= 0.0 || alpha > 1.0 / 7.0)
    throw GameError("altruist probability must lie in (0, 1/7]");
  CentipedeOracle o;
  o.threshold = 6.0 / (7.0 * (1.0 - alpha));
  if (chi <= o.threshold + 1e-12) {
    o.q1 = (7.0 * alpha * (1.0 - chi) / (1.0 - 7.0 * alpha * chi) - alpha) / (1.0 - alpha);
    o.q2 = 1.0 / 7.0;
  } else {
    o.q1 = 0.0;
    o.q2 = 0.0;
  }
  double bayes = o.q1 > 0.0 || alpha > 0.0
                     ? alpha / (alpha + (1.0 - alpha) * o.q1)
                     : 1.0;
  o.mu = chi * alpha + (1.0 - chi) * bayes;
  return o;
}

CentipedeCursedTable centipede_true_table(double p) {
  CentipedeCursedTable t;
  t.selfish = {p, 1.0 - p, 0.0};
  t.altruistic = {0.0, 0.0, 1.0};
  return t;
}

CentipedeCursedTable centipede_cursed_table(double alpha, double p, double chi) {
  CentipedeCursedTable t;
  t.selfish = {p * (1.0 - chi * alpha), (1.0 - p) * (1.0 - chi * alpha), chi * alpha};
  t.altruistic = {p * chi * (1.0 - alpha), (1.0 - p) * chi * (1.0 - alpha),
                  1.0 - chi + chi * alpha};
  return t;
}

std::vector<BehavioralStrategyProfile> centipede_seed_profiles(GamePtr game, double alpha,
                                                               double chi) {
  const MultiStageGame& g = *game;
  CentipedeOracle o = centipede_oracle(alpha, chi);

  auto profile = [&](double q1, double q2) {
    BehavioralStrategyProfile out(game);
    for (int h : g.nonterminal_nodes())
      for (int i = 0; i < 2; ++i) {
        int na = g.node(h).action_count[i];
        for (int t = 0; t < g.num_types(i); ++t) {
          auto row = out.at(i, t, h);
          if (na == 1) {
            row[0] = 1.0;
            continue;
          }
          int depth = g.node(h).depth;
          if (i == 0) {
            if (depth == 0) {
              // stage 1: altruist passes, selfish passes with q1
              double pass = (t == 0) ? 1.0 : q1;
              row[0] = 1.0 - pass;
              row[1] = pass;
            } else {
              // stage 3: altruist passes, selfish takes
              row[0] = (t == 0) ? 0.0 : 1.0;
              row[1] = (t == 0) ? 1.0 : 0.0;
            }
          } else {
            if (depth == 1) {
              row[0] = 1.0 - q2;
              row[1] = q2;
            } else {
              row[0] = 1.0;  // stage 4: take
              row[1] = 0.0;
            }
          }
        }
      }
    return out;
  };

  std::vector<BehavioralStrategyProfile> seeds;
  auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
  for (double dq : {0.0, -0.05, 0.05})
    seeds.push_back(profile(clamp01(o.q1 + dq), clamp01(o.q2 + dq)));
  seeds.push_back(profile(clamp01(o.q1 + 0.05), clamp01(o.q2 - 0.05)));
  seeds.push_back(profile(clamp01(o.q1 - 0.05), clamp01(o.q2 + 0.05)));
  return seeds;
}

}  // namespace cse::apps

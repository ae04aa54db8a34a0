#include <cmath>

#include "cse/apps.hpp"

namespace cse::apps {

namespace {

// u(x | theta) with intensity v on the second-ranked alternative
double voter_payoff(int outcome /*0=a,1=b,2=c*/, int type, double v) {
  static constexpr int kMap[3][3] = {{2, 1, 0}, {0, 2, 1}, {1, 0, 2}};  // rank codes
  int rank = kMap[type][outcome];
  return rank == 2 ? 1.0 : (rank == 1 ? v : 0.0);
}

int majority(int a_votes, int total) { return a_votes * 2 > total ? 0 : 1; }

}  // namespace

GameSpec voting_spec(const VotingParams& params) {
  if (params.p1 <= 0 || params.p2 <= 0 || params.p3 <= 0 ||
      std::abs(params.p1 + params.p2 + params.p3 - 1.0) > 1e-9)
    throw GameError("type distribution must be strictly positive and sum to 1");
  if (params.v <= 0 || params.v >= 1) throw GameError("intensity must lie in (0,1)");

  GameSpec s;
  s.players = {"v1", "v2", "v3"};
  s.stages = 2;
  const std::vector<std::string> types = {"t1", "t2", "t3"};
  const double pr[3] = {params.p1, params.p2, params.p3};
  for (int i = 0; i < 3; ++i) s.types.push_back(types);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        s.prior.push_back({{types[a], types[b], types[c]}, pr[a] * pr[b] * pr[c]});

  // stage 1: a-vs-b ballot for everyone
  for (int i = 0; i < 3; ++i) s.per_history_actions.push_back({{}, s.players[i], {"a", "b"}});

  // stage 2: winner-vs-c ballot, label set depends on the stage-1 outcome
  std::vector<std::vector<std::string>> stage1;
  for (const char* x : {"a", "b"})
    for (const char* y : {"a", "b"})
      for (const char* z : {"a", "b"}) stage1.push_back({x, y, z});
  for (const auto& t1 : stage1) {
    int a_votes = 0;
    for (const auto& vote : t1) a_votes += vote == "a";
    std::string w = majority(a_votes, 3) == 0 ? "a" : "b";
    for (int i = 0; i < 3; ++i)
      s.per_history_actions.push_back({{t1}, s.players[i], {w, "c"}});
    // terminal payoffs per stage-2 profile
    for (const char* x : {w.c_str(), "c"})
      for (const char* y : {w.c_str(), "c"})
        for (const char* z : {w.c_str(), "c"}) {
          std::vector<std::string> t2 = {x, y, z};
          int w_votes = 0;
          for (const auto& vote : t2) w_votes += vote == w;
          int outcome = w_votes * 2 > 3 ? (w == "a" ? 0 : 1) : 2;
          for (int ta = 0; ta < 3; ++ta)
            for (int tb = 0; tb < 3; ++tb)
              for (int tc = 0; tc < 3; ++tc) {
                GameSpec::PayoffEntry e;
                e.terminal_path = {t1, t2};
                e.type_profile = {types[ta], types[tb], types[tc]};
                e.utilities = {voter_payoff(outcome, ta, params.v),
                               voter_payoff(outcome, tb, params.v),
                               voter_payoff(outcome, tc, params.v)};
                s.payoffs.push_back(std::move(e));
              }
        }
  }
  return s;
}

GamePtr gen_voting(const VotingParams& params) {
  return MultiStageGame::build(voting_spec(params));
}

SolveMask voting_sincere_mask(GamePtr game, const VotingParams& params) {
  (void)params;
  const MultiStageGame& g = *game;
  SolveMask mask(game);
  for (int i = 0; i < 3; ++i) {
    // stage 1: theta2 votes b, theta3 votes a; theta1 left free
    mask.pin(i, 1, g.root(), {0.0, 1.0});
    mask.pin(i, 2, g.root(), {1.0, 0.0});
  }
  for (int h : g.nonterminal_nodes()) {
    if (h == g.root()) continue;
    // ballot is {winner, c}: sincere vote per type
    const auto& labels = g.node(h).actions[0];
    bool winner_is_a = labels[0] == "a";
    for (int i = 0; i < 3; ++i) {
      // theta1: a over c, b over c => winner
      mask.pin(i, 0, h, {1.0, 0.0});
      // theta2: c over a, b over c
      mask.pin(i, 1, h, winner_is_a ? std::vector<double>{0.0, 1.0}
                                    : std::vector<double>{1.0, 0.0});
      // theta3: c over both
      mask.pin(i, 2, h, {0.0, 1.0});
    }
  }
  return mask;
}

BehavioralStrategyProfile voting_profile(GamePtr game, const VotingParams& params,
                                         bool theta1_votes_b) {
  const MultiStageGame& g = *game;
  SolveMask mask = voting_sincere_mask(game, params);
  BehavioralStrategyProfile out = mask.values;
  for (int i = 0; i < 3; ++i) {
    auto row = out.at(i, 0, g.root());
    row[0] = theta1_votes_b ? 0.0 : 1.0;
    row[1] = theta1_votes_b ? 1.0 : 0.0;
  }
  return out;
}

VotingThresholds voting_thresholds(const VotingParams& params) {
  const double p1 = params.p1, p2 = params.p2, p3 = params.p3, v = params.v;
  const double pt2 = p1 / (p1 + p2);
  const double pt3 = p1 / (p1 + p3);
  VotingThresholds out;

  // sophisticated b-vote: [2p1 - p1^2 - pt2 + p3^2 v] chi <= v - pt2
  const double tau2 = 2.0 * p1 - p1 * p1 - pt2 + p3 * p3 * v;
  if (v < pt2) {
    out.sophisticated_max_chi = -1.0;  // never: tau2 always exceeds v - pt2
  } else if (tau2 <= 0.0) {
    out.sophisticated_max_chi = 1.0;
  } else {
    out.sophisticated_max_chi = std::min(1.0, (v - pt2) / tau2);
  }

  // sincere a-vote: chi * tau >= v - pt3 with tau = 2p1 - p1^2 - pt3 + p3^2 v
  const double tau = 2.0 * p1 - p1 * p1 - pt3 + p3 * p3 * v;
  if (v > pt3) {
    out.sincere_region_upper = true;
    out.chi_tilde = tau > 0.0 ? (v - pt3) / tau : 2.0;  // sentinel: never
  } else {
    out.sincere_region_upper = false;
    out.chi_tilde = tau < 0.0 ? (v - pt3) / tau : 2.0;  // sentinel: always
  }
  return out;
}

bool voting_sophisticated_supported(const VotingParams& params, double chi) {
  const double p1 = params.p1, p3 = params.p3, v = params.v;
  const double pt2 = p1 / (p1 + params.p2);
  double lhs = chi * (1.0 - (1.0 - p1) * (1.0 - p1)) + (1.0 - chi) * pt2;
  double rhs = (1.0 - p3 * p3 * chi) * v;
  return lhs <= rhs + 1e-12;
}

bool voting_sincere_supported(const VotingParams& params, double chi) {
  const double p1 = params.p1, p3 = params.p3, v = params.v;
  const double pt3 = p1 / (p1 + p3);
  double lhs = chi * (1.0 - (1.0 - p1) * (1.0 - p1)) + (1.0 - chi) * pt3;
  double rhs = (1.0 - p3 * p3 * chi) * v;
  return lhs >= rhs - 1e-12;
}

}  // namespace cse::apps

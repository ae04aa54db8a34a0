#include <cmath>

#include "cse/apps.hpp"
#include "cse/engine.hpp"

namespace cse::apps {

namespace {

struct Payoff {
  double us, ur;
};

// payoff tables indexed [type][message][response]
using Table = std::vector<std::vector<std::vector<Payoff>>>;

Table example1_table() {
  return {
      {{{2, 2}, {-1, 4}}, {{4, -1}, {1, 0}}},   // t1: A{L,R}, B{L,R}
      {{{2, 1}, {-1, 0}}, {{4, -2}, {1, 0}}},   // t2
  };
}

Table bh3_table() {
  return {
      // t1: I{C,D,E}, S{C,D,E}
      {{{45, 30}, {15, 0}, {30, 15}}, {{30, 90}, {0, 15}, {45, 15}}},
      // t2
      {{{30, 30}, {0, 45}, {30, 15}}, {{45, 0}, {15, 30}, {30, 15}}},
  };
}

Table bh4_table() {
  return {
      {{{30, 30}, {0, 0}, {50, 35}}, {{45, 90}, {15, 15}, {100, 30}}},
      {{{30, 30}, {30, 45}, {30, 0}}, {{45, 0}, {0, 30}, {0, 15}}},
  };
}

struct VariantShape {
  std::vector<std::string> messages, responses;
  std::vector<double> prior;
  Table table;
};

VariantShape shape(SignalingVariant v) {
  switch (v) {
    case SignalingVariant::Example1:
      return {{"A", "B"}, {"L", "R"}, {1.0, 3.0}, example1_table()};
    case SignalingVariant::BH3:
      return {{"I", "S"}, {"C", "D", "E"}, {1.0, 1.0}, bh3_table()};
    case SignalingVariant::BH4:
      return {{"I", "S"}, {"C", "D", "E"}, {1.0, 1.0}, bh4_table()};
  }
  throw GameError("unknown signaling variant");
}

}  // namespace

GameSpec signaling_spec(SignalingVariant variant) {
  VariantShape sh = shape(variant);
  GameSpec s;
  s.players = {"sender", "receiver"};
  s.stages = 2;
  s.types = {{"t1", "t2"}, {"r"}};
  s.prior = {{{"t1", "r"}, sh.prior[0]}, {{"t2", "r"}, sh.prior[1]}};
  s.per_history_actions.push_back({{}, "sender", sh.messages});
  s.per_history_actions.push_back({{}, "receiver", {"w"}});
  for (size_t m = 0; m < sh.messages.size(); ++m) {
    std::vector<std::vector<std::string>> at{{sh.messages[m], "w"}};
    s.per_history_actions.push_back({at, "sender", {"n"}});
    s.per_history_actions.push_back({at, "receiver", sh.responses});
    for (size_t a = 0; a < sh.responses.size(); ++a)
      for (size_t t = 0; t < 2; ++t) {
        const Payoff& p = sh.table[t][m][a];
        s.payoffs.push_back({{{sh.messages[m], "w"}, {"n", sh.responses[a]}},
                             {t == 0 ? "t1" : "t2", "r"},
                             {p.us, p.ur}});
      }
  }
  return s;
}

GamePtr gen_signaling(SignalingVariant variant) {
  return MultiStageGame::build(signaling_spec(variant));
}

std::vector<SignalingEquilibrium> classify_signaling_cse(SignalingVariant variant,
                                                         double chi) {
  // Exact threshold logic from the pooling/separating analysis of each
  // game. Rational thresholds (8/9, 4/7, 2/3, 1/3, 2/7, 6/7) are compared
  // in closed form with a 1e-12 slack.
  const double slack = 1e-12;
  std::vector<SignalingEquilibrium> out;
  auto interval = [&](SignalingEquilibrium& e, int offm, double lo, double hi) {
    e.has_offpath = true;
    e.offpath_message = offm;
    e.belief_lo = lo;
    e.belief_hi = hi;
  };
  if (variant == SignalingVariant::Example1) {
    {
      // pooling at A, receiver plays L/R; R is dominant after B so any
      // dampened-feasible off-path belief works
      SignalingEquilibrium e{"(A,A);(L,R)", 0, 0, 0, 1, true};
      interval(e, 1, chi * 0.25, 1.0 - chi * 0.75);
      out.push_back(e);
    }
    if (chi <= 8.0 / 9.0 + slack) {
      SignalingEquilibrium e{"(B,B);(R,R)", 1, 1, 1, 1, true};
      interval(e, 0, 1.0 / 3.0, 1.0 - 0.75 * chi);
      out.push_back(e);
    }
    return out;
  }
  // BH3 / BH4 share the two pooling equilibria supported below 4/7 and 2/3
  if (chi <= 4.0 / 7.0 + slack) {
    SignalingEquilibrium e{"(I,I);(C,D)", 0, 0, 0, 1, true};
    interval(e, 1, chi * 0.5, 2.0 / 7.0);
    out.push_back(e);
  }
  if (chi <= 2.0 / 3.0 + slack) {
    SignalingEquilibrium e{"(S,S);(D,C)", 1, 1, 1, 0, true};
    interval(e, 0, chi * 0.5, 1.0 / 3.0);
    out.push_back(e);
  }
  if (variant == SignalingVariant::BH3) {
    if (chi >= 4.0 / 7.0 - slack) {
      SignalingEquilibrium e{"(I,S);(C,C)", 0, 1, 0, 0, false};
      out.push_back(e);
    }
  } else {
    SignalingEquilibrium e{"(S,S);(C,C)", 1, 1, 0, 0, true};
    interval(e, 0, std::max(chi * 0.5, 1.0 / 3.0), std::min(6.0 / 7.0, 1.0 - chi * 0.5));
    out.push_back(e);
  }
  return out;
}

PoolingPersistence pooling_persistence_check(const MultiStageGame& game, double chi_hi,
                                             double chi_lo, const SolverConfig& config) {
  if (chi_lo > chi_hi) throw GameError("chi_lo must not exceed chi_hi");
  PoolingPersistence result;
  SolveReport rep = solve_cse(game, chi_hi, config);
  for (const auto& rec : rep.equilibria) {
    if (!rec.verify.pass()) continue;
    // pooling: all types of every player act identically at every history
    bool pooling = true;
    for (int h : game.nonterminal_nodes())
      for (int i = 0; i < game.num_players() && pooling; ++i) {
        auto first = rec.assessment.strategy.at(i, 0, h);
        for (int t = 1; t < game.num_types(i) && pooling; ++t) {
          auto row = rec.assessment.strategy.at(i, t, h);
          for (size_t a = 0; a < row.size(); ++a)
            if (std::abs(row[a] - first[a]) > 1e-9) {
              pooling = false;
              break;
            }
        }
      }
    if (!pooling) continue;
    ++result.pooling_checked;
    Assessment lowered = rec.assessment;
    lowered.chi = chi_lo;
    VerifyReport v = verify_cse(game, lowered, 1e-8,
                                config.mask.empty() ? nullptr : &config.mask);
    if (!v.pass()) result.all_persist = false;
  }
  return result;
}

}  // namespace cse::apps

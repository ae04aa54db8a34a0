#include <cmath>

#include "cse/apps.hpp"

namespace cse::apps {

namespace {

void check_params(const DirtyFacesParams& params) {
  if (params.p <= 0.0 || params.p >= 1.0) throw GameError("p must lie in (0,1)");
  if (params.T < 2) throw GameError("horizon must be at least 2");
  if (params.delta <= 0.0 || params.delta >= 1.0)
    throw GameError("discount factor must lie in (0,1)");
  if (params.alpha <= 0.0) throw GameError("reward must be positive");
  if (params.p * params.alpha - (1.0 - params.p) >= 0.0)
    throw AssumptionViolated("claiming at stage 1 must be strictly dominated");
}

}  // namespace

double dirty_alpha_bar(const DirtyFacesParams& params) {
  check_params(params);
  return params.alpha / ((1.0 - params.p) * (1.0 + params.alpha));
}

GameSpec dirty_faces_spec(const DirtyFacesParams& params) {
  check_params(params);
  const double p = params.p;
  GameSpec s;
  s.players = {"p1", "p2"};
  s.stages = params.T;
  // a player's type is the face they observe, i.e. the opponent's face;
  // the announcement rules out the all-clean profile, which keeps a token
  // mass so the prior stays full support
  s.types = {{"X", "O"}, {"X", "O"}};
  s.prior = {{{"X", "X"}, p * p},
             {{"X", "O"}, p * (1.0 - p)},
             {{"O", "X"}, (1.0 - p) * p},
             {{"O", "O"}, 1e-13}};

  struct Node {
    std::vector<std::vector<std::string>> path;
    int depth;
    int stopped;     // stage index (1-based) when some D was played; 0 live
    bool d1, d2;     // who played D at that stage
  };
  std::vector<Node> queue{{{}, 0, 0, false, false}};
  while (!queue.empty()) {
    Node n = queue.back();
    queue.pop_back();
    if (n.depth == params.T) {
      double disc = n.stopped ? std::pow(params.delta, n.stopped - 1) : 0.0;
      for (const char* t1 : {"X", "O"})
        for (const char* t2 : {"X", "O"}) {
          // own face = what the opponent observes
          double u1 = 0.0, u2 = 0.0;
          if (n.stopped && n.d1) u1 = disc * (t2[0] == 'X' ? params.alpha : -1.0);
          if (n.stopped && n.d2) u2 = disc * (t1[0] == 'X' ? params.alpha : -1.0);
          s.payoffs.push_back({n.path, {t1, t2}, {u1, u2}});
        }
      continue;
    }
    if (n.stopped) {
      s.per_history_actions.push_back({n.path, "p1", {"e"}});
      s.per_history_actions.push_back({n.path, "p2", {"e"}});
      auto next = n.path;
      next.push_back({"e", "e"});
      queue.push_back({next, n.depth + 1, n.stopped, n.d1, n.d2});
      continue;
    }
    s.per_history_actions.push_back({n.path, "p1", {"U", "D"}});
    s.per_history_actions.push_back({n.path, "p2", {"U", "D"}});
    for (const char* a1 : {"U", "D"})
      for (const char* a2 : {"U", "D"}) {
        auto next = n.path;
        next.push_back({a1, a2});
        bool d1 = a1[0] == 'D', d2 = a2[0] == 'D';
        int stopped = (d1 || d2) ? n.depth + 1 : 0;
        queue.push_back({next, n.depth + 1, stopped, d1, d2});
      }
  }
  return s;
}

GamePtr gen_dirty_faces(const DirtyFacesParams& params) {
  return MultiStageGame::build(dirty_faces_spec(params));
}

double dirty_kappa(const DirtyFacesParams& params, double chi) {
  check_params(params);
  if (chi < 0.0 || chi > 1.0) throw ChiOutOfRange("chi must lie in [0,1]");
  const double a = params.alpha, d = params.delta;
  const double A = d * chi;
  const double B = d * (1.0 - chi) - d / (1.0 + a) - 1.0;
  const double C = 1.0 / (1.0 + a);
  // small root of A y^2 + B y + C, stable as chi -> 0 (B < 0 always)
  return 2.0 * C / (-B + std::sqrt(B * B - 4.0 * A * C));
}

int dirty_ce_stop(const DirtyFacesParams& params, double chi) {
  return chi < dirty_alpha_bar(params) ? 2 : params.T + 1;
}

std::vector<int> dirty_cse_stop_set(const DirtyFacesParams& params, double chi) {
  const double abar = dirty_alpha_bar(params);
  const double slack = 1e-9;
  std::vector<int> out;
  if (chi <= abar + slack) out.push_back(2);
  for (int t = 3; t <= params.T; ++t) {
    double lower = std::pow((1.0 - dirty_kappa(params, chi)) / (1.0 - params.p),
                            1.0 / (t - 2));
    double upper = std::pow(abar, 1.0 / (t - 1));
    if (chi >= lower - slack && chi <= upper + slack) out.push_back(t);
  }
  if (chi >= std::pow(abar, 1.0 / (params.T + 1)) - slack) out.push_back(params.T + 1);
  return out;
}

double dirty_lower_root(const DirtyFacesParams& params, int t) {
  if (t < 3 || t > params.T) throw GameError("lower-bound root defined for 3 <= t <= T");
  auto g = [&](double chi) {
    return chi - std::pow((1.0 - dirty_kappa(params, chi)) / (1.0 - params.p),
                          1.0 / (t - 2));
  };
  // scan for the first sign change, then bisect
  double lo = 1e-9, hi = 1.0;
  double glo = g(lo);
  const int scan = 4000;
  bool bracketed = false;
  for (int k = 1; k <= scan; ++k) {
    double x = static_cast<double>(k) / scan;
    double gx = g(x);
    if ((glo < 0) != (gx < 0)) {
      hi = x;
      bracketed = true;
      break;
    }
    lo = x;
    glo = gx;
  }
  if (!bracketed) throw GameError("no stage-" + std::to_string(t) + " support threshold");
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    double mid = 0.5 * (lo + hi);
    ((g(mid) < 0) == (glo < 0) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BehavioralStrategyProfile dirty_stop_profile(GamePtr game, const DirtyFacesParams& params,
                                             int stage_o, int stage_x) {
  const MultiStageGame& g = *game;
  BehavioralStrategyProfile out(game);
  for (int h : g.nonterminal_nodes()) {
    int stage = g.node(h).depth + 1;
    for (int i = 0; i < 2; ++i) {
      int na = g.node(h).action_count[i];
      for (int t = 0; t < 2; ++t) {
        auto row = out.at(i, t, h);
        if (na == 1) {
          row[0] = 1.0;
          continue;
        }
        int stop = (t == 0) ? stage_x : stage_o;  // type 0 observes X
        bool claim = stage >= stop && stop <= params.T;
        row[claim ? 1 : 0] = 1.0;
      }
    }
  }
  return out;
}

std::vector<BehavioralStrategyProfile> dirty_seed_profiles(GamePtr game,
                                                           const DirtyFacesParams& params) {
  std::vector<BehavioralStrategyProfile> seeds;
  for (int so = 1; so <= params.T + 1; ++so)
    for (int sx = 1; sx <= params.T + 1; ++sx)
      seeds.push_back(dirty_stop_profile(game, params, so, sx));
  return seeds;
}

int dirty_stop_stage_of(const MultiStageGame& game, const BehavioralStrategyProfile& sigma,
                        int type, double tol) {
  // first stage on the all-U path where D carries (near-)unit mass
  int h = game.root();
  int stage = 1;
  while (!game.is_terminal(h) && game.node(h).action_count[0] > 1) {
    auto row = sigma.at(0, type, h);
    if (row[1] >= 1.0 - tol) return stage;
    if (row[1] > tol) return -stage;  // mixed: no pure stopping stage
    const HistoryNode& node = game.node(h);
    h = node.children[0];  // (U, U)
    ++stage;
  }
  return game.stages() + 1;
}

}  // namespace cse::apps

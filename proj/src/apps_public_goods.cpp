#include <cmath>

#include "cse/apps.hpp"

namespace cse::apps {

double pgg_cutoff(int N, double K, double chi) {
  if (N < 2) throw GameError("at least two players");
  if (K <= 1.0) throw GameError("cost bound must exceed 1");
  if (chi < 0.0 || chi > 1.0) throw ChiOutOfRange("chi must lie in [0,1]");
  if (chi == 0.0) return 1.0;
  if (chi == 1.0) return 0.0;
  // h(y) = y - chi (y/K)^{N-1} - (1 - chi): strictly concave on [0,1] with
  // h(0) < 0 < h(1), so bisection converges to the single crossing
  auto h = [&](double y) { return y - chi * std::pow(y / K, N - 1) - (1.0 - chi); };
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    double mid = 0.5 * (lo + hi);
    (h(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double pgg_cutoff_two_player(double K, double chi) {
  return (K - K * chi) / (K - chi);
}

std::pair<double, double> pgg_limits(double K, double chi) {
  return {pgg_cutoff(200, K, chi), pgg_cutoff(2, 1e6, chi)};
}

bool pgg_monotonicity_check(const std::vector<int>& Ns, const std::vector<double>& Ks,
                            const std::vector<double>& chis) {
  for (double chi : chis)
    for (double K : Ks) {
      double prev = 2.0;
      for (int N : Ns) {
        double c = pgg_cutoff(N, K, chi);
        if (c >= prev) return false;
        prev = c;
      }
    }
  for (double chi : chis)
    for (int N : Ns) {
      double prev = 2.0;
      for (double K : Ks) {
        double c = pgg_cutoff(N, K, chi);
        if (c >= prev) return false;
        prev = c;
      }
    }
  for (int N : Ns)
    for (double K : Ks) {
      double prev = 2.0;
      for (double chi : chis) {
        double c = pgg_cutoff(N, K, chi);
        if (c >= prev) return false;
        prev = c;
      }
    }
  return true;
}

std::vector<double> pgg_type_costs(double K, int M) {
  std::vector<double> costs(M);
  for (int j = 0; j < M; ++j) costs[j] = (2.0 * j + 1.0) * K / (2.0 * M);
  return costs;
}

GameSpec pgg_discrete_spec(int N, double K, int M) {
  if (M < 3) throw GameError("discretization needs at least 3 cost types");
  GameSpec s;
  s.stages = 2;
  auto costs = pgg_type_costs(K, M);
  std::vector<std::string> type_labels(M);
  for (int j = 0; j < M; ++j) type_labels[j] = "c" + std::to_string(j);
  for (int i = 0; i < N; ++i) {
    s.players.push_back("p" + std::to_string(i));
    s.types.push_back(type_labels);
    s.uniform_actions.push_back({});  // filled below: stage-uniform not usable
  }
  s.uniform_actions.clear();

  // identical {0,1} messages then {n,c} contribution at every history
  std::vector<std::vector<std::string>> message_paths = {{}};
  std::vector<std::vector<std::string>> mtuples;
  {
    std::vector<int> idx(N, 0);
    while (true) {
      std::vector<std::string> t(N);
      for (int i = 0; i < N; ++i) t[i] = idx[i] ? "1" : "0";
      mtuples.push_back(t);
      int k = N - 1;
      while (k >= 0 && ++idx[k] == 2) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  for (int i = 0; i < N; ++i) s.per_history_actions.push_back({{}, s.players[i], {"0", "1"}});
  for (const auto& mt : mtuples)
    for (int i = 0; i < N; ++i)
      s.per_history_actions.push_back({{mt}, s.players[i], {"n", "c"}});

  // full-support uniform product prior
  {
    std::vector<int> idx(N, 0);
    while (true) {
      GameSpec::PriorEntry e;
      for (int i = 0; i < N; ++i) e.profile.push_back(type_labels[idx[i]]);
      e.weight = 1.0;
      s.prior.push_back(e);
      int k = N - 1;
      while (k >= 0 && ++idx[k] == M) idx[k--] = 0;
      if (k < 0) break;
    }
  }

  // payoffs: the contribution cost is sunk; provision needs unanimity
  std::vector<std::vector<std::string>> ctuples;
  {
    std::vector<int> idx(N, 0);
    while (true) {
      std::vector<std::string> t(N);
      for (int i = 0; i < N; ++i) t[i] = idx[i] ? "c" : "n";
      ctuples.push_back(t);
      int k = N - 1;
      while (k >= 0 && ++idx[k] == 2) idx[k--] = 0;
      if (k < 0) break;
    }
  }
  std::vector<int> tidx(N, 0);
  while (true) {
    for (const auto& mt : mtuples)
      for (const auto& ct : ctuples) {
        GameSpec::PayoffEntry e;
        e.terminal_path = {mt, ct};
        bool all = true;
        for (const auto& c : ct) all = all && c == "c";
        for (int i = 0; i < N; ++i) e.type_profile.push_back(type_labels[tidx[i]]);
        for (int i = 0; i < N; ++i)
          e.utilities.push_back((all ? 1.0 : 0.0) -
                                (ct[i] == "c" ? costs[tidx[i]] : 0.0));
        s.payoffs.push_back(std::move(e));
      }
    int k = N - 1;
    while (k >= 0 && ++tidx[k] == M) tidx[k--] = 0;
    if (k < 0) break;
  }
  return s;
}

std::vector<BehavioralStrategyProfile> pgg_seed_profiles(GamePtr game, double K, int M,
                                                         double chi) {
  const MultiStageGame& g = *game;
  auto costs = pgg_type_costs(K, M);
  const int N = g.num_players();

  auto cutoff_profile = [&](double cut) {
    BehavioralStrategyProfile out(game);
    int all_ones = -1;
    {
      // the history where every message was 1
      const HistoryNode& root = g.node(g.root());
      int joint = 0;
      for (int i = 0; i < N; ++i) joint += 1 * root.stride[i];
      all_ones = root.children[joint];
    }
    for (int h : g.nonterminal_nodes())
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < M; ++t) {
          auto row = out.at(i, t, h);
          bool active = costs[t] <= cut;
          if (h == g.root()) {
            row[active ? 1 : 0] = 1.0;  // message 1 below the cutoff
          } else {
            bool contribute = (h == all_ones) && active;
            row[contribute ? 1 : 0] = 1.0;
          }
        }
    return out;
  };

  std::vector<BehavioralStrategyProfile> seeds;
  for (int k = 0; k <= 8; ++k) seeds.push_back(cutoff_profile(K * k / 8.0));
  seeds.push_back(cutoff_profile(pgg_cutoff(N, K, chi)));
  return seeds;
}

}  // namespace cse::apps

#include "cse/engine.hpp"

#include <cmath>

namespace cse {

namespace {

// prob of each opponent joint action at h under the true type-conditional
// strategies: P[op * oa_count + oa] = prod_{j != i} sigma_j(a_j | h, theta_j(op)).
void true_joint_products(const MultiStageGame& g, const BehavioralStrategyProfile& s,
                         int i, int h, std::vector<double>& P) {
  const HistoryNode& node = g.node(h);
  const int n = g.num_players();
  const int op_count = g.num_opp_profiles(i);
  const int oa_count = g.num_opp_actions(i, h);
  P.assign(static_cast<size_t>(op_count) * oa_count, 0.0);
  for (int op = 0; op < op_count; ++op) {
    const int tp0 = g.compose(i, 0, op);
    for (int oa = 0; oa < oa_count; ++oa) {
      double prod = 1.0;
      int rem = oa;
      for (int j = n - 1; j >= 0; --j) {
        if (j == i) continue;
        int aj = rem % node.action_count[j];
        rem /= node.action_count[j];
        int theta_j = (tp0 / g.type_stride(j)) % g.num_types(j);
        prod *= s.at(j, theta_j, h)[aj];
      }
      P[static_cast<size_t>(op) * oa_count + oa] = prod;
    }
  }
}

}  // namespace

std::vector<double> average_strategy(const MultiStageGame& game,
                                     const BehavioralStrategyProfile& strategy,
                                     const BeliefSystem& beliefs,
                                     int i, int theta_i, int h) {
  if (game.is_terminal(h)) throw TerminalConditioning("no play at a terminal history");
  auto mu = beliefs.at(i, theta_i, h);
  const int op_count = game.num_opp_profiles(i);
  const int oa_count = game.num_opp_actions(i, h);
  std::vector<double> P;
  true_joint_products(game, strategy, i, h, P);
  std::vector<double> avg(oa_count, 0.0);
  for (int op = 0; op < op_count; ++op)
    for (int oa = 0; oa < oa_count; ++oa)
      avg[oa] += mu[op] * P[static_cast<size_t>(op) * oa_count + oa];
  return avg;
}

void rebuild_perception(const MultiStageGame& game,
                        const BehavioralStrategyProfile& strategy,
                        const BeliefSystem& beliefs, double chi,
                        CursedPerception& out) {
  if (chi < 0.0 || chi > 1.0) throw ChiOutOfRange("chi must lie in [0,1]");
  const int n = game.num_players();
  const bool retable = out.avg_off.empty() || out.game.get() != strategy.game.get();
  out.chi = chi;
  out.game = strategy.game;
  if (retable) {
    out.avg_off.assign(static_cast<size_t>(game.num_nonterminal()) * n, 0);
    out.perc_off.assign(static_cast<size_t>(game.num_nonterminal()) * n, 0);
    int a = 0, p = 0;
    for (int h : game.nonterminal_nodes())
      for (int i = 0; i < n; ++i) {
        size_t slot = static_cast<size_t>(game.node(h).nonterminal_index) * n + i;
        out.avg_off[slot] = a;
        out.perc_off[slot] = p;
        a += game.num_types(i) * game.num_opp_actions(i, h);
        p += game.num_types(i) * game.num_opp_profiles(i) * game.num_opp_actions(i, h);
      }
    out.average.assign(a, 0.0);
    out.perceived.assign(p, 0.0);
  }

  std::vector<double> P;
  for (int h : game.nonterminal_nodes()) {
    for (int i = 0; i < n; ++i) {
      const int op_count = game.num_opp_profiles(i);
      const int oa_count = game.num_opp_actions(i, h);
      true_joint_products(game, strategy, i, h, P);
      size_t slot = static_cast<size_t>(game.node(h).nonterminal_index) * n + i;
      double* avg_base = out.average.data() + out.avg_off[slot];
      double* perc_base = out.perceived.data() + out.perc_off[slot];
      for (int t = 0; t < game.num_types(i); ++t) {
        auto mu = beliefs.at(i, t, h);
        double* avg = avg_base + static_cast<size_t>(t) * oa_count;
        for (int oa = 0; oa < oa_count; ++oa) avg[oa] = 0.0;
        for (int op = 0; op < op_count; ++op) {
          const double w = mu[op];
          const double* row = P.data() + static_cast<size_t>(op) * oa_count;
          for (int oa = 0; oa < oa_count; ++oa) avg[oa] += w * row[oa];
        }
        for (int op = 0; op < op_count; ++op) {
          double* perc = perc_base + (static_cast<size_t>(t) * op_count + op) * oa_count;
          const double* row = P.data() + static_cast<size_t>(op) * oa_count;
          for (int oa = 0; oa < oa_count; ++oa)
            perc[oa] = chi * avg[oa] + (1.0 - chi) * row[oa];
        }
      }
    }
  }
}

CursedPerception cursed_perception(const MultiStageGame& game,
                                   const BehavioralStrategyProfile& strategy,
                                   const BeliefSystem& beliefs, double chi) {
  CursedPerception out;
  rebuild_perception(game, strategy, beliefs, chi, out);
  return out;
}

void rebuild_observer_perception(const MultiStageGame& game,
                                 const BehavioralStrategyProfile& strategy,
                                 const BeliefSystem& beliefs, double chi,
                                 int i, int theta_i, ObserverPerception& out) {
  const bool retable =
      out.off.empty() || out.player != i || out.game.get() != strategy.game.get();
  out.game = strategy.game;
  out.player = i;
  out.type = theta_i;
  out.chi = chi;
  const int op_count = game.num_opp_profiles(i);
  if (retable) {
    out.off.clear();
    out.off.assign(game.num_nonterminal(), 0);
    int p = 0;
    for (int h : game.nonterminal_nodes()) {
      out.off[game.node(h).nonterminal_index] = p;
      p += op_count * game.num_opp_actions(i, h);
    }
    out.perceived.assign(p, 0.0);
  }
  std::vector<double> P, avg;
  for (int h : game.nonterminal_nodes()) {
    const int oa_count = game.num_opp_actions(i, h);
    true_joint_products(game, strategy, i, h, P);
    auto mu = beliefs.at(i, theta_i, h);
    avg.assign(oa_count, 0.0);
    for (int op = 0; op < op_count; ++op) {
      const double w = mu[op];
      const double* row = P.data() + static_cast<size_t>(op) * oa_count;
      for (int oa = 0; oa < oa_count; ++oa) avg[oa] += w * row[oa];
    }
    double* base = out.perceived.data() + out.off[game.node(h).nonterminal_index];
    for (int op = 0; op < op_count; ++op) {
      const double* row = P.data() + static_cast<size_t>(op) * oa_count;
      double* dst = base + static_cast<size_t>(op) * oa_count;
      for (int oa = 0; oa < oa_count; ++oa)
        dst[oa] = chi * avg[oa] + (1.0 - chi) * row[oa];
    }
  }
}

ObserverPerception observer_perception(const MultiStageGame& game,
                                       const BehavioralStrategyProfile& strategy,
                                       const BeliefSystem& beliefs, double chi,
                                       int i, int theta_i) {
  ObserverPerception out;
  rebuild_observer_perception(game, strategy, beliefs, chi, i, theta_i, out);
  return out;
}

std::vector<double> cursed_bayes_step(const std::vector<double>& prior_belief,
                                      const std::vector<double>& true_likelihood,
                                      double chi) {
  if (chi < 0.0 || chi > 1.0) throw ChiOutOfRange("chi must lie in [0,1]");
  const size_t m = prior_belief.size();
  double avg = 0.0;
  for (size_t k = 0; k < m; ++k) avg += prior_belief[k] * true_likelihood[k];
  if (avg <= kOffPathTol)
    throw OffPathHistory("observed opponent action has zero perceived probability");
  std::vector<double> post(m);
  for (size_t k = 0; k < m; ++k) {
    double perceived = chi * avg + (1.0 - chi) * true_likelihood[k];
    post[k] = prior_belief[k] * perceived / avg;
  }
  return post;
}

namespace {

// Shared forward pass. `lenient` leaves zero-denominator entries (and
// everything below them) underived instead of throwing.
void propagate_impl(const MultiStageGame& game,
                    const BehavioralStrategyProfile& strategy,
                    double chi, bool lenient, BeliefSystem& out) {
  if (chi < 0.0 || chi > 1.0) throw ChiOutOfRange("chi must lie in [0,1]");
  if (out.data.size() != static_cast<size_t>(game.belief_size())) {
    out = BeliefSystem(strategy.game);
  } else {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    std::fill(out.derived.begin(), out.derived.end(), 1);
  }
  const int n = game.num_players();
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < game.num_types(i); ++t) {
      auto root = out.at(i, t, game.root());
      auto cp = game.conditional_prior(i, t);
      for (size_t k = 0; k < cp.size(); ++k) root[k] = cp[k];
    }

  std::vector<double> P;
  for (int h : game.nonterminal_nodes()) {
    const HistoryNode& node = game.node(h);
    for (int i = 0; i < n; ++i) {
      const int op_count = game.num_opp_profiles(i);
      const int oa_count = game.num_opp_actions(i, h);
      true_joint_products(game, strategy, i, h, P);
      for (int t = 0; t < game.num_types(i); ++t) {
        const bool parent_ok = out.is_derived(i, t, h);
        auto mu = out.at(i, t, h);
        for (int oa = 0; oa < oa_count; ++oa) {
          // the posterior depends on the opponents' component only
          double denom = 0.0;
          for (int op = 0; op < op_count; ++op)
            denom += mu[op] * P[static_cast<size_t>(op) * oa_count + oa];
          const bool ok = parent_ok && denom > kOffPathTol;
          if (!ok && !lenient)
            throw NotTotallyMixed("zero-probability edge during belief propagation");
          for (int a = 0; a < node.action_count[i]; ++a) {
            int child = node.children[game.joint_action(i, h, a, oa)];
            if (game.is_terminal(child)) continue;
            auto row = out.at(i, t, child);
            if (ok) {
              for (int op = 0; op < op_count; ++op) {
                double lk = P[static_cast<size_t>(op) * oa_count + oa];
                row[op] = mu[op] * (chi * denom + (1.0 - chi) * lk) / denom;
              }
            } else {
              out.set_derived(i, t, child, false);
            }
          }
        }
      }
    }
  }
}

}  // namespace

BeliefSystem propagate_beliefs(const MultiStageGame& game,
                               const BehavioralStrategyProfile& strategy,
                               double chi) {
  for (double p : strategy.data)
    if (p <= 0.0) throw NotTotallyMixed("strategy must be totally mixed");
  BeliefSystem out;
  propagate_impl(game, strategy, chi, false, out);
  return out;
}

void propagate_beliefs_into(const MultiStageGame& game,
                            const BehavioralStrategyProfile& strategy,
                            double chi, BeliefSystem& out) {
  propagate_impl(game, strategy, chi, false, out);
}

BeliefSystem propagate_beliefs_lenient(const MultiStageGame& game,
                                       const BehavioralStrategyProfile& strategy,
                                       double chi) {
  BeliefSystem out;
  propagate_impl(game, strategy, chi, true, out);
  return out;
}

void propagate_below(const MultiStageGame& game,
                     const BehavioralStrategyProfile& strategy, double chi,
                     int i, int theta_i, int start, BeliefSystem& beliefs) {
  std::vector<double> P;
  std::vector<int> stack{start};
  while (!stack.empty()) {
    int h = stack.back();
    stack.pop_back();
    const HistoryNode& node = game.node(h);
    const int op_count = game.num_opp_profiles(i);
    const int oa_count = game.num_opp_actions(i, h);
    true_joint_products(game, strategy, i, h, P);
    auto mu = beliefs.at(i, theta_i, h);
    for (int oa = 0; oa < oa_count; ++oa) {
      double denom = 0.0;
      for (int op = 0; op < op_count; ++op)
        denom += mu[op] * P[static_cast<size_t>(op) * oa_count + oa];
      for (int a = 0; a < node.action_count[i]; ++a) {
        int child = node.children[game.joint_action(i, h, a, oa)];
        if (game.is_terminal(child)) continue;
        auto row = beliefs.at(i, theta_i, child);
        if (denom > kOffPathTol) {
          for (int op = 0; op < op_count; ++op) {
            double lk = P[static_cast<size_t>(op) * oa_count + oa];
            row[op] = mu[op] * (chi * denom + (1.0 - chi) * lk) / denom;
          }
          beliefs.set_derived(i, theta_i, child, true);
          stack.push_back(child);
        } else {
          // the whole subtree below becomes stale
          std::vector<int> sub{child};
          while (!sub.empty()) {
            int s = sub.back();
            sub.pop_back();
            beliefs.set_derived(i, theta_i, s, false);
            for (int c : game.node(s).children)
              if (!game.is_terminal(c)) sub.push_back(c);
          }
        }
      }
    }
  }
}

std::vector<double> terminal_distribution(const MultiStageGame& game,
                                          const BehavioralStrategyProfile& own_policy,
                                          const CursedPerception& perception,
                                          int i, int tp, int from) {
  if (game.is_terminal(from)) throw TerminalConditioning("conditioning history is terminal");
  const int theta_i = game.own_of(i, tp);
  const int op = game.opp_of(i, tp);
  std::vector<double> out(game.num_terminals(), 0.0);
  std::vector<std::pair<int, double>> stack{{from, 1.0}};
  while (!stack.empty()) {
    auto [h, mass] = stack.back();
    stack.pop_back();
    const HistoryNode& node = game.node(h);
    auto own = own_policy.at(i, theta_i, h);
    auto perc = perception.perceived_at(i, theta_i, op, h);
    const int oa_count = game.num_opp_actions(i, h);
    for (int a = 0; a < node.action_count[i]; ++a)
      for (int oa = 0; oa < oa_count; ++oa) {
        double m = mass * own[a] * perc[oa];
        if (m == 0.0) continue;
        int child = node.children[game.joint_action(i, h, a, oa)];
        if (game.is_terminal(child))
          out[game.node(child).terminal_index] += m;
        else
          stack.push_back({child, m});
      }
  }
  return out;
}

double expected_utility(const MultiStageGame& game, const Assessment& assessment,
                        int i, int theta_i, int h,
                        const BehavioralStrategyProfile* deviation) {
  if (game.is_terminal(h)) throw TerminalConditioning("no decision at a terminal history");
  ObserverPerception perc = observer_perception(game, assessment.strategy,
                                                assessment.beliefs, assessment.chi,
                                                i, theta_i);
  const BehavioralStrategyProfile& pol = deviation ? *deviation : assessment.strategy;
  std::vector<double> V, Q;
  backward_pass(game, perc, V, Q,
                [&](int hh, const double* q, int na, int opc, double* vrow) {
                  auto row = pol.at(i, theta_i, hh);
                  for (int op = 0; op < opc; ++op) {
                    double v = 0.0;
                    for (int a = 0; a < na; ++a)
                      v += row[a] * q[static_cast<size_t>(a) * opc + op];
                    vrow[op] = v;
                  }
                });
  auto mu = assessment.beliefs.at(i, theta_i, h);
  const int opc = game.num_opp_profiles(i);
  double eu = 0.0;
  for (int op = 0; op < opc; ++op) eu += mu[op] * V[static_cast<size_t>(h) * opc + op];
  return eu;
}

std::vector<BeliefViolation> check_dampened_updating(const Assessment& assessment) {
  const MultiStageGame& g = *assessment.strategy.game;
  const double chi = assessment.chi;
  std::vector<BeliefViolation> out;
  for (int h : g.nonterminal_nodes()) {
    if (h == g.root()) continue;
    int parent = g.node(h).parent;
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        auto mu = assessment.beliefs.at(i, t, h);
        auto prev = assessment.beliefs.at(i, t, parent);
        for (int op = 0; op < g.num_opp_profiles(i); ++op) {
          double bound = chi * prev[op];
          if (mu[op] < bound - 1e-9)
            out.push_back({i, t, h, op, mu[op], bound});
        }
      }
  }
  return out;
}

std::vector<BeliefViolation> check_belief_floor(const Assessment& assessment) {
  const MultiStageGame& g = *assessment.strategy.game;
  const double chi = assessment.chi;
  std::vector<BeliefViolation> out;
  for (int h : g.nonterminal_nodes()) {
    double floor = std::pow(chi, g.node(h).depth);
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        auto mu = assessment.beliefs.at(i, t, h);
        auto cp = g.conditional_prior(i, t);
        for (int op = 0; op < g.num_opp_profiles(i); ++op) {
          double bound = floor * cp[op];
          if (mu[op] < bound - 1e-9)
            out.push_back({i, t, h, op, mu[op], bound});
        }
      }
  }
  return out;
}

}  // namespace cse

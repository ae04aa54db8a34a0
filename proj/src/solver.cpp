#include "cse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cse {

namespace {

constexpr double kAcceptFactor = 10.0;  // accept residual <= 10 * br_tolerance

std::uint64_t restart_seed(std::uint64_t base, std::uint64_t k) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

BehavioralStrategyProfile random_profile(GamePtr game, std::mt19937_64& rng) {
  BehavioralStrategyProfile out(game);
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  const auto& g = *game;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i) {
      int na = g.node(h).action_count[i];
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = out.at(i, t, h);
        double sum = 0.0;
        for (int a = 0; a < na; ++a) {
          row[a] = -std::log(unif(rng));  // Dirichlet(1,...,1)
          sum += row[a];
        }
        for (int a = 0; a < na; ++a) row[a] /= sum;
      }
    }
  return out;
}

struct FreeCell {
  int player, type, history, actions;
};

std::vector<FreeCell> collect_free_cells(const MultiStageGame& g, const SolveMask& mask) {
  std::vector<FreeCell> out;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i) {
      int na = g.node(h).action_count[i];
      if (na <= 1) continue;
      for (int t = 0; t < g.num_types(i); ++t) {
        if (!mask.empty() && mask.is_pinned(i, t, h)) continue;
        out.push_back({i, t, h, na});
      }
    }
  return out;
}

long pure_profile_count(const std::vector<FreeCell>& cells, long cap) {
  long total = 1;
  for (const auto& c : cells) {
    if (total > cap / c.actions + 1) return cap + 1;
    total *= c.actions;
    if (total > cap) return cap + 1;
  }
  return total;
}

// Build the profile for pure assignment `idx` over the free cells; pinned
// cells take their pinned rows, singleton cells probability one.
BehavioralStrategyProfile pure_profile(GamePtr game, const std::vector<FreeCell>& cells,
                                       long idx, const SolveMask& mask) {
  BehavioralStrategyProfile out(game);
  const auto& g = *game;
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i) {
      int na = g.node(h).action_count[i];
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = out.at(i, t, h);
        if (!mask.empty() && mask.is_pinned(i, t, h)) {
          auto pin = mask.values.at(i, t, h);
          for (int a = 0; a < na; ++a) row[a] = pin[a];
        } else {
          row[0] = 1.0;
        }
      }
    }
  long rem = idx;
  for (const auto& c : cells) {
    auto row = out.at(c.player, c.type, c.history);
    std::fill(row.begin(), row.end(), 0.0);
    row[rem % c.actions] = 1.0;
    rem /= c.actions;
  }
  return out;
}

// Candidate Bayes-posterior points q; the searched belief is
// chi * parent + (1 - chi) * q, which spans the dampened-updating box.
std::vector<std::vector<double>> belief_candidates(int opc, const SolverConfig& cfg,
                                                   std::uint64_t salt) {
  std::vector<std::vector<double>> out;
  if (opc == 1) {
    out.push_back({1.0});
    return out;
  }
  if (opc == 2) {
    int grid = std::max(3, cfg.belief_grid);
    for (int k = 0; k < grid; ++k) {
      double x = static_cast<double>(k) / (grid - 1);
      out.push_back({x, 1.0 - x});
    }
    return out;
  }
  // higher-dimensional opponent spaces: vertices, barycenter, then seeded
  // Dirichlet samples
  for (int k = 0; k < opc; ++k) {
    std::vector<double> v(opc, 0.0);
    v[k] = 1.0;
    out.push_back(std::move(v));
  }
  out.push_back(std::vector<double>(opc, 1.0 / opc));
  std::mt19937_64 rng(restart_seed(cfg.seed, salt));
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  for (int s = 0; s < cfg.belief_grid * 4; ++s) {
    std::vector<double> v(opc);
    double sum = 0.0;
    for (int k = 0; k < opc; ++k) {
      v[k] = -std::log(unif(rng));
      sum += v[k];
    }
    for (int k = 0; k < opc; ++k) v[k] /= sum;
    out.push_back(std::move(v));
  }
  return out;
}

// Max one-shot deviation gain for observer (i, theta); optionally records
// the worst witness and per-cell scores via `on_scores`.
template <class OnScores>
double observer_residual_impl(const MultiStageGame& g,
                              const BehavioralStrategyProfile& sigma,
                              const BeliefSystem& beliefs, double chi,
                              int i, int theta, const SolveMask& mask,
                              ObserverPerception& perc, std::vector<double>& V,
                              std::vector<double>& Q, DeviationWitness* witness,
                              OnScores&& on_scores) {
  rebuild_observer_perception(g, sigma, beliefs, chi, i, theta, perc);
  double worst = 0.0;
  backward_pass(g, perc, V, Q, [&](int h, const double* q, int na, int opc, double* vrow) {
    auto row = sigma.at(i, theta, h);
    for (int op = 0; op < opc; ++op) {
      double v = 0.0;
      for (int a = 0; a < na; ++a) v += row[a] * q[static_cast<size_t>(a) * opc + op];
      vrow[op] = v;
    }
    if (na <= 1) return;
    auto mu = beliefs.at(i, theta, h);
    double cur = 0.0;
    for (int op = 0; op < opc; ++op) cur += mu[op] * vrow[op];
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    thread_local std::vector<double> scores;
    scores.assign(na, 0.0);
    for (int a = 0; a < na; ++a) {
      double s = 0.0;
      for (int op = 0; op < opc; ++op) s += mu[op] * q[static_cast<size_t>(a) * opc + op];
      scores[a] = s;
      if (s > best) {
        best = s;
        best_a = a;
      }
    }
    on_scores(h, scores.data(), na);
    if (!mask.empty() && mask.is_pinned(i, theta, h)) return;
    double gain = best - cur;
    if (gain > worst) {
      worst = gain;
      if (witness) *witness = {i, theta, h, best_a, gain};
    }
  });
  return worst;
}

double observer_residual(const MultiStageGame& g, const BehavioralStrategyProfile& sigma,
                         const BeliefSystem& beliefs, double chi, int i, int theta,
                         const SolveMask& mask, ObserverPerception& perc,
                         std::vector<double>& V, std::vector<double>& Q,
                         DeviationWitness* witness = nullptr) {
  return observer_residual_impl(g, sigma, beliefs, chi, i, theta, mask, perc, V, Q,
                                witness, [](int, const double*, int) {});
}

}  // namespace

void SolveMask::pin(int i, int theta_i, int h, const std::vector<double>& dist) {
  pinned[game->cell_index(i, theta_i, h)] = 1;
  auto row = values.at(i, theta_i, h);
  if (dist.size() != row.size()) throw GameError("pinned distribution arity mismatch");
  for (size_t k = 0; k < dist.size(); ++k) row[k] = dist[k];
}

std::vector<double> SolverConfig::default_epsilon_path() {
  std::vector<double> path;
  for (double e = 1e-2; e >= 1e-8; e *= 0.5) path.push_back(e);
  return path;
}

void SolverConfig::validate(const MultiStageGame& game) const {
  if (damping <= 0.0 || damping > 1.0) throw GameError("damping must lie in (0,1]");
  if (br_tolerance <= 0.0 || fp_tolerance <= 0.0) throw GameError("tolerances must be positive");
  int worst = 0;
  for (int h : game.nonterminal_nodes()) {
    int s = 0;
    for (int c : game.node(h).action_count) s += c;
    worst = std::max(worst, s);
  }
  const auto path = epsilon_path.empty() ? default_epsilon_path() : epsilon_path;
  double prev = std::numeric_limits<double>::infinity();
  for (double e : path) {
    if (e <= 0.0 || e >= 1.0 / worst)
      throw GameError("epsilon level out of the feasible range");
    if (e >= prev) throw GameError("epsilon path must decrease");
    prev = e;
  }
}

std::string VerifyReport::verdict() const {
  if (!beliefs_consistent) return "failed:cursed-bayes";
  if (!dampened_ok) return "failed:dampened-updating";
  if (!floor_ok) return "failed:belief-floor";
  if (!sequentially_rational) return "failed:sequential-rationality";
  return "verified-necessary";
}

bool fd_newton(const std::function<void(const std::vector<double>&, std::vector<double>&)>& F,
               std::vector<double>& x, double lo, double hi, int max_iter, double tol) {
  const int m = static_cast<int>(x.size());
  if (m == 0) return true;
  std::vector<double> R(m), R2(m), xt(m), dx(m);
  std::vector<double> J(static_cast<size_t>(m) * m);
  auto norm = [&](const std::vector<double>& v) {
    double r = 0.0;
    for (double e : v) r = std::max(r, std::abs(e));
    return r;
  };
  F(x, R);
  double rn = norm(R);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (rn < tol) return true;
    for (int k = 0; k < m; ++k) {
      double step = 1e-7 * std::max(1.0, std::abs(x[k]));
      xt = x;
      xt[k] += step;
      F(xt, R2);
      for (int r = 0; r < m; ++r) J[static_cast<size_t>(r) * m + k] = (R2[r] - R[r]) / step;
    }
    // Levenberg-Marquardt step (J^T J + mu I) dx = -J^T R; rank-deficient
    // systems (equilibrium continua) pick the minimum-norm-ish direction
    double trace = 0.0;
    for (int k = 0; k < m; ++k) {
      double d = 0.0;
      for (int r = 0; r < m; ++r) {
        double e = J[static_cast<size_t>(r) * m + k];
        d += e * e;
      }
      trace += d;
    }
    double mu = std::max(1e-12 * trace / m, 1e-300);
    bool accepted = false;
    for (int damp = 0; damp < 8 && !accepted; ++damp, mu *= 100.0) {
      std::vector<double> A(static_cast<size_t>(m) * m, 0.0);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          double s = 0.0;
          for (int k = 0; k < m; ++k)
            s += J[static_cast<size_t>(k) * m + r] * J[static_cast<size_t>(k) * m + c];
          A[static_cast<size_t>(r) * m + c] = s + (r == c ? mu : 0.0);
        }
      for (int r = 0; r < m; ++r) {
        double s = 0.0;
        for (int k = 0; k < m; ++k) s -= J[static_cast<size_t>(k) * m + r] * R[k];
        dx[r] = s;
      }
      // Cholesky-free: Gaussian elimination with partial pivoting
      bool singular = false;
      for (int c = 0; c < m && !singular; ++c) {
        int piv = c;
        for (int r = c + 1; r < m; ++r)
          if (std::abs(A[static_cast<size_t>(r) * m + c]) >
              std::abs(A[static_cast<size_t>(piv) * m + c]))
            piv = r;
        if (std::abs(A[static_cast<size_t>(piv) * m + c]) < 1e-280) {
          singular = true;
          break;
        }
        if (piv != c) {
          for (int k = c; k < m; ++k)
            std::swap(A[static_cast<size_t>(piv) * m + k], A[static_cast<size_t>(c) * m + k]);
          std::swap(dx[piv], dx[c]);
        }
        for (int r = c + 1; r < m; ++r) {
          double f = A[static_cast<size_t>(r) * m + c] / A[static_cast<size_t>(c) * m + c];
          if (f == 0.0) continue;
          for (int k = c; k < m; ++k)
            A[static_cast<size_t>(r) * m + k] -= f * A[static_cast<size_t>(c) * m + k];
          dx[r] -= f * dx[c];
        }
      }
      if (singular) continue;
      for (int r = m - 1; r >= 0; --r) {
        for (int k = r + 1; k < m; ++k) dx[r] -= A[static_cast<size_t>(r) * m + k] * dx[k];
        dx[r] /= A[static_cast<size_t>(r) * m + r];
      }
      for (double step : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
        for (int k = 0; k < m; ++k)
          xt[k] = std::clamp(x[k] + step * dx[k], lo, hi);
        F(xt, R2);
        double rn2 = norm(R2);
        if (rn2 < rn) {
          x = xt;
          R = R2;
          rn = rn2;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) return rn < tol;
  }
  return rn < tol;
}

BehavioralStrategyProfile cursed_best_response(const MultiStageGame& game,
                                               const Assessment& assessment,
                                               const SolverConfig& config,
                                               double epsilon) {
  // freshness check: beliefs must be the propagation of the strategy
  BeliefSystem fresh = propagate_beliefs(game, assessment.strategy, assessment.chi);
  double err = 0.0;
  for (size_t k = 0; k < fresh.data.size(); ++k)
    err = std::max(err, std::abs(fresh.data[k] - assessment.beliefs.data[k]));
  if (err > 1e-8)
    throw BeliefsStale("beliefs are not derived from the given strategy");

  BehavioralStrategyProfile out(assessment.strategy.game);
  ObserverPerception perc;
  std::vector<double> V, Q;
  for (int i = 0; i < game.num_players(); ++i)
    for (int t = 0; t < game.num_types(i); ++t) {
      perc = ObserverPerception{};
      rebuild_observer_perception(game, assessment.strategy, assessment.beliefs,
                                  assessment.chi, i, t, perc);
      backward_pass(game, perc, V, Q, [&](int h, const double* q, int na, int opc,
                                          double* vrow) {
        auto dst = out.at(i, t, h);
        if (!config.mask.empty() && config.mask.is_pinned(i, t, h)) {
          auto pin = config.mask.values.at(i, t, h);
          double shrink = 1.0 - na * epsilon;
          for (int a = 0; a < na; ++a) dst[a] = shrink * pin[a] + epsilon;
        } else {
          auto mu = assessment.beliefs.at(i, t, h);
          double best = -std::numeric_limits<double>::infinity();
          thread_local std::vector<double> scores;
          scores.assign(na, 0.0);
          for (int a = 0; a < na; ++a) {
            double s = 0.0;
            for (int op = 0; op < opc; ++op)
              s += mu[op] * q[static_cast<size_t>(a) * opc + op];
            scores[a] = s;
            best = std::max(best, s);
          }
          int ties = 0;
          for (int a = 0; a < na; ++a)
            if (scores[a] >= best - config.br_tolerance) ++ties;
          double surplus = (1.0 - na * epsilon) / ties;
          for (int a = 0; a < na; ++a)
            dst[a] = epsilon + (scores[a] >= best - config.br_tolerance ? surplus : 0.0);
        }
        for (int op = 0; op < opc; ++op) {
          double v = 0.0;
          for (int a = 0; a < na; ++a) v += dst[a] * q[static_cast<size_t>(a) * opc + op];
          vrow[op] = v;
        }
      });
    }
  return out;
}

namespace {

// Internal best response without the freshness re-propagation.
void br_into(const MultiStageGame& game, const BehavioralStrategyProfile& sigma,
             const BeliefSystem& beliefs, double chi, double epsilon,
             const SolverConfig& config, std::vector<ObserverPerception>& percs,
             std::vector<double>& V, std::vector<double>& Q,
             BehavioralStrategyProfile& out) {
  int k = 0;
  for (int i = 0; i < game.num_players(); ++i)
    for (int t = 0; t < game.num_types(i); ++t, ++k) {
      rebuild_observer_perception(game, sigma, beliefs, chi, i, t, percs[k]);
      backward_pass(game, percs[k], V, Q, [&](int h, const double* q, int na, int opc,
                                              double* vrow) {
        auto dst = out.at(i, t, h);
        if (!config.mask.empty() && config.mask.is_pinned(i, t, h)) {
          auto pin = config.mask.values.at(i, t, h);
          double shrink = 1.0 - na * epsilon;
          for (int a = 0; a < na; ++a) dst[a] = shrink * pin[a] + epsilon;
        } else if (na == 1) {
          dst[0] = 1.0;
        } else {
          auto mu = beliefs.at(i, t, h);
          double best = -std::numeric_limits<double>::infinity();
          thread_local std::vector<double> scores;
          scores.assign(na, 0.0);
          for (int a = 0; a < na; ++a) {
            double s = 0.0;
            for (int op = 0; op < opc; ++op)
              s += mu[op] * q[static_cast<size_t>(a) * opc + op];
            scores[a] = s;
            best = std::max(best, s);
          }
          int ties = 0;
          for (int a = 0; a < na; ++a)
            if (scores[a] >= best - config.br_tolerance) ++ties;
          double surplus = (1.0 - na * epsilon) / ties;
          for (int a = 0; a < na; ++a)
            dst[a] = epsilon + (scores[a] >= best - config.br_tolerance ? surplus : 0.0);
        }
        for (int op = 0; op < opc; ++op) {
          double v = 0.0;
          for (int a = 0; a < na; ++a) v += dst[a] * q[static_cast<size_t>(a) * opc + op];
          vrow[op] = v;
        }
      });
    }
}

}  // namespace

EpsilonSolveResult solve_epsilon_game(const MultiStageGame& game, double chi,
                                      double epsilon,
                                      const BehavioralStrategyProfile& init,
                                      const SolverConfig& config) {
  EpsilonSolveResult res;
  res.sigma = init;
  res.avg = init;
  BehavioralStrategyProfile br(init.game), next(init.game);
  BeliefSystem beliefs;
  int observers = 0;
  for (int i = 0; i < game.num_players(); ++i) observers += game.num_types(i);
  std::vector<ObserverPerception> percs(observers);
  std::vector<double> V, Q;

  const double lambda = config.damping;
  double stale_change = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iters; ++iter) {
    propagate_beliefs_into(game, res.sigma, chi, beliefs);
    br_into(game, res.sigma, beliefs, chi, epsilon, config, percs, V, Q, br);
    double change = 0.0;
    for (size_t k = 0; k < br.data.size(); ++k) {
      next.data[k] = (1.0 - lambda) * res.sigma.data[k] + lambda * br.data[k];
      change = std::max(change, std::abs(next.data[k] - res.sigma.data[k]));
    }
    res.sigma.data.swap(next.data);
    res.iterations = iter + 1;
    res.last_change = change;
    if (iter >= 50) {
      // slow moving average of the iterates; recovers orbit centers when
      // the bang-bang response cycles around an interior fixed point
      const double g = 0.01;
      for (size_t k = 0; k < res.avg.data.size(); ++k)
        res.avg.data[k] = (1.0 - g) * res.avg.data[k] + g * res.sigma.data[k];
    } else {
      res.avg.data = res.sigma.data;
    }
    if (change < config.fp_tolerance) {
      res.converged = true;
      break;
    }
    if (iter % 200 == 199) {
      if (change > 0.95 * stale_change) break;  // stalled or cycling
      stale_change = change;
    }
  }
  return res;
}

namespace {

// Diminishing-step relaxation sigma_{k+1} = sigma_k + (BR - sigma_k)/(k+2):
// the uniform average of best responses. Fixed-step damping orbits around
// interior equilibria; the shrinking step contracts the orbit so the
// Newton polish starts inside its basin.
BehavioralStrategyProfile average_fixed_point(const MultiStageGame& game, double chi,
                                              double epsilon,
                                              const BehavioralStrategyProfile& init,
                                              const SolverConfig& config, int iters,
                                              int k0 = 0) {
  BehavioralStrategyProfile sigma = init;
  BehavioralStrategyProfile br(init.game);
  BeliefSystem beliefs;
  int observers = 0;
  for (int i = 0; i < game.num_players(); ++i) observers += game.num_types(i);
  std::vector<ObserverPerception> percs(observers);
  std::vector<double> V, Q;
  for (int k = 0; k < iters; ++k) {
    propagate_beliefs_into(game, sigma, chi, beliefs);
    br_into(game, sigma, beliefs, chi, epsilon, config, percs, V, Q, br);
    double lambda = 1.0 / (k0 + k + 2.0);
    for (size_t j = 0; j < sigma.data.size(); ++j)
      sigma.data[j] += lambda * (br.data[j] - sigma.data[j]);
  }
  return sigma;
}

}  // namespace

double one_shot_residual(const MultiStageGame& game, const Assessment& assessment,
                         const SolveMask& mask, DeviationWitness* witness) {
  double worst = 0.0;
  ObserverPerception perc;
  std::vector<double> V, Q;
  DeviationWitness w;
  for (int i = 0; i < game.num_players(); ++i)
    for (int t = 0; t < game.num_types(i); ++t) {
      DeviationWitness wt;
      double r = observer_residual(game, assessment.strategy, assessment.beliefs,
                                   assessment.chi, i, t, mask, perc, V, Q, &wt);
      if (r > worst) {
        worst = r;
        w = wt;
      }
    }
  if (witness) *witness = w;
  return worst;
}

VerifyReport verify_cse(const MultiStageGame& game, const Assessment& assessment,
                        double tolerance, const SolveMask* mask) {
  VerifyReport rep;
  const double chi = assessment.chi;
  const auto& sigma = assessment.strategy;
  const auto& beliefs = assessment.beliefs;

  // (a) root beliefs equal conditional priors; every positive-probability
  // edge reproduces the cursed-Bayes update of the stored parent belief.
  double err = 0.0;
  for (int i = 0; i < game.num_players(); ++i)
    for (int t = 0; t < game.num_types(i); ++t) {
      auto cp = game.conditional_prior(i, t);
      auto root = beliefs.at(i, t, game.root());
      for (size_t k = 0; k < cp.size(); ++k)
        err = std::max(err, std::abs(root[k] - cp[k]));
    }
  for (int h : game.nonterminal_nodes()) {
    const HistoryNode& node = game.node(h);
    for (int i = 0; i < game.num_players(); ++i) {
      const int opc = game.num_opp_profiles(i);
      const int oac = game.num_opp_actions(i, h);
      for (int t = 0; t < game.num_types(i); ++t) {
        auto mu = beliefs.at(i, t, h);
        for (int oa = 0; oa < oac; ++oa) {
          // likelihood of this opponent action per opponent profile
          double denom = 0.0;
          thread_local std::vector<double> lk;
          lk.assign(opc, 0.0);
          for (int op = 0; op < opc; ++op) {
            double prod = 1.0;
            int rem = oa;
            const int tp0 = game.compose(i, 0, op);
            for (int j = game.num_players() - 1; j >= 0; --j) {
              if (j == i) continue;
              int aj = rem % node.action_count[j];
              rem /= node.action_count[j];
              int theta_j = (tp0 / game.type_stride(j)) % game.num_types(j);
              prod *= sigma.at(j, theta_j, h)[aj];
            }
            lk[op] = prod;
            denom += mu[op] * prod;
          }
          if (denom <= kOffPathTol) continue;  // off path: belief is free
          for (int a = 0; a < node.action_count[i]; ++a) {
            int child = node.children[game.joint_action(i, h, a, oa)];
            if (game.is_terminal(child)) continue;
            auto stored = beliefs.at(i, t, child);
            for (int op = 0; op < opc; ++op) {
              double expect = mu[op] * (chi * denom + (1.0 - chi) * lk[op]) / denom;
              err = std::max(err, std::abs(stored[op] - expect));
            }
          }
        }
      }
    }
  }
  rep.belief_error = err;
  rep.beliefs_consistent = err <= tolerance;

  rep.dampened_violations = check_dampened_updating(assessment);
  rep.dampened_ok = rep.dampened_violations.empty();
  rep.floor_violations = check_belief_floor(assessment);
  rep.floor_ok = rep.floor_violations.empty();

  static const SolveMask kNoMask;
  rep.residual = one_shot_residual(game, assessment, mask ? *mask : kNoMask, &rep.witness);
  rep.sequentially_rational = rep.residual <= tolerance;
  return rep;
}

namespace {

// ---- pure-profile enumeration with off-path belief search ----------------

struct ObserverScratch {
  ObserverPerception perc;
  std::vector<double> V, Q;
};

// Depth-first search over the undefined belief entries of observer
// (i, theta): each candidate at the first undefined cell is the dampened
// mixture chi * parent + (1 - chi) * q, siblings that share the opponent
// action component receive the same row, descendants are re-propagated,
// and the observer's one-shot rationality is checked once every entry is
// defined.
class OffPathFiller {
 public:
  OffPathFiller(const MultiStageGame& g, const BehavioralStrategyProfile& sigma,
                double chi, int i, int theta, const SolveMask& mask,
                const SolverConfig& cfg, long& budget, double accept_tol)
      : g_(g), sigma_(sigma), chi_(chi), i_(i), theta_(theta), mask_(mask),
        cfg_(cfg), budget_(budget), accept_tol_(accept_tol) {}

  bool run(BeliefSystem& beliefs) {
    chosen_.assign(g_.num_nonterminal(), 0);
    return fill(beliefs);
  }

 private:
  bool fill(BeliefSystem& beliefs) {
    int target = -1;
    for (int h : g_.nonterminal_nodes()) {
      if (h == g_.root()) continue;
      if (!beliefs.is_derived(i_, theta_, h) && !chosen_[g_.node(h).nonterminal_index]) {
        target = h;
        break;
      }
    }
    if (target < 0) {
      double r = observer_residual(g_, sigma_, beliefs, chi_, i_, theta_, mask_,
                                   scratch_.perc, scratch_.V, scratch_.Q);
      return r <= accept_tol_;
    }

    const int parent = g_.node(target).parent;
    const int opc = g_.num_opp_profiles(i_);
    std::vector<double> pb(beliefs.at(i_, theta_, parent).begin(),
                           beliefs.at(i_, theta_, parent).end());

    // own-action siblings observe the same opponent component and must
    // carry the same belief
    std::vector<int> siblings;
    {
      const HistoryNode& pn = g_.node(parent);
      int joint = g_.node(target).incoming;
      int oa_stride = pn.stride[i_];
      int own = (joint / oa_stride) % pn.action_count[i_];
      int base = joint - own * oa_stride;
      for (int a = 0; a < pn.action_count[i_]; ++a) {
        int sib = pn.children[base + a * oa_stride];
        if (!g_.is_terminal(sib)) siblings.push_back(sib);
      }
    }

    auto snapshot_data = beliefs.data;
    auto snapshot_flags = beliefs.derived;
    auto snapshot_chosen = chosen_;
    auto candidates = belief_candidates(opc, cfg_, static_cast<std::uint64_t>(target));
    for (const auto& q : candidates) {
      if (--budget_ < 0) return false;
      for (int sib : siblings) {
        auto row = beliefs.at(i_, theta_, sib);
        for (int op = 0; op < opc; ++op) row[op] = chi_ * pb[op] + (1.0 - chi_) * q[op];
        chosen_[g_.node(sib).nonterminal_index] = 1;
        propagate_below(g_, sigma_, chi_, i_, theta_, sib, beliefs);
        beliefs.set_derived(i_, theta_, sib, false);  // record: freely chosen
      }
      if (fill(beliefs)) return true;
      beliefs.data = snapshot_data;
      beliefs.derived = snapshot_flags;
      chosen_ = snapshot_chosen;
    }
    return false;
  }

  const MultiStageGame& g_;
  const BehavioralStrategyProfile& sigma_;
  double chi_;
  int i_, theta_;
  const SolveMask& mask_;
  const SolverConfig& cfg_;
  long& budget_;
  double accept_tol_;
  std::vector<std::uint8_t> chosen_;
  ObserverScratch scratch_;
};

std::vector<Assessment> enumerate_pure(const MultiStageGame& game, double chi,
                                       const SolverConfig& cfg,
                                       const std::vector<FreeCell>& cells, long total) {
  std::vector<Assessment> out;
  const double accept_tol = kAcceptFactor * cfg.br_tolerance;
  GamePtr gp = game.ptr();
  ObserverScratch scratch;
  for (long idx = 0; idx < total; ++idx) {
    BehavioralStrategyProfile sigma = pure_profile(gp, cells, idx, cfg.mask);
    BeliefSystem beliefs = propagate_beliefs_lenient(game, sigma, chi);
    bool feasible = true;
    long budget = cfg.max_fill_evals;
    for (int i = 0; i < game.num_players() && feasible; ++i)
      for (int t = 0; t < game.num_types(i) && feasible; ++t) {
        bool has_free = false;
        for (int h : game.nonterminal_nodes())
          if (!beliefs.is_derived(i, t, h)) {
            has_free = true;
            break;
          }
        if (!has_free) {
          feasible = observer_residual(game, sigma, beliefs, chi, i, t, cfg.mask,
                                       scratch.perc, scratch.V, scratch.Q) <= accept_tol;
        } else {
          OffPathFiller filler(game, sigma, chi, i, t, cfg.mask, cfg, budget, accept_tol);
          feasible = filler.run(beliefs);
        }
      }
    if (!feasible) continue;
    Assessment asmt{chi, std::move(sigma), std::move(beliefs)};
    if (one_shot_residual(game, asmt, cfg.mask) <= accept_tol)
      out.push_back(std::move(asmt));
  }
  return out;
}

// ---- support polish -------------------------------------------------------

struct CellSupport {
  int player, type, history;
  std::vector<int> support;
};

// Fills underived entries of `beliefs` from `frozen` (the smallest-epsilon
// limit bookkeeping) and re-propagates below each copied entry so that
// every positive-probability edge stays update-consistent.
void merge_frozen_beliefs(const MultiStageGame& game,
                          const BehavioralStrategyProfile& sigma, double chi,
                          const BeliefSystem& frozen, BeliefSystem& beliefs) {
  for (int h : game.nonterminal_nodes())
    for (int i = 0; i < game.num_players(); ++i)
      for (int t = 0; t < game.num_types(i); ++t) {
        if (beliefs.is_derived(i, t, h)) continue;
        auto dst = beliefs.at(i, t, h);
        auto src = frozen.at(i, t, h);
        bool fresh = false;
        for (size_t k = 0; k < dst.size(); ++k) {
          if (dst[k] != src[k]) fresh = true;
          dst[k] = src[k];
        }
        if (fresh) propagate_below(game, sigma, chi, i, t, h, beliefs);
        beliefs.set_derived(i, t, h, false);
      }
}

struct PolishOutcome {
  bool ok = false;
  Assessment assessment;
  double residual = 0.0;
};

// Shared support-polish loop: snap off-support probabilities to zero,
// solve the indifference system on the current supports with the damped
// Newton, and iterate score-driven support updates until the one-shot
// residual clears the acceptance tolerance. The callbacks inject the
// route-specific machinery (belief refresh, per-cell action scores, and
// the global residual).
struct PolishHooks {
  std::function<void()> prepare;  // called after sigma changes
  std::function<void(const CellSupport&, std::vector<double>&)> scores;
  std::function<double()> residual;
};

bool support_polish(const MultiStageGame& game, BehavioralStrategyProfile& sigma,
                    std::vector<CellSupport>& cells, const SolverConfig& cfg,
                    const PolishHooks& hooks, double* out_residual) {
  const double accept_tol = kAcceptFactor * cfg.br_tolerance;
  auto select_supports = [&]() {
    for (auto& c : cells) {
      auto row = sigma.at(c.player, c.type, c.history);
      c.support.clear();
      int best = 0;
      for (int a = 0; a < static_cast<int>(row.size()); ++a) {
        if (row[a] >= cfg.support_tol) c.support.push_back(a);
        if (row[a] > row[best]) best = a;
      }
      if (c.support.empty()) c.support.push_back(best);
    }
  };
  auto apply_supports = [&]() {
    for (const auto& c : cells) {
      auto row = sigma.at(c.player, c.type, c.history);
      double sum = 0.0;
      for (int a : c.support) sum += row[a];
      std::vector<double> keep(c.support.size());
      for (size_t k = 0; k < c.support.size(); ++k)
        keep[k] = sum > 0 ? row[c.support[k]] / sum : 1.0 / c.support.size();
      std::fill(row.begin(), row.end(), 0.0);
      for (size_t k = 0; k < c.support.size(); ++k) row[c.support[k]] = keep[k];
    }
  };

  select_supports();
  int max_rounds = 8;
  for (const auto& c : cells)
    max_rounds += 2 * game.node(c.history).action_count[c.player];
  for (int round = 0; round < max_rounds; ++round) {
    apply_supports();

    std::vector<double> x;
    std::vector<const CellSupport*> varcells;
    for (const auto& c : cells)
      if (c.support.size() >= 2) {
        varcells.push_back(&c);
        auto row = sigma.at(c.player, c.type, c.history);
        for (size_t k = 1; k < c.support.size(); ++k) x.push_back(row[c.support[k]]);
      }

    auto scatter = [&](const std::vector<double>& v) {
      size_t pos = 0;
      for (const CellSupport* c : varcells) {
        auto row = sigma.at(c->player, c->type, c->history);
        double rest = 0.0;
        for (size_t k = 1; k < c->support.size(); ++k) {
          row[c->support[k]] = v[pos++];
          rest += row[c->support[k]];
        }
        row[c->support[0]] = 1.0 - rest;
      }
    };
    auto F = [&](const std::vector<double>& v, std::vector<double>& R) {
      scatter(v);
      hooks.prepare();
      R.clear();
      std::vector<double> sc;
      for (const CellSupport* c : varcells) {
        hooks.scores(*c, sc);
        for (size_t k = 1; k < c->support.size(); ++k)
          R.push_back(sc[c->support[k]] - sc[c->support[0]]);
      }
    };

    bool newton_ok = true;
    if (!x.empty()) {
      newton_ok = fd_newton(F, x, 0.0, 1.0, 40, 1e-12);
      scatter(x);
      // an eliminated entry leaving the simplex means its action must exit
      const CellSupport* bad = nullptr;
      for (const CellSupport* c : varcells) {
        auto row = sigma.at(c->player, c->type, c->history);
        if (row[c->support[0]] < -1e-9 && (!bad || row[c->support[0]] <
                                                       sigma.at(bad->player, bad->type,
                                                                bad->history)[bad->support[0]]))
          bad = c;
      }
      if (bad) {
        auto& sup = const_cast<CellSupport*>(bad)->support;
        sup.erase(sup.begin());
        continue;
      }
      for (const CellSupport* c : varcells) {
        auto row = sigma.at(c->player, c->type, c->history);
        if (row[c->support[0]] < 0.0) row[c->support[0]] = 0.0;
      }
    }

    hooks.prepare();
    std::vector<double> sc;
    if (newton_ok) {
      double resid = hooks.residual();
      if (resid <= accept_tol) {
        if (out_residual) *out_residual = resid;
        return true;
      }
      // a solved indifference system with a remaining gain means some
      // off-support action beats the support: admit the single worst one
      CellSupport* enter_cell = nullptr;
      int enter_action = -1;
      double worst = std::max(cfg.br_tolerance, 1e-9);
      for (auto& c : cells) {
        hooks.scores(c, sc);
        double sup_best = -std::numeric_limits<double>::infinity();
        for (int a : c.support) sup_best = std::max(sup_best, sc[a]);
        for (int a = 0; a < static_cast<int>(sc.size()); ++a) {
          if (std::find(c.support.begin(), c.support.end(), a) != c.support.end()) continue;
          if (sc[a] - sup_best > worst) {
            worst = sc[a] - sup_best;
            enter_cell = &c;
            enter_action = a;
          }
        }
      }
      if (!enter_cell) return false;  // no improving change left
      auto row = sigma.at(enter_cell->player, enter_cell->type, enter_cell->history);
      for (int a : enter_cell->support) row[a] *= 0.99;
      row[enter_action] = 0.01;
      enter_cell->support.push_back(enter_action);
      std::sort(enter_cell->support.begin(), enter_cell->support.end());
      continue;
    }

    // unsolvable indifference system: retire the in-support action with the
    // largest score deficit (one at a time keeps genuine mixing intact)
    CellSupport* exit_cell = nullptr;
    int exit_action = -1;
    double worst = 1e-9;
    for (auto& c : cells) {
      if (c.support.size() < 2) continue;
      hooks.scores(c, sc);
      double sup_best = -std::numeric_limits<double>::infinity();
      for (int a : c.support) sup_best = std::max(sup_best, sc[a]);
      for (int a : c.support)
        if (sup_best - sc[a] > worst) {
          worst = sup_best - sc[a];
          exit_cell = &c;
          exit_action = a;
        }
    }
    if (!exit_cell) return false;
    auto& sup = exit_cell->support;
    sup.erase(std::find(sup.begin(), sup.end(), exit_action));
  }
  return false;
}

// Tree-engine polish: beliefs are re-propagated from sigma with off-path
// entries frozen at the epsilon-limit bookkeeping.
PolishOutcome polish_candidate(const MultiStageGame& game, double chi,
                               const BehavioralStrategyProfile& start,
                               const BeliefSystem& frozen, const SolverConfig& cfg) {
  PolishOutcome out;
  BehavioralStrategyProfile sigma = start;

  std::vector<CellSupport> cells;
  for (int h : game.nonterminal_nodes())
    for (int i = 0; i < game.num_players(); ++i) {
      int na = game.node(h).action_count[i];
      if (na <= 1) continue;
      for (int t = 0; t < game.num_types(i); ++t) {
        if (!cfg.mask.empty() && cfg.mask.is_pinned(i, t, h)) continue;
        cells.push_back({i, t, h, {}});
      }
    }

  BeliefSystem beliefs;
  ObserverScratch scratch;
  PolishHooks hooks;
  hooks.prepare = [&]() {
    beliefs = propagate_beliefs_lenient(game, sigma, chi);
    merge_frozen_beliefs(game, sigma, chi, frozen, beliefs);
  };
  hooks.scores = [&](const CellSupport& c, std::vector<double>& sc) {
    sc.clear();
    observer_residual_impl(game, sigma, beliefs, chi, c.player, c.type, cfg.mask,
                           scratch.perc, scratch.V, scratch.Q, nullptr,
                           [&](int h, const double* scores, int na) {
                             if (h != c.history) return;
                             sc.assign(scores, scores + na);
                           });
  };
  hooks.residual = [&]() {
    Assessment asmt{chi, sigma, beliefs};
    return one_shot_residual(game, asmt, cfg.mask);
  };

  double resid = 0.0;
  if (!support_polish(game, sigma, cells, cfg, hooks, &resid)) return out;
  hooks.prepare();
  out.ok = true;
  out.assessment = Assessment{chi, std::move(sigma), std::move(beliefs)};
  out.residual = resid;
  return out;
}

}  // namespace

SolveReport solve_cse(const MultiStageGame& game, double chi, const SolverConfig& config) {
  SolverConfig cfg = config;
  if (cfg.epsilon_path.empty()) cfg.epsilon_path = SolverConfig::default_epsilon_path();
  cfg.validate(game);
  GamePtr gp = game.ptr();

  SolveReport report;
  const double accept_tol = kAcceptFactor * cfg.br_tolerance;
  auto cells = collect_free_cells(game, cfg.mask);
  long total = pure_profile_count(cells, std::max(cfg.pure_enumeration_limit,
                                                  cfg.pure_seed_limit));
  report.pure_profiles_total = total;

  std::vector<std::pair<Assessment, std::string>> candidates;
  if (total <= cfg.pure_enumeration_limit) {
    report.pure_enumeration_exhaustive = true;
    for (auto& a : enumerate_pure(game, chi, cfg, cells, total))
      candidates.emplace_back(std::move(a), "pure-enum");
  }

  // direct Newton refinement of caller seeds: catches equilibria whose
  // best-response dynamics are unstable (cutoff unraveling, interior
  // mixing) without waiting for an epsilon path to wander nearby
  for (const auto& s : cfg.extra_seeds) {
    BehavioralStrategyProfile mixed = s;
    mixed.project_to_epsilon(cfg.epsilon_path.back());
    BeliefSystem frozen = propagate_beliefs(game, mixed, chi);
    PolishOutcome p = polish_candidate(game, chi, s, frozen, cfg);
    if (p.ok) candidates.emplace_back(std::move(p.assessment), "seed-polish");
  }

  // epsilon-path seeds: caller-provided, then random restarts. Pure seeds
  // are only worth the epsilon paths when exhaustive enumeration was
  // skipped but the profile count is still small.
  std::vector<std::pair<BehavioralStrategyProfile, std::string>> seeds;
  for (const auto& s : cfg.extra_seeds) seeds.emplace_back(s, "extra");
  if (!report.pure_enumeration_exhaustive && total <= cfg.pure_seed_limit)
    for (long idx = 0; idx < total; ++idx)
      seeds.emplace_back(pure_profile(gp, cells, idx, cfg.mask), "pure-seed");
  for (int k = 0; k < cfg.restarts; ++k) {
    std::mt19937_64 rng(restart_seed(cfg.seed, k));
    seeds.emplace_back(random_profile(gp, rng), "random");
  }

  for (auto& [seed, kind] : seeds) {
    RestartTrace trace;
    trace.seed_kind = kind;
    BehavioralStrategyProfile sigma = seed;
    sigma.project_to_epsilon(cfg.epsilon_path.front());
    EpsilonSolveResult res;
    bool all_converged = true;
    for (double eps : cfg.epsilon_path) {
      res = solve_epsilon_game(game, chi, eps, sigma, cfg);
      sigma = res.sigma;
      trace.steps.push_back({eps, res.iterations, res.converged, res.last_change});
      all_converged = all_converged && res.converged;
      if (res.converged) report.any_restart_converged = true;
    }
    BeliefSystem frozen = propagate_beliefs(game, sigma, chi);
    PolishOutcome p = polish_candidate(game, chi, sigma, frozen, cfg);
    if (!p.ok && !res.converged) {
      // cycling around an interior fixed point: contract the orbit with
      // diminishing steps, polishing after each escalation; slow orbits
      // need more averaging, so small games get a longer leash
      BehavioralStrategyProfile averaged = res.avg;
      int levels = game.strategy_size() <= 200 ? 3 : 1;
      int iters = cfg.averaging_iters;
      int done_iters = 0;
      for (int lev = 0; lev < levels && !p.ok; ++lev, iters *= 4) {
        averaged = average_fixed_point(game, chi, cfg.epsilon_path.back(), averaged,
                                       cfg, iters, done_iters);
        done_iters += iters;
        // different seeds often orbit the same equilibrium; once the
        // contraction homes in on an already-known candidate, the rest of
        // the escalation would only rediscover it
        bool known = false;
        for (const auto& [cand, origin] : candidates)
          if (cand.strategy.sup_distance(averaged) < 0.02) {
            known = true;
            break;
          }
        if (known) break;
        frozen = propagate_beliefs(game, averaged, chi);
        p = polish_candidate(game, chi, averaged, frozen, cfg);
      }
    }
    if (p.ok) {
      trace.accepted = true;
      candidates.emplace_back(std::move(p.assessment), "eps-path");
    } else {
      trace.note = all_converged ? "polish failed" : "no convergence";
      ++report.candidates_rejected;
    }
    report.epsilon_trace.push_back(std::move(trace));
  }

  // deduplicate (pure enumeration results first) and verify
  for (auto& [asmt, origin] : candidates) {
    bool dup = false;
    for (const auto& rec : report.equilibria)
      if (rec.assessment.strategy.sup_distance(asmt.strategy) < cfg.dedup_radius) {
        dup = true;
        break;
      }
    if (dup) continue;
    EquilibriumRecord rec;
    rec.residual = one_shot_residual(game, asmt, cfg.mask);
    if (rec.residual > accept_tol) {
      ++report.candidates_rejected;
      continue;
    }
    rec.verify = verify_cse(game, asmt, 1e-8, cfg.mask.empty() ? nullptr : &cfg.mask);
    rec.origin = origin;
    rec.assessment = std::move(asmt);
    report.equilibria.push_back(std::move(rec));
  }
  return report;
}

// ---- one-stage chi-CE ------------------------------------------------------

namespace {

// Direct stage-game expected utility: the perceived outcome distribution is
// chi * (belief-averaged play) + (1 - chi) * (type-conditional play) under
// the conditional prior. No belief propagation is involved.
struct OneStage {
  const MultiStageGame& g;
  int root;

  double eu(const BehavioralStrategyProfile& sigma, double chi, int i, int theta,
            int action) const {
    const int opc = g.num_opp_profiles(i);
    const int oac = g.num_opp_actions(i, root);
    const HistoryNode& node = g.node(root);
    auto cp = g.conditional_prior(i, theta);
    thread_local std::vector<double> prod;
    prod.assign(static_cast<size_t>(opc) * oac, 1.0);
    thread_local std::vector<double> avg;
    avg.assign(oac, 0.0);
    for (int op = 0; op < opc; ++op) {
      const int tp0 = g.compose(i, 0, op);
      for (int oa = 0; oa < oac; ++oa) {
        double pr = 1.0;
        int rem = oa;
        for (int j = g.num_players() - 1; j >= 0; --j) {
          if (j == i) continue;
          int aj = rem % node.action_count[j];
          rem /= node.action_count[j];
          int theta_j = (tp0 / g.type_stride(j)) % g.num_types(j);
          pr *= sigma.at(j, theta_j, root)[aj];
        }
        prod[static_cast<size_t>(op) * oac + oa] = pr;
        avg[oa] += cp[op] * pr;
      }
    }
    double eu = 0.0;
    for (int op = 0; op < opc; ++op) {
      const int tp = g.compose(i, theta, op);
      for (int oa = 0; oa < oac; ++oa) {
        double perceived =
            chi * avg[oa] + (1.0 - chi) * prod[static_cast<size_t>(op) * oac + oa];
        int child = node.children[g.joint_action(i, root, action, oa)];
        eu += cp[op] * perceived * g.payoff(child, tp, i);
      }
    }
    return eu;
  }

  double residual(const BehavioralStrategyProfile& sigma, double chi,
                  const SolveMask& mask) const {
    double worst = 0.0;
    for (int i = 0; i < g.num_players(); ++i) {
      int na = g.node(root).action_count[i];
      if (na <= 1) continue;
      for (int t = 0; t < g.num_types(i); ++t) {
        if (!mask.empty() && mask.is_pinned(i, t, root)) continue;
        auto row = sigma.at(i, t, root);
        double cur = 0.0, best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
          double u = eu(sigma, chi, i, t, a);
          cur += row[a] * u;
          best = std::max(best, u);
        }
        worst = std::max(worst, best - cur);
      }
    }
    return worst;
  }
};

}  // namespace

std::vector<BehavioralStrategyProfile> solve_chi_ce_one_stage(const MultiStageGame& game,
                                                              double chi,
                                                              const SolverConfig& config) {
  if (game.stages() != 1) throw NotOneStage("chi-CE route requires a one-stage game");
  SolverConfig cfg = config;
  if (cfg.epsilon_path.empty()) cfg.epsilon_path = SolverConfig::default_epsilon_path();
  cfg.validate(game);
  GamePtr gp = game.ptr();
  OneStage os{game, game.root()};
  const double accept_tol = kAcceptFactor * cfg.br_tolerance;

  std::vector<BehavioralStrategyProfile> found;
  auto push_unique = [&](const BehavioralStrategyProfile& s) {
    for (const auto& f : found)
      if (f.sup_distance(s) < cfg.dedup_radius) return;
    found.push_back(s);
  };

  auto cells = collect_free_cells(game, cfg.mask);
  long total = pure_profile_count(cells, std::max(cfg.pure_enumeration_limit,
                                                  cfg.pure_seed_limit));
  bool exhaustive = total <= cfg.pure_enumeration_limit;
  if (exhaustive) {
    for (long idx = 0; idx < total; ++idx) {
      BehavioralStrategyProfile sigma = pure_profile(gp, cells, idx, cfg.mask);
      if (os.residual(sigma, chi, cfg.mask) <= accept_tol) push_unique(sigma);
    }
  }

  std::vector<BehavioralStrategyProfile> seeds;
  for (const auto& s : cfg.extra_seeds) seeds.push_back(s);
  if (!exhaustive && total <= cfg.pure_seed_limit)
    for (long idx = 0; idx < total; ++idx)
      seeds.push_back(pure_profile(gp, cells, idx, cfg.mask));
  for (int k = 0; k < cfg.restarts; ++k) {
    std::mt19937_64 rng(restart_seed(cfg.seed, k));
    seeds.push_back(random_profile(gp, rng));
  }

  BehavioralStrategyProfile br(gp), next(gp);
  std::vector<double> scores;
  auto ce_best_response = [&](const BehavioralStrategyProfile& sigma, double eps) {
    for (int i = 0; i < game.num_players(); ++i) {
      int na = game.node(game.root()).action_count[i];
      for (int t = 0; t < game.num_types(i); ++t) {
        auto dst = br.at(i, t, game.root());
        if (!cfg.mask.empty() && cfg.mask.is_pinned(i, t, game.root())) {
          auto pin = cfg.mask.values.at(i, t, game.root());
          double shrink = 1.0 - na * eps;
          for (int a = 0; a < na; ++a) dst[a] = shrink * pin[a] + eps;
          continue;
        }
        scores.assign(na, 0.0);
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
          scores[a] = os.eu(sigma, chi, i, t, a);
          best = std::max(best, scores[a]);
        }
        int ties = 0;
        for (int a = 0; a < na; ++a)
          if (scores[a] >= best - cfg.br_tolerance) ++ties;
        double surplus = (1.0 - na * eps) / ties;
        for (int a = 0; a < na; ++a)
          dst[a] = eps + (scores[a] >= best - cfg.br_tolerance ? surplus : 0.0);
      }
    }
  };
  for (auto& seed : seeds) {
    BehavioralStrategyProfile sigma = seed;
    sigma.project_to_epsilon(cfg.epsilon_path.front());
    BehavioralStrategyProfile avg = sigma;
    bool converged = false;
    for (double eps : cfg.epsilon_path) {
      double stale_change = std::numeric_limits<double>::infinity();
      converged = false;
      for (int iter = 0; iter < cfg.max_iters; ++iter) {
        ce_best_response(sigma, eps);
        double change = 0.0;
        for (size_t k = 0; k < sigma.data.size(); ++k) {
          next.data[k] = (1.0 - cfg.damping) * sigma.data[k] + cfg.damping * br.data[k];
          change = std::max(change, std::abs(next.data[k] - sigma.data[k]));
        }
        sigma.data.swap(next.data);
        if (iter >= 50) {
          const double gma = 0.01;
          for (size_t k = 0; k < avg.data.size(); ++k)
            avg.data[k] = (1.0 - gma) * avg.data[k] + gma * sigma.data[k];
        } else {
          avg.data = sigma.data;
        }
        if (change < cfg.fp_tolerance) {
          converged = true;
          break;
        }
        if (iter % 200 == 199) {
          if (change > 0.95 * stale_change) break;
          stale_change = change;
        }
      }
    }
    // polish on the support of the limit, escalating the diminishing-step
    // contraction of a cycling orbit when needed
    auto try_polish = [&](const BehavioralStrategyProfile& cand) {
      BehavioralStrategyProfile s = cand;
      std::vector<CellSupport> sup;
      for (const auto& c : cells) sup.push_back({c.player, c.type, c.history, {}});
      PolishHooks hooks;
      hooks.prepare = [] {};
      hooks.scores = [&](const CellSupport& c, std::vector<double>& sc) {
        sc.assign(game.node(game.root()).action_count[c.player], 0.0);
        for (size_t a = 0; a < sc.size(); ++a)
          sc[a] = os.eu(s, chi, c.player, c.type, static_cast<int>(a));
      };
      hooks.residual = [&]() { return os.residual(s, chi, cfg.mask); };
      if (support_polish(game, s, sup, cfg, hooks, nullptr)) {
        push_unique(s);
        return true;
      }
      return false;
    };
    bool done = try_polish(sigma);
    if (!done && !converged) {
      BehavioralStrategyProfile averaged = avg;
      int levels = game.strategy_size() <= 200 ? 3 : 1;
      int iters = cfg.averaging_iters;
      int done_iters = 0;
      for (int lev = 0; lev < levels && !done; ++lev, iters *= 4) {
        for (int k = 0; k < iters; ++k) {
          ce_best_response(averaged, cfg.epsilon_path.back());
          double lambda = 1.0 / (done_iters + k + 2.0);
          for (size_t j = 0; j < averaged.data.size(); ++j)
            averaged.data[j] += lambda * (br.data[j] - averaged.data[j]);
        }
        done_iters += iters;
        bool known = false;
        for (const auto& f : found)
          if (f.sup_distance(averaged) < 0.02) {
            known = true;
            break;
          }
        if (known) break;
        done = try_polish(averaged);
      }
    }
  }
  return found;
}

std::vector<SweepPoint> chi_sweep(const MultiStageGame& game,
                                  const std::vector<double>& chi_grid,
                                  const SolverConfig& config,
                                  const SeedProvider& seeds) {
  std::vector<SweepPoint> out;
  std::vector<BehavioralStrategyProfile> warm;
  for (double chi : chi_grid) {
    SolverConfig cfg = config;
    cfg.chi = chi;
    if (seeds)
      for (auto& s : seeds(chi)) cfg.extra_seeds.push_back(std::move(s));
    for (const auto& w : warm) cfg.extra_seeds.push_back(w);
    SweepPoint pt;
    pt.chi = chi;
    pt.report = solve_cse(game, chi, cfg);
    warm.clear();
    for (const auto& rec : pt.report.equilibria)
      warm.push_back(rec.assessment.strategy);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace cse

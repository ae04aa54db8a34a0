#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "cse/engine.hpp"

namespace cse {

struct BeliefsStale : GameError { using GameError::GameError; };
struct NotOneStage : GameError { using GameError::GameError; };

// Cells whose rows are pinned during a solve (e.g. an undominated-strategy
// refinement). Pinned cells are excluded from best responses, deviation
// checks and pure enumeration.
struct SolveMask {
  GamePtr game;
  std::vector<std::uint8_t> pinned;        // per cell index
  BehavioralStrategyProfile values;        // rows meaningful at pinned cells

  SolveMask() = default;
  explicit SolveMask(GamePtr g)
      : game(g), pinned(g->cell_count(), 0), values(std::move(g)) {}
  bool empty() const { return pinned.empty(); }
  bool is_pinned(int i, int theta_i, int h) const {
    return !pinned.empty() && pinned[game->cell_index(i, theta_i, h)] != 0;
  }
  void pin(int i, int theta_i, int h, const std::vector<double>& dist);
};

struct SolverConfig {
  std::vector<double> epsilon_path;  // decreasing; default 1e-2 * 0.5^m down to 1e-8
  double damping = 0.3;              // step size of the best-response relaxation
  double br_tolerance = 1e-9;        // utility slack for the approximate argmax
  double fp_tolerance = 1e-10;       // sup-norm change declaring a fixed point
  int max_iters = 50000;             // per epsilon level
  int restarts = 16;
  std::uint64_t seed = 1;
  double chi = 0.0;

  long pure_enumeration_limit = 4096;  // skip exhaustive pure search above this
  long pure_seed_limit = 1024;         // seed the iteration from all pure profiles below this
  int averaging_iters = 4000;          // diminishing-step phase after a cycling stall
  int belief_grid = 41;                // off-path belief search resolution
  long max_fill_evals = 200000;        // cap on off-path candidate combinations per profile
  double dedup_radius = 1e-6;          // sup-norm equilibrium deduplication
  double support_tol = 1e-4;           // probabilities below this are snapped off-support

  SolveMask mask;
  std::vector<BehavioralStrategyProfile> extra_seeds;  // warm starts (oracle or sweep neighbors)

  static std::vector<double> default_epsilon_path();
  // Feasibility: every level must satisfy eps < 1 / sum_j |A_j(h)| at each history.
  void validate(const MultiStageGame& game) const;
};

struct DeviationWitness {
  int player = -1, type = -1, history = -1, action = -1;
  double gain = 0.0;
};

struct VerifyReport {
  bool beliefs_consistent = false;
  bool dampened_ok = false;
  bool floor_ok = false;
  bool sequentially_rational = false;
  double belief_error = 0.0;     // worst on-path cursed-Bayes mismatch
  double residual = 0.0;         // max one-shot deviation gain
  DeviationWitness witness;
  std::vector<BeliefViolation> dampened_violations;
  std::vector<BeliefViolation> floor_violations;
  bool pass() const {
    return beliefs_consistent && dampened_ok && floor_ok && sequentially_rational;
  }
  // "verified-necessary" or the first failing check's name.
  std::string verdict() const;
};

struct EquilibriumRecord {
  Assessment assessment;
  double residual = 0.0;
  VerifyReport verify;
  std::string origin;  // "pure-enum" | "eps-path"
};

struct EpsilonStep {
  double epsilon = 0.0;
  int iterations = 0;
  bool converged = false;
  double change = 0.0;
};
struct RestartTrace {
  std::string seed_kind;
  std::vector<EpsilonStep> steps;
  bool accepted = false;
  std::string note;
};

struct SolveReport {
  std::vector<EquilibriumRecord> equilibria;
  std::vector<RestartTrace> epsilon_trace;
  long pure_profiles_total = 0;
  bool pure_enumeration_exhaustive = false;
  int candidates_rejected = 0;
  bool any_restart_converged = false;
};

// One damped fixed-point pass at a fixed epsilon:
//   sigma <- (1 - lambda) sigma + lambda BR_eps(sigma)
// with beliefs re-propagated each iteration. `avg` carries a slow moving
// average of the iterates, used to recover cycling interior equilibria.
struct EpsilonSolveResult {
  BehavioralStrategyProfile sigma;
  BehavioralStrategyProfile avg;
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};
EpsilonSolveResult solve_epsilon_game(const MultiStageGame& game, double chi,
                                      double epsilon,
                                      const BehavioralStrategyProfile& init,
                                      const SolverConfig& config);

// The epsilon-constrained cursed best response: at every cell the epsilon
// floor goes on every action and the surplus is split uniformly over the
// argmax set (ties within br_tolerance). Throws BeliefsStale when the
// assessment's beliefs do not match propagation from its strategy.
BehavioralStrategyProfile cursed_best_response(const MultiStageGame& game,
                                               const Assessment& assessment,
                                               const SolverConfig& config,
                                               double epsilon);

// Max one-shot deviation gain over all non-pinned cells, evaluated under
// the assessment's stored beliefs.
double one_shot_residual(const MultiStageGame& game, const Assessment& assessment,
                         const SolveMask& mask, DeviationWitness* witness = nullptr);

// Necessary-condition verifier: (a) on-path beliefs reproduce cursed Bayes,
// (b) dampened updating, (c) the chi^t prior floor, (d) no profitable
// one-shot deviation. Full chi-consistency is certified only when the
// solver itself produced the epsilon path.
VerifyReport verify_cse(const MultiStageGame& game, const Assessment& assessment,
                        double tolerance = 1e-8, const SolveMask* mask = nullptr);

// Computes chi-CSE candidates: exhaustive pure-profile enumeration with an
// off-path belief search over the dampened-updating box, plus the damped
// epsilon-path iteration from random / pure / caller seeds with a Newton
// polish on the limit supports. An empty equilibria list is a legal,
// reported outcome.
SolveReport solve_cse(const MultiStageGame& game, double chi, const SolverConfig& config);

// chi-CE for one-stage games: best replies to chi * sigma_bar + (1 - chi) * sigma
// under the conditional priors, solved by the same damped iteration plus
// enumeration. Implemented directly on the stage game, independent of the
// belief-propagation engine, so the two routes cross-check each other.
std::vector<BehavioralStrategyProfile> solve_chi_ce_one_stage(const MultiStageGame& game,
                                                              double chi,
                                                              const SolverConfig& config);

// Per grid point solve with warm starts from the previous point.
struct SweepPoint {
  double chi = 0.0;
  SolveReport report;
};
using SeedProvider =
    std::function<std::vector<BehavioralStrategyProfile>(double chi)>;
std::vector<SweepPoint> chi_sweep(const MultiStageGame& game,
                                  const std::vector<double>& chi_grid,
                                  const SolverConfig& config,
                                  const SeedProvider& seeds = nullptr);

// Small dense damped Newton with a forward-difference Jacobian; used to
// polish candidate supports to machine precision.
bool fd_newton(const std::function<void(const std::vector<double>&, std::vector<double>&)>& F,
               std::vector<double>& x, double lo, double hi, int max_iter, double tol);

}  // namespace cse

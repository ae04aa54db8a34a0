#pragma once

#include <array>

#include "cse/solver.hpp"

// The five worked applications: game generators returning GameSpec /
// MultiStageGame instances for the generic machinery, plus closed-form
// oracles for their equilibrium structure so solver output can be tested
// against exact values.
namespace cse::apps {

struct AssumptionViolated : GameError { using GameError::GameError; };

// ---- sender/receiver signaling games --------------------------------------

enum class SignalingVariant { Example1, BH3, BH4 };

GameSpec signaling_spec(SignalingVariant variant);
GamePtr gen_signaling(SignalingVariant variant);

// A pure strategy profile of the signaling game together with the interval
// of off-path beliefs mu(theta1 | unsent m) able to support it (empty when
// the profile is separating and has no off-path history).
struct SignalingEquilibrium {
  std::string label;     // e.g. "(A,A);(L,R)"
  int m_t1 = 0, m_t2 = 0;        // message index per sender type
  int a_m0 = 0, a_m1 = 0;        // receiver action index per message
  bool pooling = false;
  bool has_offpath = false;
  int offpath_message = -1;
  double belief_lo = 0.0, belief_hi = 0.0;
};

// Exact threshold classification of the pure chi-CSE set (thresholds 8/9
// for Example 1; 4/7, 2/3 and the always-supported (S,S);(C,C) for the
// Brandts-Holt games).
std::vector<SignalingEquilibrium> classify_signaling_cse(SignalingVariant variant,
                                                         double chi);

struct PoolingPersistence {
  int pooling_checked = 0;
  bool all_persist = true;
};
// Every pooling equilibrium verified at chi_hi must re-verify, with the
// same strategies and beliefs, at chi_lo <= chi_hi.
PoolingPersistence pooling_persistence_check(const MultiStageGame& game, double chi_hi,
                                             double chi_lo, const SolverConfig& config);

// ---- threshold public goods game with pre-play communication --------------

// Unique cutoff C*(N,K,chi) solving C - chi (C/K)^{N-1} = 1 - chi on [0,1],
// by bisection to 1e-12. C*(N,K,0) = 1 and C*(N,K,1) = 0 exactly.
double pgg_cutoff(int N, double K, double chi);
// N = 2 closed form (K - K chi) / (K - chi).
double pgg_cutoff_two_player(double K, double chi);
// Large-N and large-K limits, both 1 - chi: evaluated at N = 200 and K = 1e6.
std::pair<double, double> pgg_limits(double K, double chi);
// Strict decrease of the cutoff across each interior grid.
bool pgg_monotonicity_check(const std::vector<int>& Ns, const std::vector<double>& Ks,
                            const std::vector<double>& chis);

// Finite discretization: M uniform-grid midpoint cost types on [0,K],
// stage-1 messages {0,1}, stage-2 contribute/pass; the cost is sunk when
// paid and the good is supplied only under unanimity.
GameSpec pgg_discrete_spec(int N, double K, int M);
std::vector<double> pgg_type_costs(double K, int M);
// Cutoff-structured strategies (message and contribution cutoffs on a
// coarse grid, plus the oracle cutoff) used as solver seeds.
std::vector<BehavioralStrategyProfile> pgg_seed_profiles(GamePtr game, double K, int M,
                                                         double chi);

// ---- four-stage centipede with altruists -----------------------------------

GameSpec centipede_spec(double alpha);
GamePtr gen_centipede(double alpha);

struct CentipedeOracle {
  double q1 = 0.0;         // selfish player one's pass probability
  double q2 = 0.0;         // player two's pass probability
  double mu = 0.0;         // stage-2 cursed belief in the altruist
  double threshold = 0.0;  // mixing survives iff chi <= 6 / (7 (1 - alpha))
};
CentipedeOracle centipede_oracle(double alpha, double chi);

// Perceived strategy of player one over {T1, P1T3, P1P3} per type, given
// selfish take probability p.
struct CentipedeCursedTable {
  std::array<double, 3> selfish{};
  std::array<double, 3> altruistic{};
};
CentipedeCursedTable centipede_cursed_table(double alpha, double p, double chi);

// True reduced-normal-form strategy (Table-2 shape) for the same labels.
CentipedeCursedTable centipede_true_table(double p);

std::vector<BehavioralStrategyProfile> centipede_seed_profiles(GamePtr game, double alpha,
                                                               double chi);

// ---- two-stage three-voter agenda voting -----------------------------------

struct VotingParams {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;  // type distribution, strictly positive
  double v = 0.0;                       // second-ranked intensity, in (0,1)
};

GameSpec voting_spec(const VotingParams& params);
GamePtr gen_voting(const VotingParams& params);

// Undominated-refinement pins: sincere stage-2 votes for everyone and
// sincere stage-1 votes for theta2 / theta3; only theta1's first vote is
// searched by the solver.
SolveMask voting_sincere_mask(GamePtr game, const VotingParams& params);

// The symmetric profile where theta1 votes b (sophisticated) or a (sincere)
// in stage 1 and everything else is sincere.
BehavioralStrategyProfile voting_profile(GamePtr game, const VotingParams& params,
                                         bool theta1_votes_b);

struct VotingThresholds {
  // largest chi at which sophisticated b-voting is supported; -1 when it
  // is never supported (v below p1/(p1+p2))
  double sophisticated_max_chi = -1.0;
  // sincere a-voting region: {chi >= chi_tilde} or {chi <= chi_tilde};
  // the sentinel chi_tilde = 2 encodes never (upper) / always (lower)
  double chi_tilde = 2.0;
  bool sincere_region_upper = false;
};
VotingThresholds voting_thresholds(const VotingParams& params);

// Direct evaluation of the two stage-1 indifference inequalities, used by
// the brute-force scans.
bool voting_sophisticated_supported(const VotingParams& params, double chi);
bool voting_sincere_supported(const VotingParams& params, double chi);

// ---- two-person dirty faces -------------------------------------------------

struct DirtyFacesParams {
  double p = 0.0;      // probability of a dirty face
  int T = 2;           // horizon, at least 2
  double alpha = 0.0;  // reward for correctly claiming a dirty face
  double delta = 0.0;  // discount factor in (0,1)
};

GameSpec dirty_faces_spec(const DirtyFacesParams& params);
GamePtr gen_dirty_faces(const DirtyFacesParams& params);

// alpha_bar = alpha / ((1 - p)(1 + alpha)); the maintained assumption is
// alpha_bar in (0,1), i.e. claiming at stage 1 on seeing a dirty face is
// strictly dominated. Throws AssumptionViolated otherwise.
double dirty_alpha_bar(const DirtyFacesParams& params);

// kappa(chi): the small root of
//   delta chi y^2 + [delta (1 - chi) - delta/(1+alpha) - 1] y + 1/(1+alpha) = 0,
// evaluated in the cancellation-free 2C / (-B + sqrt(B^2 - 4AC)) form.
double dirty_kappa(const DirtyFacesParams& params, double chi);

// chi-CE stopping stage on seeing a dirty face: 2 below alpha_bar, never
// (T+1) above.
int dirty_ce_stop(const DirtyFacesParams& params, double chi);

// Pure-strategy chi-CSE stopping stages on seeing a dirty face:
//   2 iff chi <= alpha_bar,
//   t in {3..T} iff ((1-kappa)/(1-p))^{1/(t-2)} <= chi <= alpha_bar^{1/(t-1)},
//   T+1 iff chi >= alpha_bar^{1/(T+1)}.
std::vector<int> dirty_cse_stop_set(const DirtyFacesParams& params, double chi);

// Smallest chi at which stopping at stage t (3 <= t <= T) becomes
// supportable: the root of chi = ((1 - kappa(chi)) / (1 - p))^{1/(t-2)}.
double dirty_lower_root(const DirtyFacesParams& params, int t);

// All symmetric stopping-strategy profiles (per observed face type, a first
// stage at which D is played, T+1 meaning never), used as solver seeds.
std::vector<BehavioralStrategyProfile> dirty_seed_profiles(GamePtr game,
                                                           const DirtyFacesParams& params);
// The symmetric profile stopping at stage_o / stage_x per observed face.
BehavioralStrategyProfile dirty_stop_profile(GamePtr game, const DirtyFacesParams& params,
                                             int stage_o, int stage_x);
// First stage at which a type plays D in a (near-)pure profile; T+1 if none.
int dirty_stop_stage_of(const MultiStageGame& game, const BehavioralStrategyProfile& sigma,
                        int type, double tol = 1e-4);

}  // namespace cse::apps

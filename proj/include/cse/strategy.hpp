#pragma once

#include <cstdint>
#include <span>

#include "cse/game.hpp"

namespace cse {

struct NotTotallyMixed : GameError { using GameError::GameError; };
struct MissingBelief : GameError { using GameError::GameError; };
struct ChiOutOfRange : GameError { using GameError::GameError; };

// Per (player, type, non-terminal history) distribution over that
// history's own actions.
struct BehavioralStrategyProfile {
  GamePtr game;
  std::vector<double> data;

  BehavioralStrategyProfile() = default;
  explicit BehavioralStrategyProfile(GamePtr g)
      : game(std::move(g)), data(game->strategy_size(), 0.0) {}

  std::span<double> at(int i, int theta_i, int h) {
    return {data.data() + game->strategy_offset(i, theta_i, h),
            static_cast<size_t>(game->node(h).action_count[i])};
  }
  std::span<const double> at(int i, int theta_i, int h) const {
    return {data.data() + game->strategy_offset(i, theta_i, h),
            static_cast<size_t>(game->node(h).action_count[i])};
  }

  // Uniform at every cell.
  static BehavioralStrategyProfile uniform(GamePtr g);

  bool totally_mixed(double floor) const;
  double sup_distance(const BehavioralStrategyProfile& other) const;
  // Clamp each entry to [eps, 1-...] by the affine shrink p -> (1-|A|eps)p + eps.
  void project_to_epsilon(double eps);
  // Probability-vector invariants: nonnegative entries summing to 1.
  void check_valid(double tol = kInputTol) const;
};

// Per (player, type, non-terminal history) distribution over the
// opponents' type profiles.
struct BeliefSystem {
  GamePtr game;
  std::vector<double> data;
  // Entry provenance: 1 when produced by a cursed-Bayes update chain from
  // the root, 0 when chosen freely at a zero-probability edge.
  std::vector<std::uint8_t> derived;

  BeliefSystem() = default;
  explicit BeliefSystem(GamePtr g)
      : game(std::move(g)),
        data(game->belief_size(), 0.0),
        derived(game->cell_count(), 1) {}

  std::span<double> at(int i, int theta_i, int h) {
    return {data.data() + game->belief_offset(i, theta_i, h),
            static_cast<size_t>(game->num_opp_profiles(i))};
  }
  std::span<const double> at(int i, int theta_i, int h) const {
    return {data.data() + game->belief_offset(i, theta_i, h),
            static_cast<size_t>(game->num_opp_profiles(i))};
  }
  bool is_derived(int i, int theta_i, int h) const {
    return derived[game->cell_index(i, theta_i, h)] != 0;
  }
  void set_derived(int i, int theta_i, int h, bool v) {
    derived[game->cell_index(i, theta_i, h)] = v ? 1 : 0;
  }
  void check_valid(double tol = kDerivedTol) const;
};

// A candidate solution: cursedness, strategies and beliefs together.
struct Assessment {
  double chi = 0.0;
  BehavioralStrategyProfile strategy;
  BeliefSystem beliefs;
};

}  // namespace cse

#include "doctest.h"

#include <cmath>
#include <random>

#include "cse/apps.hpp"
#include "cse/engine.hpp"

using namespace cse;
using namespace cse::apps;

TEST_CASE("centipede oracle closed forms") {
  const double alpha = 0.05;
  SUBCASE("chi = 0 reduces to the Bayesian equilibrium") {
    auto o = centipede_oracle(alpha, 0.0);
    CHECK(o.q1 == doctest::Approx(6.0 * alpha / (1.0 - alpha)).epsilon(1e-12));
    CHECK(o.q2 == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(o.mu == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  }
  SUBCASE("mixing dies above 6 / (7 (1 - alpha))") {
    auto o = centipede_oracle(alpha, 0.95);
    CHECK(o.threshold == doctest::Approx(6.0 / (7.0 * 0.95)).epsilon(1e-12));
    CHECK(o.q1 == 0.0);
    CHECK(o.q2 == 0.0);
    CHECK(o.mu == doctest::Approx(1.0 - 0.95 * 0.95));  // chi a + (1 - chi)
  }
  SUBCASE("chi = 0.5 value and the indifference identity") {
    auto o = centipede_oracle(alpha, 0.5);
    CHECK(o.q1 == doctest::Approx((0.175 / 0.825 - 0.05) / 0.95).epsilon(1e-12));
    CHECK(o.q1 == doctest::Approx(0.17065).epsilon(1e-3));
    // the mixing probability is pinned by mu = 1/7
    CHECK(o.mu == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  }
}

TEST_CASE("perceived reduced-normal-form table") {
  SUBCASE("chi = 0 is the true table") {
    auto truth = centipede_true_table(0.3);
    auto t = centipede_cursed_table(0.05, 0.3, 0.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(t.selfish[k] == doctest::Approx(truth.selfish[k]).epsilon(1e-14));
      CHECK(t.altruistic[k] == doctest::Approx(truth.altruistic[k]).epsilon(1e-14));
    }
  }
  SUBCASE("chi = 1 collapses both columns to the average") {
    double alpha = 0.05, p = 0.3;
    auto t = centipede_cursed_table(alpha, p, 1.0);
    std::array<double, 3> avg = {(1 - alpha) * p, (1 - alpha) * (1 - p), alpha};
    for (int k = 0; k < 3; ++k) {
      CHECK(t.selfish[k] == doctest::Approx(avg[k]).epsilon(1e-14));
      CHECK(t.altruistic[k] == doctest::Approx(avg[k]).epsilon(1e-14));
    }
  }
  SUBCASE("columns are distributions for random parameters") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      double alpha = 0.01 + 0.13 * unif(rng), p = unif(rng), chi = unif(rng);
      auto t = centipede_cursed_table(alpha, p, chi);
      CHECK(std::abs(t.selfish[0] + t.selfish[1] + t.selfish[2] - 1.0) < 1e-12);
      CHECK(std::abs(t.altruistic[0] + t.altruistic[1] + t.altruistic[2] - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("engine semantics on the centipede tree") {
  const double alpha = 0.05;
  auto g = gen_centipede(alpha);
  CHECK(g->num_terminals() == 5);
  CHECK(g->stages() == 4);

  // equilibrium profile at chi = 0
  auto o = centipede_oracle(alpha, 0.0);
  auto sigma = centipede_seed_profiles(g, alpha, 0.0)[0];

  SUBCASE("stage-1 average strategy is alpha + (1 - alpha) q1") {
    auto beliefs = propagate_beliefs_lenient(*g, sigma, 0.0);
    auto avg = average_strategy(*g, sigma, beliefs, 1, 0, g->root());
    CHECK(avg[1] == doctest::Approx(alpha + (1 - alpha) * o.q1).epsilon(1e-12));
  }

  SUBCASE("stage-2 cursed belief matches the mixture formula") {
    for (double chi : {0.0, 0.3, 0.7}) {
      auto oc = centipede_oracle(alpha, chi);
      auto s = centipede_seed_profiles(g, alpha, chi)[0];
      auto beliefs = propagate_beliefs_lenient(*g, s, chi);
      int h1 = g->find_history({{"P1", "w"}});
      REQUIRE(h1 >= 0);
      CHECK(beliefs.at(1, 0, h1)[0] == doctest::Approx(oc.mu).epsilon(1e-12));
    }
  }

  SUBCASE("perceived path probability of T1 is 1 - q1 for the selfish type") {
    auto beliefs = propagate_beliefs_lenient(*g, sigma, 0.0);
    auto perc = cursed_perception(*g, sigma, beliefs, 0.0);
    int tp = g->type_profile_index({1, 0});  // selfish
    auto dist = terminal_distribution(*g, sigma, perc, 0, tp, g->root());
    int t1 = g->find_history({{"T1", "w"}, {"e", "e"}, {"e", "e"}, {"e", "e"}});
    REQUIRE(t1 >= 0);
    CHECK(dist[g->node(t1).terminal_index] == doctest::Approx(1.0 - o.q1).epsilon(1e-12));
  }

  SUBCASE("player two is exactly indifferent at mu = 1/7") {
    // at the oracle point, both take-now and pass continuation are worth 8
    double chi = 0.4;
    auto oc = centipede_oracle(alpha, chi);
    auto s = centipede_seed_profiles(g, alpha, chi)[0];
    auto beliefs = propagate_beliefs_lenient(*g, s, chi);
    Assessment asmt{chi, s, beliefs};
    int h1 = g->find_history({{"P1", "w"}});
    double eu = expected_utility(*g, asmt, 1, 0, h1);
    CHECK(eu == doctest::Approx(8.0).epsilon(1e-9));
    // forcing T2 or P2 gives the same value
    auto dev = s;
    dev.at(1, 0, h1)[0] = 1.0;
    dev.at(1, 0, h1)[1] = 0.0;
    CHECK(expected_utility(*g, asmt, 1, 0, h1, &dev) == doctest::Approx(8.0).epsilon(1e-9));
    dev.at(1, 0, h1)[0] = 0.0;
    dev.at(1, 0, h1)[1] = 1.0;
    CHECK(expected_utility(*g, asmt, 1, 0, h1, &dev) == doctest::Approx(8.0).epsilon(1e-9));
    (void)oc;
  }
}

TEST_CASE("solver recovers the interior equilibrium") {
  const double alpha = 0.05;
  auto g = gen_centipede(alpha);
  SolverConfig cfg;
  cfg.restarts = 2;
  cfg.max_iters = 3000;
  for (double chi : {0.0, 0.6}) {
    auto o = centipede_oracle(alpha, chi);
    cfg.extra_seeds = centipede_seed_profiles(g, alpha, chi);
    auto rep = solve_cse(*g, chi, cfg);
    bool found = false;
    int h1 = g->find_history({{"P1", "w"}});
    for (const auto& rec : rep.equilibria) {
      double q1 = rec.assessment.strategy.at(0, 1, g->root())[1];
      double q2 = rec.assessment.strategy.at(1, 0, h1)[1];
      if (std::abs(q1 - o.q1) < 1e-4 && std::abs(q2 - o.q2) < 1e-4) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("tree perception at the root reproduces the cursed table") {
  // perceived stage-1 play of player one, viewed by player two: the cursed
  // mixture chi * average + (1 - chi) * type-conditional equals the
  // normal-form table entries p(1 - chi alpha) and p chi (1 - alpha)
  const double alpha = 0.05, p = 0.7, chi = 0.45;
  auto g = gen_centipede(alpha);
  auto sigma = BehavioralStrategyProfile::uniform(g->ptr());
  // selfish takes with probability p at stage 1; altruist always passes
  sigma.at(0, 1, g->root())[0] = p;
  sigma.at(0, 1, g->root())[1] = 1.0 - p;
  sigma.at(0, 0, g->root())[0] = 0.0;
  sigma.at(0, 0, g->root())[1] = 1.0;
  auto beliefs = propagate_beliefs_lenient(*g, sigma, chi);
  auto table = centipede_cursed_table(alpha, p, chi);
  // player two's opponent profile order matches the type order
  // (altruistic, selfish); action 0 is T1
  auto perc = observer_perception(*g, sigma, beliefs, chi, 1, 0);
  const double* vs_altruist = perc.at(g->root(), 0);
  const double* vs_selfish = perc.at(g->root(), 1);
  CHECK(vs_selfish[0] == doctest::Approx(table.selfish[0]).epsilon(1e-12));    // p(1 - chi a)
  CHECK(vs_altruist[0] == doctest::Approx(table.altruistic[0]).epsilon(1e-12));  // p chi (1 - a)
}

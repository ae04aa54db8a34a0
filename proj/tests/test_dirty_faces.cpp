#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "cse/apps.hpp"
#include "cse/engine.hpp"

using namespace cse;
using namespace cse::apps;

namespace {
const DirtyFacesParams kWorked{2.0 / 3.0, 5, 0.25, 0.8};
}

TEST_CASE("maintained assumption and alpha_bar") {
  CHECK(dirty_alpha_bar(kWorked) == doctest::Approx(0.6).epsilon(1e-12));
  DirtyFacesParams bad{0.9, 5, 10.0, 0.8};  // p alpha = 9 >= 1 - p
  CHECK_THROWS_AS((void)dirty_alpha_bar(bad), AssumptionViolated);
  CHECK_THROWS_AS((void)dirty_faces_spec(bad), AssumptionViolated);
}

TEST_CASE("kappa is the root of the waiting quadratic") {
  for (double chi : {1e-6, 0.05, 0.3, 0.6, 0.9, 1.0}) {
    double k = dirty_kappa(kWorked, chi);
    CHECK(k > 0.0);
    CHECK(k < 1.0);
    double d = kWorked.delta, a = kWorked.alpha;
    double F = d * chi * k * k + (d * (1 - chi) - d / (1 + a) - 1) * k + 1 / (1 + a);
    CHECK(std::abs(F) < 1e-10);
  }
  // sanity near chi -> 0: kappa tends to 1 / (1 + alpha (1 - delta))
  double limit = 1.0 / (1.0 + kWorked.alpha * (1.0 - kWorked.delta));
  CHECK(dirty_kappa(kWorked, 1e-9) == doctest::Approx(limit).epsilon(1e-6));
}

TEST_CASE("stop-stage thresholds for the worked example") {
  CHECK(dirty_lower_root(kWorked, 3) == doctest::Approx(0.168).epsilon(0.012));
  CHECK(std::abs(dirty_lower_root(kWorked, 3) - 0.168) < 0.002);
  CHECK(std::abs(dirty_lower_root(kWorked, 4) - 0.505) < 0.002);

  SUBCASE("static cursed play switches at alpha_bar") {
    CHECK(dirty_ce_stop(kWorked, 0.5) == 2);
    CHECK(dirty_ce_stop(kWorked, 0.59999) == 2);
    CHECK(dirty_ce_stop(kWorked, 0.60001) == 6);
    CHECK(dirty_ce_stop(kWorked, 0.9) == 6);
  }

  SUBCASE("sequential stop sets by region") {
    auto set = [&](double chi) { return dirty_cse_stop_set(kWorked, chi); };
    CHECK(set(0.0) == std::vector<int>{2});
    CHECK(set(0.1) == std::vector<int>{2});
    CHECK(set(0.3) == std::vector<int>{2, 3});
    CHECK(set(0.55) == std::vector<int>{2, 3, 4});
    // above alpha_bar stage 2 dies; never-stop only appears high up
    auto s9 = set(0.93);
    CHECK(std::find(s9.begin(), s9.end(), 2) == s9.end());
    CHECK(std::find(s9.begin(), s9.end(), 6) != s9.end());
  }
}

TEST_CASE("belief recursion on the all-U path") {
  auto g = gen_dirty_faces(kWorked);
  for (double chi : {0.0, 0.25, 0.6, 1.0}) {
    auto sigma = dirty_stop_profile(g, kWorked, 1, 4);
    auto beliefs = propagate_beliefs_lenient(*g, sigma, chi);
    int h = g->root();
    for (int stage = 1; stage <= 4; ++stage) {
      REQUIRE(beliefs.is_derived(0, 0, h));
      double want = 1.0 - (1.0 - kWorked.p) * std::pow(chi, stage - 1);
      CHECK(beliefs.at(0, 0, h)[0] == doctest::Approx(want).epsilon(1e-10));
      h = g->node(h).children[0];  // both keep waiting
    }
  }
}

TEST_CASE("claiming payoff at stage t matches the closed form") {
  auto g = gen_dirty_faces(kWorked);
  double chi = 0.4;
  auto sigma = dirty_stop_profile(g, kWorked, 1, 6);  // opponent never claims
  auto beliefs = propagate_beliefs_lenient(*g, sigma, chi);
  Assessment asmt{chi, sigma, beliefs};
  int h = g->root();
  for (int stage = 1; stage <= 3; ++stage) {
    auto dev = sigma;
    dev.at(0, 0, h)[0] = 0.0;
    dev.at(0, 0, h)[1] = 1.0;  // claim now
    double got = expected_utility(*g, asmt, 0, 0, h, &dev);
    double undiscounted =
        kWorked.alpha - (1.0 - kWorked.p) * (1.0 + kWorked.alpha) * std::pow(chi, stage - 1);
    CHECK(got == doctest::Approx(std::pow(kWorked.delta, stage - 1) * undiscounted)
                     .epsilon(1e-10));
    h = g->node(h).children[0];
  }
}

TEST_CASE("generic solver finds exactly the oracle's pure stop equilibria") {
  auto g = gen_dirty_faces(kWorked);
  SolverConfig cfg;
  cfg.restarts = 4;
  cfg.max_iters = 2000;
  cfg.extra_seeds = dirty_seed_profiles(g, kWorked);
  double chi = 0.3;
  auto rep = solve_cse(*g, chi, cfg);
  std::vector<int> found;
  for (const auto& rec : rep.equilibria) {
    if (!rec.verify.pass()) continue;
    int so = dirty_stop_stage_of(*g, rec.assessment.strategy, 1);
    int sx = dirty_stop_stage_of(*g, rec.assessment.strategy, 0);
    if (so == 1 && sx > 0) found.push_back(sx);
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  CHECK(found == dirty_cse_stop_set(kWorked, chi));
}

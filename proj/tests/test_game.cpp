#include "doctest.h"

#include <cmath>

#include "cse/game.hpp"
#include "support.hpp"

using namespace cse;

using testutil::signaling_example_spec;

TEST_CASE("signaling example builds with the expected shape") {
  auto g = MultiStageGame::build(signaling_example_spec());
  CHECK(g->stages() == 2);
  CHECK(g->num_players() == 2);
  CHECK(g->num_terminals() == 4);
  // 4 public terminals x 2 sender types = 8 type-indexed terminal views
  CHECK(g->num_terminals() * g->num_type_profiles() == 8);
  CHECK(g->prior()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g->prior()[1] == doctest::Approx(0.75).epsilon(1e-12));

  int hB = g->find_history({{"B", "w"}});
  REQUIRE(hB >= 0);
  CHECK(g->history_path(hB) == "B");
  int tBL = g->find_history({{"B", "w"}, {"n", "L"}});
  REQUIRE(tBL >= 0);
  CHECK(g->is_terminal(tBL));
  CHECK(g->payoff(tBL, 0, 0) == 4.0);  // sender t1 at (B, L)
  CHECK(g->history_path(tBL) == "B/L");
}

TEST_CASE("degenerate single-player single-action game") {
  GameSpec s;
  s.players = {"p"};
  s.stages = 1;
  s.types = {{"t"}};
  s.prior = {{{"t"}, 1.0}};
  s.uniform_actions = {{"a"}};
  s.payoffs = {{{{"a"}}, {"t"}, {0.0}}};
  auto g = MultiStageGame::build(s);
  CHECK(g->num_terminals() == 1);
  CHECK(g->histories_at(0).size() == 1);
  CHECK(g->histories_at(1).size() == 1);
}

TEST_CASE("enumerate_histories counts and order") {
  auto g = MultiStageGame::build(signaling_example_spec());
  auto h0 = g->histories_at(0);
  REQUIRE(h0.size() == 1);
  CHECK(h0[0] == g->root());
  auto h1 = g->histories_at(1);
  REQUIRE(h1.size() == 2);
  CHECK(g->history_path(h1[0]) == "A");
  CHECK(g->history_path(h1[1]) == "B");
  CHECK_THROWS_AS((void)g->histories_at(3), StageOutOfRange);
  CHECK_THROWS_AS((void)g->histories_at(-1), StageOutOfRange);

  // two players, two actions each: 4 joint profiles after one stage
  GameSpec s2;
  s2.players = {"p0", "p1"};
  s2.stages = 1;
  s2.types = {{"t"}, {"t"}};
  s2.prior = {{{"t", "t"}, 1.0}};
  s2.uniform_actions = {{"x", "y"}, {"x", "y"}};
  for (const char* a : {"x", "y"})
    for (const char* b : {"x", "y"})
      s2.payoffs.push_back({{{a, b}}, {"t", "t"}, {0.0, 0.0}});
  auto g2 = MultiStageGame::build(s2);
  CHECK(g2->histories_at(1).size() == 4);
}

TEST_CASE("conditional priors") {
  SUBCASE("independent prior is unchanged by conditioning") {
    GameSpec s;
    s.players = {"p0", "p1"};
    s.stages = 1;
    s.types = {{"u", "v"}, {"x", "y"}};
    s.uniform_actions = {{"a"}, {"a"}};
    for (const char* t0 : {"u", "v"})
      for (const char* t1 : {"x", "y"}) {
        double w = (t0[0] == 'u' ? 0.5 : 0.5) * (t1[0] == 'x' ? 0.25 : 0.75);
        s.prior.push_back({{t0, t1}, w});
        s.payoffs.push_back({{{"a", "a"}}, {t0, t1}, {0.0, 0.0}});
      }
    auto g = MultiStageGame::build(s);
    for (int t = 0; t < 2; ++t) {
      auto cp = g->conditional_prior(0, t);
      CHECK(cp[0] == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(cp[1] == doctest::Approx(0.75).epsilon(1e-12));
    }
    CHECK_THROWS_AS((void)g->conditional_prior(0, 5), UnknownType);
  }

  SUBCASE("announcement-conditioned dirty-faces prior") {
    // p = 2/3: profiles {XX, XO, OX} get (1/2, 1/4, 1/4); a player whose
    // type is X (sees a dirty face) holds own-face-dirty odds 2/3.
    GameSpec s;
    s.players = {"p0", "p1"};
    s.stages = 1;
    s.types = {{"X", "O"}, {"X", "O"}};
    s.uniform_actions = {{"a"}, {"a"}};
    double p = 2.0 / 3.0;
    s.prior = {{{"X", "X"}, p * p},
               {{"X", "O"}, p * (1 - p)},
               {{"O", "X"}, (1 - p) * p},
               {{"O", "O"}, 1e-14}};
    for (const char* t0 : {"X", "O"})
      for (const char* t1 : {"X", "O"})
        s.payoffs.push_back({{{"a", "a"}}, {t0, t1}, {0.0, 0.0}});
    auto g = MultiStageGame::build(s);
    auto cp = g->conditional_prior(0, 0);  // own type X
    CHECK(cp[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(cp[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }

  SUBCASE("correlated 2x2 prior") {
    GameSpec s;
    s.players = {"p0", "p1"};
    s.stages = 1;
    s.types = {{"a", "b"}, {"a", "b"}};
    s.uniform_actions = {{"x"}, {"x"}};
    s.prior = {{{"a", "a"}, 0.4}, {{"a", "b"}, 0.1}, {{"b", "a"}, 0.1}, {{"b", "b"}, 0.4}};
    for (const char* t0 : {"a", "b"})
      for (const char* t1 : {"a", "b"})
        s.payoffs.push_back({{{"x", "x"}}, {t0, t1}, {0.0, 0.0}});
    auto g = MultiStageGame::build(s);
    auto cp = g->conditional_prior(0, 0);
    CHECK(cp[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(cp[1] == doctest::Approx(0.2).epsilon(1e-12));
  }
}

TEST_CASE("build errors") {
  auto base = signaling_example_spec();

  SUBCASE("non-positive prior") {
    auto s = base;
    s.prior[0].weight = 0.0;
    CHECK_THROWS_AS((void)MultiStageGame::build(s), NonPositivePrior);
    s = base;
    s.prior.erase(s.prior.begin());  // missing profile => zero mass
    CHECK_THROWS_AS((void)MultiStageGame::build(s), NonPositivePrior);
  }
  SUBCASE("empty or missing action set") {
    auto s = base;
    s.per_history_actions[2].labels.clear();
    CHECK_THROWS_AS((void)MultiStageGame::build(s), EmptyActionSet);
    s = base;
    s.per_history_actions.erase(s.per_history_actions.begin() + 2);
    CHECK_THROWS_AS((void)MultiStageGame::build(s), EmptyActionSet);
  }
  SUBCASE("missing payoff names the terminal") {
    auto s = base;
    s.payoffs.pop_back();
    CHECK_THROWS_WITH_AS((void)MultiStageGame::build(s),
                         doctest::Contains("missing payoff"), PayoffMissing);
  }
  SUBCASE("unknown type label") {
    auto s = base;
    s.prior[0].profile[0] = "nope";
    CHECK_THROWS_AS((void)MultiStageGame::build(s), UnknownType);
  }
}

TEST_CASE("path probabilities sum to one for any strategy and type profile") {
  std::mt19937_64 rng(20240811);
  for (int trial = 0; trial < 40; ++trial) {
    auto g = testutil::random_game(rng);
    auto sigma = testutil::random_mixed_profile(g, rng);
    for (int tp = 0; tp < g->num_type_profiles(); ++tp) {
      // forward product of true joint play over the whole tree
      std::vector<double> mass(g->nodes().size(), 0.0);
      mass[g->root()] = 1.0;
      double total = 0.0;
      auto tv = g->type_profile(tp);
      for (int h = 0; h < static_cast<int>(g->nodes().size()); ++h) {
        if (mass[h] == 0.0) continue;
        if (g->is_terminal(h)) {
          total += mass[h];
          continue;
        }
        const auto& node = g->node(h);
        for (int joint = 0; joint < node.num_joint; ++joint) {
          double pr = mass[h];
          for (int i = 0; i < g->num_players(); ++i) {
            int ai = (joint / node.stride[i]) % node.action_count[i];
            pr *= sigma.at(i, tv[i], h)[ai];
          }
          mass[node.children[joint]] += pr;
        }
      }
      CHECK(std::abs(total - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("stage-uniform action sets give power-law history counts") {
  std::mt19937_64 rng(99);
  auto spec = testutil::random_game_spec(rng, 2, 2, 2, 2);
  auto g = MultiStageGame::build(spec);
  long per_stage = 1;
  for (const auto& a : spec.uniform_actions) per_stage *= a.size();
  long expect = 1;
  for (int t = 0; t <= g->stages(); ++t) {
    CHECK(static_cast<long>(g->histories_at(t).size()) == expect);
    expect *= per_stage;
  }
}

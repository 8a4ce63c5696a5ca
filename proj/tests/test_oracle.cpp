#include "catch_amalgamated.hpp"
#include "support/fixtures.hpp"

using namespace colsynth;

namespace {

bool contains(const std::vector<PartialAssignment>& xs, const PartialAssignment& k) {
  return std::find(xs.begin(), xs.end(), k) != xs.end();
}

}  // namespace

TEST_CASE("single-start beetle by enumeration") {
  const auto single = fixtures::beetle(false);
  const auto& c = single.model;
  const auto rep = brute_feasible(c, 1.0);
  CHECK(rep.verdict == Verdict::Sat);
  CHECK(rep.space_size == 192);
  CHECK(contains(rep.viable, fixtures::named(c.params(), {{"d_r", 1}, {"d_g", 3}, {"d_b", 3}, {"d_y", 0}})));
  CHECK(brute_feasible(c, 2.0).verdict == Verdict::Unsat);

  const ColoredMdp empty(c.mdp(), c.params(), parse_sexpr("(and (= d_r 0) (= d_r 1))", c.params()), c.guards());
  const auto none = brute_feasible(empty, 1.0);
  CHECK(none.verdict == Verdict::Unsat);
  CHECK(none.space_size == 0);

  // Without environment parameters robust and plain enumeration coincide.
  const auto robust = brute_robust(c, 1.0);
  CHECK(robust.verdict == rep.verdict);
  CHECK(robust.viable == rep.viable);
  CHECK(robust.viable_count == rep.viable_count);
}

TEST_CASE("multi-start beetle by enumeration") {
  const auto multi = fixtures::beetle(true);
  const auto& c = multi.model;
  const auto rep = brute_robust(c, 1.0);
  CHECK(rep.verdict == Verdict::Sat);
  CHECK(rep.space_size == 192);
  CHECK(contains(rep.viable, fixtures::named(c.params(), {{"d_r", 3}, {"d_g", 0}, {"d_b", 3}, {"d_y", 0}})));
  CHECK_FALSE(contains(rep.viable, fixtures::named(c.params(), {{"d_r", 1}, {"d_g", 3}, {"d_b", 3}, {"d_y", 0}})));
  CHECK(rep.viable_count <= brute_feasible(c, 1.0).viable_count);

  const ColoredMdp west_on_blue(c.mdp(), c.params(),
                                fx::and_({c.tau(), parse_sexpr("(= d_b 1)", c.params())}), c.guards());
  CHECK(brute_robust(west_on_blue, 1.0).verdict == Verdict::Unsat);
}

TEST_CASE("enumeration cap") {
  const auto multi = fixtures::beetle(true);
  OracleConfig cfg;
  cfg.cap = 100;
  CHECK_THROWS_AS(brute_feasible(multi.model, 1.0, cfg), CapacityError);
  CHECK_THROWS_AS(brute_robust(multi.model, 1.0, cfg), CapacityError);
  cfg.keep_viable = 0;
  cfg.cap = 1000;
  const auto rep = brute_feasible(multi.model, 1.0, cfg);
  CHECK(rep.viable.empty());
  CHECK(rep.viable_count > 0);
}

TEST_CASE("report counts are consistent and stable") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ColoredMdp c = fixtures::random_colored(seed, {.uncontrollable = seed % 2 ? 2u : 0u});
    const double nu = fixtures::pick_threshold(c, seed);
    const auto a = brute_robust(c, nu), b = brute_robust(c, nu);
    CHECK((a.verdict == Verdict::Sat) == (a.viable_count > 0));
    CHECK(a.viable_count <= a.space_size);
    CHECK(a.viable == b.viable);
    const auto f = brute_feasible(c, nu);
    CHECK((f.verdict == Verdict::Sat) == (f.viable_count > 0));
    CHECK(f.space_size == count_space(c.params(), c.tau(), 1000000));
    // A robust witness is in particular feasible.
    if (a.verdict == Verdict::Sat) CHECK(f.verdict == Verdict::Sat);
  }
}

TEST_CASE("engine and enumeration agree on feasibility") {
  for (std::uint64_t seed = 500; seed < 560; ++seed) {
    const ColoredMdp c = fixtures::random_colored(seed);
    const double nu = fixtures::pick_threshold(c, seed);
    INFO("seed " << seed);
    CHECK(fixtures::engine_feasible(c, nu).verdict == brute_feasible(c, nu).verdict);
  }
}

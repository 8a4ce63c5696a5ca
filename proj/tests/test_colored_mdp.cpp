#include <map>

#include "catch_amalgamated.hpp"
#include "support/fixtures.hpp"

using namespace colsynth;

namespace {

// One state whose two actions are guarded by x = 0 and x = 1 of x in [0, hi].
ColoredMdp one_switch(Value hi) {
  ParameterSpace s;
  s.add({"x", 0, hi});
  MdpBuilder b;
  b.add_state(0.0);
  b.add_choice("zero", {{1, 1.0}});
  b.add_choice("one", {{1, 1.0}});
  b.add_state(0.0);
  b.add_choice("stay", {{1, 1.0}});
  b.set_initial(0);
  return ColoredMdp(b.build(), s, Formula::boolean(true), {{{0, 0}}, {{0, 1}}, {}});
}

std::map<std::string, std::set<std::string>> edges(const ColoredMdp& c, const Mdp& m) {
  std::map<std::string, std::set<std::string>> out;
  for (StateIndex s : reachable(m, m.initial()))
    for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s); ++a)
      for (const auto& t : m.distribution(a)) out[c.state_name(s)].insert(c.state_name(t.target));
  return out;
}

}  // namespace

TEST_CASE("coloring validation") {
  CHECK(validate_coloring(fixtures::beetle(false).model).empty());
  CHECK(validate_coloring(fixtures::beetle(true).model).empty());
  CHECK(validate_coloring(one_switch(1)).empty());
  const auto partial_cover = validate_coloring(one_switch(3));
  CHECK_FALSE(partial_cover.empty());
  CHECK_THAT(partial_cover.front(), Catch::Matchers::ContainsSubstring("0 compatible actions"));
  // The syntactic fallback reports the same defect.
  const auto syntactic = validate_coloring(one_switch(3), 1);
  REQUIRE(syntactic.size() == 1);
  CHECK_THAT(syntactic.front(), Catch::Matchers::ContainsSubstring("cover 2 of 4"));
  CHECK_THROWS_AS(require_valid_coloring(one_switch(3)), ColoringError);
}

TEST_CASE("a constraint can make a partial cover valid") {
  const auto c = one_switch(3);
  const ColoredMdp restricted(c.mdp(), c.params(), parse_sexpr("(<= x 1)", c.params()), c.guards());
  CHECK(validate_coloring(restricted).empty());
}

TEST_CASE("guards must mention declared parameters and in-domain values") {
  const auto c = one_switch(1);
  CHECK_THROWS_AS(ColoredMdp(c.mdp(), c.params(), c.tau(), {{{0, 0}}, {{0, 2}}, {}}), FormulaError);
  CHECK_THROWS_AS(ColoredMdp(c.mdp(), c.params(), c.tau(), {{{0, 0}}, {{3, 1}}, {}}), FormulaError);
  CHECK_THROWS_AS(ColoredMdp(c.mdp(), c.params(), c.tau(), {{{0, 0}}}), ColoringError);
}

TEST_CASE("induction") {
  const auto single = fixtures::beetle(false);
  const auto& c = single.model;
  SECTION("empty assignment keeps everything") {
    const Mdp m = induce(c, {});
    CHECK(m.num_choices() == c.mdp().num_choices());
  }
  SECTION("partial assignment leaves green nondeterministic") {
    const Mdp m = induce(c, fixtures::named(c.params(), {{"d_y", 0}, {"d_r", 2}, {"d_b", 1}}));
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      INFO(c.state_name(s));
      CHECK(m.num_choices(s) == (c.state_name(s) == "s_0_2" ? 4u : 1u));
    }
  }
  SECTION("total assignment gives the single-start chain") {
    const Mdp m = induce(c, fixtures::named(c.params(), {{"d_r", 1}, {"d_g", 3}, {"d_b", 3}, {"d_y", 0}}));
    CHECK(m.is_chain());
    const std::map<std::string, std::set<std::string>> expected{
        {"s_0_0", {"s_1_0"}},
        {"s_1_0", {"s_1_1"}},
        {"s_1_1", {"s_0_1", "s_1_0", "s_1_2", "s_2_1"}},
        {"s_0_1", {"s_0_0"}},
        {"s_1_2", {"s_2_2"}},
        {"s_2_1", {"s_2_2"}},
        {"s_2_2", {"sink"}},
        {"sink", {"sink"}}};
    CHECK(edges(c, m) == expected);
  }
  SECTION("an assignment disabling every action of a state is rejected") {
    const auto sw = one_switch(3);
    CHECK_THROWS_AS(induce(sw, {{0, 2}}), ColoringError);
  }
}

TEST_CASE("dependence") {
  const auto single = fixtures::beetle(false);
  const auto& c = single.model;
  const auto eta = fixtures::named(c.params(), {{"d_y", 0}, {"d_r", 2}, {"d_b", 1}});
  const auto rep = dependent_params(c, eta, c.mdp().initial());
  CHECK(rep.names(c.params()) == std::vector<std::string>{"d_b", "d_y"});
  CHECK(restrict_conflict(c, eta) == fixtures::named(c.params(), {{"d_y", 0}, {"d_b", 1}}));

  const auto all = dependent_params(c, {}, c.mdp().initial());
  CHECK(all.dependent.size() == 4);
  CHECK(restrict_conflict(c, {}).empty());

  const auto fragile = fixtures::named(c.params(), {{"d_r", 1}, {"d_g", 3}, {"d_b", 3}, {"d_y", 0}});
  // Green is unreachable under this policy.
  CHECK(fixtures::names_of(restrict_conflict(c, fragile), c.params()) ==
        std::set<std::string>{"d_r", "d_b", "d_y"});

  const auto k = fixtures::named(c.params(), {{"d_y", 0}, {"d_b", 3}});
  CHECK(restrict_conflict(c, k) == k);

  ParameterSpace s;
  s.add({"x", 0, 1});
  MdpBuilder b;
  b.add_state(0.0);
  b.add_choice("stay", {{0, 1.0}});
  b.set_initial(0);
  const ColoredMdp plain(b.build(), s, Formula::boolean(true), {{}});
  CHECK(dependent_params(plain, {{0, 1}}, 0).dependent.empty());
}

TEST_CASE("dependence restriction never changes the reachable induced model") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const ColoredMdp c = fixtures::random_colored(seed);
    std::mt19937_64 rng(seed);
    for (int round = 0; round < 10; ++round) {
      PartialAssignment k;
      for (ParamIndex p = 0; p < c.params().size(); ++p)
        if (rng() % 2) k.set(p, c.params()[p].lo + static_cast<Value>(rng() % c.params()[p].domain_size()));
      const auto d = restrict_conflict(c, k);
      CHECK(d.subset_of(k));
      const Mdp m = c.mdp();
      INFO("seed " << seed << " k " << format_assignment(k, c.params()));
      CHECK(reachable(m, m.initial(), c.enabled(k)) == reachable(m, m.initial(), c.enabled(d)));
    }
  }
}

TEST_CASE("incremental induction matches fresh induction") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const ColoredMdp c = fixtures::random_colored(seed);
    IncrementalInducer inc(c);
    std::mt19937_64 rng(seed + 1000);
    PartialAssignment k;
    for (int step = 0; step < 20; ++step) {
      const ParamIndex p = rng() % c.params().size();
      if (rng() % 4 == 0)
        k.erase(p);
      else if (!k.contains(p))
        k.set(p, c.params()[p].lo + static_cast<Value>(rng() % c.params()[p].domain_size()));
      CHECK(inc.mask_for(k) == c.enabled(k));
    }
    CHECK(inc.reuses() > 0);
  }
}

TEST_CASE("random instances are valid colorings") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    INFO("seed " << seed);
    CHECK(validate_coloring(fixtures::random_colored(seed)).empty());
    CHECK(validate_coloring(fixtures::random_colored(seed, {.uncontrollable = 2})).empty());
  }
}

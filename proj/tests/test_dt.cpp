#include "catch_amalgamated.hpp"
#include "support/fixtures.hpp"

using namespace colsynth;

namespace {

DtNode leaf(Value a) {
  DtNode n;
  n.action = a;
  return n;
}

DtNode test(std::size_t f, Value t, std::size_t then_child, std::size_t else_child) {
  DtNode n;
  n.leaf = false;
  n.feature = f;
  n.threshold = t;
  n.then_child = then_child;
  n.else_child = else_child;
  return n;
}

// Root x >= 6 goes up; otherwise y >= 2 goes left, else down.
DecisionTree five_node_tree() { return {{test(0, 6, 1, 2), leaf(0), test(1, 2, 3, 4), leaf(1), leaf(2)}}; }

// Three observation parameters over actions 0..3 with two features in [0, 7].
ParameterSpace grid_observations() {
  ParameterSpace s;
  s.add({"o_a", 0, 3, ParamKind::Controllable, {7, 0}});
  s.add({"o_b", 0, 3, ParamKind::Controllable, {1, 3}});
  s.add({"o_c", 0, 3, ParamKind::Controllable, {0, 1}});
  return s;
}

// Same policy, two more nodes: a root whose test always holds.
DecisionTree pad(const DecisionTree& t, Value always) {
  DecisionTree out{{test(0, always, 2, 1), leaf(0)}};
  for (auto nd : t.nodes) {
    if (!nd.leaf) {
      nd.then_child += 2;
      nd.else_child += 2;
    }
    out.nodes.push_back(nd);
  }
  return out;
}

bool encodes(const DtEncoding& e, const PartialAssignment& k) {
  return eval_formula(e.structural, k, e.space) == Truth::True && eval_formula(e.semantic, k, e.space) == Truth::True;
}

void check_faithful(const ColoredMdp& c, const DtResult& r, std::size_t n) {
  CHECK(r.tree.nodes.size() == n);
  CHECK(r.tree.leaves() == (n + 1) / 2);
  for (ParamIndex o : observation_params(c)) CHECK(r.tree.evaluate(c.params()[o].features) == r.assignment.get(o));
}

}  // namespace

TEST_CASE("encoding shape") {
  const auto space = grid_observations();
  const std::vector<ParamIndex> obs{0, 1, 2};
  SECTION("one node is a constant policy") {
    const auto e = encode_dt(space, 1, obs);
    const auto sols = enumerate_space(e.space, fx::and_({e.structural, e.semantic}));
    REQUIRE(sols.size() == 4);
    for (const auto& theta : sols) {
      CHECK(theta[0] == theta[1]);
      CHECK(theta[1] == theta[2]);
    }
  }
  SECTION("leaf count") {
    const auto e = encode_dt(space, 5, obs);
    const auto k = encode_tree(e, five_node_tree());
    CHECK(encodes(e, k));
    PartialAssignment too_many = k;
    too_many.set(e.leaf[0], 1);
    CHECK(eval_formula(e.structural, too_many, e.space) == Truth::False);
  }
  SECTION("bad sizes and inputs") {
    CHECK_THROWS_AS(encode_dt(space, 2, obs), FormulaError);
    CHECK_THROWS_AS(encode_dt(space, 0, obs), FormulaError);
    CHECK_THROWS_AS(encode_dt(space, 3, {}), FormulaError);
    ParameterSpace mixed = space;
    mixed.add({"o_d", 0, 2, ParamKind::Controllable, {0, 0}});
    CHECK_THROWS_AS(encode_dt(mixed, 3, {0, 3}), FormulaError);
  }
}

TEST_CASE("decode, re-encode and render") {
  const auto space = grid_observations();
  const auto e = encode_dt(space, 5, {0, 1, 2});
  const auto k = encode_tree(e, five_node_tree());
  const auto t = decode_dt(e, k);
  CHECK(encode_tree(e, t) == k);
  CHECK(t.evaluate({7, 0}) == 0);
  CHECK(t.evaluate({1, 3}) == 1);
  CHECK(t.evaluate({0, 1}) == 2);
  CHECK(k.get(0) == std::optional<Value>(0));
  CHECK(k.get(1) == std::optional<Value>(1));
  CHECK(k.get(2) == std::optional<Value>(2));
  const auto text = render_dt(t, beetle::kArrows);
  CHECK(text == "f[0] >= 6 then ↑\n  else f[1] >= 2 then ←\n    else ↓\n");
  CHECK(render_dt(decode_dt(e, k), beetle::kArrows) == text);

  const auto e1 = encode_dt(space, 1, {0, 1, 2});
  const auto one = decode_dt(e1, encode_tree(e1, {{leaf(2)}}));
  CHECK(render_dt(one) == "action 2\n");

  PartialAssignment broken = k;
  broken.set(e.left[0], 0);
  CHECK_THROWS_AS(decode_dt(e, broken), FormulaError);
  broken = k;
  broken.erase(e.leaf[3]);
  CHECK_THROWS_AS(decode_dt(e, broken), FormulaError);
}

TEST_CASE("padding preserves the policy and the encoding") {
  const auto space = grid_observations();
  const auto t = five_node_tree();
  const auto padded = pad(t, 0);
  const auto e7 = encode_dt(space, 7, {0, 1, 2});
  CHECK(encodes(e7, encode_tree(e7, padded)));
  for (ParamIndex o = 0; o < 3; ++o) CHECK(padded.evaluate(space[o].features) == t.evaluate(space[o].features));
}

TEST_CASE("tree enumeration counts") {
  // One feature, thresholds {0, 1}, two actions.
  CHECK(all_trees(1, 1, 0, 1, 0, 1).size() == 2);
  CHECK(all_trees(3, 1, 0, 1, 0, 1).size() == 2 * 2 * 2);
  // Shapes with 5 nodes: two; each has 2 tests and 3 leaves.
  CHECK(all_trees(5, 1, 0, 1, 0, 1).size() == 2 * 4 * 8);
  CHECK(all_trees(3, 2, 0, 3, 0, 3).size() == 2 * 4 * 16);
}

TEST_CASE("beetle trees") {
  const auto multi = fixtures::beetle(true);
  const auto& c = multi.model;
  CHECK_FALSE(synth_dt(c, 1.0, 1, true));
  CHECK(brute_dt(c, 1.0, 1, true).verdict == Verdict::Unsat);

  const auto three = synth_dt(c, 1.0, 3, true);
  REQUIRE(three);
  CHECK(brute_dt(c, 1.0, 3, true).verdict == Verdict::Sat);
  check_faithful(c, *three, 3);
  const auto rep = brute_robust(c, 1.0, {}, three->assignment);
  CHECK(rep.verdict == Verdict::Sat);

  const auto five = synth_dt(c, 1.0, 5, true);
  REQUIRE(five);
  check_faithful(c, *five, 5);

  const auto single = fixtures::beetle(false);
  const auto feasible = synth_dt(single.model, 1.0, 1, false);
  CHECK(feasible.has_value() == (brute_dt(single.model, 1.0, 1, false).verdict == Verdict::Sat));
}

TEST_CASE("size sweep") {
  const auto multi = fixtures::beetle(true);
  const auto rep = min_dt_sweep(multi.model, 1.0, {1, 3}, true);
  REQUIRE(rep.entries.size() == 2);
  CHECK(rep.entries[0].verdict == Verdict::Unsat);
  CHECK(rep.entries[1].verdict == Verdict::Sat);
  CHECK(rep.smallest == std::optional<std::size_t>(1));

  const auto none = min_dt_sweep(multi.model, 2.0, {1, 3}, true);
  CHECK_FALSE(none.smallest);
  for (const auto& entry : none.entries) CHECK_FALSE(entry.result);

  CHECK_THROWS_AS(min_dt_sweep(multi.model, 1.0, {3, 1}, true), FormulaError);
  CHECK_THROWS_AS(min_dt_sweep(multi.model, 1.0, {2}, true), FormulaError);
}

TEST_CASE("tree verdicts agree with tree enumeration") {
  std::size_t sat = 0, unsat = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    fixtures::RandomSpec spec;
    spec.max_states = 8;
    spec.max_params = 3;
    spec.shared_domain = 2 + static_cast<Value>(seed % 2);
    spec.feature_dim = 1 + seed % 2;
    spec.uncontrollable = seed % 3 == 0 ? 1 : 0;
    const ColoredMdp c = fixtures::random_colored(seed, spec);
    if (observation_params(c).empty()) continue;
    const double nu = fixtures::pick_threshold(c, seed);
    const bool robust = !c.uncontrollable().empty();
    bool prev = false;
    for (std::size_t n : {1u, 3u}) {
      const auto mine = synth_dt(c, nu, n, robust);
      const auto ref = brute_dt(c, nu, n, robust);
      INFO("seed " << seed << " n " << n << " nu " << nu);
      CHECK(mine.has_value() == (ref.verdict == Verdict::Sat));
      if (prev) CHECK(mine.has_value());
      prev = mine.has_value();
      if (mine) {
        ++sat;
        check_faithful(c, *mine, n);
        const auto check = robust ? brute_robust(c, nu, {}, mine->assignment)
                                  : brute_feasible(c, nu, {}, mine->assignment);
        CHECK(check.verdict == Verdict::Sat);
      } else {
        ++unsat;
      }
    }
  }
  CHECK(sat > 5);
  CHECK(unsat > 5);
}

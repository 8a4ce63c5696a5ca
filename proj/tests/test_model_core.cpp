#include <algorithm>
#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "support/fixtures.hpp"

using namespace colsynth;
using Catch::Matchers::WithinAbs;

namespace {

Mdp line_chain() {
  MdpBuilder b;
  for (StateIndex s = 0; s < 3; ++s) {
    b.add_state(0.0);
    b.add_choice("a", {{std::min<StateIndex>(s + 1, 2), 1.0}});
  }
  b.set_initial(0);
  return b.build();
}

// Random MDP with 1-3 actions per state and an absorbing sink.
Mdp random_mdp(std::uint64_t seed, bool chain) {
  std::mt19937_64 rng(seed);
  auto uni = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  const std::size_t n = uni(2, 12);
  MdpBuilder b;
  for (StateIndex s = 0; s < n; ++s) {
    b.add_state(s + 1 == n || uni(0, 1) ? 0.0 : static_cast<double>(uni(1, 3)));
    const std::size_t k = s + 1 == n || chain ? 1 : uni(1, 3);
    for (std::size_t a = 0; a < k; ++a) {
      if (s + 1 == n) {
        b.add_choice("stay", {{s, 1.0}});
        continue;
      }
      std::vector<StateIndex> ts{n - 1};
      for (std::size_t i = uni(0, 2); i > 0; --i) {
        const StateIndex t = uni(0, n - 1);
        if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
      }
      Distribution d;
      double total = 0.0;
      std::vector<double> w;
      for (std::size_t i = 0; i < ts.size(); ++i) total += w.emplace_back(static_cast<double>(uni(1, 4)));
      for (std::size_t i = 0; i < ts.size(); ++i) d.push_back({ts[i], w[i] / total});
      b.add_choice("a" + std::to_string(a), d);
    }
  }
  b.set_initial(0);
  return b.build();
}

bool close_or_both_infinite(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
  return std::abs(a - b) <= tol;
}

}  // namespace

TEST_CASE("builder rejects malformed models") {
  SECTION("distribution not summing to one") {
    MdpBuilder b;
    b.add_state(0.0);
    b.add_choice("a", {{0, 0.5}});
    CHECK_THROWS_AS(b.build(), ModelError);
  }
  SECTION("successor out of range") {
    MdpBuilder b;
    b.add_state(0.0);
    b.add_choice("a", {{3, 1.0}});
    CHECK_THROWS_AS(b.build(), ModelError);
  }
  SECTION("state without actions") {
    MdpBuilder b;
    b.add_state(0.0);
    b.add_state(0.0);
    b.add_choice("a", {{0, 1.0}});
    CHECK_THROWS_AS(b.build(), ModelError);
  }
  SECTION("negative reward") {
    MdpBuilder b;
    CHECK_THROWS_AS(b.add_state(-1.0), ModelError);
  }
  SECTION("duplicate successor") {
    MdpBuilder b;
    b.add_state(0.0);
    b.add_choice("a", {{0, 0.5}, {0, 0.5}});
    CHECK_THROWS_AS(b.build(), ModelError);
  }
  SECTION("round-off within tolerance is accepted") {
    MdpBuilder b;
    b.add_state(0.0);
    b.add_choice("a", {{0, 1.0 / 3}, {1, 1.0 / 3}, {2, 1.0 / 3}});
    b.add_state(0.0);
    b.add_choice("a", {{1, 1.0}});
    b.add_state(0.0);
    b.add_choice("a", {{2, 1.0}});
    CHECK_NOTHROW(b.build());
  }
}

TEST_CASE("reachability") {
  SECTION("single absorbing state") {
    CHECK(reachable(fixtures::reward_self_loop(), 0) == std::vector<StateIndex>{0});
  }
  SECTION("linear chain from the middle") { CHECK(reachable(line_chain(), 1) == std::vector<StateIndex>{1, 2}); }
  SECTION("beetle induced by a partial assignment") {
    const auto p = fixtures::beetle(false);
    const auto k = fixtures::named(p.model.params(), {{"d_y", 0}, {"d_r", 2}, {"d_b", 1}});
    const auto mask = p.model.enabled(k);
    std::vector<std::string> names;
    for (StateIndex s : reachable(p.model.mdp(), p.model.mdp().initial(), mask))
      names.push_back(p.model.state_name(s));
    CHECK(names == std::vector<std::string>{"s_0_0", "s_1_0"});
  }
}

TEST_CASE("divergence classification") {
  SECTION("rewarding self-loop") {
    const auto inf = classify_infinite(fixtures::reward_self_loop(), Direction::Max);
    CHECK(inf == std::vector<char>{1});
  }
  SECTION("zero rewards never diverge") {
    const Mdp m = line_chain();
    for (Direction d : {Direction::Max, Direction::Min}) {
      const auto inf = classify_infinite(m, d);
      CHECK(std::count(inf.begin(), inf.end(), 1) == 0);
    }
  }
  SECTION("beetle robust policy chain is finite from every start") {
    const auto p = fixtures::beetle(true);
    for (auto [sx, sy] : {std::pair{0, 0}, {2, 0}, {0, 2}}) {
      const auto theta = fixtures::named(p.model.params(), {{"d_r", 3}, {"d_g", 0}, {"d_b", 3}, {"d_y", 0},
                                                            {"s_x", sx}, {"s_y", sy}});
      const Mdp mc = induce(p.model, theta);
      for (Direction d : {Direction::Max, Direction::Min}) {
        const auto inf = classify_infinite(mc, d);
        CHECK(std::count(inf.begin(), inf.end(), 1) == 0);
      }
      // Bounded simulation never collects more than the one-shot reward.
      CHECK(fixtures::simulate(mc, 7, 200, 500) <= 1.0);
    }
  }
  SECTION("min direction: a policy can avoid the rewarding loop") {
    MdpBuilder b;
    b.add_state(1.0);
    b.add_choice("loop", {{0, 1.0}});
    b.add_choice("exit", {{1, 1.0}});
    b.add_state(0.0);
    b.add_choice("stay", {{1, 1.0}});
    b.set_initial(0);
    const Mdp m = b.build();
    CHECK(classify_infinite(m, Direction::Max)[0] == 1);
    CHECK(classify_infinite(m, Direction::Min)[0] == 0);
    CHECK(value_opt(m, Direction::Min).values[0] == 1.0);
    CHECK(std::isinf(value_opt(m, Direction::Max).values[0]));
  }
}

TEST_CASE("chain values") {
  CHECK_THAT(initial_value(fixtures::geometric_chain(0.5), Direction::Chain), WithinAbs(2.0, 1e-4));
  CHECK_THAT(value_opt(fixtures::geometric_chain(0.5), Direction::Max).values[0], WithinAbs(2.0, 1e-4));
  CHECK(std::isinf(value_mc(fixtures::reward_self_loop()).values[0]));

  MdpBuilder b;
  b.add_state(3.0);
  b.add_choice("a", {{1, 1.0}});
  b.add_state(0.0);
  b.add_choice("a", {{1, 1.0}});
  b.set_initial(0);
  CHECK(value_mc(b.build()).values == std::vector<double>{3.0, 0.0});

  const auto zero = value_mc(line_chain());
  CHECK(zero.values == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("value_mc rejects nondeterminism") {
  MdpBuilder b;
  b.add_state(0.0);
  b.add_choice("a", {{0, 1.0}});
  b.add_choice("b", {{0, 1.0}});
  b.set_initial(0);
  CHECK_THROWS_AS(value_mc(b.build()), ModelError);
}

TEST_CASE("beetle values") {
  const auto single = fixtures::beetle(false);
  const auto fragile = fixtures::named(single.model.params(), {{"d_r", 1}, {"d_g", 3}, {"d_b", 3}, {"d_y", 0}});
  CHECK_THAT(initial_value(induce(single.model, fragile), Direction::Chain), WithinAbs(1.0, 1e-4));

  const auto multi = fixtures::beetle(true);
  const auto robust_policy = fixtures::named(multi.model.params(),
                                     {{"d_r", 3}, {"d_g", 0}, {"d_b", 3}, {"d_y", 0}, {"s_x", 0}, {"s_y", 0}});
  CHECK_THAT(initial_value(induce(multi.model, robust_policy), Direction::Chain), WithinAbs(1.0, 1e-4));

  const auto eta = fixtures::named(single.model.params(), {{"d_y", 0}, {"d_r", 2}, {"d_b", 1}});
  CHECK(initial_value(induce(single.model, eta), Direction::Max) == 0.0);
}

TEST_CASE("chain values agree with an independent Jacobi iteration") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Mdp mc = random_mdp(seed, true);
    const auto ref = fixtures::reference_chain_values(mc);
    const auto got = value_mc(mc).values;
    for (StateIndex s = 0; s < mc.num_states(); ++s) {
      INFO("seed " << seed << " state " << s);
      CHECK(close_or_both_infinite(got[s], ref[s], 1e-6));
    }
  }
}

TEST_CASE("value properties on random MDPs") {
  const double p = kDefaultPrecision;
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    INFO("seed " << seed);
    const Mdp m = random_mdp(seed, false);
    const auto vmax = value_opt(m, Direction::Max).values;
    const auto vmin = value_opt(m, Direction::Min).values;
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      CHECK((vmin[s] >= 0.0 && vmax[s] >= 0.0));
      if (std::isfinite(vmax[s])) CHECK(vmin[s] <= vmax[s] + 2 * p);
    }
    // Removing choices never raises the max nor lowers the min.
    std::vector<char> mask(m.num_choices(), 1);
    for (StateIndex s = 0; s < m.num_states(); ++s)
      if (m.num_choices(s) > 1) mask[m.first_choice(s)] = 0;
    const Mdp sub = masked_model(m, mask);
    const auto smax = value_opt(sub, Direction::Max).values;
    const auto smin = value_opt(sub, Direction::Min).values;
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      if (std::isfinite(vmax[s])) CHECK(smax[s] <= vmax[s] + 2 * p);
      if (std::isfinite(smin[s])) CHECK(smin[s] >= vmin[s] - 2 * p);
    }
  }
  for (std::uint64_t seed = 200; seed < 240; ++seed) {
    INFO("seed " << seed);
    const Mdp mc = random_mdp(seed, true);
    const auto a = value_opt(mc, Direction::Max).values;
    const auto b = value_opt(mc, Direction::Min).values;
    const auto c = value_mc(mc).values;
    for (StateIndex s = 0; s < mc.num_states(); ++s) {
      CHECK(close_or_both_infinite(a[s], b[s], 2 * p));
      // The sweep-change stopping rule bounds the error only relative to the
      // value's scale; value_mc is solved directly.
      CHECK(close_or_both_infinite(a[s], c[s], 2 * p * (1.0 + std::abs(c[s]))));
    }
  }
}

TEST_CASE("strongly connected components come out in reverse topological order") {
  const Mdp m = random_mdp(5, false);
  const auto comps = strongly_connected_components(m);
  std::vector<std::size_t> idx(m.num_states());
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (StateIndex s : comps[i]) idx[s] = i;
  for (ChoiceIndex c = 0; c < m.num_choices(); ++c)
    for (const auto& t : m.distribution(c)) CHECK(idx[t.target] <= idx[m.state_of(c)]);
}

TEST_CASE("maximal end components") {
  MdpBuilder b;
  b.add_state(0.0);  // 0 <-> 1 loop, or leave to 2
  b.add_choice("loop", {{1, 1.0}});
  b.add_choice("leave", {{0, 0.5}, {2, 0.5}});
  b.add_state(0.0);
  b.add_choice("back", {{0, 1.0}});
  b.add_state(0.0);
  b.add_choice("stay", {{2, 1.0}});
  b.set_initial(0);
  auto mecs = maximal_end_components(b.build());
  for (auto& m : mecs) std::sort(m.begin(), m.end());
  std::sort(mecs.begin(), mecs.end());
  CHECK(mecs == std::vector<std::vector<StateIndex>>{{0, 1}, {2}});
}

TEST_CASE("budget expiry interrupts value iteration") {
  CHECK_THROWS_AS(value_opt(fixtures::geometric_chain(0.999), Direction::Max, 1e-12, Budget::seconds(0)),
                  TimeoutError);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "colsynth/colsynth.hpp"

namespace fixtures {

using namespace colsynth;

inline Problem beetle(bool multi) { return build_problem(gen_beetle(multi)); }

inline PartialAssignment named(const ParameterSpace& space, std::initializer_list<std::pair<const char*, Value>> xs) {
  PartialAssignment k;
  for (const auto& [n, v] : xs) k.set(space.at(n), v);
  return k;
}

inline std::set<std::string> names_of(const PartialAssignment& k, const ParameterSpace& space) {
  std::set<std::string> out;
  for (const auto& l : k) out.insert(space[l.param].name);
  return out;
}

/// A: reward 1, stays w.p. p, else moves to an absorbing zero-reward sink.
inline Mdp geometric_chain(double stay) {
  MdpBuilder b;
  b.add_state(1.0);
  b.add_choice("a", {{0, stay}, {1, 1.0 - stay}});
  b.add_state(0.0);
  b.add_choice("a", {{1, 1.0}});
  b.set_initial(0);
  return b.build();
}

inline Mdp reward_self_loop() {
  MdpBuilder b;
  b.add_state(1.0);
  b.add_choice("a", {{0, 1.0}});
  b.set_initial(0);
  return b.build();
}

/**
 * Reference chain value by plain Jacobi iteration, independent of the
 * library's component decomposition and linear solve. Values growing past
 * `blowup` are reported as infinite.
 */
inline std::vector<double> reference_chain_values(const Mdp& mc, double blowup = 1e7) {
  const std::size_t n = mc.num_states();
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (int it = 0; it < 200000; ++it) {
    double change = 0.0;
    for (StateIndex s = 0; s < n; ++s) {
      double acc = mc.reward(s);
      for (const auto& t : mc.distribution(mc.first_choice(s))) acc += t.probability * v[t.target];
      next[s] = acc;
      change = std::max(change, std::abs(acc - v[s]));
    }
    std::swap(v, next);
    if (change < 1e-13) break;
  }
  for (auto& x : v)
    if (x > blowup) x = std::numeric_limits<double>::infinity();
  return v;
}

/// Monte-Carlo estimate of the expected total reward from the initial state.
inline double simulate(const Mdp& mc, std::uint64_t seed, int runs, int max_steps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (int r = 0; r < runs; ++r) {
    StateIndex s = mc.initial();
    for (int step = 0; step < max_steps; ++step) {
      total += mc.reward(s);
      const auto d = mc.distribution(mc.first_choice(s));
      double x = u(rng);
      StateIndex t = d.back().target;
      for (const auto& tr : d) {
        if (x < tr.probability) {
          t = tr.target;
          break;
        }
        x -= tr.probability;
      }
      s = t;
    }
  }
  return total / runs;
}

struct RandomSpec {
  std::size_t max_states = 15;
  std::size_t max_params = 4;
  Value max_domain = 4;
  std::size_t max_clauses = 3;
  std::size_t uncontrollable = 0;  // at most this many, at least one when positive
  Value shared_domain = 0;         // when positive every parameter ranges over [0, shared_domain)
  std::size_t feature_dim = 0;     // when positive controllable parameters get features in [0, 3]
};

inline Formula random_atom(std::mt19937_64& rng, const ParameterSpace& space) {
  using namespace fx;
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const ParamIndex p = pick(space.size());
  const ParamIndex q = pick(space.size());
  const Value v = std::uniform_int_distribution<Value>(space[p].lo, space[p].hi)(rng);
  switch (pick(5)) {
    case 0: return eq(p, v);
    case 1: return ne(var(p), lit(v));
    case 2: return lt(var(p), var(q));
    case 3: return le(add({var(p), var(q)}), lit(std::uniform_int_distribution<Value>(0, 4)(rng)));
    default: return ne(var(p), var(q));
  }
}

/// Random colored MDP whose guards partition each colored state's domain.
inline ColoredMdp random_colored(std::uint64_t seed, const RandomSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  auto uni = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  const std::size_t min_params = spec.uncontrollable > 0 ? 2 : 1;
  const std::size_t np = uni(min_params, spec.max_params);
  const std::size_t ny = spec.uncontrollable > 0 ? uni(1, std::min(spec.uncontrollable, np - 1)) : 0;
  ParameterSpace space;
  for (std::size_t i = 0; i < np; ++i) {
    Value hi = static_cast<Value>(uni(2, static_cast<std::size_t>(spec.max_domain))) - 1;
    if (spec.shared_domain > 0) hi = spec.shared_domain - 1;
    space.add(Parameter{"p" + std::to_string(i), 0, hi,
                        i + ny >= np ? ParamKind::Uncontrollable : ParamKind::Controllable, {}});
  }
  const std::size_t n = uni(3, spec.max_states);
  const StateIndex sink = n - 1;
  MdpBuilder b;
  std::vector<PartialAssignment> guards;
  auto successors = [&]() {
    const std::size_t k = uni(1, 3);
    std::vector<StateIndex> targets;
    while (targets.size() < k) {
      StateIndex t = uni(0, n - 1);
      if (uni(0, 2) == 0) t = sink;
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      w.push_back(static_cast<double>(uni(1, 4)));
      total += w.back();
    }
    Distribution d;
    for (std::size_t i = 0; i < targets.size(); ++i) d.push_back({targets[i], w[i] / total});
    return d;
  };
  for (StateIndex s = 0; s < n; ++s) {
    if (s == sink) {
      b.add_state(0.0);
      b.add_choice("stay", {{sink, 1.0}});
      guards.push_back({});
      continue;
    }
    b.add_state(uni(0, 1) == 0 ? 0.0 : static_cast<double>(uni(1, 3)));
    if (uni(0, 9) < 3) {
      b.add_choice("go", successors());
      guards.push_back({});
      continue;
    }
    std::vector<ParamIndex> ps{uni(0, np - 1)};
    if (np > 1 && uni(0, 1) == 0) {
      ParamIndex q = uni(0, np - 1);
      if (q != ps[0] && space[ps[0]].domain_size() * space[q].domain_size() <= 16) ps.push_back(q);
    }
    std::sort(ps.begin(), ps.end());
    auto rec = [&](auto&& self, std::size_t i, PartialAssignment g) -> void {
      if (i == ps.size()) {
        b.add_choice("a" + std::to_string(guards.size()), successors());
        guards.push_back(g);
        return;
      }
      for (Value v = space[ps[i]].lo; v <= space[ps[i]].hi; ++v) {
        PartialAssignment h = g;
        h.set(ps[i], v);
        self(self, i + 1, h);
      }
    };
    rec(rec, 0, {});
  }
  b.set_initial(0);
  std::vector<Formula> clauses;
  const std::size_t nc = uni(0, spec.max_clauses);
  for (std::size_t i = 0; i < nc; ++i) {
    std::vector<Formula> atoms{random_atom(rng, space)};
    if (uni(0, 1) == 0) atoms.push_back(random_atom(rng, space));
    clauses.push_back(fx::or_(atoms));
  }
  Formula tau = clauses.empty() ? Formula::boolean(true) : fx::and_(clauses);
  if (spec.feature_dim > 0) {
    ParameterSpace with_features;
    for (ParamIndex p = 0; p < space.size(); ++p) {
      Parameter q = space[p];
      if (q.kind == ParamKind::Controllable)
        for (std::size_t f = 0; f < spec.feature_dim; ++f) q.features.push_back(static_cast<Value>(uni(0, 3)));
      with_features.add(q);
    }
    space = std::move(with_features);
  }
  return ColoredMdp(b.build(), std::move(space), std::move(tau), std::move(guards));
}

/// Total-assignment values of every admissible assignment, via the library.
inline std::vector<double> all_values(const ColoredMdp& c) {
  std::vector<double> out;
  for_each_assignment(c.params(), c.tau(), [&](const Assignment& theta) {
    out.push_back(initial_value(induce(c, theta.as_partial()), Direction::Chain));
    return true;
  });
  return out;
}

/**
 * A threshold strictly between two distinct attained values (gap > 1e-3),
 * or just above the largest one, so no verdict hinges on round-off.
 */
inline double pick_threshold(const ColoredMdp& c, std::uint64_t seed) {
  auto vals = all_values(c);
  std::vector<double> finite;
  for (double v : vals)
    if (std::isfinite(v)) finite.push_back(v);
  std::sort(finite.begin(), finite.end());
  finite.erase(std::unique(finite.begin(), finite.end(), [](double a, double b) { return b - a < 1e-3; }),
               finite.end());
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  if (finite.empty()) return 1.0;
  const std::size_t i = std::uniform_int_distribution<std::size_t>(0, finite.size())(rng);
  if (i == finite.size()) return finite.back() + 0.5;
  if (i == 0) return finite.front() / 2.0;
  return (finite[i - 1] + finite[i]) / 2.0;
}

/// Engine verdict for the existential problem.
inline SolveOutcome engine_feasible(const ColoredMdp& c, double nu, TheoryOptions to = {}, SolverConfig sc = {}) {
  PmcTheory theory(c, nu, to);
  TheoryAdapter hook(theory, Polarity::Positive);
  return FdSolver(c.params(), c.tau(), sc).solve(&hook);
}

}  // namespace fixtures

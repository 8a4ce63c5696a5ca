#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <limits>
#include <string_view>
#include <vector>

#include "colsynth/error.hpp"
#include "colsynth/graph.hpp"
#include "colsynth/mdp.hpp"

namespace colsynth {

enum class Direction { Max, Min, Chain };

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Max: return "max";
    case Direction::Min: return "min";
    case Direction::Chain: return "mc";
  }
  return "?";
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultPrecision = 1e-4;

/// Per-state expected total reward; divergent states hold +infinity.
struct ValueResult {
  std::vector<double> values;
  Direction direction = Direction::Max;
  double precision = kDefaultPrecision;

  bool is_infinite(StateIndex s) const { return std::isinf(values[s]); }
};

/**
 * States whose optimal expected total reward diverges.
 *
 * Max: the state can reach an end component that contains a positive-reward
 * state. Min: no policy reaches, with probability one, an end component made
 * of zero-reward states only.
 */
inline std::vector<char> classify_infinite(const Mdp& mdp, Direction dir) {
  const std::size_t n = mdp.num_states();
  if (dir != Direction::Min) {
    std::vector<char> bad(n, 0);
    for (const auto& mec : maximal_end_components(mdp)) {
      bool positive = false;
      for (StateIndex s : mec) positive = positive || mdp.reward(s) > 0.0;
      if (positive)
        for (StateIndex s : mec) bad[s] = 1;
    }
    return can_reach(mdp, bad);
  }
  std::vector<char> zero(n, 0);
  for (StateIndex s = 0; s < n; ++s) zero[s] = mdp.reward(s) == 0.0;
  std::vector<char> safe(n, 0);
  for (const auto& mec : maximal_end_components(mdp, zero))
    for (StateIndex s : mec) safe[s] = 1;
  auto finite = almost_sure_reach_max(mdp, safe);
  std::vector<char> inf(n, 0);
  for (StateIndex s = 0; s < n; ++s) inf[s] = !finite[s];
  return inf;
}

namespace detail {

inline double bellman(const Mdp& mdp, StateIndex s, bool maximize, const std::vector<double>& v) {
  double best = maximize ? -kInfinity : kInfinity;
  for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
    double acc = 0.0;
    for (const auto& t : mdp.distribution(c)) acc += t.probability * v[t.target];
    best = maximize ? std::max(best, acc) : std::min(best, acc);
  }
  return mdp.reward(s) + best;
}

}  // namespace detail

/**
 * Optimal expected total reward by Gauss-Seidel value iteration from zero.
 *
 * Divergent states are fixed to +infinity up front. Remaining states are
 * processed one strongly connected component at a time in reverse
 * topological order; inside a component, sweeps run in ascending state order
 * until the sup-norm change of a sweep drops below `precision`.
 */
inline ValueResult value_opt(const Mdp& mdp, Direction dir, double precision = kDefaultPrecision,
                             const Budget& budget = {}) {
  if (!(precision > 0.0)) throw std::invalid_argument("precision must be positive");
  const bool maximize = dir != Direction::Min;
  const auto inf = classify_infinite(mdp, dir);
  ValueResult r{std::vector<double>(mdp.num_states(), 0.0), dir, precision};
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (inf[s]) r.values[s] = kInfinity;

  for (const auto& comp : strongly_connected_components(mdp)) {
    bool self_loop = false;
    if (comp.size() == 1) {
      const StateIndex s = comp.front();
      for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s) && !self_loop; ++c)
        for (const auto& t : mdp.distribution(c)) self_loop = self_loop || t.target == s;
    }
    if (comp.size() == 1 && !self_loop) {
      if (!inf[comp.front()]) r.values[comp.front()] = detail::bellman(mdp, comp.front(), maximize, r.values);
      continue;
    }
    for (;;) {
      budget.check();
      double change = 0.0;
      for (StateIndex s : comp) {
        if (inf[s]) continue;
        const double next = detail::bellman(mdp, s, maximize, r.values);
        change = std::max(change, std::abs(next - r.values[s]));
        r.values[s] = next;
      }
      if (change < precision) break;
    }
  }
  return r;
}

namespace detail {

/// Solves (I - A) x = b in place by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t piv = i;
    for (std::size_t r = i + 1; r < n; ++r)
      if (std::abs(a[r][i]) > std::abs(a[piv][i])) piv = r;
    std::swap(a[i], a[piv]);
    std::swap(b[i], b[piv]);
    for (std::size_t r = i + 1; r < n; ++r) {
      const double f = a[r][i] / a[i][i];
      if (f == 0.0) continue;
      for (std::size_t c = i; c < n; ++c) a[r][c] -= f * a[i][c];
      b[r] -= f * b[i];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

inline constexpr std::size_t kDirectSolveLimit = 1500;

}  // namespace detail

/**
 * Value of a Markov chain; rejects models with a nondeterministic state.
 *
 * Components are solved directly, one linear system per strongly connected
 * component in reverse topological order. A closed finite component has
 * value zero. Components larger than a fixed limit fall back to value
 * iteration at `precision`.
 */
inline ValueResult value_mc(const Mdp& mc, double precision = kDefaultPrecision,
                            const Budget& budget = {}) {
  for (StateIndex s = 0; s < mc.num_states(); ++s)
    if (mc.num_choices(s) != 1)
      throw ModelError("value_mc: state " + std::to_string(s) + " has " +
                       std::to_string(mc.num_choices(s)) + " actions");
  if (!(precision > 0.0)) throw std::invalid_argument("precision must be positive");
  const auto inf = classify_infinite(mc, Direction::Max);
  ValueResult r{std::vector<double>(mc.num_states(), 0.0), Direction::Chain, precision};
  for (StateIndex s = 0; s < mc.num_states(); ++s)
    if (inf[s]) r.values[s] = kInfinity;
  std::vector<std::size_t> pos(mc.num_states(), 0), comp_of(mc.num_states(), 0);
  std::size_t id = 0;
  for (const auto& comp : strongly_connected_components(mc)) {
    ++id;
    budget.check();
    if (inf[comp.front()]) continue;
    const std::size_t n = comp.size();
    if (n > detail::kDirectSolveLimit) {
      for (;;) {
        budget.check();
        double change = 0.0;
        for (StateIndex s : comp) {
          const double next = detail::bellman(mc, s, true, r.values);
          change = std::max(change, std::abs(next - r.values[s]));
          r.values[s] = next;
        }
        if (change < precision) break;
      }
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pos[comp[i]] = i;
      comp_of[comp[i]] = id;
    }
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    bool closed = true;
    for (std::size_t i = 0; i < n; ++i) {
      const StateIndex s = comp[i];
      a[i][i] = 1.0;
      b[i] = mc.reward(s);
      for (const auto& t : mc.distribution(mc.first_choice(s))) {
        if (comp_of[t.target] == id) {
          a[i][pos[t.target]] -= t.probability;
        } else {
          closed = false;
          b[i] += t.probability * r.values[t.target];
        }
      }
    }
    if (closed) continue;  // finite and closed: every reward is zero
    const auto x = detail::solve_dense(std::move(a), std::move(b));
    for (std::size_t i = 0; i < n; ++i) r.values[comp[i]] = std::max(0.0, x[i]);
  }
  return r;
}

/// Whether a value meets the threshold, up to floating-point round-off.
inline bool meets_threshold(double value, double threshold) {
  return value >= threshold - 1e-9 * std::max(1.0, std::abs(threshold));
}

/**
 * Value at the initial state, computed on the reachable sub-model. Every
 * caller that compares against a threshold goes through here so that equal
 * reachable structures always produce bit-identical numbers.
 */
inline double initial_value(const Mdp& mdp, Direction dir, double precision = kDefaultPrecision,
                            const Budget& budget = {}) {
  const Mdp sub = reachable_submodel(mdp);
  if (dir == Direction::Chain) return value_mc(sub, precision, budget).values[sub.initial()];
  return value_opt(sub, dir, precision, budget).values[sub.initial()];
}

}  // namespace colsynth

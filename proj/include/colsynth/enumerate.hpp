#pragma once

#include <cstdint>
#include <vector>

#include "colsynth/formula.hpp"
#include "colsynth/parameters.hpp"

namespace colsynth {

/**
 * Depth-first enumeration of the values of `vars` (in the given order,
 * values ascending) on top of the fixed literals `fixed`. Branches on which
 * `f` is already definitely false are cut. For every complete assignment of
 * `vars` the callback receives the combined partial assignment and the
 * three-valued truth of `f` on it; it returns false to stop.
 *
 * The truth passed to the callback is definite whenever `vars` and `fixed`
 * together cover every parameter of `f`.
 */
template <class Fn>
void for_each_extension(const ParameterSpace& space, const Formula& f,
                        const std::vector<ParamIndex>& vars, const PartialAssignment& fixed,
                        Fn&& fn) {
  const std::size_t n = space.size();
  std::vector<Value> val(n, 0);
  std::vector<char> set(n, 0);
  for (const auto& l : fixed) {
    val[l.param] = l.value;
    set[l.param] = 1;
  }
  auto lookup = [&](ParamIndex p) -> Interval {
    if (p >= n) throw FormulaError("reference to undeclared parameter #" + std::to_string(p));
    if (set[p]) return {val[p], val[p]};
    return {space[p].lo, space[p].hi};
  };
  bool stop = false;
  auto rec = [&](auto&& self, std::size_t depth) -> void {
    const Truth t = evaluate(f, lookup);
    if (t == Truth::False) return;
    if (depth == vars.size()) {
      PartialAssignment k;
      for (ParamIndex p = 0; p < n; ++p)
        if (set[p]) k.set(p, val[p]);
      if (!fn(k, t)) stop = true;
      return;
    }
    const ParamIndex p = vars[depth];
    set[p] = 1;
    for (Value v = space[p].lo; v <= space[p].hi && !stop; ++v) {
      val[p] = v;
      self(self, depth + 1);
    }
    set[p] = 0;
  };
  rec(rec, 0);
}

inline std::vector<ParamIndex> all_params(const ParameterSpace& space) {
  std::vector<ParamIndex> v(space.size());
  for (ParamIndex i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

/// Visits every total assignment satisfying `f` in lexicographic order
/// (declaration order, values ascending). `fn` returns false to stop.
template <class Fn>
void for_each_assignment(const ParameterSpace& space, const Formula& f, Fn&& fn) {
  for_each_extension(space, f, all_params(space), {}, [&](const PartialAssignment& k, Truth) {
    return fn(Assignment::from_partial(k, space));
  });
}

/// All satisfying assignments, in enumeration order.
inline std::vector<Assignment> enumerate_space(const ParameterSpace& space, const Formula& f) {
  std::vector<Assignment> out;
  for_each_assignment(space, f, [&](const Assignment& a) {
    out.push_back(a);
    return true;
  });
  return out;
}

/// Number of satisfying assignments, stopping early once `cap` is exceeded
/// (the result is then cap + 1).
inline std::uint64_t count_space(const ParameterSpace& space, const Formula& f,
                                 std::uint64_t cap = UINT64_MAX - 1) {
  std::uint64_t count = 0;
  for_each_extension(space, f, all_params(space), {}, [&](const PartialAssignment&, Truth) {
    return ++count <= cap;
  });
  return count;
}

}  // namespace colsynth

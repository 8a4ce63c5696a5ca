#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <memory>
#include <set>
#include <vector>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/enumerate.hpp"
#include "colsynth/error.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/theory.hpp"

namespace colsynth {

// Exhaustive reference semantics. Nothing here prunes beyond the constraint
// itself; every admissible assignment is model checked on its own chain.

struct OracleConfig {
  double precision = kDefaultPrecision;
  std::uint64_t cap = 1000000;
  std::size_t keep_viable = 1000;
  Budget budget;
};

struct OracleReport {
  Verdict verdict = Verdict::Unsat;
  std::vector<PartialAssignment> viable;  // first keep_viable, in enumeration order
  std::uint64_t space_size = 0;           // admissible (candidate) assignments
  std::uint64_t viable_count = 0;
};

namespace detail {

inline void check_cap(const ColoredMdp& c, const PartialAssignment& fixed, const OracleConfig& cfg) {
  std::vector<ParamIndex> vars;
  for (ParamIndex p = 0; p < c.params().size(); ++p)
    if (!fixed.contains(p)) vars.push_back(p);
  std::uint64_t n = 0;
  for_each_extension(c.params(), c.tau(), vars, fixed, [&](const PartialAssignment&, Truth t) {
    n += t == Truth::True;
    return n <= cfg.cap;
  });
  if (n > cfg.cap)
    throw CapacityError("more than " + std::to_string(cfg.cap) + " admissible assignments to enumerate");
}

inline std::vector<ParamIndex> free_of_kind(const ColoredMdp& c, ParamKind kind, const PartialAssignment& fixed) {
  std::vector<ParamIndex> out;
  for (ParamIndex p : c.params().of_kind(kind))
    if (!fixed.contains(p)) out.push_back(p);
  return out;
}

}  // namespace detail

/// Every admissible assignment extending `fixed` is checked; sat iff one is viable.
inline OracleReport brute_feasible(const ColoredMdp& c, double threshold, OracleConfig cfg = {},
                                   const PartialAssignment& fixed = {}) {
  detail::check_cap(c, fixed, cfg);
  OracleReport r;
  std::vector<ParamIndex> vars;
  for (ParamIndex p = 0; p < c.params().size(); ++p)
    if (!fixed.contains(p)) vars.push_back(p);
  for_each_extension(c.params(), c.tau(), vars, fixed, [&](const PartialAssignment& k, Truth t) {
    if (t != Truth::True) return true;
    ++r.space_size;
    const auto theta = Assignment::from_partial(k, c.params());
    if (verify_assignment(c, threshold, theta, cfg.precision, cfg.budget).viable) {
      ++r.viable_count;
      if (r.viable.size() < cfg.keep_viable) r.viable.push_back(k);
    }
    return true;
  });
  r.verdict = r.viable_count > 0 ? Verdict::Sat : Verdict::Unsat;
  return r;
}

/**
 * A controllable assignment is a candidate if some uncontrollable assignment
 * completes it admissibly; it is viable if every such completion is viable.
 * Reported assignments cover the controllable parameters only.
 */
inline OracleReport brute_robust(const ColoredMdp& c, double threshold, OracleConfig cfg = {},
                                 const PartialAssignment& fixed = {}) {
  detail::check_cap(c, fixed, cfg);
  OracleReport r;
  const auto xs = detail::free_of_kind(c, ParamKind::Controllable, fixed);
  const auto ys = detail::free_of_kind(c, ParamKind::Uncontrollable, fixed);
  for_each_extension(c.params(), c.tau(), xs, fixed, [&](const PartialAssignment& kx, Truth) {
    bool any = false, all = true;
    for_each_extension(c.params(), c.tau(), ys, kx, [&](const PartialAssignment& k, Truth t) {
      if (t != Truth::True) return true;
      any = true;
      const auto theta = Assignment::from_partial(k, c.params());
      if (!verify_assignment(c, threshold, theta, cfg.precision, cfg.budget).viable) all = false;
      return all;
    });
    if (!any) return true;
    ++r.space_size;
    if (all) {
      ++r.viable_count;
      if (r.viable.size() < cfg.keep_viable)
        r.viable.push_back(kx.filter([&](ParamIndex p) { return c.params()[p].kind == ParamKind::Controllable; }));
    }
    return true;
  });
  r.verdict = r.viable_count > 0 ? Verdict::Sat : Verdict::Unsat;
  return r;
}

// ---------------------------------------------------------------------------
// Decision-tree reference: enumerate trees explicitly, collect the distinct
// policies they express, and check each policy exhaustively.

struct BruteTree {
  bool leaf = true;
  std::size_t feature = 0;
  Value threshold = 0;
  Value action = 0;
  std::shared_ptr<const BruteTree> then_branch, else_branch;

  Value eval(const std::vector<Value>& f) const {
    if (leaf) return action;
    return f[feature] >= threshold ? then_branch->eval(f) : else_branch->eval(f);
  }
};

/// All trees with exactly n nodes over the given features and labels.
inline std::vector<std::shared_ptr<const BruteTree>> all_trees(std::size_t n, std::size_t feature_dim, Value t_lo,
                                                               Value t_hi, Value a_lo, Value a_hi) {
  std::vector<std::shared_ptr<const BruteTree>> out;
  if (n == 1) {
    for (Value a = a_lo; a <= a_hi; ++a) {
      BruteTree t;
      t.action = a;
      out.push_back(std::make_shared<const BruteTree>(t));
    }
    return out;
  }
  for (std::size_t l = 1; l + 1 < n; l += 2) {
    const auto lefts = all_trees(l, feature_dim, t_lo, t_hi, a_lo, a_hi);
    const auto rights = all_trees(n - 1 - l, feature_dim, t_lo, t_hi, a_lo, a_hi);
    for (std::size_t f = 0; f < feature_dim; ++f)
      for (Value th = t_lo; th <= t_hi; ++th)
        for (const auto& a : lefts)
          for (const auto& b : rights) {
            BruteTree t;
            t.leaf = false;
            t.feature = f;
            t.threshold = th;
            t.then_branch = a;
            t.else_branch = b;
            out.push_back(std::make_shared<const BruteTree>(t));
          }
  }
  return out;
}

struct BruteDtReport {
  Verdict verdict = Verdict::Unsat;
  std::uint64_t trees = 0;
  std::uint64_t policies = 0;
  std::optional<PartialAssignment> policy;  // first viable policy found
};

/**
 * Whether some n-node tree over the features of the controllable feature
 * parameters yields a feasible (or robust) policy.
 */
inline BruteDtReport brute_dt(const ColoredMdp& c, double threshold, std::size_t n, bool robust,
                              OracleConfig cfg = {}) {
  std::vector<ParamIndex> obs;
  for (ParamIndex p : c.controllable())
    if (!c.params()[p].features.empty()) obs.push_back(p);
  if (obs.empty()) throw FormulaError("no parameters with features");
  const auto& p0 = c.params()[obs.front()];
  Value f_lo = p0.features.front(), f_hi = p0.features.front();
  for (ParamIndex o : obs)
    for (Value v : c.params()[o].features) {
      f_lo = std::min(f_lo, v);
      f_hi = std::max(f_hi, v);
    }
  BruteDtReport r;
  std::set<std::vector<Value>> policies;
  for (const auto& t : all_trees(n, p0.features.size(), f_lo, f_hi, p0.lo, p0.hi)) {
    ++r.trees;
    std::vector<Value> pol;
    for (ParamIndex o : obs) pol.push_back(t->eval(c.params()[o].features));
    policies.insert(pol);
  }
  r.policies = policies.size();
  for (const auto& pol : policies) {
    PartialAssignment fixed;
    for (std::size_t i = 0; i < obs.size(); ++i) fixed.set(obs[i], pol[i]);
    const auto rep = robust ? brute_robust(c, threshold, cfg, fixed) : brute_feasible(c, threshold, cfg, fixed);
    if (rep.verdict == Verdict::Sat) {
      r.verdict = Verdict::Sat;
      r.policy = fixed;
      break;
    }
  }
  return r;
}

}  // namespace colsynth

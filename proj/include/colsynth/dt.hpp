#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/formula.hpp"
#include "colsynth/robust.hpp"
#include "colsynth/theory.hpp"

namespace colsynth {

/**
 * Parameters and constraints stating that the observation parameters are
 * the outputs of an N-node decision tree over their feature vectors.
 *
 * Node i is described by leaf[i] (0/1), prop[i] (feature index), cnst[i]
 * (threshold of a decision node or action of a leaf) and the children
 * left[i] (comparison false) and right[i] (comparison true). reach[o][i]
 * tells whether observation o is routed through node i.
 */
struct DtEncoding {
  std::size_t n_nodes = 1;
  std::size_t feature_dim = 0;
  std::vector<ParamIndex> obs;
  std::vector<std::vector<Value>> features;  // per observation
  Value action_lo = 0, action_hi = 0;
  Value feature_lo = 0, feature_hi = 0;
  std::vector<ParamIndex> leaf, prop, cnst, left, right;
  std::vector<std::vector<ParamIndex>> reach;  // [observation][node]
  ParameterSpace space;                        // base parameters followed by encoding parameters
  Formula structural;
  Formula semantic;
};

struct DtNode {
  bool leaf = true;
  std::size_t feature = 0;
  Value threshold = 0;
  std::size_t else_child = 0;  // comparison false
  std::size_t then_child = 0;  // comparison true
  Value action = 0;
};

struct DecisionTree {
  std::vector<DtNode> nodes;  // root is node 0

  Value evaluate(const std::vector<Value>& features) const {
    std::size_t i = 0;
    while (!nodes[i].leaf)
      i = features[nodes[i].feature] >= nodes[i].threshold ? nodes[i].then_child : nodes[i].else_child;
    return nodes[i].action;
  }
  std::size_t leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const DtNode& n) { return n.leaf; }));
  }
};

inline DtEncoding encode_dt(const ParameterSpace& base, std::size_t n_nodes, const std::vector<ParamIndex>& obs) {
  using namespace fx;
  if (n_nodes == 0 || n_nodes % 2 == 0) throw FormulaError("tree size must be odd and positive");
  if (obs.empty()) throw FormulaError("no observation parameters to encode");
  DtEncoding e;
  e.n_nodes = n_nodes;
  e.obs = obs;
  e.feature_dim = base[obs.front()].features.size();
  e.action_lo = base[obs.front()].lo;
  e.action_hi = base[obs.front()].hi;
  for (ParamIndex o : obs) {
    const auto& p = base[o];
    if (p.features.empty()) throw FormulaError("parameter '" + p.name + "' has no features");
    if (p.features.size() != e.feature_dim)
      throw FormulaError("parameter '" + p.name + "' has a feature vector of a different length");
    if (p.lo != e.action_lo || p.hi != e.action_hi)
      throw FormulaError("parameter '" + p.name + "' does not share the action domain");
    e.features.push_back(p.features);
  }
  e.feature_lo = e.feature_hi = e.features.front().front();
  for (const auto& f : e.features)
    for (Value v : f) {
      e.feature_lo = std::min(e.feature_lo, v);
      e.feature_hi = std::max(e.feature_hi, v);
    }

  e.space = base;
  const auto N = static_cast<Value>(n_nodes);
  const auto F = static_cast<Value>(e.feature_dim);
  auto declare = [&](const std::string& name, Value lo, Value hi) {
    return e.space.add(Parameter{name, lo, hi, ParamKind::Controllable, {}});
  };
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const std::string s = std::to_string(i);
    e.leaf.push_back(declare("dt_leaf_" + s, 0, 1));
    e.prop.push_back(declare("dt_prop_" + s, 0, F - 1));
    e.cnst.push_back(declare("dt_const_" + s, std::min(e.feature_lo, e.action_lo),
                             std::max(e.feature_hi, e.action_hi)));
    e.left.push_back(declare("dt_left_" + s, 0, N - 1));
    e.right.push_back(declare("dt_right_" + s, 0, N - 1));
  }
  for (std::size_t o = 0; o < obs.size(); ++o) {
    e.reach.emplace_back();
    for (std::size_t i = 0; i < n_nodes; ++i)
      e.reach.back().push_back(declare("dt_reach_" + base[obs[o]].name + "_" + std::to_string(i), 0, 1));
  }

  std::vector<Formula> st;
  if (n_nodes == 1) st.push_back(eq(e.leaf[0], 1));
  {
    std::vector<Formula> leaves;
    for (ParamIndex p : e.leaf) leaves.push_back(var(p));
    st.push_back(eq(add(leaves), lit((N + 1) / 2)));
  }
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const Formula is_leaf = eq(e.leaf[i], 1), is_dec = eq(e.leaf[i], 0);
    const auto I = static_cast<Value>(i);
    st.push_back(implies(is_leaf, eq(e.prop[i], 0)));
    st.push_back(implies(is_leaf, eq(e.left[i], 0)));
    st.push_back(implies(is_leaf, eq(e.right[i], 0)));
    st.push_back(implies(is_leaf, ge(var(e.cnst[i]), lit(e.action_lo))));
    st.push_back(implies(is_leaf, le(var(e.cnst[i]), lit(e.action_hi))));
    st.push_back(implies(is_dec, gt(var(e.left[i]), lit(I))));
    st.push_back(implies(is_dec, gt(var(e.right[i]), lit(I))));
    st.push_back(implies(is_dec, ne(var(e.left[i]), var(e.right[i]))));
    st.push_back(implies(is_dec, ge(var(e.cnst[i]), lit(e.feature_lo))));
    st.push_back(implies(is_dec, le(var(e.cnst[i]), lit(e.feature_hi))));
  }
  auto parent_of = [&](std::size_t i, std::size_t j) {
    const auto J = static_cast<Value>(j);
    return and_({eq(e.leaf[i], 0), or_({eq(e.left[i], J), eq(e.right[i], J)})});
  };
  for (std::size_t j = 1; j < n_nodes; ++j) {
    std::vector<Formula> any;
    for (std::size_t i = 0; i < j; ++i) any.push_back(parent_of(i, j));
    st.push_back(or_(any));
    for (std::size_t i = 0; i < j; ++i)
      for (std::size_t k = i + 1; k < j; ++k) st.push_back(not_(and_({parent_of(i, j), parent_of(k, j)})));
  }
  e.structural = and_(st);

  std::vector<Formula> sem;
  for (std::size_t o = 0; o < obs.size(); ++o) {
    const auto& r = e.reach[o];
    const auto& fo = e.features[o];
    sem.push_back(eq(r[0], 1));
    std::vector<Formula> cmp(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      std::vector<Formula> cases;
      for (std::size_t f = 0; f < e.feature_dim; ++f)
        cases.push_back(and_({eq(e.prop[i], static_cast<Value>(f)), le(var(e.cnst[i]), lit(fo[f]))}));
      cmp[i] = or_(cases);
    }
    for (std::size_t i = 0; i < n_nodes; ++i)
      sem.push_back(implies(and_({eq(r[i], 1), eq(e.leaf[i], 1)}), eq(var(obs[o]), var(e.cnst[i]))));
    for (std::size_t j = 1; j < n_nodes; ++j) {
      const auto J = static_cast<Value>(j);
      std::vector<Formula> routes;
      for (std::size_t i = 0; i < j; ++i) {
        const Formula via_then = and_({eq(r[i], 1), eq(e.leaf[i], 0), eq(e.right[i], J), cmp[i]});
        const Formula via_else = and_({eq(r[i], 1), eq(e.leaf[i], 0), eq(e.left[i], J), not_(cmp[i])});
        sem.push_back(implies(via_then, eq(r[j], 1)));
        sem.push_back(implies(via_else, eq(r[j], 1)));
        routes.push_back(via_then);
        routes.push_back(via_else);
      }
      sem.push_back(implies(eq(r[j], 1), or_(routes)));
    }
  }
  e.semantic = and_(sem);
  return e;
}

/// Reads a tree back from an assignment covering the encoding parameters.
inline DecisionTree decode_dt(const DtEncoding& e, const PartialAssignment& theta) {
  auto get = [&](ParamIndex p) {
    auto v = theta.get(p);
    if (!v) throw FormulaError("assignment misses encoding parameter '" + e.space[p].name + "'");
    return *v;
  };
  auto invalid = [](const std::string& why) { return FormulaError("structurally invalid tree: " + why); };
  const std::size_t n = e.n_nodes;
  DecisionTree t;
  std::vector<int> parents(n, 0);
  std::size_t leaves = 0;
  for (std::size_t i = 0; i < n; ++i) {
    DtNode node;
    node.leaf = get(e.leaf[i]) == 1;
    if (node.leaf) {
      ++leaves;
      node.action = get(e.cnst[i]);
      if (node.action < e.action_lo || node.action > e.action_hi)
        throw invalid("leaf " + std::to_string(i) + " outputs an action outside the domain");
    } else {
      node.feature = static_cast<std::size_t>(get(e.prop[i]));
      node.threshold = get(e.cnst[i]);
      node.else_child = static_cast<std::size_t>(get(e.left[i]));
      node.then_child = static_cast<std::size_t>(get(e.right[i]));
      if (node.feature >= e.feature_dim) throw invalid("feature index out of range");
      if (node.else_child <= i || node.then_child <= i || node.else_child >= n || node.then_child >= n ||
          node.else_child == node.then_child)
        throw invalid("bad children at node " + std::to_string(i));
      ++parents[node.else_child];
      ++parents[node.then_child];
    }
    t.nodes.push_back(node);
  }
  if (leaves != (n + 1) / 2) throw invalid("wrong number of leaves");
  for (std::size_t j = 1; j < n; ++j)
    if (parents[j] != 1) throw invalid("node " + std::to_string(j) + " does not have exactly one parent");
  return t;
}

/**
 * Encoding-parameter values describing `t` (which must have e.n_nodes
 * nodes with children after parents), including routing and the induced
 * observation values.
 */
inline PartialAssignment encode_tree(const DtEncoding& e, const DecisionTree& t) {
  if (t.nodes.size() != e.n_nodes) throw FormulaError("tree size does not match the encoding");
  PartialAssignment k;
  for (std::size_t i = 0; i < e.n_nodes; ++i) {
    const auto& nd = t.nodes[i];
    k.set(e.leaf[i], nd.leaf ? 1 : 0);
    k.set(e.prop[i], nd.leaf ? 0 : static_cast<Value>(nd.feature));
    k.set(e.cnst[i], nd.leaf ? nd.action : nd.threshold);
    k.set(e.left[i], nd.leaf ? 0 : static_cast<Value>(nd.else_child));
    k.set(e.right[i], nd.leaf ? 0 : static_cast<Value>(nd.then_child));
  }
  for (std::size_t o = 0; o < e.obs.size(); ++o) {
    std::vector<Value> on(e.n_nodes, 0);
    std::size_t i = 0;
    on[0] = 1;
    while (!t.nodes[i].leaf) {
      const auto& nd = t.nodes[i];
      i = e.features[o][nd.feature] >= nd.threshold ? nd.then_child : nd.else_child;
      on[i] = 1;
    }
    for (std::size_t j = 0; j < e.n_nodes; ++j) k.set(e.reach[o][j], on[j]);
    k.set(e.obs[o], t.nodes[i].action);
  }
  return k;
}

inline std::string render_dt(const DecisionTree& t, const std::vector<std::string>& action_names = {}) {
  auto name = [&](Value a) {
    if (a >= 0 && static_cast<std::size_t>(a) < action_names.size()) return action_names[static_cast<std::size_t>(a)];
    return "action " + std::to_string(a);
  };
  std::string out;
  // Emits node i starting on the current line; `indent` is the column the
  // line started at.
  auto emit = [&](auto&& self, std::size_t i, std::size_t indent) -> void {
    const auto& nd = t.nodes[i];
    if (nd.leaf) {
      out += name(nd.action) + "\n";
      return;
    }
    out += "f[" + std::to_string(nd.feature) + "] >= " + std::to_string(nd.threshold) + " then";
    if (t.nodes[nd.then_child].leaf) {
      out += " ";
      self(self, nd.then_child, indent);
    } else {
      out += "\n" + std::string(indent + 2, ' ');
      self(self, nd.then_child, indent + 2);
    }
    out += std::string(indent + 2, ' ') + "else ";
    self(self, nd.else_child, indent + 2);
  };
  emit(emit, 0, 0);
  return out;
}

struct DtResult {
  PartialAssignment assignment;  // original parameters
  PartialAssignment full;        // including encoding parameters
  DecisionTree tree;
  SearchStats stats;
};

struct DtConfig {
  double precision = kDefaultPrecision;
  bool lazy_start = true;
  bool use_cache = true;
  Budget budget;
};

/// Controllable parameters that carry feature vectors.
inline std::vector<ParamIndex> observation_params(const ColoredMdp& c) {
  std::vector<ParamIndex> out;
  for (ParamIndex p : c.controllable())
    if (!c.params()[p].features.empty()) out.push_back(p);
  return out;
}

/// The model with the tree encoding conjoined to its constraint.
inline std::pair<ColoredMdp, DtEncoding> dt_problem(const ColoredMdp& c, std::size_t n_nodes) {
  DtEncoding e = encode_dt(c.params(), n_nodes, observation_params(c));
  ColoredMdp ext = c.with_parameters(e.space, fx::and_({c.tau(), e.structural, e.semantic}));
  return {std::move(ext), std::move(e)};
}

/**
 * Searches for a policy representable by an n-node tree. Without `robust`
 * every parameter is existential; with it the uncontrollable parameters are
 * universally quantified.
 */
inline std::optional<DtResult> synth_dt(const ColoredMdp& c, double threshold, std::size_t n_nodes,
                                        bool robust, DtConfig cfg = {}, SearchStats* stats = nullptr) {
  auto [ext, e] = dt_problem(c, n_nodes);
  const std::size_t base = c.params().size();
  DtResult r;
  if (robust) {
    RobustConfig rc;
    rc.precision = cfg.precision;
    rc.lazy_start = cfg.lazy_start;
    rc.use_cache = cfg.use_cache;
    rc.budget = cfg.budget;
    const auto out = solve_robust(ext, threshold, rc);
    r.stats = out.stats;
    if (stats) *stats += out.stats;
    if (out.verdict == Verdict::Unsat) return std::nullopt;
    r.full = out.witness_x;
  } else {
    TheoryOptions to;
    to.precision = cfg.precision;
    to.use_cache = cfg.use_cache;
    to.budget = cfg.budget;
    PmcTheory theory(ext, threshold, to);
    TheoryAdapter hook(theory, Polarity::Positive);
    SolverConfig sc;
    sc.lazy_start = cfg.lazy_start;
    sc.budget = cfg.budget;
    const auto out = FdSolver(ext.params(), ext.tau(), sc).solve(&hook);
    r.stats = out.stats;
    if (stats) *stats += out.stats;
    if (out.verdict == Verdict::Unsat) return std::nullopt;
    r.full = out.model;
  }
  r.tree = decode_dt(e, r.full);
  r.assignment = r.full.filter([&](ParamIndex p) { return p < base; });
  return r;
}

struct SweepEntry {
  std::size_t n_nodes;
  Verdict verdict;
  std::optional<DtResult> result;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::optional<std::size_t> smallest;  // index into entries of the first sat size
};

inline SweepReport min_dt_sweep(const ColoredMdp& c, double threshold, const std::vector<std::size_t>& sizes,
                                bool robust, DtConfig cfg = {}) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] % 2 == 0) throw FormulaError("tree sizes must be odd");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw FormulaError("tree sizes must be ascending");
  }
  SweepReport rep;
  for (std::size_t n : sizes) {
    auto res = synth_dt(c, threshold, n, robust, cfg);
    const Verdict v = res ? Verdict::Sat : Verdict::Unsat;
    if (res && !rep.smallest) rep.smallest = rep.entries.size();
    rep.entries.push_back({n, v, std::move(res)});
  }
  return rep;
}

}  // namespace colsynth

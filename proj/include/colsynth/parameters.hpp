#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "colsynth/error.hpp"

namespace colsynth {

using Value = std::int64_t;
using ParamIndex = std::size_t;

enum class ParamKind { Controllable, Uncontrollable };

inline std::string_view to_string(ParamKind k) {
  return k == ParamKind::Controllable ? "controllable" : "uncontrollable";
}

/// Bounded integer parameter with inclusive domain [lo, hi].
struct Parameter {
  std::string name;
  Value lo = 0;
  Value hi = 0;
  ParamKind kind = ParamKind::Controllable;
  std::vector<Value> features;  // optional, used by decision-tree synthesis

  std::size_t domain_size() const { return static_cast<std::size_t>(hi - lo + 1); }
  bool contains(Value v) const { return lo <= v && v <= hi; }
};

/// Ordered parameter declarations; declaration order drives enumeration
/// and branching order everywhere.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  explicit ParameterSpace(std::vector<Parameter> params) {
    for (auto& p : params) add(std::move(p));
  }

  ParamIndex add(Parameter p) {
    if (p.lo > p.hi) throw FormulaError("parameter '" + p.name + "' has an empty domain");
    if (p.name.empty()) throw FormulaError("parameter name must not be empty");
    if (index_.contains(p.name)) throw FormulaError("duplicate parameter '" + p.name + "'");
    index_.emplace(p.name, params_.size());
    params_.push_back(std::move(p));
    return params_.size() - 1;
  }

  std::size_t size() const { return params_.size(); }
  const Parameter& operator[](ParamIndex i) const { return params_[i]; }
  const std::vector<Parameter>& all() const { return params_; }

  std::optional<ParamIndex> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  ParamIndex at(std::string_view name) const {
    auto i = find(name);
    if (!i) throw FormulaError("undeclared parameter '" + std::string(name) + "'");
    return *i;
  }

  std::vector<ParamIndex> of_kind(ParamKind k) const {
    std::vector<ParamIndex> out;
    for (ParamIndex i = 0; i < params_.size(); ++i)
      if (params_[i].kind == k) out.push_back(i);
    return out;
  }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamIndex> index_;
};

struct Literal {
  ParamIndex param;
  Value value;

  friend auto operator<=>(const Literal&, const Literal&) = default;
};

/**
 * Set of literals `param = value`, at most one per parameter, kept sorted by
 * parameter index.
 */
class PartialAssignment {
 public:
  PartialAssignment() = default;
  PartialAssignment(std::initializer_list<Literal> lits) {
    for (const auto& l : lits) set(l.param, l.value);
  }
  explicit PartialAssignment(std::vector<Literal> lits) {
    for (const auto& l : lits) set(l.param, l.value);
  }

  /// Adds or overwrites the literal for `p`.
  void set(ParamIndex p, Value v) {
    auto it = lower(p);
    if (it != lits_.end() && it->param == p)
      it->value = v;
    else
      lits_.insert(it, Literal{p, v});
  }
  void erase(ParamIndex p) {
    auto it = lower(p);
    if (it != lits_.end() && it->param == p) lits_.erase(it);
  }

  std::optional<Value> get(ParamIndex p) const {
    auto it = std::lower_bound(lits_.begin(), lits_.end(), p,
                               [](const Literal& l, ParamIndex q) { return l.param < q; });
    if (it != lits_.end() && it->param == p) return it->value;
    return std::nullopt;
  }
  bool contains(ParamIndex p) const { return get(p).has_value(); }
  bool contains(const Literal& l) const { return get(l.param) == l.value; }

  /// No parameter is assigned differently by the two sets.
  bool consistent_with(const PartialAssignment& o) const {
    auto a = lits_.begin(), b = o.lits_.begin();
    while (a != lits_.end() && b != o.lits_.end()) {
      if (a->param < b->param)
        ++a;
      else if (b->param < a->param)
        ++b;
      else {
        if (a->value != b->value) return false;
        ++a;
        ++b;
      }
    }
    return true;
  }
  bool subset_of(const PartialAssignment& o) const {
    return std::all_of(lits_.begin(), lits_.end(), [&](const Literal& l) { return o.contains(l); });
  }

  /// Literals whose parameter satisfies `keep`.
  template <class Pred>
  PartialAssignment filter(Pred keep) const {
    PartialAssignment out;
    for (const auto& l : lits_)
      if (keep(l.param)) out.lits_.push_back(l);
    return out;
  }
  PartialAssignment merged(const PartialAssignment& o) const {
    PartialAssignment out = *this;
    for (const auto& l : o.lits_) out.set(l.param, l.value);
    return out;
  }

  std::size_t size() const { return lits_.size(); }
  bool empty() const { return lits_.empty(); }
  auto begin() const { return lits_.begin(); }
  auto end() const { return lits_.end(); }
  const std::vector<Literal>& literals() const { return lits_; }

  friend bool operator==(const PartialAssignment&, const PartialAssignment&) = default;
  friend auto operator<=>(const PartialAssignment& a, const PartialAssignment& b) {
    return a.lits_ <=> b.lits_;
  }

 private:
  std::vector<Literal>::iterator lower(ParamIndex p) {
    return std::lower_bound(lits_.begin(), lits_.end(), p,
                            [](const Literal& l, ParamIndex q) { return l.param < q; });
  }
  std::vector<Literal> lits_;
};

/// Total assignment: one value per declared parameter.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::vector<Value> values) : values_(std::move(values)) {}

  static Assignment from_partial(const PartialAssignment& k, const ParameterSpace& space) {
    std::vector<Value> v(space.size());
    std::vector<char> seen(space.size(), 0);
    for (const auto& l : k) {
      v[l.param] = l.value;
      seen[l.param] = 1;
    }
    for (ParamIndex i = 0; i < space.size(); ++i)
      if (!seen[i]) throw FormulaError("assignment misses parameter '" + space[i].name + "'");
    return Assignment(std::move(v));
  }

  Value operator[](ParamIndex i) const { return values_[i]; }
  Value& operator[](ParamIndex i) { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const std::vector<Value>& values() const { return values_; }

  PartialAssignment as_partial() const {
    PartialAssignment k;
    for (ParamIndex i = 0; i < values_.size(); ++i) k.set(i, values_[i]);
    return k;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
  friend auto operator<=>(const Assignment& a, const Assignment& b) { return a.values_ <=> b.values_; }

 private:
  std::vector<Value> values_;
};

/// Restriction of a total assignment to the parameters of one kind.
inline PartialAssignment project(const Assignment& theta, const ParameterSpace& space, ParamKind kind) {
  PartialAssignment k;
  for (ParamIndex i = 0; i < space.size(); ++i)
    if (space[i].kind == kind) k.set(i, theta[i]);
  return k;
}

inline std::string format_assignment(const PartialAssignment& k, const ParameterSpace& space) {
  std::string out = "{";
  bool first = true;
  for (const auto& l : k) {
    if (!first) out += ", ";
    first = false;
    out += space[l.param].name + "=" + std::to_string(l.value);
  }
  return out + "}";
}

}  // namespace colsynth

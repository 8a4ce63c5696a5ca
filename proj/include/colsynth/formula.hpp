#pragma once

#include <algorithm>
#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "colsynth/error.hpp"
#include "colsynth/parameters.hpp"

namespace colsynth {

enum class Op {
  Int, Bool, Param,          // leaves
  Add, Sub, Mul,             // integer terms
  Eq, Distinct, Lt, Le, Gt, Ge,
  Not, And, Or, Implies,
};

enum class Truth { False, True, Unknown };

inline Truth truth_of(bool b) { return b ? Truth::True : Truth::False; }

class Formula;

struct FormulaNode {
  Op op;
  Value value = 0;       // Int constant, or Bool constant as 0/1
  ParamIndex param = 0;  // Param
  std::vector<Formula> args;
};

/**
 * Immutable constraint AST over bounded integer parameters. Nodes are shared,
 * so copies are cheap. Construction type-checks: comparisons take integer
 * terms, connectives take booleans.
 */
class Formula {
 public:
  Formula() : Formula(boolean(true)) {}

  static Formula constant(Value v) { return Formula(FormulaNode{Op::Int, v, 0, {}}); }
  static Formula boolean(bool b) { return Formula(FormulaNode{Op::Bool, b ? 1 : 0, 0, {}}); }
  static Formula param(ParamIndex p) { return Formula(FormulaNode{Op::Param, 0, p, {}}); }

  static Formula make(Op op, std::vector<Formula> args) {
    check_arity(op, args.size());
    const bool want_int = op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Eq ||
                          op == Op::Distinct || op == Op::Lt || op == Op::Le || op == Op::Gt ||
                          op == Op::Ge;
    for (const auto& a : args)
      if (a.is_term() != want_int)
        throw FormulaError(std::string("ill-typed argument to '") + std::string(op_name(op)) + "'");
    return Formula(FormulaNode{op, 0, 0, std::move(args)});
  }

  Op op() const { return node_->op; }
  Value value() const { return node_->value; }
  ParamIndex param_index() const { return node_->param; }
  const std::vector<Formula>& args() const { return node_->args; }
  bool is_term() const {
    switch (op()) {
      case Op::Int: case Op::Param: case Op::Add: case Op::Sub: case Op::Mul: return true;
      default: return false;
    }
  }
  bool is_true_constant() const { return op() == Op::Bool && value() == 1; }

  static std::string_view op_name(Op op) {
    switch (op) {
      case Op::Add: return "+";
      case Op::Sub: return "-";
      case Op::Mul: return "*";
      case Op::Eq: return "=";
      case Op::Distinct: return "distinct";
      case Op::Lt: return "<";
      case Op::Le: return "<=";
      case Op::Gt: return ">";
      case Op::Ge: return ">=";
      case Op::Not: return "not";
      case Op::And: return "and";
      case Op::Or: return "or";
      case Op::Implies: return "=>";
      default: return "";
    }
  }

 private:
  explicit Formula(FormulaNode n) : node_(std::make_shared<const FormulaNode>(std::move(n))) {}

  static void check_arity(Op op, std::size_t n) {
    bool ok = true;
    switch (op) {
      case Op::Not: ok = n == 1; break;
      case Op::Implies: case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: ok = n == 2; break;
      case Op::Eq: case Op::Distinct: ok = n >= 2; break;
      case Op::Add: case Op::Sub: case Op::Mul: ok = n >= 1; break;
      case Op::And: case Op::Or: break;
      default: ok = false;
    }
    if (!ok)
      throw FormulaError("wrong number of arguments (" + std::to_string(n) + ") for '" +
                         std::string(op_name(op)) + "'");
  }

  std::shared_ptr<const FormulaNode> node_;
};

// Builders. Kept short because encodings produce thousands of nodes.
namespace fx {
inline Formula lit(Value v) { return Formula::constant(v); }
inline Formula var(ParamIndex p) { return Formula::param(p); }
inline Formula eq(Formula a, Formula b) { return Formula::make(Op::Eq, {std::move(a), std::move(b)}); }
inline Formula eq(ParamIndex p, Value v) { return eq(var(p), lit(v)); }
inline Formula ne(Formula a, Formula b) { return Formula::make(Op::Distinct, {std::move(a), std::move(b)}); }
inline Formula lt(Formula a, Formula b) { return Formula::make(Op::Lt, {std::move(a), std::move(b)}); }
inline Formula le(Formula a, Formula b) { return Formula::make(Op::Le, {std::move(a), std::move(b)}); }
inline Formula gt(Formula a, Formula b) { return Formula::make(Op::Gt, {std::move(a), std::move(b)}); }
inline Formula ge(Formula a, Formula b) { return Formula::make(Op::Ge, {std::move(a), std::move(b)}); }
inline Formula not_(Formula a) { return Formula::make(Op::Not, {std::move(a)}); }
inline Formula implies(Formula a, Formula b) { return Formula::make(Op::Implies, {std::move(a), std::move(b)}); }
inline Formula add(std::vector<Formula> xs) { return Formula::make(Op::Add, std::move(xs)); }
inline Formula and_(std::vector<Formula> xs) {
  if (xs.size() == 1) return xs.front();
  return Formula::make(Op::And, std::move(xs));
}
inline Formula or_(std::vector<Formula> xs) {
  if (xs.size() == 1) return xs.front();
  return Formula::make(Op::Or, std::move(xs));
}
}  // namespace fx

/// Closed integer interval used for three-valued evaluation of terms.
struct Interval {
  Value lo;
  Value hi;
  bool point() const { return lo == hi; }
};

namespace detail {

inline Truth kleene_not(Truth t) {
  if (t == Truth::Unknown) return t;
  return t == Truth::True ? Truth::False : Truth::True;
}

template <class Lookup>
Interval eval_term(const Formula& f, const Lookup& lookup) {
  switch (f.op()) {
    case Op::Int: return {f.value(), f.value()};
    case Op::Param: return lookup(f.param_index());
    case Op::Add: {
      Interval acc{0, 0};
      for (const auto& a : f.args()) {
        auto x = eval_term(a, lookup);
        acc = {acc.lo + x.lo, acc.hi + x.hi};
      }
      return acc;
    }
    case Op::Sub: {
      auto acc = eval_term(f.args()[0], lookup);
      if (f.args().size() == 1) return {-acc.hi, -acc.lo};
      for (std::size_t i = 1; i < f.args().size(); ++i) {
        auto x = eval_term(f.args()[i], lookup);
        acc = {acc.lo - x.hi, acc.hi - x.lo};
      }
      return acc;
    }
    case Op::Mul: {
      auto acc = eval_term(f.args()[0], lookup);
      for (std::size_t i = 1; i < f.args().size(); ++i) {
        auto x = eval_term(f.args()[i], lookup);
        const Value c[4] = {acc.lo * x.lo, acc.lo * x.hi, acc.hi * x.lo, acc.hi * x.hi};
        acc = {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
      }
      return acc;
    }
    default: throw FormulaError("boolean node used as a term");
  }
}

inline Truth compare_eq(Interval a, Interval b) {
  if (a.point() && b.point() && a.lo == b.lo) return Truth::True;
  if (a.hi < b.lo || b.hi < a.lo) return Truth::False;
  return Truth::Unknown;
}

inline Truth compare_lt(Interval a, Interval b) {
  if (a.hi < b.lo) return Truth::True;
  if (a.lo >= b.hi) return Truth::False;
  return Truth::Unknown;
}

inline Truth compare_le(Interval a, Interval b) {
  if (a.hi <= b.lo) return Truth::True;
  if (a.lo > b.hi) return Truth::False;
  return Truth::Unknown;
}

template <class Lookup>
Truth eval_bool(const Formula& f, const Lookup& lookup) {
  const auto& args = f.args();
  switch (f.op()) {
    case Op::Bool: return truth_of(f.value() != 0);
    case Op::Eq:
    case Op::Distinct: {
      std::vector<Interval> xs;
      xs.reserve(args.size());
      for (const auto& a : args) xs.push_back(eval_term(a, lookup));
      Truth acc = Truth::True;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
          if (f.op() == Op::Eq && j != i + 1) continue;  // chain for '='
          Truth t = compare_eq(xs[i], xs[j]);
          if (f.op() == Op::Distinct) t = kleene_not(t);
          if (t == Truth::False) return Truth::False;
          if (t == Truth::Unknown) acc = Truth::Unknown;
        }
      }
      return acc;
    }
    case Op::Lt: return compare_lt(eval_term(args[0], lookup), eval_term(args[1], lookup));
    case Op::Le: return compare_le(eval_term(args[0], lookup), eval_term(args[1], lookup));
    case Op::Gt: return compare_lt(eval_term(args[1], lookup), eval_term(args[0], lookup));
    case Op::Ge: return compare_le(eval_term(args[1], lookup), eval_term(args[0], lookup));
    case Op::Not: return kleene_not(eval_bool(args[0], lookup));
    case Op::And: {
      Truth acc = Truth::True;
      for (const auto& a : args) {
        Truth t = eval_bool(a, lookup);
        if (t == Truth::False) return Truth::False;
        if (t == Truth::Unknown) acc = Truth::Unknown;
      }
      return acc;
    }
    case Op::Or: {
      Truth acc = Truth::False;
      for (const auto& a : args) {
        Truth t = eval_bool(a, lookup);
        if (t == Truth::True) return Truth::True;
        if (t == Truth::Unknown) acc = Truth::Unknown;
      }
      return acc;
    }
    case Op::Implies: {
      Truth a = eval_bool(args[0], lookup);
      if (a == Truth::False) return Truth::True;
      Truth b = eval_bool(args[1], lookup);
      if (b == Truth::True) return Truth::True;
      if (a == Truth::True && b == Truth::False) return Truth::False;
      return Truth::Unknown;
    }
    default: throw FormulaError("integer term used as a formula");
  }
}

}  // namespace detail

/// Three-valued evaluation with caller-supplied parameter bounds.
template <class Lookup>
Truth evaluate(const Formula& f, const Lookup& bounds) {
  return detail::eval_bool(f, bounds);
}

/**
 * Kleene evaluation under a partial assignment. Unassigned parameters range
 * over their declared domain. A definite answer holds for every total
 * extension of `k`; on total assignments the answer is always definite.
 */
inline Truth eval_formula(const Formula& f, const PartialAssignment& k, const ParameterSpace& space) {
  return detail::eval_bool(f, [&](ParamIndex p) -> Interval {
    if (p >= space.size()) throw FormulaError("reference to undeclared parameter #" + std::to_string(p));
    if (auto v = k.get(p)) return {*v, *v};
    return {space[p].lo, space[p].hi};
  });
}

inline bool eval_total(const Formula& f, const Assignment& theta) {
  return detail::eval_bool(f, [&](ParamIndex p) -> Interval { return {theta[p], theta[p]}; }) ==
         Truth::True;
}

inline void collect_params(const Formula& f, std::vector<ParamIndex>& out) {
  if (f.op() == Op::Param) out.push_back(f.param_index());
  for (const auto& a : f.args()) collect_params(a, out);
}

/// Sorted, duplicate-free parameters referenced by `f`.
inline std::vector<ParamIndex> params_of(const Formula& f) {
  std::vector<ParamIndex> out;
  collect_params(f, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Throws FormulaError if `f` references a parameter outside `space`.
inline void check_declared(const Formula& f, const ParameterSpace& space) {
  for (ParamIndex p : params_of(f))
    if (p >= space.size()) throw FormulaError("reference to undeclared parameter #" + std::to_string(p));
}

/// Top-level conjuncts, with nested conjunctions flattened.
inline std::vector<Formula> conjuncts(const Formula& f) {
  std::vector<Formula> out;
  std::vector<Formula> work{f};
  while (!work.empty()) {
    Formula g = work.back();
    work.pop_back();
    if (g.op() == Op::And) {
      for (auto it = g.args().rbegin(); it != g.args().rend(); ++it) work.push_back(*it);
    } else if (!g.is_true_constant()) {
      out.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// S-expression syntax:
//   atom  := integer | identifier | true | false
//   form  := atom | '(' head form* ')'
//   head  := and | or | not | => | = | distinct | < | <= | > | >= | + | - | *

inline std::string to_sexpr(const Formula& f, const ParameterSpace& space) {
  switch (f.op()) {
    case Op::Int: return std::to_string(f.value());
    case Op::Bool: return f.value() ? "true" : "false";
    case Op::Param: return space[f.param_index()].name;
    default: break;
  }
  std::string out = "(";
  out += Formula::op_name(f.op());
  for (const auto& a : f.args()) {
    out += ' ';
    out += to_sexpr(a, space);
  }
  return out + ")";
}

namespace detail {

class SexprParser {
 public:
  SexprParser(std::string_view text, const ParameterSpace& space) : text_(text), space_(space) {}

  Formula parse_top() {
    Formula f = parse();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw FormulaError("constraint syntax error at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_) fail("expected a symbol");
    return text_.substr(start, pos_ - start);
  }

  static bool is_integer(std::string_view t) {
    std::size_t i = (t[0] == '-' && t.size() > 1) ? 1 : 0;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  }

  Formula parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      const std::size_t at = pos_;
      auto t = token();
      if (t == "true") return Formula::boolean(true);
      if (t == "false") return Formula::boolean(false);
      if (is_integer(t)) return Formula::constant(std::stoll(std::string(t)));
      auto p = space_.find(t);
      if (!p) {
        pos_ = at;
        fail("undeclared parameter '" + std::string(t) + "'");
      }
      return Formula::param(*p);
    }
    ++pos_;
    const auto head = token();
    static const std::pair<std::string_view, Op> heads[] = {
        {"and", Op::And}, {"or", Op::Or}, {"not", Op::Not}, {"=>", Op::Implies},
        {"=", Op::Eq}, {"distinct", Op::Distinct}, {"<", Op::Lt}, {"<=", Op::Le},
        {">", Op::Gt}, {">=", Op::Ge}, {"+", Op::Add}, {"-", Op::Sub}, {"*", Op::Mul}};
    const auto it = std::find_if(std::begin(heads), std::end(heads),
                                 [&](const auto& h) { return h.first == head; });
    if (it == std::end(heads)) fail("unknown operator '" + std::string(head) + "'");
    std::vector<Formula> args;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) fail("missing ')'");
      if (text_[pos_] == ')') {
        ++pos_;
        break;
      }
      args.push_back(parse());
    }
    if (it->second == Op::And && args.empty()) return Formula::boolean(true);
    if (it->second == Op::Or && args.empty()) return Formula::boolean(false);
    return Formula::make(it->second, std::move(args));
  }

  std::string_view text_;
  const ParameterSpace& space_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse_sexpr(std::string_view text, const ParameterSpace& space) {
  return detail::SexprParser(text, space).parse_top();
}

}  // namespace colsynth

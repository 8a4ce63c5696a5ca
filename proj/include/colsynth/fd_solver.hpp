#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "colsynth/error.hpp"
#include "colsynth/formula.hpp"
#include "colsynth/parameters.hpp"

namespace colsynth {

enum class Provenance { Constraint, Theory, Quantifier };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Constraint: return "constraint";
    case Provenance::Theory: return "theory";
    case Provenance::Quantifier: return "quantifier";
  }
  return "?";
}

/// A set of literals no solution may extend.
struct Nogood {
  PartialAssignment literals;
  Provenance provenance = Provenance::Constraint;

  friend bool operator==(const Nogood&, const Nogood&) = default;
};

/**
 * Callback interface consulted by the search. Returned nogoods may only
 * contain literals of the assignment that was passed in.
 */
class TheoryHook {
 public:
  virtual ~TheoryHook() = default;
  virtual std::optional<Nogood> on_partial(const PartialAssignment&) { return std::nullopt; }
  /// Called when every search parameter is assigned.
  virtual std::optional<Nogood> on_full(const PartialAssignment& k) = 0;
  virtual SearchStats stats() const { return {}; }
};

enum class Verdict { Sat, Unsat };

inline std::string_view to_string(Verdict v) { return v == Verdict::Sat ? "sat" : "unsat"; }

struct SolverConfig {
  bool lazy_start = true;           // no on_partial before the first on_full
  std::uint64_t max_decisions = 0;  // 0 means unlimited
  Budget budget;
};

struct SolveOutcome {
  Verdict verdict = Verdict::Unsat;
  PartialAssignment model;  // assigned parameters when sat
  SearchStats stats;
  std::vector<Nogood> learned;
};

// ---------------------------------------------------------------------------

struct PropagationResult {
  PartialAssignment implied;                // parameters narrowed to one value
  std::vector<std::vector<Value>> domains;  // remaining values per parameter
  std::optional<PartialAssignment> conflict;
};

/**
 * Plain fixpoint of nogood pruning. `domains[p]` lists the candidate values
 * of parameter p; literals of `k` fix their parameter. A nogood with every
 * literal but one matched removes the remaining value; a parameter left with
 * one value becomes assigned, with none it yields a conflict explained by the
 * matched literals of the nogoods that emptied it.
 */
inline PropagationResult propagate(const PartialAssignment& k, const std::vector<Nogood>& nogoods,
                                   std::vector<std::vector<Value>> domains) {
  PropagationResult r;
  PartialAssignment cur = k;
  std::vector<std::vector<Literal>> why(domains.size());
  for (const auto& l : k) {
    if (l.param >= domains.size()) throw FormulaError("literal outside the parameter list");
    domains[l.param] = {l.value};
  }
  // Rewrites implied literals into the input literals that forced them.
  auto explain = [&](const auto& lits) {
    PartialAssignment out;
    std::vector<Literal> todo(lits.begin(), lits.end());
    std::vector<bool> seen(domains.size(), false);
    while (!todo.empty()) {
      const Literal l = todo.back();
      todo.pop_back();
      if (seen[l.param]) continue;
      seen[l.param] = true;
      if (k.contains(l.param))
        out.set(l.param, *k.get(l.param));
      else
        todo.insert(todo.end(), why[l.param].begin(), why[l.param].end());
    }
    return out;
  };
  bool changed = true;
  while (changed && !r.conflict) {
    changed = false;
    for (const auto& ng : nogoods) {
      std::optional<Literal> open;
      std::size_t unmatched = 0;
      bool satisfied = false;
      for (const auto& l : ng.literals) {
        if (auto v = cur.get(l.param)) {
          if (*v != l.value) satisfied = true;
          continue;
        }
        const auto& d = domains[l.param];
        if (std::find(d.begin(), d.end(), l.value) == d.end()) {
          satisfied = true;
        } else {
          ++unmatched;
          open = l;
        }
      }
      if (satisfied || unmatched > 1) continue;
      if (unmatched == 0) {
        r.conflict = explain(ng.literals);
        break;
      }
      auto& d = domains[open->param];
      d.erase(std::find(d.begin(), d.end(), open->value));
      for (const auto& l : ng.literals)
        if (l.param != open->param) why[open->param].push_back(l);
      changed = true;
      if (d.empty()) {
        r.conflict = explain(why[open->param]);
        break;
      }
      if (d.size() == 1) {
        cur.set(open->param, d.front());
        r.implied.set(open->param, d.front());
      }
    }
  }
  r.domains = std::move(domains);
  return r;
}

// ---------------------------------------------------------------------------

/**
 * Conflict-driven finite-domain search.
 *
 * Parameters split into search parameters (branched on), fixed parameters
 * (assigned at level 0 and never part of learned nogoods) and free
 * parameters (never assigned; the constraint treats them as unknown). The
 * constraint is split into top-level conjuncts; a conjunct that evaluates to
 * false yields a nogood over its assigned literals, and a conjunct with a
 * single unassigned search parameter prunes values that would falsify it.
 *
 * Conflicts are analysed to the first unique implication point, the result
 * is stored (unless subsumed) and the search backjumps.
 */
class FdSolver {
 public:
  FdSolver(ParameterSpace space, const Formula& tau, SolverConfig cfg = {},
           std::optional<std::vector<ParamIndex>> search = std::nullopt,
           PartialAssignment fixed = {})
      : space_(std::move(space)), cfg_(cfg), fixed_(std::move(fixed)) {
    check_declared(tau, space_);
    const std::size_t n = space_.size();
    is_search_.assign(n, 0);
    if (!search) {
      for (ParamIndex p = 0; p < n; ++p) is_search_[p] = !fixed_.contains(p);
    } else {
      for (ParamIndex p : *search) {
        if (p >= n) throw FormulaError("search parameter out of range");
        if (fixed_.contains(p)) throw FormulaError("parameter '" + space_[p].name + "' is both fixed and searched");
        is_search_[p] = 1;
      }
    }
    for (const auto& l : fixed_) {
      if (l.param >= n) throw FormulaError("fixed parameter out of range");
      if (!space_[l.param].contains(l.value))
        throw FormulaError("fixed value outside the domain of '" + space_[l.param].name + "'");
    }
    conj_of_.assign(n, {});
    for (const auto& c : conjuncts(tau)) {
      conj_params_.push_back(params_of(c));
      for (ParamIndex p : conj_params_.back()) conj_of_[p].push_back(conj_.size());
      conj_.push_back(c);
    }
    alive_.resize(n);
    prune_pos_.resize(n);
    for (ParamIndex p = 0; p < n; ++p) {
      alive_[p].assign(space_[p].domain_size(), 1);
      prune_pos_[p].assign(space_[p].domain_size(), kNone);
    }
    alive_count_.resize(n);
    for (ParamIndex p = 0; p < n; ++p) alive_count_[p] = space_[p].domain_size();
    value_.assign(n, 0);
    assigned_.assign(n, 0);
    level_of_.assign(n, 0);
    pos_of_.assign(n, kNone);
    occurs_.assign(n, {});
  }

  const ParameterSpace& space() const { return space_; }

  /// Adds a nogood before or between search steps.
  bool add_nogood(Nogood ng) { return learn(std::move(ng)); }

  SolveOutcome solve(TheoryHook* hook = nullptr) {
    try {
      return run(hook);
    } catch (const TimeoutError&) {
      SearchStats s = stats_;
      if (hook) s += hook->stats();
      throw TimeoutError(s);
    }
  }

  // Stepping interface, used by tests to drive the search by hand.

  /// Opens a new decision level with p = v. Returns false when the root is
  /// already inconsistent.
  bool decide(ParamIndex p, Value v) {
    if (!ensure_init()) return false;
    if (assigned_[p]) throw InternalError("decide on assigned parameter '" + space_[p].name + "'");
    ++level_;
    level_start_.push_back(trail_.size());
    ++stats_.decisions;
    assign(p, v, true);
    return true;
  }

  /// Runs propagation to fixpoint; returns the conflict literals, if any.
  std::optional<PartialAssignment> propagate_now() {
    if (!ensure_init()) return PartialAssignment{};
    run_queue();
    return take_conflict();
  }

  /**
   * Stores a nogood. If all its literals currently hold, the conflict is
   * analysed and the search backjumps; otherwise it is stored and may prune.
   * Returns false once the problem is proven unsatisfiable.
   */
  bool learn(Nogood ng) {
    if (!ensure_init()) return false;
    for (const auto& l : ng.literals)
      if (l.param >= space_.size()) throw InternalError("nogood literal outside the parameter list");
    bool all_true = std::all_of(ng.literals.begin(), ng.literals.end(),
                                [&](const Literal& l) { return holds(l); });
    if (all_true) return resolve(to_vec(ng.literals), ng.provenance);
    store(ng);
    check_nogood(store_.size() - 1);
    run_queue();
    if (auto c = take_conflict()) return resolve(to_vec(*c), Provenance::Constraint);
    return true;
  }

  int level() const { return level_; }
  bool is_assigned(ParamIndex p) const { return assigned_[p]; }
  std::optional<Value> value_of(ParamIndex p) const {
    if (!assigned_[p]) return std::nullopt;
    return value_[p];
  }
  bool is_pruned(ParamIndex p, Value v) const {
    return space_[p].contains(v) && !alive_[p][offset(p, v)];
  }
  const std::vector<Nogood>& stored_nogoods() const { return store_; }
  const SearchStats& stats() const { return stats_; }
  bool unsat() const { return unsat_; }

  PartialAssignment current() const {
    PartialAssignment k;
    for (ParamIndex p = 0; p < space_.size(); ++p)
      if (assigned_[p]) k.set(p, value_[p]);
    return k;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Entry {
    ParamIndex param;
    Value value;
    bool prune;
    bool decision;
    int level;
    std::vector<Literal> reason;  // prunes only
  };

  std::size_t offset(ParamIndex p, Value v) const { return static_cast<std::size_t>(v - space_[p].lo); }

  bool holds(const Literal& l) const { return assigned_[l.param] && value_[l.param] == l.value; }

  static std::vector<Literal> to_vec(const PartialAssignment& k) { return {k.begin(), k.end()}; }

  bool ensure_init() {
    if (initialized_) return !unsat_;
    initialized_ = true;
    for (const auto& l : fixed_) assign(l.param, l.value, true);
    for (std::size_t i = 0; i < store_.size(); ++i) check_nogood(i);
    for (std::size_t j = 0; j < conj_.size(); ++j) check_conjunct(j);
    run_queue();
    if (take_conflict()) unsat_ = true;
    return !unsat_;
  }

  void assign(ParamIndex p, Value v, bool decision) {
    value_[p] = v;
    assigned_[p] = 1;
    level_of_[p] = level_;
    pos_of_[p] = trail_.size();
    trail_.push_back({p, v, false, decision, level_, {}});
    queue_.push_back(p);
    ++version_;
  }

  void set_conflict(std::vector<Literal> lits) {
    if (!conflict_) conflict_ = std::move(lits);
  }

  std::optional<PartialAssignment> take_conflict() {
    if (!conflict_) return std::nullopt;
    PartialAssignment k;
    for (const auto& l : *conflict_) k.set(l.param, l.value);
    conflict_.reset();
    return k;
  }

  std::vector<Literal> prune_reasons(ParamIndex p, std::optional<Value> except) const {
    std::vector<Literal> out;
    for (std::size_t i = 0; i < prune_pos_[p].size(); ++i) {
      if (except && static_cast<Value>(i) + space_[p].lo == *except) continue;
      if (prune_pos_[p][i] == kNone) continue;
      const auto& r = trail_[prune_pos_[p][i]].reason;
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }

  void prune(ParamIndex p, Value v, std::vector<Literal> reason) {
    if (conflict_) return;
    if (assigned_[p]) {
      if (value_[p] == v) {
        reason.push_back({p, v});
        set_conflict(std::move(reason));
      }
      return;
    }
    if (!space_[p].contains(v)) return;
    const std::size_t i = offset(p, v);
    if (!alive_[p][i]) return;
    alive_[p][i] = 0;
    --alive_count_[p];
    prune_pos_[p][i] = trail_.size();
    trail_.push_back({p, v, true, false, level_, std::move(reason)});
    ++stats_.propagations;
    if (alive_count_[p] == 0) {
      set_conflict(prune_reasons(p, std::nullopt));
    } else if (alive_count_[p] == 1 && is_search_[p]) {
      for (std::size_t j = 0; j < alive_[p].size(); ++j)
        if (alive_[p][j]) assign(p, space_[p].lo + static_cast<Value>(j), false);
    }
  }

  void store(const Nogood& ng) {
    for (const auto& old : store_)
      if (old.literals.subset_of(ng.literals)) return;
    for (const auto& l : ng.literals) occurs_[l.param].push_back(store_.size());
    store_.push_back(ng);
    ++stats_.learned;
  }

  void check_nogood(std::size_t idx) {
    if (conflict_) return;
    const auto& lits = store_[idx].literals;
    const Literal* open = nullptr;
    for (const auto& l : lits) {
      if (assigned_[l.param]) {
        if (value_[l.param] != l.value) return;
        continue;
      }
      if (!space_[l.param].contains(l.value) || !alive_[l.param][offset(l.param, l.value)]) return;
      if (open) return;
      open = &l;
    }
    if (!open) {
      set_conflict(to_vec(lits));
      return;
    }
    std::vector<Literal> reason;
    for (const auto& l : lits)
      if (l.param != open->param) reason.push_back(l);
    const Literal target = *open;
    prune(target.param, target.value, std::move(reason));
  }

  std::vector<Literal> assigned_in(std::size_t j, std::optional<ParamIndex> except = {}) const {
    std::vector<Literal> out;
    for (ParamIndex p : conj_params_[j])
      if (assigned_[p] && p != except) out.push_back({p, value_[p]});
    return out;
  }

  void check_conjunct(std::size_t j) {
    if (conflict_) return;
    std::optional<Literal> probe;
    auto lookup = [&](ParamIndex p) -> Interval {
      if (probe && probe->param == p) return {probe->value, probe->value};
      if (assigned_[p]) return {value_[p], value_[p]};
      return {space_[p].lo, space_[p].hi};
    };
    const Truth t = evaluate(conj_[j], lookup);
    if (t == Truth::False) {
      set_conflict(assigned_in(j));
      return;
    }
    if (t == Truth::True) return;
    std::optional<ParamIndex> open;
    for (ParamIndex p : conj_params_[j]) {
      if (assigned_[p] || !is_search_[p]) continue;
      if (open) return;
      open = p;
    }
    if (!open) return;
    std::vector<Value> doomed;
    for (std::size_t i = 0; i < alive_[*open].size(); ++i) {
      if (!alive_[*open][i]) continue;
      probe = Literal{*open, space_[*open].lo + static_cast<Value>(i)};
      if (evaluate(conj_[j], lookup) == Truth::False) doomed.push_back(probe->value);
    }
    for (Value v : doomed) prune(*open, v, assigned_in(j, open));
  }

  void run_queue() {
    while (!conflict_ && qhead_ < queue_.size()) {
      const ParamIndex p = queue_[qhead_++];
      for (std::size_t idx : occurs_[p]) {
        check_nogood(idx);
        if (conflict_) return;
      }
      for (std::size_t j : conj_of_[p]) {
        check_conjunct(j);
        if (conflict_) return;
      }
    }
  }

  void backtrack(int target) {
    if (target >= level_) return;
    const std::size_t cut = level_start_[static_cast<std::size_t>(target)];
    while (trail_.size() > cut) {
      Entry& e = trail_.back();
      if (e.prune) {
        const std::size_t i = offset(e.param, e.value);
        alive_[e.param][i] = 1;
        ++alive_count_[e.param];
        prune_pos_[e.param][i] = kNone;
      } else {
        assigned_[e.param] = 0;
        pos_of_[e.param] = kNone;
      }
      trail_.pop_back();
    }
    level_start_.resize(static_cast<std::size_t>(target));
    level_ = target;
    queue_.clear();
    qhead_ = 0;
    conflict_.reset();
    ++version_;
  }

  /// Explanation of an implied assignment p = v.
  std::vector<Literal> explain(ParamIndex p) const { return prune_reasons(p, value_[p]); }

  /**
   * Conflict analysis on literals that all hold. Returns false if the
   * problem is unsatisfiable.
   */
  bool resolve(std::vector<Literal> lits, Provenance prov) {
    ++stats_.conflicts;
    conflict_.reset();
    std::vector<char> in(space_.size(), 0);
    std::vector<ParamIndex> set;
    auto add = [&](const Literal& l) {
      if (!holds(l)) throw InternalError("conflict literal '" + space_[l.param].name + "=" +
                                         std::to_string(l.value) + "' does not hold");
      if (level_of_[l.param] == 0 || in[l.param]) return;
      in[l.param] = 1;
      set.push_back(l.param);
    };
    for (const auto& l : lits) add(l);
    if (set.empty()) {
      unsat_ = true;
      return false;
    }
    int top = 0;
    for (ParamIndex p : set) top = std::max(top, level_of_[p]);
    backtrack(top);

    for (;;) {
      std::size_t at_top = 0;
      ParamIndex latest = set.front();
      for (ParamIndex p : set) {
        if (!in[p] || level_of_[p] != top) continue;
        ++at_top;
        if (pos_of_[p] > pos_of_[latest] || level_of_[latest] != top || !in[latest]) latest = p;
      }
      if (at_top <= 1) break;
      in[latest] = 0;
      for (const auto& l : explain(latest)) add(l);
    }

    PartialAssignment learned;
    ParamIndex uip = 0;
    int back = 0;
    for (ParamIndex p : set) {
      if (!in[p]) continue;
      learned.set(p, value_[p]);
      if (level_of_[p] == top)
        uip = p;
      else
        back = std::max(back, level_of_[p]);
    }
    const Value uip_value = value_[uip];
    learned_log_.push_back({learned, prov});
    backtrack(back);
    store({learned, prov});
    std::vector<Literal> reason;
    for (const auto& l : learned)
      if (l.param != uip) reason.push_back(l);
    prune(uip, uip_value, std::move(reason));
    return true;
  }

  SolveOutcome run(TheoryHook* hook) {
    SolveOutcome out;
    auto finish = [&](Verdict v) {
      out.verdict = v;
      out.stats = stats_;
      if (hook) out.stats += hook->stats();
      out.learned = learned_log_;
      return out;
    };
    if (!ensure_init()) return finish(Verdict::Unsat);
    bool seen_full = !cfg_.lazy_start;
    std::uint64_t partial_seen = std::numeric_limits<std::uint64_t>::max();

    for (;;) {
      cfg_.budget.check();
      run_queue();
      if (auto c = take_conflict()) {
        if (!resolve(to_vec(*c), Provenance::Constraint)) return finish(Verdict::Unsat);
        continue;
      }
      const auto next = pick_branch();
      if (!next) {
        const PartialAssignment k = current();
        if (hook) {
          seen_full = true;
          if (auto ng = hook->on_full(k)) {
            if (!resolve(checked(*ng, k), ng->provenance)) return finish(Verdict::Unsat);
            continue;
          }
        }
        out.model = k;
        return finish(Verdict::Sat);
      }
      if (hook && seen_full && partial_seen != version_) {
        partial_seen = version_;
        const PartialAssignment k = current();
        if (auto ng = hook->on_partial(k)) {
          if (!resolve(checked(*ng, k), ng->provenance)) return finish(Verdict::Unsat);
          continue;
        }
      }
      if (cfg_.max_decisions && stats_.decisions >= cfg_.max_decisions)
        throw InternalError("decision cap exceeded");
      ++level_;
      level_start_.push_back(trail_.size());
      ++stats_.decisions;
      assign(*next, first_alive(*next), true);
    }
  }

  std::vector<Literal> checked(const Nogood& ng, const PartialAssignment& k) const {
    for (const auto& l : ng.literals)
      if (!k.contains(l))
        throw InternalError("hook returned literal '" +
                            (l.param < space_.size() ? space_[l.param].name : std::string("?")) +
                            "' that is not part of the queried assignment");
    return to_vec(ng.literals);
  }

  Value first_alive(ParamIndex p) const {
    for (std::size_t i = 0; i < alive_[p].size(); ++i)
      if (alive_[p][i]) return space_[p].lo + static_cast<Value>(i);
    throw InternalError("branching on an empty domain");
  }

  std::optional<ParamIndex> pick_branch() const {
    std::optional<ParamIndex> best;
    for (ParamIndex p = 0; p < space_.size(); ++p) {
      if (!is_search_[p] || assigned_[p]) continue;
      if (!best || alive_count_[p] < alive_count_[*best]) best = p;
    }
    return best;
  }

  ParameterSpace space_;
  SolverConfig cfg_;
  PartialAssignment fixed_;
  std::vector<char> is_search_;

  std::vector<Formula> conj_;
  std::vector<std::vector<ParamIndex>> conj_params_;
  std::vector<std::vector<std::size_t>> conj_of_;

  std::vector<std::vector<char>> alive_;
  std::vector<std::size_t> alive_count_;
  std::vector<std::vector<std::size_t>> prune_pos_;
  std::vector<Value> value_;
  std::vector<char> assigned_;
  std::vector<int> level_of_;
  std::vector<std::size_t> pos_of_;

  std::vector<Entry> trail_;
  std::vector<std::size_t> level_start_;  // level_start_[i] = trail size when level i+1 opened
  int level_ = 0;

  std::vector<Nogood> store_;
  std::vector<std::vector<std::size_t>> occurs_;
  std::vector<Nogood> learned_log_;

  std::vector<ParamIndex> queue_;
  std::size_t qhead_ = 0;
  std::optional<std::vector<Literal>> conflict_;
  std::uint64_t version_ = 0;
  bool initialized_ = false;
  bool unsat_ = false;
  SearchStats stats_;
};

/// One-shot convenience wrapper around FdSolver.
inline SolveOutcome solve(const ParameterSpace& space, const Formula& tau,
                          const std::vector<Nogood>& seeds = {}, TheoryHook* hook = nullptr,
                          SolverConfig cfg = {}) {
  FdSolver s(space, tau, cfg);
  for (const auto& ng : seeds)
    if (!s.add_nogood(ng)) {
      SolveOutcome out;
      out.stats = s.stats();
      return out;
    }
  return s.solve(hook);
}

}  // namespace colsynth

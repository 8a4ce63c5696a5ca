#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/theory.hpp"

namespace colsynth {

struct RobustConfig {
  double precision = kDefaultPrecision;
  bool lazy_start = true;
  bool use_cache = true;
  bool outer_theory = true;  // prune partial candidates with the positive theory
  bool log_conflicts = false;
  Budget budget;
};

/// A refuted candidate: the X-part of a certified conflict together with the
/// environment that refuted it.
struct CexRecord {
  PartialAssignment x_literals;
  PartialAssignment y_witness;
  PartialAssignment generalized;
};

struct RobustOutcome {
  Verdict verdict = Verdict::Unsat;
  PartialAssignment witness_x;
  std::vector<std::pair<PartialAssignment, PartialAssignment>> trace;  // (candidate, refutation)
  std::vector<CexRecord> records;
  SearchStats stats;
};

/**
 * Candidate/counterexample loop for: exists an admissible assignment of the
 * controllable parameters such that every compatible assignment of the
 * uncontrollable parameters is viable.
 *
 * One outer search runs over the controllable parameters; its total
 * candidates are checked by an inner search over the uncontrollable ones
 * that looks for a non-viable environment. A refutation is certified by the
 * positive theory and kept as a record that blocks every later candidate
 * agreeing with it on the dependent literals and still admitting the
 * refuting environment.
 */
class RobustSolver {
 public:
  RobustSolver(const ColoredMdp& c, double threshold, RobustConfig cfg = {})
      : c_(&c), nu_(threshold), cfg_(cfg), theory_(c, threshold, theory_options(cfg)) {
    x_ = c.controllable();
    y_ = c.uncontrollable();
    is_x_.assign(c.params().size(), 0);
    for (ParamIndex p : x_) is_x_[p] = 1;
  }

  /// Whether some environment is compatible with the candidate.
  bool x_feasible(const PartialAssignment& theta_x) {
    FdSolver inner(c_->params(), c_->tau(), inner_config(), y_, theta_x);
    const auto out = inner.solve(nullptr);
    inner_stats_ += out.stats;
    return out.verdict == Verdict::Sat;
  }

  /**
   * A compatible environment under which the candidate is not viable, or
   * nothing if every compatible environment passes. Throws FormulaError if
   * no environment is compatible.
   */
  std::optional<PartialAssignment> find_counterexample(const PartialAssignment& theta_x) {
    if (!x_feasible(theta_x))
      throw FormulaError("candidate " + format_assignment(theta_x, c_->params()) +
                         " admits no environment");
    return search_counterexample(theta_x);
  }

  RobustOutcome solve() {
    OuterHook hook(*this);
    FdSolver outer(c_->params(), c_->tau(), outer_config(), x_);
    const auto out = outer.solve(&hook);
    RobustOutcome r;
    r.verdict = out.verdict;
    if (out.verdict == Verdict::Sat) r.witness_x = out.model.filter([&](ParamIndex p) { return is_x_[p] != 0; });
    r.trace = trace_;
    r.records = records_;
    r.stats = out.stats;
    return r;
  }

  PmcTheory& theory() { return theory_; }
  const std::vector<CexRecord>& records() const { return records_; }
  SearchStats stats() const {
    SearchStats s = inner_stats_;
    s += theory_.stats();
    s.iterations += iterations_;
    return s;
  }

 private:
  static TheoryOptions theory_options(const RobustConfig& cfg) {
    TheoryOptions o;
    o.precision = cfg.precision;
    o.use_cache = cfg.use_cache;
    o.log_conflicts = cfg.log_conflicts;
    o.budget = cfg.budget;
    return o;
  }
  SolverConfig inner_config() const {
    SolverConfig s;
    s.lazy_start = cfg_.lazy_start;
    s.budget = cfg_.budget;
    return s;
  }
  SolverConfig outer_config() const { return inner_config(); }

  std::optional<PartialAssignment> search_counterexample(const PartialAssignment& theta_x) {
    TheoryAdapter negative(theory_, Polarity::Negative);
    FdSolver inner(c_->params(), c_->tau(), inner_config(), y_, theta_x);
    SolveOutcome out;
    try {
      out = inner.solve(&negative);
    } catch (const TimeoutError&) {
      inner_stats_ += inner.stats();
      throw;
    }
    inner_stats_ += inner.stats();
    if (out.verdict == Verdict::Unsat) return std::nullopt;
    return out.model.filter([&](ParamIndex p) { return is_x_[p] == 0; });
  }

  /// Smallest (greedy) subset of the candidate's literals that, with the
  /// record, keeps the constraint definitely true under the witness.
  PartialAssignment support(const PartialAssignment& candidate, const CexRecord& rec) const {
    const auto tau_params = params_of(c_->tau());
    PartialAssignment keep = candidate.filter([&](ParamIndex p) {
      return std::binary_search(tau_params.begin(), tau_params.end(), p);
    });
    const PartialAssignment base = rec.x_literals.merged(rec.y_witness);
    for (const auto& l : std::vector<Literal>(keep.begin(), keep.end())) {
      if (rec.x_literals.contains(l.param)) continue;
      PartialAssignment trial = keep;
      trial.erase(l.param);
      if (eval_formula(c_->tau(), trial.merged(base), c_->params()) == Truth::True) keep = trial;
    }
    return keep.merged(rec.x_literals);
  }

  std::optional<Nogood> filter(const PartialAssignment& k) {
    for (const auto& rec : records_) {
      if (!rec.x_literals.subset_of(k)) continue;
      const auto on_x = k.filter([&](ParamIndex p) { return is_x_[p] != 0; });
      if (eval_formula(c_->tau(), on_x.merged(rec.y_witness), c_->params()) != Truth::True) continue;
      return Nogood{support(on_x, rec), Provenance::Quantifier};
    }
    if (cfg_.outer_theory) return theory_.check(k, Polarity::Positive);
    return std::nullopt;
  }

  std::optional<Nogood> check_candidate(const PartialAssignment& theta_x) {
    if (auto ng = filter(theta_x)) return ng;
    if (!x_feasible(theta_x)) {
      const auto tau_params = params_of(c_->tau());
      return Nogood{theta_x.filter([&](ParamIndex p) {
                      return std::binary_search(tau_params.begin(), tau_params.end(), p);
                    }),
                    Provenance::Quantifier};
    }
    const auto cex = search_counterexample(theta_x);
    if (!cex) return std::nullopt;
    ++iterations_;
    trace_.emplace_back(theta_x, *cex);
    const auto certified = theory_.check(theta_x.merged(*cex), Polarity::Positive);
    if (!certified || certified->provenance != Provenance::Theory)
      throw InternalError("refuting environment " + format_assignment(*cex, c_->params()) +
                          " was not certified as a conflict");
    CexRecord rec;
    rec.generalized = certified->literals;
    rec.x_literals = certified->literals.filter([&](ParamIndex p) { return is_x_[p] != 0; });
    rec.y_witness = *cex;
    records_.push_back(rec);
    return Nogood{support(theta_x, rec), Provenance::Quantifier};
  }

  class OuterHook : public TheoryHook {
   public:
    explicit OuterHook(RobustSolver& s) : s_(&s) {}
    std::optional<Nogood> on_partial(const PartialAssignment& k) override { return s_->filter(k); }
    std::optional<Nogood> on_full(const PartialAssignment& k) override { return s_->check_candidate(k); }
    SearchStats stats() const override { return s_->stats(); }

   private:
    RobustSolver* s_;
  };

  const ColoredMdp* c_;
  double nu_;
  RobustConfig cfg_;
  PmcTheory theory_;
  std::vector<ParamIndex> x_, y_;
  std::vector<char> is_x_;
  std::vector<CexRecord> records_;
  std::vector<std::pair<PartialAssignment, PartialAssignment>> trace_;
  SearchStats inner_stats_;
  std::uint64_t iterations_ = 0;
};

inline RobustOutcome solve_robust(const ColoredMdp& c, double threshold, RobustConfig cfg = {}) {
  return RobustSolver(c, threshold, cfg).solve();
}

inline std::optional<PartialAssignment> find_counterexample(const ColoredMdp& c, double threshold,
                                                            const PartialAssignment& theta_x,
                                                            double precision = kDefaultPrecision) {
  RobustConfig cfg;
  cfg.precision = precision;
  return RobustSolver(c, threshold, cfg).find_counterexample(theta_x);
}

}  // namespace colsynth

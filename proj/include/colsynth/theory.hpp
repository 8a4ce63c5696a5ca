#pragma once

#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/value.hpp"

namespace colsynth {

/// Positive: the query asks for viability (value >= threshold) and conflicts
/// prove every extension falls short. Negative: the opposite.
enum class Polarity { Positive, Negative };

inline std::string_view to_string(Polarity p) { return p == Polarity::Positive ? "positive" : "negative"; }

struct TheoryOptions {
  double precision = kDefaultPrecision;
  bool use_cache = true;
  bool incremental = true;  // reuse the choice mask across growing queries
  bool log_conflicts = false;
  Budget budget;
};

struct TheoryResult {
  std::optional<Nogood> nogood;
  double value = 0.0;           // optimal value at the initial state (if computed)
  bool computed = false;        // a value was computed or served from cache
  bool chain = false;           // reachable induced model was a Markov chain
  PartialAssignment key;        // literals the verdict was keyed on
  bool cache_hit = false;
};

/// One emitted nogood, kept for offline soundness checks.
struct ConflictRecord {
  PartialAssignment query;
  Nogood nogood;
  Polarity polarity;
  double value;
};

/**
 * Model-checking theory over a colored MDP. A query is a partial assignment
 * with a polarity; the induced sub-MDP is model checked and, when its
 * optimal value proves the polarity impossible for every extension, a nogood
 * over the dependent literals is returned.
 *
 * When the reachable induced model is a chain the comparison against the
 * threshold is exact (the same numbers the total check produces). Otherwise
 * the value is computed at a thousandth of the precision and must clear the
 * threshold by twice the precision.
 */
class PmcTheory {
 public:
  PmcTheory(const ColoredMdp& c, double threshold, TheoryOptions opt = {})
      : c_(&c), nu_(threshold), opt_(opt), inducer_(c) {}

  std::optional<Nogood> check(const PartialAssignment& k, Polarity pol) { return query(k, pol).nogood; }

  TheoryResult query(const PartialAssignment& k, Polarity pol) {
    ++stats_.theory_calls;
    const Mdp& m = c_->mdp();
    const std::vector<char> mask_k = opt_.incremental ? inducer_.mask_for(k) : c_->enabled(k);
    const auto reach_k = reachable(m, m.initial(), mask_k);

    TheoryResult r;
    for (StateIndex s : reach_k) {
      bool any = false;
      for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s) && !any; ++a) any = mask_k[a];
      if (any) continue;
      // No admissible assignment extends k on this state's guard parameters.
      PartialAssignment on_state;
      for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s); ++a)
        for (const auto& l : c_->guard(a))
          if (auto v = k.get(l.param)) on_state.set(l.param, *v);
      r.nogood = Nogood{on_state, Provenance::Constraint};
      r.key = on_state;
      log(k, *r.nogood, pol, 0.0);
      return r;
    }

    const auto dep = dependent_on_mask(*c_, mask_k, reach_k);
    PartialAssignment restricted =
        k.filter([&](ParamIndex p) { return std::binary_search(dep.begin(), dep.end(), p); });
    r.key = k;
    if (restricted.size() != k.size()) {
      const auto mask_d = c_->enabled(restricted);
      if (reachable(m, m.initial(), mask_d) == reach_k && same_choices(mask_k, mask_d, reach_k))
        r.key = std::move(restricted);
    }

    const auto cache_key = std::make_pair(r.key, pol);
    if (opt_.use_cache) {
      if (auto it = cache_.find(cache_key); it != cache_.end()) {
        ++stats_.cache_hits;
        r.cache_hit = true;
        r.computed = true;
        r.value = it->second.value;
        r.chain = it->second.chain;
        if (it->second.conflict) {
          r.nogood = Nogood{r.key, Provenance::Theory};
          log(k, *r.nogood, pol, r.value);
        }
        return r;
      }
    }

    const Mdp sub = reachable_submodel(m, mask_k);
    r.chain = sub.is_chain();
    r.computed = true;
    bool conflict;
    if (r.chain) {
      r.value = value_mc(sub, opt_.precision, opt_.budget).values[sub.initial()];
      conflict = meets_threshold(r.value, nu_) != (pol == Polarity::Positive);
    } else {
      const double slack = 2.0 * opt_.precision;
      const Direction dir = pol == Polarity::Positive ? Direction::Max : Direction::Min;
      r.value = value_opt(sub, dir, opt_.precision * 1e-3, opt_.budget).values[sub.initial()];
      conflict = pol == Polarity::Positive ? r.value < nu_ - slack : r.value >= nu_ + slack;
    }
    if (opt_.use_cache) cache_.emplace(cache_key, Cached{conflict, r.value, r.chain});
    if (conflict) {
      r.nogood = Nogood{r.key, Provenance::Theory};
      log(k, *r.nogood, pol, r.value);
    }
    return r;
  }

  double threshold() const { return nu_; }
  const ColoredMdp& model() const { return *c_; }
  const TheoryOptions& options() const { return opt_; }
  const SearchStats& stats() const { return stats_; }
  const std::vector<ConflictRecord>& conflicts() const { return log_; }
  std::size_t cache_size() const { return cache_.size(); }

 private:
  struct Cached {
    bool conflict;
    double value;
    bool chain;
  };

  bool same_choices(const std::vector<char>& a, const std::vector<char>& b,
                    const std::vector<StateIndex>& states) const {
    const Mdp& m = c_->mdp();
    for (StateIndex s : states)
      for (ChoiceIndex x = m.first_choice(s); x < m.end_choice(s); ++x)
        if (a[x] != b[x]) return false;
    return true;
  }

  void log(const PartialAssignment& k, const Nogood& ng, Polarity pol, double value) {
    if (opt_.log_conflicts) log_.push_back({k, ng, pol, value});
  }

  const ColoredMdp* c_;
  double nu_;
  TheoryOptions opt_;
  IncrementalInducer inducer_;
  std::map<std::pair<PartialAssignment, Polarity>, Cached> cache_;
  std::vector<ConflictRecord> log_;
  SearchStats stats_;
};

/// Uncached single query.
inline std::optional<Nogood> theory_check(const ColoredMdp& c, double threshold,
                                          const PartialAssignment& k, Polarity pol,
                                          double precision = kDefaultPrecision) {
  TheoryOptions opt;
  opt.precision = precision;
  opt.use_cache = false;
  opt.incremental = false;
  return PmcTheory(c, threshold, opt).check(k, pol);
}

/// Adapts a theory to the search hook interface with a fixed polarity.
class TheoryAdapter : public TheoryHook {
 public:
  TheoryAdapter(PmcTheory& theory, Polarity pol) : theory_(&theory), pol_(pol) {}

  std::optional<Nogood> on_partial(const PartialAssignment& k) override { return theory_->check(k, pol_); }
  std::optional<Nogood> on_full(const PartialAssignment& k) override { return theory_->check(k, pol_); }
  SearchStats stats() const override { return theory_->stats(); }

 private:
  PmcTheory* theory_;
  Polarity pol_;
};

inline TheoryAdapter as_hook(PmcTheory& theory, Polarity pol = Polarity::Positive) {
  return TheoryAdapter(theory, pol);
}

/**
 * Value of the chain induced by a total admissible assignment, and whether
 * it meets the threshold. Throws FormulaError if theta violates the
 * constraint.
 */
struct Verification {
  bool viable;
  double value;
};

inline Verification verify_assignment(const ColoredMdp& c, double threshold, const Assignment& theta,
                                      double precision = kDefaultPrecision, const Budget& budget = {}) {
  if (theta.size() != c.params().size()) throw FormulaError("assignment does not cover every parameter");
  for (ParamIndex p = 0; p < theta.size(); ++p)
    if (!c.params()[p].contains(theta[p]))
      throw FormulaError("value of '" + c.params()[p].name + "' outside its domain");
  if (!eval_total(c.tau(), theta))
    throw FormulaError("assignment " + format_assignment(theta.as_partial(), c.params()) +
                       " violates the constraint");
  const Mdp chain = induce(c, theta.as_partial());
  const double v = initial_value(chain, Direction::Chain, precision, budget);
  return {meets_threshold(v, threshold), v};
}

}  // namespace colsynth

#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "colsynth/enumerate.hpp"
#include "colsynth/error.hpp"
#include "colsynth/formula.hpp"
#include "colsynth/mdp.hpp"
#include "colsynth/parameters.hpp"

namespace colsynth {

/**
 * MDP whose choices carry guards: a guard is a conjunction of literals
 * `param = value`, and a choice is available under an assignment iff the
 * assignment does not contradict its guard. The admissible assignments are
 * those satisfying `tau`.
 */
class ColoredMdp {
 public:
  ColoredMdp() = default;
  ColoredMdp(Mdp mdp, ParameterSpace params, Formula tau, std::vector<PartialAssignment> guards,
             std::vector<std::string> state_names = {})
      : mdp_(std::move(mdp)),
        params_(std::move(params)),
        tau_(std::move(tau)),
        guards_(std::move(guards)),
        names_(std::move(state_names)) {
    if (guards_.size() != mdp_.num_choices())
      throw ColoringError("expected " + std::to_string(mdp_.num_choices()) + " guards, got " +
                          std::to_string(guards_.size()));
    if (!names_.empty() && names_.size() != mdp_.num_states())
      throw ModelError("state name count does not match state count");
    check_declared(tau_, params_);
    for (ChoiceIndex c = 0; c < guards_.size(); ++c) {
      for (const auto& l : guards_[c]) {
        if (l.param >= params_.size())
          throw FormulaError("guard of choice " + std::to_string(c) + " uses an undeclared parameter");
        if (!params_[l.param].contains(l.value))
          throw FormulaError("guard of choice " + std::to_string(c) + ": value " +
                             std::to_string(l.value) + " outside the domain of '" +
                             params_[l.param].name + "'");
      }
    }
    by_param_.assign(params_.size(), {});
    for (ChoiceIndex c = 0; c < guards_.size(); ++c)
      for (const auto& l : guards_[c]) by_param_[l.param].push_back(c);
  }

  const Mdp& mdp() const { return mdp_; }
  const ParameterSpace& params() const { return params_; }
  const Formula& tau() const { return tau_; }
  const PartialAssignment& guard(ChoiceIndex c) const { return guards_[c]; }
  const std::vector<PartialAssignment>& guards() const { return guards_; }
  /// Choices whose guard mentions `p`.
  const std::vector<ChoiceIndex>& choices_on(ParamIndex p) const { return by_param_[p]; }

  std::string state_name(StateIndex s) const {
    return names_.empty() ? "s" + std::to_string(s) : names_[s];
  }
  const std::vector<std::string>& state_names() const { return names_; }

  std::vector<ParamIndex> controllable() const { return params_.of_kind(ParamKind::Controllable); }
  std::vector<ParamIndex> uncontrollable() const {
    return params_.of_kind(ParamKind::Uncontrollable);
  }

  /// Same model with a different constraint (parameters must be a superset
  /// of the current ones, appended after them).
  ColoredMdp with_parameters(ParameterSpace params, Formula tau) const {
    if (params.size() < params_.size()) throw FormulaError("parameter list may only grow");
    for (ParamIndex i = 0; i < params_.size(); ++i)
      if (params[i].name != params_[i].name)
        throw FormulaError("existing parameters must keep their position");
    return ColoredMdp(mdp_, std::move(params), std::move(tau), guards_, names_);
  }

  /// mask[c] set iff the guard of c is consistent with k.
  std::vector<char> enabled(const PartialAssignment& k) const {
    std::vector<char> mask(guards_.size());
    for (ChoiceIndex c = 0; c < guards_.size(); ++c) mask[c] = guards_[c].consistent_with(k);
    return mask;
  }

 private:
  Mdp mdp_;
  ParameterSpace params_;
  Formula tau_;
  std::vector<PartialAssignment> guards_;
  std::vector<std::string> names_;
  std::vector<std::vector<ChoiceIndex>> by_param_;
};

/**
 * Checks that every admissible assignment selects exactly one action per
 * state. With at most `exhaustive_limit` admissible assignments the check is
 * exhaustive; beyond that each state's guards must syntactically partition
 * the joint domain of the parameters they mention.
 *
 * Returns human-readable violations (empty means ok), at most `max_reports`.
 */
inline std::vector<std::string> validate_coloring(const ColoredMdp& c,
                                                  std::uint64_t exhaustive_limit = 1000000,
                                                  std::size_t max_reports = 20) {
  std::vector<std::string> out;
  const Mdp& m = c.mdp();
  const auto& space = c.params();
  if (count_space(space, c.tau(), exhaustive_limit) <= exhaustive_limit) {
    for_each_assignment(space, c.tau(), [&](const Assignment& theta) {
      const auto k = theta.as_partial();
      for (StateIndex s = 0; s < m.num_states() && out.size() < max_reports; ++s) {
        std::size_t n = 0;
        for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s); ++a) n += c.guard(a).consistent_with(k);
        if (n != 1)
          out.push_back("state '" + c.state_name(s) + "' has " + std::to_string(n) +
                        " compatible actions under " + format_assignment(k, space));
      }
      return out.size() < max_reports;
    });
    return out;
  }
  for (StateIndex s = 0; s < m.num_states() && out.size() < max_reports; ++s) {
    const ChoiceIndex first = m.first_choice(s), end = m.end_choice(s);
    std::vector<ParamIndex> mentioned;
    for (const auto& l : c.guard(first)) mentioned.push_back(l.param);
    bool ok = true;
    for (ChoiceIndex a = first; a < end && ok; ++a) {
      std::vector<ParamIndex> here;
      for (const auto& l : c.guard(a)) here.push_back(l.param);
      if (here != mentioned) {
        out.push_back("state '" + c.state_name(s) + "': actions '" + m.label(first) + "' and '" +
                      m.label(a) + "' are guarded by different parameters");
        ok = false;
      }
      for (ChoiceIndex b = first; b < a && ok; ++b) {
        if (c.guard(a).consistent_with(c.guard(b))) {
          out.push_back("state '" + c.state_name(s) + "': guards of actions '" + m.label(b) +
                        "' and '" + m.label(a) + "' overlap");
          ok = false;
        }
      }
    }
    if (!ok) continue;
    std::uint64_t joint = 1;
    for (ParamIndex p : mentioned) joint *= space[p].domain_size();
    if (joint != end - first)
      out.push_back("state '" + c.state_name(s) + "': guards cover " + std::to_string(end - first) +
                    " of " + std::to_string(joint) + " joint values");
  }
  return out;
}

/// Throws ColoringError listing the violations, if any.
inline void require_valid_coloring(const ColoredMdp& c, std::uint64_t exhaustive_limit = 1000000) {
  const auto v = validate_coloring(c, exhaustive_limit);
  if (v.empty()) return;
  std::string msg = "invalid coloring:";
  for (const auto& line : v) msg += "\n  " + line;
  throw ColoringError(msg);
}

/// Sub-MDP keeping the choices whose guards are consistent with k. Throws
/// ColoringError if some state loses every choice.
inline Mdp induce(const ColoredMdp& c, const PartialAssignment& k) {
  const auto mask = c.enabled(k);
  const Mdp& m = c.mdp();
  for (StateIndex s = 0; s < m.num_states(); ++s) {
    bool any = false;
    for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s); ++a) any = any || mask[a];
    if (!any)
      throw ColoringError("state '" + c.state_name(s) + "' has no action compatible with " +
                          format_assignment(k, c.params()));
  }
  return masked_model(m, mask);
}

struct DependenceReport {
  std::vector<ParamIndex> dependent;  // sorted
  std::vector<StateIndex> reachable;  // sorted

  std::vector<std::string> names(const ParameterSpace& space) const {
    std::vector<std::string> out;
    for (ParamIndex p : dependent) out.push_back(space[p].name);
    return out;
  }
};

/// Dependence given an explicit choice mask and reachable set.
inline std::vector<ParamIndex> dependent_on_mask(const ColoredMdp& c, const std::vector<char>& mask,
                                                 const std::vector<StateIndex>& reach) {
  std::vector<char> dep(c.params().size(), 0);
  for (StateIndex s : reach)
    for (ChoiceIndex a = c.mdp().first_choice(s); a < c.mdp().end_choice(s); ++a)
      if (mask[a])
        for (const auto& l : c.guard(a)) dep[l.param] = 1;
  std::vector<ParamIndex> out;
  for (ParamIndex p = 0; p < dep.size(); ++p)
    if (dep[p]) out.push_back(p);
  return out;
}

/**
 * Parameters occurring in the guards of choices that survive induction by k
 * at states reachable from `from` in the induced model.
 */
inline DependenceReport dependent_params(const ColoredMdp& c, const PartialAssignment& k,
                                         StateIndex from) {
  const auto mask = c.enabled(k);
  DependenceReport r;
  r.reachable = reachable(c.mdp(), from, mask);
  r.dependent = dependent_on_mask(c, mask, r.reachable);
  return r;
}

/// Literals of k on parameters the reachable part of the induced model
/// depends on.
inline PartialAssignment restrict_conflict(const ColoredMdp& c, const PartialAssignment& k) {
  const auto dep = dependent_params(c, k, c.mdp().initial()).dependent;
  return k.filter([&](ParamIndex p) { return std::binary_search(dep.begin(), dep.end(), p); });
}

/**
 * Maintains the choice mask across a sequence of partial assignments. When
 * the next assignment extends the previous one only the choices guarded by
 * newly assigned parameters are rechecked; otherwise the mask is rebuilt.
 */
class IncrementalInducer {
 public:
  explicit IncrementalInducer(const ColoredMdp& c) : c_(&c), mask_(c.enabled({})) {}

  const std::vector<char>& mask_for(const PartialAssignment& k) {
    if (!prev_.subset_of(k)) {
      mask_ = c_->enabled(k);
      ++rebuilds_;
    } else {
      for (const auto& l : k) {
        if (prev_.contains(l.param)) continue;
        for (ChoiceIndex a : c_->choices_on(l.param))
          if (mask_[a] && c_->guard(a).get(l.param) != l.value) mask_[a] = 0;
      }
      ++reuses_;
    }
    prev_ = k;
    return mask_;
  }

  std::uint64_t rebuilds() const { return rebuilds_; }
  std::uint64_t reuses() const { return reuses_; }

 private:
  const ColoredMdp* c_;
  PartialAssignment prev_;
  std::vector<char> mask_;
  std::uint64_t rebuilds_ = 0;
  std::uint64_t reuses_ = 0;
};

}  // namespace colsynth

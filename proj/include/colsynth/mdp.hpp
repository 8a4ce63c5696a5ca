#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colsynth/error.hpp"

namespace colsynth {

using StateIndex = std::size_t;
using ChoiceIndex = std::size_t;

struct Transition {
  StateIndex target;
  double probability;

  friend bool operator==(const Transition&, const Transition&) = default;
};

using Distribution = std::vector<Transition>;

inline constexpr double kDistributionTolerance = 1e-9;

/**
 * Explicit MDP in compressed row layout: states own a contiguous range of
 * choices, choices own a contiguous range of transitions. A Markov chain is
 * the special case of one choice per state.
 *
 * Instances are immutable; build them with MdpBuilder.
 */
class Mdp {
 public:
  Mdp() = default;

  std::size_t num_states() const { return rewards_.size(); }
  std::size_t num_choices() const { return choice_begin_.empty() ? 0 : choice_begin_.size() - 1; }
  StateIndex initial() const { return initial_; }

  double reward(StateIndex s) const { return rewards_[s]; }
  const std::vector<double>& rewards() const { return rewards_; }

  ChoiceIndex first_choice(StateIndex s) const { return state_begin_[s]; }
  ChoiceIndex end_choice(StateIndex s) const { return state_begin_[s + 1]; }
  std::size_t num_choices(StateIndex s) const { return end_choice(s) - first_choice(s); }

  std::span<const Transition> distribution(ChoiceIndex c) const {
    return {entries_.data() + choice_begin_[c], choice_begin_[c + 1] - choice_begin_[c]};
  }
  const std::string& label(ChoiceIndex c) const { return labels_[c]; }
  StateIndex state_of(ChoiceIndex c) const {
    auto it = std::upper_bound(state_begin_.begin(), state_begin_.end(), c);
    return static_cast<StateIndex>(it - state_begin_.begin()) - 1;
  }

  bool is_chain() const {
    for (StateIndex s = 0; s < num_states(); ++s)
      if (num_choices(s) != 1) return false;
    return true;
  }

 private:
  friend class MdpBuilder;

  StateIndex initial_ = 0;
  std::vector<double> rewards_;
  std::vector<ChoiceIndex> state_begin_{0};
  std::vector<std::size_t> choice_begin_{0};
  std::vector<Transition> entries_;
  std::vector<std::string> labels_;
};

/// Incremental constructor for Mdp. States must be added in index order and
/// their choices added before the next state starts.
class MdpBuilder {
 public:
  StateIndex add_state(double reward) {
    if (!(reward >= 0.0) || std::isinf(reward))
      throw ModelError("state " + std::to_string(m_.rewards_.size()) +
                       ": reward must be finite and nonnegative");
    close_state();
    m_.rewards_.push_back(reward);
    open_ = true;
    return m_.rewards_.size() - 1;
  }

  ChoiceIndex add_choice(std::string label, Distribution dist) {
    if (!open_) throw ModelError("add_choice called before add_state");
    std::sort(dist.begin(), dist.end(),
              [](const Transition& a, const Transition& b) { return a.target < b.target; });
    m_.entries_.insert(m_.entries_.end(), dist.begin(), dist.end());
    m_.choice_begin_.push_back(m_.entries_.size());
    m_.labels_.push_back(std::move(label));
    return m_.labels_.size() - 1;
  }

  void set_initial(StateIndex s) { m_.initial_ = s; }

  Mdp build() {
    close_state();
    open_ = false;
    validate();
    return std::move(m_);
  }

 private:
  void close_state() {
    if (open_) m_.state_begin_.push_back(m_.labels_.size());
    open_ = false;
  }

  void validate() const {
    const std::size_t n = m_.rewards_.size();
    if (n == 0) throw ModelError("model has no states");
    if (m_.initial_ >= n) throw ModelError("initial state out of range");
    for (StateIndex s = 0; s < n; ++s) {
      if (m_.state_begin_[s + 1] == m_.state_begin_[s])
        throw ModelError("state " + std::to_string(s) + " has no available action");
      for (ChoiceIndex c = m_.state_begin_[s]; c < m_.state_begin_[s + 1]; ++c) {
        double sum = 0.0;
        StateIndex prev = n;
        for (std::size_t e = m_.choice_begin_[c]; e < m_.choice_begin_[c + 1]; ++e) {
          const auto& t = m_.entries_[e];
          const std::string where =
              "state " + std::to_string(s) + ", action '" + m_.labels_[c] + "'";
          if (t.target >= n) throw ModelError(where + ": successor out of range");
          if (t.target == prev) throw ModelError(where + ": duplicate successor");
          if (!(t.probability > 0.0) || t.probability > 1.0 + kDistributionTolerance)
            throw ModelError(where + ": probability outside (0,1]");
          prev = t.target;
          sum += t.probability;
        }
        if (std::abs(sum - 1.0) > kDistributionTolerance)
          throw ModelError("state " + std::to_string(s) + ", action '" + m_.labels_[c] +
                           "': probabilities sum to " + std::to_string(sum));
      }
    }
  }

  Mdp m_;
  bool open_ = false;
};

/// States reachable from `from` when only choices with mask[c] set are
/// available. An empty mask means every choice is available.
inline std::vector<StateIndex> reachable(const Mdp& mdp, StateIndex from,
                                         const std::vector<char>& mask = {}) {
  if (from >= mdp.num_states()) throw ModelError("reachable: state index out of range");
  std::vector<char> seen(mdp.num_states(), 0);
  std::vector<StateIndex> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    StateIndex s = stack.back();
    stack.pop_back();
    for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
      if (!mask.empty() && !mask[c]) continue;
      for (const auto& t : mdp.distribution(c)) {
        if (!seen[t.target]) {
          seen[t.target] = 1;
          stack.push_back(t.target);
        }
      }
    }
  }
  std::vector<StateIndex> out;
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (seen[s]) out.push_back(s);
  return out;
}

/**
 * Sub-model on the states reachable from the initial state under `mask`,
 * keeping the original relative order of states and choices. Every kept
 * state must retain at least one choice.
 */
inline Mdp reachable_submodel(const Mdp& mdp, const std::vector<char>& mask = {}) {
  const auto keep = reachable(mdp, mdp.initial(), mask);
  std::vector<StateIndex> remap(mdp.num_states(), mdp.num_states());
  for (std::size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = i;
  MdpBuilder b;
  for (StateIndex s : keep) {
    b.add_state(mdp.reward(s));
    for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
      if (!mask.empty() && !mask[c]) continue;
      Distribution d;
      for (const auto& t : mdp.distribution(c)) d.push_back({remap[t.target], t.probability});
      b.add_choice(mdp.label(c), std::move(d));
    }
  }
  b.set_initial(remap[mdp.initial()]);
  return b.build();
}

/// Copy of `mdp` keeping only choices with mask[c] set; state indices are
/// unchanged. Throws ColoringError if a state loses every choice.
inline Mdp masked_model(const Mdp& mdp, const std::vector<char>& mask) {
  MdpBuilder b;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    b.add_state(mdp.reward(s));
    bool any = false;
    for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
      if (!mask[c]) continue;
      any = true;
      auto d = mdp.distribution(c);
      b.add_choice(mdp.label(c), Distribution(d.begin(), d.end()));
    }
    if (!any) throw ColoringError("state " + std::to_string(s) + " has no compatible action");
  }
  b.set_initial(mdp.initial());
  return b.build();
}

}  // namespace colsynth

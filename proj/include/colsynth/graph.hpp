#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "colsynth/mdp.hpp"

namespace colsynth {

/**
 * Strongly connected components of the graph induced by the MDP restricted
 * to `state_alive` states and `choice_alive` choices (empty vectors mean all
 * alive). Successors outside the alive set are ignored.
 *
 * Returns components in the order Tarjan's algorithm closes them, which is a
 * reverse topological order: every component only reaches components listed
 * before it (or itself).
 */
inline std::vector<std::vector<StateIndex>> strongly_connected_components(
    const Mdp& mdp, const std::vector<char>& state_alive = {},
    const std::vector<char>& choice_alive = {}) {
  const std::size_t n = mdp.num_states();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  auto alive = [&](StateIndex s) { return state_alive.empty() || state_alive[s]; };
  auto choice_ok = [&](ChoiceIndex c) { return choice_alive.empty() || choice_alive[c]; };

  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<StateIndex> stack;
  std::vector<std::vector<StateIndex>> components;
  std::size_t next_index = 0;

  // Explicit DFS frames: state, current choice, current transition offset.
  struct Frame {
    StateIndex state;
    ChoiceIndex choice;
    std::size_t edge;
  };
  std::vector<Frame> frames;

  for (StateIndex root = 0; root < n; ++root) {
    if (!alive(root) || index[root] != kUnvisited) continue;
    frames.push_back({root, mdp.first_choice(root), 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;

    while (!frames.empty()) {
      Frame& f = frames.back();
      const StateIndex s = f.state;
      bool descended = false;
      while (f.choice < mdp.end_choice(s)) {
        if (!choice_ok(f.choice)) {
          ++f.choice;
          f.edge = 0;
          continue;
        }
        auto dist = mdp.distribution(f.choice);
        if (f.edge >= dist.size()) {
          ++f.choice;
          f.edge = 0;
          continue;
        }
        const StateIndex t = dist[f.edge++].target;
        if (!alive(t)) continue;
        if (index[t] == kUnvisited) {
          index[t] = low[t] = next_index++;
          stack.push_back(t);
          on_stack[t] = 1;
          frames.push_back({t, mdp.first_choice(t), 0});
          descended = true;
          break;
        }
        if (on_stack[t]) low[s] = std::min(low[s], index[t]);
      }
      if (descended) continue;

      if (low[s] == index[s]) {
        std::vector<StateIndex> comp;
        StateIndex t;
        do {
          t = stack.back();
          stack.pop_back();
          on_stack[t] = 0;
          comp.push_back(t);
        } while (t != s);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      frames.pop_back();
      if (!frames.empty()) {
        const StateIndex parent = frames.back().state;
        low[parent] = std::min(low[parent], low[s]);
      }
    }
  }
  return components;
}

/**
 * Maximal end components of the sub-MDP on `allowed` states (empty means all
 * states). Uses the classic refinement: split into SCCs, drop choices that
 * leave their SCC, drop states without choices, repeat to a fixed point.
 */
inline std::vector<std::vector<StateIndex>> maximal_end_components(
    const Mdp& mdp, const std::vector<char>& allowed = {}) {
  const std::size_t n = mdp.num_states();
  std::vector<char> state_alive(n, 1);
  if (!allowed.empty()) state_alive = allowed;
  std::vector<char> choice_alive(mdp.num_choices(), 1);
  std::vector<std::size_t> comp_of(n, 0);

  bool changed = true;
  std::vector<std::vector<StateIndex>> comps;
  while (changed) {
    changed = false;
    comps = strongly_connected_components(mdp, state_alive, choice_alive);
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (StateIndex s : comps[i]) comp_of[s] = i;

    for (StateIndex s = 0; s < n; ++s) {
      if (!state_alive[s]) continue;
      bool has_choice = false;
      for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
        if (!choice_alive[c]) continue;
        for (const auto& t : mdp.distribution(c)) {
          if (!state_alive[t.target] || comp_of[t.target] != comp_of[s]) {
            choice_alive[c] = 0;
            changed = true;
            break;
          }
        }
        has_choice = has_choice || choice_alive[c];
      }
      if (!has_choice) {
        state_alive[s] = 0;
        changed = true;
      }
    }
  }
  std::vector<std::vector<StateIndex>> mecs;
  for (auto& comp : comps) {
    if (state_alive[comp.front()]) mecs.push_back(std::move(comp));
  }
  return mecs;
}

/// States that reach some state in `targets` with positive probability under
/// some choice resolution.
inline std::vector<char> can_reach(const Mdp& mdp, const std::vector<char>& targets) {
  const std::size_t n = mdp.num_states();
  std::vector<std::vector<StateIndex>> preds(n);
  for (StateIndex s = 0; s < n; ++s)
    for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c)
      for (const auto& t : mdp.distribution(c)) preds[t.target].push_back(s);
  std::vector<char> mark = targets;
  std::vector<StateIndex> work;
  for (StateIndex s = 0; s < n; ++s)
    if (mark[s]) work.push_back(s);
  while (!work.empty()) {
    StateIndex t = work.back();
    work.pop_back();
    for (StateIndex s : preds[t]) {
      if (!mark[s]) {
        mark[s] = 1;
        work.push_back(s);
      }
    }
  }
  return mark;
}

/// States from which some policy reaches `targets` with probability one.
inline std::vector<char> almost_sure_reach_max(const Mdp& mdp, const std::vector<char>& targets) {
  const std::size_t n = mdp.num_states();
  std::vector<char> outer(n, 1);
  for (;;) {
    std::vector<char> inner = targets;
    bool grew = true;
    while (grew) {
      grew = false;
      for (StateIndex s = 0; s < n; ++s) {
        if (inner[s] || !outer[s]) continue;
        for (ChoiceIndex c = mdp.first_choice(s); c < mdp.end_choice(s); ++c) {
          bool inside = true, hits = false;
          for (const auto& t : mdp.distribution(c)) {
            inside = inside && outer[t.target];
            hits = hits || inner[t.target];
          }
          if (inside && hits) {
            inner[s] = 1;
            grew = true;
            break;
          }
        }
      }
    }
    if (inner == outer) return outer;
    outer = std::move(inner);
  }
}

}  // namespace colsynth

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/error.hpp"
#include "colsynth/mdp.hpp"

namespace colsynth {

struct Pomdp {
  Mdp mdp;
  std::vector<std::size_t> observation;  // per state
  std::size_t num_observations = 0;
};

/**
 * Colored MDP whose admissible assignments are the k-memory finite-state
 * controllers of the given POMDPs.
 *
 * States are pairs (s, m) with index s * k + m. For every observation z and
 * memory node m a controllable parameter o<z>_m<m> chooses jointly the
 * action and the next memory node: value i * k + n means action i, move to
 * memory n. With k = 1 this is just the action index, one parameter per
 * observation. Several POMDPs are told apart by an uncontrollable selector
 * `e` whose value d enables the transitions of POMDP d.
 */
inline ColoredMdp pomdp_to_colored(const std::vector<Pomdp>& pomdps, std::size_t memory = 1) {
  if (pomdps.empty()) throw ModelError("no POMDP given");
  if (memory == 0) throw ModelError("memory size must be positive");
  const Pomdp& ref = pomdps.front();
  const Mdp& m0 = ref.mdp;
  const std::size_t n = m0.num_states(), k = memory;
  for (std::size_t d = 0; d < pomdps.size(); ++d) {
    const Pomdp& p = pomdps[d];
    const std::string where = "POMDP " + std::to_string(d);
    if (p.observation.size() != p.mdp.num_states()) throw ModelError(where + ": observation list has wrong length");
    for (std::size_t z : p.observation)
      if (z >= p.num_observations) throw ModelError(where + ": observation index out of range");
    if (p.mdp.num_states() != n || p.num_observations != ref.num_observations || p.observation != ref.observation ||
        p.mdp.initial() != m0.initial())
      throw ModelError(where + ": states, observations or initial state differ from POMDP 0");
    for (StateIndex s = 0; s < n; ++s) {
      if (p.mdp.num_choices(s) != m0.num_choices(s) || p.mdp.reward(s) != m0.reward(s))
        throw ModelError(where + ": actions or rewards of state " + std::to_string(s) + " differ from POMDP 0");
      for (std::size_t a = 0; a < m0.num_choices(s); ++a)
        if (p.mdp.label(p.mdp.first_choice(s) + a) != m0.label(m0.first_choice(s) + a))
          throw ModelError(where + ": action labels of state " + std::to_string(s) + " differ from POMDP 0");
    }
  }
  std::vector<std::size_t> actions_of(ref.num_observations, 0);
  for (StateIndex s = 0; s < n; ++s) {
    auto& na = actions_of[ref.observation[s]];
    if (na != 0 && na != m0.num_choices(s))
      throw ModelError("states with observation " + std::to_string(ref.observation[s]) +
                       " offer different numbers of actions");
    na = m0.num_choices(s);
  }

  ParameterSpace space;
  std::vector<std::vector<ParamIndex>> choice_param(ref.num_observations, std::vector<ParamIndex>(k));
  for (std::size_t z = 0; z < ref.num_observations; ++z) {
    if (actions_of[z] == 0) continue;  // observation never emitted
    for (std::size_t mem = 0; mem < k; ++mem)
      choice_param[z][mem] = space.add(Parameter{"o" + std::to_string(z) + "_m" + std::to_string(mem), 0,
                                                 static_cast<Value>(actions_of[z] * k) - 1,
                                                 ParamKind::Controllable, {}});
  }
  std::optional<ParamIndex> selector;
  if (pomdps.size() > 1)
    selector = space.add(Parameter{"e", 0, static_cast<Value>(pomdps.size()) - 1, ParamKind::Uncontrollable, {}});

  MdpBuilder b;
  std::vector<PartialAssignment> guards;
  std::vector<std::string> names;
  for (StateIndex s = 0; s < n; ++s) {
    const std::size_t z = ref.observation[s];
    for (std::size_t mem = 0; mem < k; ++mem) {
      b.add_state(m0.reward(s));
      names.push_back("s" + std::to_string(s) + "_m" + std::to_string(mem));
      for (std::size_t d = 0; d < pomdps.size(); ++d) {
        const Mdp& md = pomdps[d].mdp;
        for (std::size_t a = 0; a < md.num_choices(s); ++a) {
          const ChoiceIndex c = md.first_choice(s) + a;
          for (std::size_t next = 0; next < k; ++next) {
            Distribution dist;
            for (const auto& t : md.distribution(c)) dist.push_back({t.target * k + next, t.probability});
            std::string label = md.label(c);
            if (k > 1) label += "/m" + std::to_string(next);
            if (selector) label = "e" + std::to_string(d) + ":" + label;
            b.add_choice(std::move(label), std::move(dist));
            PartialAssignment g{{choice_param[z][mem], static_cast<Value>(a * k + next)}};
            if (selector) g.set(*selector, static_cast<Value>(d));
            guards.push_back(std::move(g));
          }
        }
      }
    }
  }
  b.set_initial(m0.initial() * k);
  return ColoredMdp(b.build(), std::move(space), Formula::boolean(true), std::move(guards), std::move(names));
}

}  // namespace colsynth

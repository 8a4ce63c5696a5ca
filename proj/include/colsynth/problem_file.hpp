#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>
#include <json.hpp>

#include "colsynth/colored_mdp.hpp"
#include "colsynth/error.hpp"
#include "colsynth/formula.hpp"

namespace colsynth {

/**
 * Problem file contents, kept close to the text so that writing it back is
 * byte-stable. Numbers (probabilities, rewards, threshold) stay strings:
 * either exact "p" / "p/q" or a decimal literal.
 */
struct ProblemFile {
  struct Param {
    std::string name;
    ParamKind kind = ParamKind::Controllable;
    Value lo = 0, hi = 0;
    std::vector<Value> features;
  };
  struct Transition {
    std::string target;
    std::string probability;
  };
  struct Action {
    std::string label;
    std::map<std::string, Value> guard;
    std::vector<Transition> transitions;
  };
  struct State {
    std::string name;
    std::string reward = "0";
    std::vector<Action> actions;
  };

  int format_version = 1;
  std::vector<Param> parameters;
  std::string tau = "true";
  std::string initial;
  std::vector<State> states;
  std::string threshold = "0";
  std::string direction = ">=";
};

/// A loaded, validated problem.
struct Problem {
  ColoredMdp model;
  double threshold = 0.0;
};

/// Exact ("p", "p/q") or decimal number.
struct Number {
  bool exact = true;
  boost::rational<std::int64_t> q{0};
  double d = 0.0;

  double value() const { return exact ? boost::rational_cast<double>(q) : d; }
};

inline std::optional<Number> parse_number(std::string_view s) {
  auto parse_int = [](std::string_view t, std::int64_t& out) {
    if (t.empty()) return false;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && p == t.data() + t.size();
  };
  Number n;
  const auto slash = s.find('/');
  std::int64_t a = 0, b = 1;
  if (slash == std::string_view::npos) {
    if (parse_int(s, a)) {
      n.q = a;
      return n;
    }
  } else if (parse_int(s.substr(0, slash), a) && parse_int(s.substr(slash + 1), b) && b > 0) {
    n.q = boost::rational<std::int64_t>(a, b);
    return n;
  } else {
    return std::nullopt;
  }
  const std::string str(s);
  if (str.empty() || std::isspace(static_cast<unsigned char>(str.front()))) return std::nullopt;
  char* end = nullptr;
  const double d = std::strtod(str.c_str(), &end);
  if (end != str.c_str() + str.size() || !std::isfinite(d)) return std::nullopt;
  n.exact = false;
  n.d = d;
  return n;
}

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_fail(const std::string& path, const std::string& what) {
  throw SchemaError(path + ": " + what);
}

inline void only_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) schema_fail(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) schema_fail(path, "unknown field '" + k + "'");
  }
}

inline const json& need(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(path, "missing field '" + key + "'");
  return *it;
}

inline std::string need_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_fail(path, "expected a string");
  return v.get<std::string>();
}

inline Value need_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) schema_fail(path, "expected an integer");
  return v.get<Value>();
}

/// Accepts a JSON number or a numeric string; returns the canonical string.
inline std::string need_number(const json& v, const std::string& path) {
  std::string s;
  if (v.is_string())
    s = v.get<std::string>();
  else if (v.is_number())
    s = v.dump();
  else
    schema_fail(path, "expected a number or a numeric string");
  if (!parse_number(s)) schema_fail(path, "'" + s + "' is not a number");
  return s;
}

}  // namespace detail

inline ProblemFile parse_problem_file(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  ProblemFile f;
  detail::only_keys(doc, "$", {"format_version", "parameters", "tau", "mdp", "spec"});
  f.format_version = static_cast<int>(detail::need_int(detail::need(doc, "format_version", "$"), "format_version"));
  if (f.format_version != 1) detail::schema_fail("format_version", "unsupported version " + std::to_string(f.format_version));

  const json& params = detail::need(doc, "parameters", "$");
  if (!params.is_array()) detail::schema_fail("parameters", "expected an array");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string path = "parameters[" + std::to_string(i) + "]";
    const json& p = params[i];
    detail::only_keys(p, path, {"name", "kind", "domain", "features"});
    ProblemFile::Param out;
    out.name = detail::need_string(detail::need(p, "name", path), path + ".name");
    const std::string kind = detail::need_string(detail::need(p, "kind", path), path + ".kind");
    if (kind == "controllable")
      out.kind = ParamKind::Controllable;
    else if (kind == "uncontrollable")
      out.kind = ParamKind::Uncontrollable;
    else
      detail::schema_fail(path + ".kind", "expected 'controllable' or 'uncontrollable'");
    const json& dom = detail::need(p, "domain", path);
    if (!dom.is_array() || dom.size() != 2) detail::schema_fail(path + ".domain", "expected [lo, hi]");
    out.lo = detail::need_int(dom[0], path + ".domain[0]");
    out.hi = detail::need_int(dom[1], path + ".domain[1]");
    if (out.lo > out.hi) detail::schema_fail(path + ".domain", "lo exceeds hi");
    if (auto it = p.find("features"); it != p.end()) {
      if (!it->is_array()) detail::schema_fail(path + ".features", "expected an array");
      for (std::size_t j = 0; j < it->size(); ++j)
        out.features.push_back(detail::need_int((*it)[j], path + ".features[" + std::to_string(j) + "]"));
    }
    f.parameters.push_back(std::move(out));
  }

  f.tau = detail::need_string(detail::need(doc, "tau", "$"), "tau");

  const json& mdp = detail::need(doc, "mdp", "$");
  detail::only_keys(mdp, "mdp", {"initial", "states"});
  f.initial = detail::need_string(detail::need(mdp, "initial", "mdp"), "mdp.initial");
  const json& states = detail::need(mdp, "states", "mdp");
  if (!states.is_array()) detail::schema_fail("mdp.states", "expected an array");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string path = "mdp.states[" + std::to_string(i) + "]";
    const json& s = states[i];
    detail::only_keys(s, path, {"name", "reward", "actions"});
    ProblemFile::State st;
    st.name = detail::need_string(detail::need(s, "name", path), path + ".name");
    if (auto it = s.find("reward"); it != s.end()) st.reward = detail::need_number(*it, path + ".reward");
    const json& acts = detail::need(s, "actions", path);
    if (!acts.is_array()) detail::schema_fail(path + ".actions", "expected an array");
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const std::string apath = path + ".actions[" + std::to_string(a) + "]";
      const json& aj = acts[a];
      detail::only_keys(aj, apath, {"label", "guard", "transitions"});
      ProblemFile::Action act;
      act.label = detail::need_string(detail::need(aj, "label", apath), apath + ".label");
      if (auto it = aj.find("guard"); it != aj.end()) {
        if (!it->is_object()) detail::schema_fail(apath + ".guard", "expected an object");
        for (const auto& [k, v] : it->items()) act.guard[k] = detail::need_int(v, apath + ".guard." + k);
      }
      const json& tr = detail::need(aj, "transitions", apath);
      if (!tr.is_array() || tr.empty()) detail::schema_fail(apath + ".transitions", "expected a non-empty array");
      for (std::size_t t = 0; t < tr.size(); ++t) {
        const std::string tpath = apath + ".transitions[" + std::to_string(t) + "]";
        detail::only_keys(tr[t], tpath, {"target", "probability"});
        act.transitions.push_back(
            {detail::need_string(detail::need(tr[t], "target", tpath), tpath + ".target"),
             detail::need_number(detail::need(tr[t], "probability", tpath), tpath + ".probability")});
      }
      st.actions.push_back(std::move(act));
    }
    f.states.push_back(std::move(st));
  }

  const json& spec = detail::need(doc, "spec", "$");
  detail::only_keys(spec, "spec", {"threshold", "direction"});
  f.threshold = detail::need_number(detail::need(spec, "threshold", "spec"), "spec.threshold");
  if (auto it = spec.find("direction"); it != spec.end()) f.direction = detail::need_string(*it, "spec.direction");
  if (f.direction != ">=") detail::schema_fail("spec.direction", "only '>=' is supported");
  return f;
}

/// Canonical text: sorted keys, two-space indentation, numbers as strings.
inline std::string to_canonical_json(const ProblemFile& f) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = f.format_version;
  json params = json::array();
  for (const auto& p : f.parameters) {
    json pj;
    pj["name"] = p.name;
    pj["kind"] = std::string(to_string(p.kind));
    pj["domain"] = json::array({p.lo, p.hi});
    if (!p.features.empty()) pj["features"] = p.features;
    params.push_back(std::move(pj));
  }
  doc["parameters"] = std::move(params);
  doc["tau"] = f.tau;
  json states = json::array();
  for (const auto& s : f.states) {
    json sj;
    sj["name"] = s.name;
    sj["reward"] = s.reward;
    json acts = json::array();
    for (const auto& a : s.actions) {
      json aj;
      aj["label"] = a.label;
      aj["guard"] = json::object();
      for (const auto& [k, v] : a.guard) aj["guard"][k] = v;
      json tr = json::array();
      for (const auto& t : a.transitions) tr.push_back({{"target", t.target}, {"probability", t.probability}});
      aj["transitions"] = std::move(tr);
      acts.push_back(std::move(aj));
    }
    sj["actions"] = std::move(acts);
    states.push_back(std::move(sj));
  }
  doc["mdp"] = {{"initial", f.initial}, {"states", std::move(states)}};
  doc["spec"] = {{"threshold", f.threshold}, {"direction", f.direction}};
  return doc.dump(2) + "\n";
}

/// Builds and validates the colored MDP described by a problem file.
inline Problem build_problem(const ProblemFile& f, std::uint64_t exhaustive_limit = 1000000) {
  ParameterSpace space;
  for (std::size_t i = 0; i < f.parameters.size(); ++i) {
    const auto& p = f.parameters[i];
    try {
      space.add(Parameter{p.name, p.lo, p.hi, p.kind, p.features});
    } catch (const FormulaError& e) {
      throw SchemaError("parameters[" + std::to_string(i) + "]: " + e.what());
    }
  }
  Formula tau;
  try {
    tau = parse_sexpr(f.tau, space);
  } catch (const FormulaError& e) {
    throw SchemaError(std::string("tau: ") + e.what());
  }
  if (tau.is_term()) throw SchemaError("tau: expected a boolean formula");

  std::map<std::string, StateIndex> index;
  for (std::size_t i = 0; i < f.states.size(); ++i)
    if (!index.emplace(f.states[i].name, i).second)
      throw SchemaError("mdp.states[" + std::to_string(i) + "].name: duplicate state '" + f.states[i].name + "'");
  auto it = index.find(f.initial);
  if (it == index.end()) throw SchemaError("mdp.initial: unknown state '" + f.initial + "'");

  MdpBuilder b;
  std::vector<PartialAssignment> guards;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < f.states.size(); ++i) {
    const auto& s = f.states[i];
    const std::string path = "mdp.states[" + std::to_string(i) + "] ('" + s.name + "')";
    const Number reward = *parse_number(s.reward);
    if (reward.value() < 0) throw SchemaError(path + ".reward: must be nonnegative");
    if (s.actions.empty()) throw SchemaError(path + ".actions: state has no action");
    b.add_state(reward.value());
    names.push_back(s.name);
    for (std::size_t a = 0; a < s.actions.size(); ++a) {
      const auto& act = s.actions[a];
      const std::string apath = path + ".actions[" + std::to_string(a) + "] ('" + act.label + "')";
      PartialAssignment g;
      for (const auto& [name, v] : act.guard) {
        auto p = space.find(name);
        if (!p) throw SchemaError(apath + ".guard: undeclared parameter '" + name + "'");
        if (!space[*p].contains(v))
          throw SchemaError(apath + ".guard." + name + ": value " + std::to_string(v) + " outside the domain");
        g.set(*p, v);
      }
      guards.push_back(std::move(g));
      Distribution d;
      bool exact = true;
      boost::rational<std::int64_t> qsum(0);
      double dsum = 0.0;
      std::set<StateIndex> seen;
      for (std::size_t t = 0; t < act.transitions.size(); ++t) {
        const auto& tr = act.transitions[t];
        const std::string tpath = apath + ".transitions[" + std::to_string(t) + "]";
        auto target = index.find(tr.target);
        if (target == index.end()) throw SchemaError(tpath + ".target: unknown state '" + tr.target + "'");
        if (!seen.insert(target->second).second)
          throw SchemaError(tpath + ".target: duplicate successor '" + tr.target + "'");
        const Number pr = *parse_number(tr.probability);
        if (!(pr.value() > 0.0) || pr.value() > 1.0 + kDistributionTolerance)
          throw SchemaError(tpath + ".probability: must lie in (0, 1]");
        if (pr.exact) {
          try {
            qsum += pr.q;
          } catch (const std::exception&) {
            exact = false;
          }
        } else {
          exact = false;
        }
        dsum += pr.value();
        d.push_back({target->second, pr.value()});
      }
      const bool ok = exact ? qsum == boost::rational<std::int64_t>(1) : std::abs(dsum - 1.0) <= kDistributionTolerance;
      if (!ok) {
        std::ostringstream os;
        if (exact)
          os << qsum.numerator() << "/" << qsum.denominator();
        else
          os << dsum;
        throw SchemaError(apath + ": probabilities sum to " + os.str());
      }
      b.add_choice(act.label, std::move(d));
    }
  }
  b.set_initial(it->second);
  Mdp m = b.build();
  Problem out{ColoredMdp(std::move(m), std::move(space), std::move(tau), std::move(guards), std::move(names)),
              parse_number(f.threshold)->value()};
  require_valid_coloring(out.model, exhaustive_limit);
  return out;
}

inline Problem load_problem(std::string_view text, std::uint64_t exhaustive_limit = 1000000) {
  return build_problem(parse_problem_file(text), exhaustive_limit);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Problem file for an in-memory model; probabilities are written with
/// round-trip precision.
inline ProblemFile export_problem(const ColoredMdp& c, double threshold) {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  ProblemFile f;
  for (const auto& p : c.params().all()) f.parameters.push_back({p.name, p.kind, p.lo, p.hi, p.features});
  f.tau = to_sexpr(c.tau(), c.params());
  const Mdp& m = c.mdp();
  f.initial = c.state_name(m.initial());
  for (StateIndex s = 0; s < m.num_states(); ++s) {
    ProblemFile::State st;
    st.name = c.state_name(s);
    st.reward = num(m.reward(s));
    for (ChoiceIndex a = m.first_choice(s); a < m.end_choice(s); ++a) {
      ProblemFile::Action act;
      act.label = m.label(a);
      for (const auto& l : c.guard(a)) act.guard[c.params()[l.param].name] = l.value;
      for (const auto& t : m.distribution(a)) act.transitions.push_back({c.state_name(t.target), num(t.probability)});
      st.actions.push_back(std::move(act));
    }
    f.states.push_back(std::move(st));
  }
  f.threshold = num(threshold);
  return f;
}

}  // namespace colsynth

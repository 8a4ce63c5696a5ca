#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "colsynth/beetle.hpp"
#include "colsynth/dt.hpp"
#include "colsynth/enumerate.hpp"
#include "colsynth/error.hpp"
#include "colsynth/fd_solver.hpp"
#include "colsynth/oracle.hpp"
#include "colsynth/problem_file.hpp"
#include "colsynth/robust.hpp"
#include "colsynth/theory.hpp"

namespace colsynth::cli {

using Report = nlohmann::ordered_json;

enum ExitCode { kSat = 0, kUnsat = 1, kError = 2 };

struct Options {
  std::string command;
  std::string model;
  std::optional<double> threshold;
  double precision = kDefaultPrecision;
  std::string lazy_start = "on";
  std::string cache = "on";
  std::optional<double> timeout;
  std::uint64_t max_enum = 1000000;
  std::optional<std::size_t> nodes;
  std::vector<std::size_t> sweep;
  bool robust = false;
  std::string assign;
  bool multi = false;
};

namespace detail {

inline Report number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Report assignment_json(const PartialAssignment& k, const ParameterSpace& space) {
  Report out = Report::object();
  for (const auto& l : k.literals()) out[space[l.param].name] = l.value;
  return out;
}

inline Report stats_json(const SearchStats& s, double wall_ms) {
  return Report{{"decisions", s.decisions},     {"conflicts", s.conflicts},
                {"theory_calls", s.theory_calls}, {"cache_hits", s.cache_hits},
                {"iterations", s.iterations},   {"wall_time_ms", static_cast<std::int64_t>(std::llround(wall_ms))}};
}

inline Report tree_json(const DecisionTree& t, const std::vector<std::string>& names, std::size_t i = 0) {
  const DtNode& n = t.nodes[i];
  if (n.leaf) {
    Report leaf{{"action", n.action}};
    if (n.action >= 0 && static_cast<std::size_t>(n.action) < names.size())
      leaf["action_name"] = names[static_cast<std::size_t>(n.action)];
    return leaf;
  }
  return Report{{"feature", n.feature},
                {"threshold", n.threshold},
                {"then", tree_json(t, names, n.then_child)},
                {"else", tree_json(t, names, n.else_child)}};
}

/// Label of the first action guarded by p = a, for each value a of p.
inline std::vector<std::string> action_names(const ColoredMdp& c, ParamIndex p) {
  const Parameter& par = c.params()[p];
  std::vector<std::string> out;
  for (Value a = par.lo; a <= par.hi; ++a) {
    std::string name = "action " + std::to_string(a);
    for (ChoiceIndex ch : c.choices_on(p))
      if (c.guard(ch).get(p) == std::optional<Value>(a)) {
        name = c.mdp().label(ch);
        break;
      }
    out.push_back(std::move(name));
  }
  return out;
}

inline PartialAssignment parse_assign(const std::string& text, const ParameterSpace& space) {
  PartialAssignment k;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormulaError("expected name=value in '" + item + "'");
    const std::string name = item.substr(0, eq);
    const auto p = space.find(name);
    if (!p) throw FormulaError("unknown parameter '" + name + "'");
    Value v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw FormulaError("value of '" + name + "' is not an integer");
    }
    if (k.contains(*p)) throw FormulaError("parameter '" + name + "' assigned twice");
    k.set(*p, v);
  }
  return k;
}

/**
 * Values of every compatible environment for a controllable assignment.
 * Throws InternalError if any of them is not viable or none exists.
 */
inline Report verify_robust(const ColoredMdp& c, double nu, const PartialAssignment& theta_x, double precision,
                            const Budget& budget) {
  Report values = Report::array();
  bool ok = true;
  for_each_extension(c.params(), c.tau(), c.uncontrollable(), theta_x, [&](const PartialAssignment& k, Truth t) {
    if (t != Truth::True) return true;
    const auto v = verify_assignment(c, nu, Assignment::from_partial(k, c.params()), precision, budget);
    ok = ok && v.viable;
    values.push_back(Report{{"environment", assignment_json(k.filter([&](ParamIndex p) {
                                return c.params()[p].kind == ParamKind::Uncontrollable;
                              }), c.params())},
                            {"value", number(v.value)}});
    return true;
  });
  if (!ok || values.empty()) throw InternalError("witness failed re-verification");
  return values;
}

inline double verify_single(const ColoredMdp& c, double nu, const PartialAssignment& theta, double precision,
                            const Budget& budget) {
  const auto v = verify_assignment(c, nu, Assignment::from_partial(theta, c.params()), precision, budget);
  if (!v.viable) throw InternalError("witness failed re-verification");
  return v.value;
}

class Job {
 public:
  explicit Job(const Options& o) : o_(o) {
    if (o.timeout) budget_ = Budget::seconds(*o.timeout);
  }

  int run(Report& rep) {
    const auto text = read_text_file(o_.model);
    const std::uint64_t limit = std::max<std::uint64_t>(o_.max_enum, 1);
    Problem prob = load_problem(text, limit);
    nu_ = o_.threshold.value_or(prob.threshold);
    rep["config"]["threshold"] = nu_;
    const ColoredMdp& c = prob.model;
    if (o_.command == "check") return check(c, rep);
    if (o_.command == "robust") return robust(c, rep);
    if (o_.command == "dt") return dt(c, rep);
    if (o_.command == "oracle") return oracle(c, rep);
    return value(c, rep);
  }

  SearchStats stats;

 private:
  bool lazy() const { return o_.lazy_start == "on"; }
  bool cache() const { return o_.cache == "on"; }

  int verdict(Report& rep, Verdict v) {
    rep["verdict"] = v == Verdict::Sat ? "sat" : "unsat";
    return v == Verdict::Sat ? kSat : kUnsat;
  }

  int check(const ColoredMdp& c, Report& rep) {
    TheoryOptions to;
    to.precision = o_.precision;
    to.use_cache = cache();
    to.budget = budget_;
    PmcTheory theory(c, nu_, to);
    TheoryAdapter hook(theory, Polarity::Positive);
    SolverConfig sc;
    sc.lazy_start = lazy();
    sc.budget = budget_;
    const auto out = FdSolver(c.params(), c.tau(), sc).solve(&hook);
    stats = out.stats;
    if (out.verdict == Verdict::Sat) {
      const double v = verify_single(c, nu_, out.model, o_.precision, budget_);
      rep["witness"] = Report{{"assignment", assignment_json(out.model, c.params())}};
      rep["value"] = number(v);
    }
    return verdict(rep, out.verdict);
  }

  RobustConfig robust_config() const {
    RobustConfig rc;
    rc.precision = o_.precision;
    rc.lazy_start = lazy();
    rc.use_cache = cache();
    rc.budget = budget_;
    return rc;
  }

  int robust(const ColoredMdp& c, Report& rep) {
    const auto out = solve_robust(c, nu_, robust_config());
    stats = out.stats;
    Report cex = Report::array();
    for (const auto& [cand, env] : out.trace)
      cex.push_back(Report{{"candidate", assignment_json(cand, c.params())},
                           {"environment", assignment_json(env, c.params())}});
    if (out.verdict == Verdict::Sat) {
      rep["witness"] = Report{{"assignment", assignment_json(out.witness_x, c.params())}};
      rep["values"] = verify_robust(c, nu_, out.witness_x, o_.precision, budget_);
    }
    rep["counterexamples"] = std::move(cex);
    return verdict(rep, out.verdict);
  }

  int dt(const ColoredMdp& c, Report& rep) {
    std::vector<std::size_t> sizes = o_.sweep;
    if (sizes.empty()) {
      if (!o_.nodes) throw FormulaError("dt needs --nodes or --sweep");
      sizes.push_back(*o_.nodes);
    }
    const auto obs = observation_params(c);
    if (obs.empty()) throw FormulaError("no controllable parameters carry features");
    const auto names = action_names(c, obs.front());
    DtConfig cfg;
    cfg.precision = o_.precision;
    cfg.lazy_start = lazy();
    cfg.use_cache = cache();
    cfg.budget = budget_;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] % 2 == 0) throw FormulaError("tree sizes must be odd");
      if (i > 0 && sizes[i] <= sizes[i - 1]) throw FormulaError("tree sizes must be ascending");
    }
    Report entries = Report::array();
    std::optional<Report> witness;
    for (std::size_t n : sizes) {
      std::optional<DtResult> res;
      try {
        res = synth_dt(c, nu_, n, o_.robust, cfg, &stats);
      } catch (const TimeoutError& e) {
        SearchStats s = stats;
        s += e.stats;
        throw TimeoutError(s);
      }
      Report entry{{"nodes", n}, {"verdict", res ? "sat" : "unsat"}};
      if (res) {
        for (ParamIndex o : obs)
          if (res->tree.evaluate(c.params()[o].features) != res->assignment.get(o))
            throw InternalError("decoded tree disagrees with the synthesized policy");
        Report w{{"assignment", assignment_json(res->assignment, c.params())},
                 {"tree", tree_json(res->tree, names)},
                 {"tree_text", render_dt(res->tree, names)},
                 {"leaves", res->tree.leaves()}};
        if (o_.robust)
          w["values"] = verify_robust(c, nu_, res->assignment, o_.precision, budget_);
        else
          w["value"] = number(verify_single(c, nu_, res->assignment, o_.precision, budget_));
        entry.update(w);
        if (!witness) witness = w;
      }
      entries.push_back(std::move(entry));
    }
    rep["sizes"] = std::move(entries);
    if (witness) rep["witness"] = *witness;
    return verdict(rep, witness ? Verdict::Sat : Verdict::Unsat);
  }

  int oracle(const ColoredMdp& c, Report& rep) {
    OracleConfig cfg;
    cfg.precision = o_.precision;
    cfg.cap = o_.max_enum;
    cfg.keep_viable = 1;
    cfg.budget = budget_;
    const auto out = o_.robust ? brute_robust(c, nu_, cfg) : brute_feasible(c, nu_, cfg);
    rep["space_size"] = out.space_size;
    rep["viable_count"] = out.viable_count;
    if (out.verdict == Verdict::Sat) {
      const auto& w = out.viable.front();
      rep["witness"] = Report{{"assignment", assignment_json(w, c.params())}};
      if (o_.robust)
        rep["values"] = verify_robust(c, nu_, w, o_.precision, budget_);
      else
        rep["value"] = number(verify_single(c, nu_, w, o_.precision, budget_));
    }
    return verdict(rep, out.verdict);
  }

  int value(const ColoredMdp& c, Report& rep) {
    const auto k = parse_assign(o_.assign, c.params());
    if (k.size() != c.params().size()) throw FormulaError("--assign must give every parameter a value");
    const auto v = verify_assignment(c, nu_, Assignment::from_partial(k, c.params()), o_.precision, budget_);
    rep["witness"] = Report{{"assignment", assignment_json(k, c.params())}};
    rep["value"] = number(v.value);
    return verdict(rep, v.viable ? Verdict::Sat : Verdict::Unsat);
  }

  const Options& o_;
  Budget budget_;
  double nu_ = 0.0;
};

inline Report config_json(const Options& o) {
  Report cfg{{"precision", o.precision},
             {"lazy_start", o.lazy_start == "on"},
             {"cache", o.cache == "on"},
             {"timeout", o.timeout ? Report(*o.timeout) : Report(nullptr)},
             {"max_enum", o.max_enum}};
  if (o.threshold) cfg["threshold"] = *o.threshold;
  if (o.command == "dt") {
    if (o.nodes) cfg["nodes"] = *o.nodes;
    if (!o.sweep.empty()) cfg["sweep"] = o.sweep;
  }
  if (o.command == "dt" || o.command == "oracle") cfg["robust"] = o.robust;
  if (o.command == "value") cfg["assign"] = o.assign;
  return cfg;
}

}  // namespace detail

/// Runs one command; the report goes to `out`, diagnostics to `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Synthesis of policies for colored MDPs", "colsynth"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* s) {
    s->add_option("model", o.model, "Problem file (JSON)")->required();
    s->add_option("--threshold", o.threshold, "Override the threshold of the problem file");
    s->add_option("--precision", o.precision, "Value iteration precision")->capture_default_str();
    s->add_option("--lazy-start", o.lazy_start, "Skip partial theory checks until the first total candidate")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    s->add_option("--cache", o.cache, "Cache theory results")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
    s->add_option("--timeout", o.timeout, "Wall-clock limit in seconds")->check(CLI::PositiveNumber);
    s->add_option("--max-enum", o.max_enum, "Enumeration cap for the oracle and coloring checks")
        ->capture_default_str();
  };
  common(app.add_subcommand("check", "Is some admissible assignment viable?"));
  common(app.add_subcommand("robust", "Is some policy viable under every environment?"));
  auto* dt = app.add_subcommand("dt", "Search for a decision-tree policy");
  common(dt);
  dt->add_option("--nodes", o.nodes, "Tree size (odd)");
  dt->add_option("--sweep", o.sweep, "Ascending odd tree sizes, e.g. 1,3,5")->delimiter(',');
  dt->add_flag("--robust", o.robust, "Quantify the uncontrollable parameters universally");
  auto* orc = app.add_subcommand("oracle", "Exhaustive reference check");
  common(orc);
  orc->add_flag("--robust", o.robust, "Robust variant");
  auto* val = app.add_subcommand("value", "Value of the chain induced by one assignment");
  common(val);
  val->add_option("--assign", o.assign, "name=value,... for every parameter")->required();
  auto* gen = app.add_subcommand("gen-beetle", "Print the bundled beetle problem");
  gen->add_flag("--multi", o.multi, "Three start cells chosen by the environment");

  Report rep;
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kSat;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    rep = Report{{"verdict", "error"}, {"error", e.what()}};
    out << rep.dump(2) << "\n";
    return kError;
  }
  o.command = app.get_subcommands().front()->get_name();
  if (o.command == "gen-beetle") {
    out << to_canonical_json(gen_beetle(o.multi));
    return kSat;
  }

  rep["command"] = o.command;
  rep["model"] = o.model;
  rep["verdict"] = "error";
  rep["config"] = detail::config_json(o);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count(); };
  detail::Job job(o);
  int code = kError;
  try {
    code = job.run(rep);
  } catch (const TimeoutError& e) {
    job.stats += e.stats;
    rep["verdict"] = "error";
    rep["error"] = "timeout";
    err << "error: time budget exhausted\n";
  } catch (const std::exception& e) {
    rep["verdict"] = "error";
    rep["error"] = e.what();
    rep.erase("witness");
    err << "error: " << e.what() << "\n";
  }
  rep["stats"] = detail::stats_json(job.stats, elapsed());
  out << rep.dump(2) << "\n";
  return code;
}

}  // namespace colsynth::cli

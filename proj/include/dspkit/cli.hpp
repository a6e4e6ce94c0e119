#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dspkit/classifiers.hpp"
#include "dspkit/decider.hpp"
#include "dspkit/error.hpp"
#include "dspkit/genericity.hpp"
#include "dspkit/io.hpp"
#include "dspkit/realization.hpp"

namespace dspkit::cli {

enum ExitCode : int { ok = 0, invalid = 2, not_applicable = 3 };

namespace provenance {
inline constexpr const char* size_one = "size one: every tuple of 1x1 classes is solvable";
inline constexpr const char* generic =
    "generic eigenvalues: beta on the input and the reduction chain ending with omega or size one";
inline constexpr const char* weak_distinct =
    "weak problem with a class of distinct eigenvalues: alpha and beta are necessary and sufficient";
inline constexpr const char* unipotent_omega = "unipotent/nilpotent classes: omega fails";
inline constexpr const char* unipotent_special = "unipotent/nilpotent classes: special case";
inline constexpr const char* unipotent_almost = "unipotent/nilpotent classes: almost special case";
inline constexpr const char* unipotent_default = "unipotent/nilpotent classes: omega holds outside the special tables";
inline constexpr const char* kappa2 = "kappa = 2: special-diagonal tuples are obstructed, otherwise no claim";
inline constexpr const char* kappa0 = "kappa = 0 good tuple with only gcd-reduced relations";
}  // namespace provenance

struct Settings {
  bool weak = false;
  bool trace = false;
  Budget budget;
  std::optional<std::string> warm_start;
};

/// A report together with its exit code.
struct Outcome {
  json report;
  int code = ExitCode::ok;
};

inline json verdict_json(std::string_view value, std::string_view why) {
  json v;
  v["value"] = std::string(value);
  v["provenance"] = std::string(why);
  return v;
}

inline json conditions_json(const ConditionCheck& c) {
  json j;
  j["n"] = c.n;
  j["sum_d"] = c.sum_d;
  j["sum_r"] = c.sum_r;
  j["alpha"] = c.alpha;
  j["alpha_strict"] = c.alpha_strict;
  j["beta"] = c.beta;
  j["omega"] = c.omega;
  return j;
}

inline json trace_json(const PsiTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json j;
    j["n"] = s.input.n();
    j["n1"] = s.n1;
    j["tuple"] = to_json(s.input);
    j["chosen_slots"] = s.chosen_slots;
    steps.push_back(std::move(j));
  }
  json out;
  out["steps"] = std::move(steps);
  out["terminal"] = to_json(t.terminal);
  out["terminal_n"] = t.terminal.n();
  out["termination_reason"] = std::string(to_string(t.reason));
  return out;
}

inline json invariants_report(const ProblemInput& in) {
  json classes = json::array();
  for (const auto& e : in.tuple.entries()) {
    json c;
    c["jnf"] = e.to_string();
    c["n"] = e.size();
    c["r"] = r_of(e);
    c["d"] = d_of(e);
    c["z"] = z_of(e);
    classes.push_back(std::move(c));
  }
  json out;
  out["n"] = in.tuple.n();
  out["p"] = in.tuple.p();
  out["classes"] = std::move(classes);
  out["kappa"] = kappa_of(in.tuple);
  out["conditions"] = conditions_json(check_conditions(in.tuple));
  return out;
}

inline Outcome decide_report(const ProblemInput& in, const Settings& s) {
  Outcome o;
  json& out = o.report;
  DecisionReport rep;
  const char* why = provenance::generic;
  if (s.weak) {
    try {
      rep = decide_weak_distinct(in.tuple);
      why = provenance::weak_distinct;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_applicable) throw;
      out["problem"] = "weak_dsp";
      out["verdict"] = verdict_json("not_applicable", e.what());
      out["conditions"] = conditions_json(check_conditions(in.tuple));
      out["kappa"] = kappa_of(in.tuple);
      o.code = ExitCode::not_applicable;
      return o;
    }
  } else {
    rep = decide_generic(in.tuple);
  }
  if (in.tuple.n() == 1) why = provenance::size_one;
  out["problem"] = s.weak ? "weak_dsp" : "dsp_generic";
  out["verdict"] = verdict_json(to_string(rep.verdict), why);
  out["conditions"] = conditions_json(rep.conditions);
  out["kappa"] = rep.kappa;
  out["expected_moduli_dimension"] = rep.expected_moduli_dimension ? json(*rep.expected_moduli_dimension) : json();
  out["termination_reason"] = std::string(to_string(rep.trace.reason));
  if (s.trace) out["trace"] = trace_json(rep.trace);
  return o;
}

namespace detail {

template <EigenScalar S>
json relation_json(const std::optional<RelationWitness>& w) {
  if (!w) return json();
  json j;
  j["k"] = w->k;
  j["counts"] = w->counts;
  return j;
}

template <EigenScalar S>
json generic_report(const std::vector<ClassSpec<S>>& specs) {
  const std::span<const ClassSpec<S>> view(specs);
  json out;
  const bool evs = check_evs(view);
  out["evs"] = evs;
  const GcdReduction<S> red = gcd_reduction(view);
  json g;
  g["d"] = red.d;
  json ladder = json::array();
  for (int e = 2; e <= red.d; ++e) {
    if (red.d % e != 0) continue;
    json step;
    step["divisor"] = e;
    const S total = reduced_total(view, e);
    step["value"] = total.to_string();
    if constexpr (scalar_traits<S>::mode == Mode::multiplicative) step["primitive"] = is_primitive_root(total, e);
    ladder.push_back(std::move(step));
  }
  g["reductions"] = std::move(ladder);
  if (red.xi) g["xi"] = red.xi->to_string();
  if (red.xi_primitive) g["xi_primitive"] = *red.xi_primitive;
  out["gcd_reduction"] = std::move(g);
  const GeneralizedBeta gb = check_generalized_beta(view);
  out["generalized_beta"] = {{"min_rank_sum", gb.min_rank_sum}, {"bound", gb.bound}, {"holds", gb.holds}};
  if (!evs) {
    out["generic"] = json();
    out["note"] = "eigenvalues violate the global trace/determinant constraint";
    return out;
  }
  const auto w = find_relation(view);
  out["generic"] = !w.has_value();
  out["relation"] = relation_json<S>(w);
  return out;
}

inline bool single_slot_at(const ProblemInput& in, bool require_identity_eigenvalue) {
  for (const auto& e : in.tuple.entries())
    if (e.slot_count() != 1) return false;
  if (!require_identity_eigenvalue || !in.specs) return true;
  return std::visit(
      [](const auto& specs) {
        using S = std::decay_t<decltype(specs.front().eigenvalue(0))>;
        for (const auto& s : specs)
          if (!(s.eigenvalue(0) == scalar_traits<S>::identity())) return false;
        return true;
      },
      *in.specs);
}

inline json unipotent_json(const JnfTuple& tuple, Problem problem, Mode mode) {
  const Verdict v = decide_unipotent_nilpotent(tuple, problem, mode);
  const char* why = provenance::unipotent_default;
  if (tuple.n() == 1)
    why = provenance::size_one;
  else if (!check_conditions(tuple).omega)
    why = provenance::unipotent_omega;
  else if (const auto tag = match_special(tuple); is_special(tag.kind))
    why = provenance::unipotent_special;
  else if (is_almost_special(tag.kind))
    why = provenance::unipotent_almost;
  return verdict_json(to_string(v), why);
}

template <EigenScalar S>
json special_diagonal_json(const std::vector<ClassSpec<S>>& specs) {
  const std::span<const ClassSpec<S>> view(specs);
  json out;
  try {
    const auto res = is_special_diagonal(view);
    out["special_diagonal"] = res.special_diagonal;
    if (res.witness) {
      json w;
      w["l"] = res.witness->l;
      w["n1"] = res.witness->n1;
      json q = json::array();
      for (const auto& c : res.witness->quotient) {
        json cj;
        cj["blocks"] = to_json(c.jnf());
        cj["eigenvalues"] = json::array();
        for (const auto& v : c.eigenvalues()) cj["eigenvalues"].push_back(v.to_string());
        q.push_back(std::move(cj));
      }
      w["quotient"] = std::move(q);
      out["witness"] = std::move(w);
    }
    out["weak_verdict"] = verdict_json(to_string(weak_verdict_kappa2(view)), provenance::kappa2);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kappa_not_two) throw;
    out["special_diagonal"] = json();
    out["error"] = std::string(to_string(e.code()));
  }
  return out;
}

template <EigenScalar S>
json kappa0_json(const std::vector<ClassSpec<S>>& specs) {
  try {
    return verdict_json(to_string(weak_verdict_kappa0(std::span<const ClassSpec<S>>(specs))), provenance::kappa0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::not_applicable) throw;
    return verdict_json("not_applicable", e.what());
  }
}

}  // namespace detail

inline Outcome generic_report(const ProblemInput& in) {
  if (!in.specs) throw Error(ErrorCode::invalid_input, "generic needs eigenvalues for every class");
  Outcome o;
  o.report = std::visit([](const auto& specs) { return detail::generic_report(specs); }, *in.specs);
  return o;
}

inline Outcome classify_report(const ProblemInput& in) {
  Outcome o;
  json& out = o.report;
  const JnfTuple& t = in.tuple;
  out["kappa"] = kappa_of(t);
  out["rigid_family"] = std::string(to_string(match_rigid_family(t)));
  const SpecialCaseTag tag = match_special(t);
  out["special_case"] = {{"kind", std::string(to_string(tag.kind))}, {"k", tag.k}};
  out["good"] = is_good(t);
  if (detail::single_slot_at(in, true)) {
    json u;
    u["dsp"] = detail::unipotent_json(t, Problem::dsp, in.mode);
    u["weak_dsp"] = detail::unipotent_json(t, Problem::weak_dsp, in.mode);
    out["unipotent_nilpotent"] = std::move(u);
  } else {
    out["unipotent_nilpotent"] = verdict_json("not_applicable", "every class must be unipotent (resp. nilpotent)");
  }
  if (in.specs) {
    out["kappa2"] = std::visit([](const auto& specs) { return detail::special_diagonal_json(specs); }, *in.specs);
    out["kappa0_weak"] = std::visit([](const auto& specs) { return detail::kappa0_json(specs); }, *in.specs);
  }
  return o;
}

inline std::vector<CMatrix> read_warm_start(const std::string& path) {
  const json doc = read_json_file(path);
  const json& mats = doc.is_object() ? doc.at("matrices") : doc;
  std::vector<CMatrix> out;
  for (const auto& m : mats) out.push_back(matrix_from_json(m));
  return out;
}

inline Outcome realize_report(const ProblemInput& in, const Settings& s) {
  if (!in.specs) throw Error(ErrorCode::invalid_input, "realize needs eigenvalues for every class");
  std::vector<NumericClass> classes;
  std::visit(
      [&](const auto& specs) {
        for (const auto& sp : specs) classes.push_back(numeric_class(sp));
      },
      *in.specs);
  std::optional<std::vector<CMatrix>> warm;
  if (s.warm_start) warm = read_warm_start(*s.warm_start);

  Outcome o;
  json& out = o.report;
  out["budget"] = {{"restarts", s.budget.restarts}, {"iterations", s.budget.iterations}, {"seed", s.budget.seed},
                   {"jobs", s.budget.jobs},         {"tol", s.budget.tol.residual},     {"warm_start", warm.has_value()}};
  std::optional<RealizationResult> r;
  try {
    r = realize(std::span<const NumericClass>(classes), in.mode, s.budget, warm ? &*warm : nullptr);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ill_conditioned && e.code() != ErrorCode::resource_exceeded) throw;
    out["found"] = false;
    out["error"] = std::string(to_string(e.code()));
    out["message"] = e.what();
    o.code = ExitCode::not_applicable;
    return o;
  }
  out["found"] = r.has_value();
  if (!r) {
    out["note"] = "no certified realization within budget; this is not a proof of nonexistence";
    return o;
  }
  out["restart"] = r->restart;
  out["iterations"] = r->iterations;
  out["residual"] = r->residual;
  out["max_condition"] = r->max_condition;
  out["certificates"] = {{"class_membership", r->class_membership_ok},
                         {"burnside_dim", r->burnside_dim},
                         {"irreducible", r->irreducible()},
                         {"centralizer_nullity", r->centralizer_nullity},
                         {"trivial_centralizer", r->trivial_centralizer()},
                         {"consistent", r->certificates_consistent()}};
  json mats = json::array(), conj = json::array();
  for (const auto& m : r->matrices) mats.push_back(matrix_to_json(m));
  for (const auto& q : r->conjugators) conj.push_back(matrix_to_json(q));
  out["matrices"] = std::move(mats);
  out["conjugators"] = std::move(conj);
  return o;
}

/// Diagonal triples (or (p+1)-tuples) of size n with kappa = 2 that are good.
inline json enumerate_rigid(int n, int p, bool require_distinct) {
  if (n < 1 || p < 2) throw Error(ErrorCode::invalid_input, "enumerate-rigid needs n >= 1 and p >= 2");
  const std::vector<Jnf> pool = all_diagonal_jnfs(n);
  json list = json::array();
  for_each_multiset(pool.size(), static_cast<std::size_t>(p + 1), [&](std::span<const std::size_t> pick) {
    int sum_d = 0;
    for (std::size_t i : pick) sum_d += d_of(pool[i]);
    if (2 * n * n - sum_d != 2) return;
    std::vector<Jnf> entries;
    for (std::size_t i : pick) entries.push_back(pool[i]);
    const JnfTuple t(entries);
    if (require_distinct && std::none_of(entries.begin(), entries.end(), [](const Jnf& e) { return e.is_distinct(); }))
      return;
    if (!is_good(t)) return;
    json j;
    j["multiplicities"] = json::array();
    const JnfTuple canon = t.canonical();
    for (const auto& e : canon.entries()) j["multiplicities"].push_back(e.multiplicities());
    j["family"] = std::string(to_string(match_rigid_family(t)));
    list.push_back(std::move(j));
  });
  json out;
  out["n"] = n;
  out["p"] = p;
  out["distinct_only"] = require_distinct;
  out["count"] = list.size();
  out["tuples"] = std::move(list);
  return out;
}

inline json envelope(std::string_view command) {
  json out;
  out["schema_version"] = schema_version;
  out["command"] = std::string(command);
  return out;
}

inline json error_json(const Error& e) {
  return {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
}

/// Runs one problem-file command; errors become an error report with exit code 2 or 3.
inline Outcome run_problem(const std::string& command, const json& doc, const Settings& s) {
  Outcome o;
  o.report = envelope(command);
  try {
    const ProblemInput in = parse_problem(doc);
    o.report["input"] = echo(in);
    Outcome body;
    if (command == "invariants")
      body.report = invariants_report(in);
    else if (command == "decide")
      body = decide_report(in, s);
    else if (command == "generic")
      body = generic_report(in);
    else if (command == "classify")
      body = classify_report(in);
    else if (command == "realize")
      body = realize_report(in, s);
    else
      throw Error(ErrorCode::invalid_input, "unknown command " + command);
    for (auto& [k, v] : body.report.items()) o.report[k] = v;
    o.code = body.code;
  } catch (const Error& e) {
    o.report["error"] = error_json(e);
    o.code = e.code() == ErrorCode::not_applicable || e.code() == ErrorCode::resource_exceeded
                 ? ExitCode::not_applicable
                 : ExitCode::invalid;
  }
  return o;
}

inline Outcome run_path(const std::string& command, const std::string& path, const Settings& s) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) {
    json doc;
    try {
      doc = read_json_file(path);
    } catch (const Error& e) {
      Outcome o{envelope(command), ExitCode::invalid};
      o.report["error"] = error_json(e);
      return o;
    }
    return run_problem(command, doc, s);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  std::vector<Outcome> results(files.size());
  Settings inner = s;
  inner.budget.jobs = 1;
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, s.budget.jobs));
  for (std::size_t first = 0; first < files.size(); first += jobs) {
    std::vector<std::future<Outcome>> batch;
    for (std::size_t i = first; i < std::min(files.size(), first + jobs); ++i)
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&, i] { return run_path(command, files[i], inner); }));
    for (std::size_t i = 0; i < batch.size(); ++i) results[first + i] = batch[i].get();
  }
  Outcome o{envelope(command), ExitCode::ok};
  o.report["batch"] = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    json item;
    item["file"] = fs::path(files[i]).filename().string();
    item["exit_code"] = results[i].code;
    item["report"] = std::move(results[i].report);
    o.report["batch"].push_back(std::move(item));
    o.code = std::max(o.code, results[i].code);
  }
  return o;
}

/// Seed from DSPKIT_SEED when set, otherwise the flag value.
inline std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("DSPKIT_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_input, "DSPKIT_SEED must be an unsigned integer");
    }
  }
  return flag;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decide, classify and realize tuples of conjugacy classes"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  std::string input;
  int indent = 2;
  app.add_option("--indent", indent, "JSON indentation (-1 for compact)");

  auto* inv = app.add_subcommand("invariants", "JNF invariants and the alpha/beta/omega conditions");
  inv->add_option("input", input, "problem file or directory")->required();

  auto* dec = app.add_subcommand("decide", "decide the problem for generic eigenvalues");
  dec->add_option("input", input, "problem file or directory")->required();
  dec->add_flag("--weak", s.weak, "weak problem (needs a class with distinct eigenvalues)");
  dec->add_flag("--trace", s.trace, "include the reduction trace");

  auto* gen = app.add_subcommand("generic", "genericity, gcd reduction and generalized beta");
  gen->add_option("input", input, "problem file or directory")->required();

  auto* cls = app.add_subcommand("classify", "rigid families, special cases and kappa 0 / 2 verdicts");
  cls->add_option("input", input, "problem file or directory")->required();

  auto* rea = app.add_subcommand("realize", "numerical realization with certificates");
  rea->add_option("input", input, "problem file or directory")->required();
  rea->add_option("--restarts", s.budget.restarts, "number of random restarts")->check(CLI::NonNegativeNumber);
  rea->add_option("--iters", s.budget.iterations, "iterations per restart")->check(CLI::PositiveNumber);
  rea->add_option("--seed", s.budget.seed, "base seed (DSPKIT_SEED overrides)");
  rea->add_option("--tol", s.budget.tol.residual, "residual tolerance")->check(CLI::PositiveNumber);
  rea->add_option("--warm-start", s.warm_start, "JSON file with one matrix per class")->check(CLI::ExistingFile);

  int n = 0, p = 2;
  bool distinct = false;
  auto* enu = app.add_subcommand("enumerate-rigid", "list good diagonal tuples with kappa = 2");
  enu->add_option("--n", n, "matrix size")->required()->check(CLI::PositiveNumber);
  enu->add_option("--p", p, "p (the tuple has p + 1 classes)")->check(CLI::Range(2, 8));
  enu->add_flag("--distinct", distinct, "only tuples with a class of distinct eigenvalues");

  for (auto* sub : {inv, dec, gen, cls, rea})
    sub->add_option("--jobs", s.budget.jobs, "parallel jobs (batch files / restarts)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ExitCode::ok : ExitCode::invalid;
  }

  Outcome o;
  try {
    s.budget.seed = effective_seed(s.budget.seed);
    if (enu->parsed()) {
      o.report = envelope("enumerate-rigid");
      const json body = enumerate_rigid(n, p, distinct);
      for (const auto& [k, v] : body.items()) o.report[k] = v;
    } else {
      o = run_path(app.get_subcommands().front()->get_name(), input, s);
    }
  } catch (const Error& e) {
    o.report = envelope(app.get_subcommands().front()->get_name());
    o.report["error"] = error_json(e);
    o.code = ExitCode::invalid;
  }
  out << o.report.dump(indent) << '\n';
  if (o.report.contains("error") && o.report["error"].is_object())
    err << o.report["error"]["message"].get<std::string>() << '\n';
  return o.code;
}

}  // namespace dspkit::cli

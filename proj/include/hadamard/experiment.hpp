#pragma once

// Experiment configs (JSON) and the run / check / sweep commands behind the
// hadamard_iter tool. Kept in the library so tests can drive them in-process.
//
// Exit codes: 0 converged (run) or all checks passed (check), 1 config error,
// 2 budget exhausted, 3 solver error, 4 at least one check failed.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hadamard/diagnostics.hpp"
#include "hadamard/fixtures.hpp"
#include "hadamard/schemes.hpp"

namespace hadamard::experiment {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 1, kBudget = 2, kSolverError = 3, kCheckFailed = 4 };

inline int exit_code(StopReason r) {
  switch (r) {
    case StopReason::Converged: return kOk;
    case StopReason::BudgetExhausted: return kBudget;
    case StopReason::SolverError: return kSolverError;
  }
  return kSolverError;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iterations;
};

// ----------------------------------------------------------------- parsing

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& obj, std::string_view key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + " is missing '" + std::string(key) + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + std::string(key) + ": " + e.what());
  }
}

template <class T>
T get_or(const json& obj, std::string_view key, T fallback, const std::string& where) {
  return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

inline ModelSpace parse_space(const json& j) {
  reject_unknown(j, {"kind", "dim", "legs"}, "space");
  const auto kind = get<std::string>(j, "kind", "space");
  if (kind == "euclidean") return ModelSpace::euclidean(get<std::size_t>(j, "dim", "space"));
  if (kind == "hyperboloid") return ModelSpace::hyperboloid(get<std::size_t>(j, "dim", "space"));
  if (kind == "spider") return ModelSpace::spider(get<std::size_t>(j, "legs", "space"));
  throw ConfigError("unknown space kind '" + kind + "'");
}

inline Vector to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + " must be an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline SpacePoint parse_point(const ModelSpace& space, const json& j, const std::string& where) {
  try {
    switch (space.kind()) {
      case SpaceKind::Euclidean: {
        // {"spatial": [...]} is accepted too, so one config can sweep over spaces.
        if (j.is_object()) reject_unknown(j, {"spatial"}, where);
        const Vector v = j.is_object() ? to_vector(get<json>(j, "spatial", where), where + ".spatial") : to_vector(j, where);
        if (static_cast<std::size_t>(v.size()) != space.dimension())
          throw ConfigError(where + " must have " + std::to_string(space.dimension()) + " coordinates");
        return space.point(v);
      }
      case SpaceKind::Hyperboloid: {
        if (j.is_object()) {
          reject_unknown(j, {"spatial"}, where);
          const Vector v = to_vector(get<json>(j, "spatial", where), where + ".spatial");
          if (static_cast<std::size_t>(v.size()) != space.dimension())
            throw ConfigError(where + ".spatial must have " + std::to_string(space.dimension()) + " coordinates");
          return space.lift(v);
        }
        const Vector v = to_vector(j, where);
        if (static_cast<std::size_t>(v.size()) != space.ambient_size())
          throw ConfigError(where + " must have " + std::to_string(space.ambient_size()) + " ambient coordinates");
        return space.point(v);
      }
      case SpaceKind::Spider:
        reject_unknown(j, {"leg", "radius"}, where);
        return space.tree_point(get<std::size_t>(j, "leg", where), get<double>(j, "radius", where));
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unsupported space");
}

inline ConvexSubset parse_set(const ModelSpace& space, const json& j, const std::string& where) {
  const auto kind = get<std::string>(j, "kind", where);
  try {
    if (kind == "whole") {
      reject_unknown(j, {"kind"}, where);
      return ConvexSubset::whole(space.id());
    }
    if (kind == "ball") {
      reject_unknown(j, {"kind", "center", "radius"}, where);
      const SpacePoint c = j.contains("center") ? parse_point(space, j["center"], where + ".center") : space.origin();
      return ConvexSubset::ball(c, get<double>(j, "radius", where));
    }
    if (kind == "segment") {
      reject_unknown(j, {"kind", "a", "b"}, where);
      return ConvexSubset::segment(parse_point(space, get<json>(j, "a", where), where + ".a"),
                                   parse_point(space, get<json>(j, "b", where), where + ".b"));
    }
    if (kind == "halfspace") {
      reject_unknown(j, {"kind", "normal", "offset"}, where);
      return ConvexSubset::halfspace(space.id(), to_vector(get<json>(j, "normal", where), where + ".normal"),
                                     get<double>(j, "offset", where));
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("unknown set kind '" + kind + "' in " + where);
}

inline Schedule parse_schedule(const json& j, const std::string& where) {
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "constant") {
    reject_unknown(j, {"kind", "value", "margin"}, where);
    return Schedule::constant(get<double>(j, "value", where));
  }
  if (kind == "power") {
    reject_unknown(j, {"kind", "scale", "exponent", "shift", "offset", "margin"}, where);
    return Schedule::power_law(get_or(j, "scale", 1.0, where), get<double>(j, "exponent", where),
                               get_or(j, "shift", 0.0, where), get_or(j, "offset", 0.0, where));
  }
  throw ConfigError("unknown schedule kind '" + kind + "' in " + where + " (expected constant or power)");
}

inline OperatorSpec parse_operator(const ModelSpace& space, const json& j) {
  reject_unknown(j, {"name", "angle", "c", "alpha", "height", "set", "point"}, "operator");
  CatalogParams p;
  if (j.contains("set")) p.set = parse_set(space, j["set"], "operator.set");
  if (j.contains("point")) p.point = parse_point(space, j["point"], "operator.point");
  p.angle = get_or(j, "angle", p.angle, "operator");
  p.c = get_or(j, "c", p.c, "operator");
  p.alpha = get_or(j, "alpha", p.alpha, "operator");
  p.height = get_or(j, "height", p.height, "operator");
  return catalog_operator(space, get<std::string>(j, "name", "operator"), p);
}

inline ObjectiveFunction parse_function(const ModelSpace& space, const json& j, const std::string& where = "function") {
  reject_unknown(j, {"name", "point", "set", "closed_form"}, where);
  FunctionParams p;
  if (j.contains("set")) p.set = parse_set(space, j["set"], where + ".set");
  if (j.contains("point")) p.point = parse_point(space, j["point"], where + ".point");
  ObjectiveFunction f = catalog_function(space, get<std::string>(j, "name", where), p);
  // "closed_form": false forces the gradient-descent subproblem solver.
  if (!get_or(j, "closed_form", true, where)) f.closed_form = nullptr;
  return f;
}

inline Bifunction parse_bifunction(const ModelSpace& space, const json& j) {
  reject_unknown(j, {"name", "set", "function"}, "bifunction");
  BifunctionParams p;
  if (j.contains("set")) p.set = parse_set(space, j["set"], "bifunction.set");
  const auto name = get<std::string>(j, "name", "bifunction");
  if (name == "minimization") {
    return minimization_bifunction(space, parse_function(space, get<json>(j, "function", "bifunction"), "bifunction.function"),
                                   p.set);
  }
  return catalog_bifunction(space, name, p);
}

// --------------------------------------------------------------------- run

struct RunSpec {
  Scheme scheme;
  RunConfig run;
  std::string trace_file = "trace.csv";
  std::string summary_file = "summary.json";
};

inline RunSpec load_run(const json& j, const Overrides& ov = {}) {
  reject_unknown(j,
                 {"space", "scheme", "source", "schedules", "start", "anchor", "reference", "max_iterations",
                  "tolerance", "trace_stride", "seed", "output", "solver"},
                 "config");
  const ModelSpace space = parse_space(get<json>(j, "space", "config"));

  const json src = get<json>(j, "source", "config");
  reject_unknown(src, {"operator", "function", "bifunction"}, "source");
  if (src.size() != 1) throw ConfigError("source must name exactly one of operator, function, bifunction");
  SchemeSources sources;
  if (src.contains("operator")) sources.op = parse_operator(space, src["operator"]);
  if (src.contains("function")) sources.objective = parse_function(space, src["function"]);
  if (src.contains("bifunction")) sources.bifunction = parse_bifunction(space, src["bifunction"]);

  SchemeSchedules schedules;
  ResolventOptions opt;
  if (j.contains("schedules")) {
    const json& s = j["schedules"];
    reject_unknown(s, {"alpha", "beta", "gamma", "lambda"}, "schedules");
    if (s.contains("alpha")) schedules.alpha = parse_schedule(s["alpha"], "schedules.alpha");
    if (s.contains("beta")) schedules.beta = parse_schedule(s["beta"], "schedules.beta");
    if (s.contains("gamma")) schedules.gamma = parse_schedule(s["gamma"], "schedules.gamma");
    if (s.contains("lambda")) {
      schedules.lambda = parse_schedule(s["lambda"], "schedules.lambda");
      opt.equilibrium_margin = get_or(s["lambda"], "margin", opt.equilibrium_margin, "schedules.lambda");
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, {"vi_step", "prox_grad_tol", "prox_max_steps"}, "solver");
    if (s.contains("vi_step")) opt.equilibrium.vi_step = get<double>(s, "vi_step", "solver");
    opt.prox.grad_tol = get_or(s, "prox_grad_tol", opt.prox.grad_tol, "solver");
    opt.prox.max_steps = get_or(s, "prox_max_steps", opt.prox.max_steps, "solver");
  }
  const std::uint64_t seed = ov.seed ? *ov.seed : get_or<std::uint64_t>(j, "seed", 0, "config");
  opt.equilibrium.seed = seed;

  const std::string scheme_name = get<std::string>(j, "scheme", "config");
  Scheme scheme = build_scheme(space, scheme_name, sources, schedules, opt);

  RunConfig run{.space = space,
                .start = parse_point(space, get<json>(j, "start", "config"), "start"),
                .anchor = std::nullopt,
                .anchor_schedule = std::nullopt,
                .max_iterations = get_or<std::size_t>(j, "max_iterations", 100000, "config"),
                .tolerance = get_or(j, "tolerance", 1e-10, "config"),
                .reference = std::nullopt,
                .fejer_point = std::nullopt,
                .trace_stride = get_or<std::size_t>(j, "trace_stride", 0, "config"),
                .seed = seed};
  if (ov.max_iterations) run.max_iterations = *ov.max_iterations;
  if (run.max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (!(run.tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
  if (j.contains("anchor")) run.anchor = parse_point(space, j["anchor"], "anchor");
  if (j.contains("reference")) run.reference = parse_point(space, j["reference"], "reference");
  if (scheme.engine == Engine::Halpern && !run.anchor)
    throw ConfigError("scheme '" + scheme_name + "' is Halpern-type and needs an anchor");
  if (scheme.engine == Engine::Sequence && run.anchor)
    throw ConfigError("scheme '" + scheme_name + "' is not Halpern-type; remove the anchor");

  RunSpec spec{.scheme = std::move(scheme), .run = std::move(run)};
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown(o, {"trace", "summary"}, "output");
    spec.trace_file = get_or(o, "trace", spec.trace_file, "output");
    spec.summary_file = get_or(o, "summary", spec.summary_file, "output");
  }
  return spec;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const ModelSpace& space, const IterationTrace& trace) {
  std::string out = "k";
  if (space.kind() == SpaceKind::Spider) {
    out += ",leg,radius";
  } else {
    for (std::size_t i = 0; i < space.ambient_size(); ++i) out += ",x" + std::to_string(i);
  }
  out += ",residual,dist_to_reference,fejer_gap\n";
  for (const TraceStep& s : trace.steps) {
    out += std::to_string(s.k);
    if (s.x.is_tree()) {
      out += "," + std::to_string(s.x.tree().leg) + "," + fmt17(s.x.tree().radius);
    } else {
      for (Eigen::Index i = 0; i < s.x.coords().size(); ++i) out += "," + fmt17(s.x.coords()(i));
    }
    out += "," + fmt17(s.residual);
    out += "," + (s.dist_to_reference ? fmt17(*s.dist_to_reference) : std::string());
    out += "," + (s.fejer_gap ? fmt17(*s.fejer_gap) : std::string());
    out += "\n";
  }
  return out;
}

inline json point_json(const SpacePoint& p) {
  if (p.is_tree()) return json{{"leg", p.tree().leg}, {"radius", p.tree().radius}};
  return json(std::vector<double>(p.coords().data(), p.coords().data() + p.coords().size()));
}

inline json finite_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline json summary_json(const RunSpec& spec, const IterationTrace& trace) {
  const Summary& s = trace.summary;
  json j{{"scheme", spec.scheme.name},
         {"theorem", spec.scheme.theorem},
         {"iterations", s.iterations_run},
         {"stop_reason", to_string(s.stop_reason)},
         {"final_residual", finite_or_null(s.final_residual)},
         {"target_distance", finite_or_null(s.target_distance)},
         {"final_point", point_json(s.final_point)},
         {"seed", spec.run.seed}};
  if (s.error_step) {
    j["error_step"] = *s.error_step;
    j["error_message"] = s.error_message;
  }
  return j;
}

/// Writes `content` to `path` via a temporary file and rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

struct RunOutcome {
  int code = kConfigError;
  std::optional<IterationTrace> trace;
  std::optional<RunSpec> spec;
};

/// Executes an already validated run and writes its outputs under `out`.
inline RunOutcome execute(RunSpec spec, const fs::path& out) {
  IterationTrace trace = run_scheme(spec.scheme, spec.run);
  write_atomic(out / spec.trace_file, trace_csv(spec.run.space, trace));
  write_atomic(out / spec.summary_file, summary_json(spec, trace).dump(2) + "\n");
  const int code = exit_code(trace.summary.stop_reason);
  return RunOutcome{.code = code, .trace = std::move(trace), .spec = std::move(spec)};
}

inline RunOutcome cmd_run(const json& config, const fs::path& out, std::ostream& log, const Overrides& ov = {}) {
  std::optional<RunSpec> spec;
  try {
    spec = load_run(config, ov);
  } catch (const Error& e) {
    log << "config error: " << e.what() << "\n";
    return {};
  }
  RunOutcome r = execute(std::move(*spec), out);
  const Summary& s = r.trace->summary;
  log << r.spec->scheme.name << ": " << to_string(s.stop_reason) << " after " << s.iterations_run
      << " iterations, residual " << fmt17(s.final_residual);
  if (s.target_distance) log << ", target distance " << fmt17(*s.target_distance);
  if (s.error_step) log << " (step " << *s.error_step << ": " << s.error_message << ")";
  log << "\n";
  return r;
}

// ------------------------------------------------------------------- check

inline json report_json(const CheckReport& r) {
  json v = json::array();
  for (const Violation& x : r.violations)
    v.push_back({{"input", x.input}, {"lhs", x.lhs}, {"rhs", x.rhs}, {"slack", x.slack}});
  return json{{"check_name", r.check_name},
              {"samples_tested", r.samples_tested},
              {"violation_count", r.violation_count},
              {"max_violation", finite_or_null(r.max_violation)},
              {"passed", r.passed},
              {"violations", v}};
}

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{
      "space_axioms", "projection",    "operator",          "function",         "bifunction",
      "quasi_firm",   "sqn_ishikawa",  "sqn_lipschitz",     "sqn_equilibrium",  "nested_fixed_sets",
      "fejer",        "halpern_target", "lipschitz_fixed_set"};
  return names;
}

/// Runs one entry of a check config.
inline CheckReport run_check(const json& c, std::uint64_t seed) {
  const auto name = get<std::string>(c, "name", "check");
  const std::string where = "check '" + name + "'";
  if (name == "fejer" || name == "halpern_target") {
    reject_unknown(c, {"name", "run", "point", "tolerance"}, where);
    RunSpec spec = load_run(get<json>(c, "run", where), Overrides{.seed = seed, .max_iterations = std::nullopt});
    const ModelSpace& space = spec.run.space;
    const IterationTrace trace = run_scheme(spec.scheme, spec.run);
    if (name == "fejer") {
      std::optional<SpacePoint> p;
      if (c.contains("point")) p = parse_point(space, c["point"], where + ".point");
      else p = spec.scheme.sequence.common_witness;
      if (!p) throw ConfigError(where + " needs a point (the scheme has no common fixed point witness)");
      return check_fejer(space, trace, *p);
    }
    if (!spec.run.anchor || !spec.scheme.target_set)
      throw ConfigError(where + " needs a Halpern scheme with a known target set");
    return check_halpern_target(space, trace, *spec.run.anchor, *spec.scheme.target_set,
                                get_or(c, "tolerance", 5e-3, where));
  }

  reject_unknown(c,
                 {"name", "space", "samples", "set", "operator", "function", "bifunction", "lambda", "mu", "alpha",
                  "beta", "witness", "candidates", "seed"},
                 where);
  const ModelSpace space = parse_space(get<json>(c, "space", where));
  const std::size_t samples = get_or<std::size_t>(c, "samples", 500, where);
  const std::uint64_t s = get_or<std::uint64_t>(c, "seed", seed, where);
  auto witness = [&](const std::optional<SpacePoint>& fallback) {
    if (c.contains("witness")) return parse_point(space, c["witness"], where + ".witness");
    if (!fallback) throw ConfigError(where + " needs a witness");
    return *fallback;
  };

  if (name == "space_axioms") return check_space_axioms(space, samples, s);
  if (name == "projection") return check_projection(space, parse_set(space, get<json>(c, "set", where), where), samples, s);
  if (name == "operator") return check_operator(space, parse_operator(space, get<json>(c, "operator", where)), samples, s);
  if (name == "function") return check_function(space, parse_function(space, get<json>(c, "function", where)), samples, s);
  if (name == "bifunction")
    return check_bifunction(space, parse_bifunction(space, get<json>(c, "bifunction", where)), samples, s);
  if (name == "quasi_firm") {
    const ObjectiveFunction f = parse_function(space, get<json>(c, "function", where));
    std::optional<SpacePoint> w;
    if (f.argmin) w = space.representative(*f.argmin);
    return check_quasi_firm(space, f, get<double>(c, "lambda", where), witness(w), samples, s);
  }
  if (name == "sqn_ishikawa") {
    const OperatorSpec T = parse_operator(space, get<json>(c, "operator", where));
    return check_sqn_inequality(space,
                                IshikawaSource{.T = T,
                                               .alpha = get_or(c, "alpha", 0.5, where),
                                               .beta = get_or(c, "beta", 0.0, where)},
                                witness(T.witness), samples, s);
  }
  if (name == "sqn_lipschitz") {
    const OperatorSpec T = parse_operator(space, get<json>(c, "operator", where));
    return check_sqn_inequality(space, LipschitzSource{.T = T, .lambda = get<double>(c, "lambda", where), .options = {}},
                                witness(T.witness), samples, s);
  }
  if (name == "sqn_equilibrium") {
    const Bifunction f = parse_bifunction(space, get<json>(c, "bifunction", where));
    ResolventOptions opt;
    opt.equilibrium.seed = s;
    return check_sqn_inequality(space, EquilibriumSource{.f = f, .lambda = get<double>(c, "lambda", where), .options = opt},
                                witness(f.equilibrium_witness), samples, s);
  }
  if (name == "nested_fixed_sets") {
    const ObjectiveFunction f = parse_function(space, get<json>(c, "function", where));
    std::vector<SpacePoint> candidates;
    for (const json& p : get<json>(c, "candidates", where)) candidates.push_back(parse_point(space, p, where + ".candidates"));
    return check_nested_fixed_sets(space, f, get<double>(c, "lambda", where), get<double>(c, "mu", where), candidates);
  }
  if (name == "lipschitz_fixed_set") {
    const OperatorSpec T = parse_operator(space, get<json>(c, "operator", where));
    return check_lipschitz_fixed_set(space, T, get<double>(c, "lambda", where), samples, s);
  }
  throw ConfigError("unknown check '" + name + "'");
}

struct CheckOutcome {
  int code = kConfigError;
  json report;
};

inline CheckOutcome cmd_check(const json& config, const fs::path& out, std::ostream& log, const Overrides& ov = {}) {
  json checks;
  std::uint64_t seed = 0;
  try {
    reject_unknown(config, {"checks", "seed", "output"}, "check config");
    checks = get<json>(config, "checks", "check config");
    if (!checks.is_array() || checks.empty()) throw ConfigError("checks must be a non-empty array");
    seed = ov.seed ? *ov.seed : get_or<std::uint64_t>(config, "seed", 1, "check config");
    for (const json& c : checks) {
      const auto name = get<std::string>(c, "name", "check");
      const auto& names = check_names();
      if (std::find(names.begin(), names.end(), name) == names.end()) throw ConfigError("unknown check '" + name + "'");
    }
  } catch (const Error& e) {
    log << "config error: " << e.what() << "\n";
    return {};
  }
  const std::string file = config.contains("output") ? config["output"].get<std::string>() : "report.json";

  CheckOutcome result{.code = kOk, .report = json{{"seed", seed}, {"checks", json::array()}}};
  bool all = true;
  for (const json& c : checks) {
    const auto name = c["name"].get<std::string>();
    json entry;
    try {
      entry = report_json(run_check(c, seed));
    } catch (const ConfigError& e) {
      log << "config error in check '" << name << "': " << e.what() << "\n";
      return {};
    } catch (const Error& e) {
      // Rejected preconditions and solver failures count as failed checks.
      entry = json{{"check_name", name}, {"passed", false}, {"error", e.what()}};
    }
    entry["name"] = name;
    const bool passed = entry["passed"].get<bool>();
    all = all && passed;
    log << (passed ? "PASS " : "FAIL ") << name;
    if (entry.contains("samples_tested")) log << " (" << entry["samples_tested"].get<std::size_t>() << " samples)";
    if (entry.contains("error")) log << ": " << entry["error"].get<std::string>();
    log << "\n";
    result.report["checks"].push_back(std::move(entry));
  }
  result.report["passed"] = all;
  write_atomic(out / file, result.report.dump(2) + "\n");
  result.code = all ? kOk : kCheckFailed;
  return result;
}

// ------------------------------------------------------------------- sweep

inline std::size_t sweep_threads(std::size_t cells) {
  std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HADAMARD_ITER_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min<std::size_t>(n, v);
  }
  return std::max<std::size_t>(1, std::min(n, cells));
}

struct SweepCell {
  std::vector<json> values;
  json config;
};

/// Expands the Cartesian product of `grid` (JSON pointer -> list of values)
/// over `base`, in key order with the last key varying fastest.
inline std::vector<SweepCell> expand_grid(const json& base, const json& grid) {
  if (!grid.is_object() || grid.empty()) throw ConfigError("sweep grid must be a non-empty object");
  std::vector<std::pair<json::json_pointer, std::vector<json>>> axes;
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw ConfigError("sweep grid entry '" + key + "' must be a non-empty array");
    try {
      axes.emplace_back(json::json_pointer(key), values.get<std::vector<json>>());
    } catch (const json::exception& e) {
      throw ConfigError("sweep grid key '" + key + "' is not a JSON pointer: " + e.what());
    }
  }
  std::vector<SweepCell> cells{SweepCell{{}, base}};
  for (const auto& [ptr, values] : axes) {
    std::vector<SweepCell> next;
    for (const SweepCell& c : cells)
      for (const json& v : values) {
        SweepCell d = c;
        d.values.push_back(v);
        try {
          d.config[ptr] = v;
        } catch (const json::exception& e) {
          throw ConfigError("cannot apply sweep key '" + ptr.to_string() + "': " + e.what());
        }
        next.push_back(std::move(d));
      }
    cells = std::move(next);
  }
  return cells;
}

struct SweepOutcome {
  int code = kConfigError;
  std::vector<int> cell_codes;
  std::vector<json> summaries;
};

inline SweepOutcome cmd_sweep(const json& config, const fs::path& out, std::ostream& log, const Overrides& ov = {}) {
  std::vector<SweepCell> cells;
  std::vector<RunSpec> specs;
  std::vector<std::string> keys;
  std::string aggregate = "aggregate.csv";
  try {
    reject_unknown(config, {"base", "grid", "output"}, "sweep config");
    const json grid = get<json>(config, "grid", "sweep config");
    for (const auto& [key, v] : grid.items()) keys.push_back(key);
    cells = expand_grid(get<json>(config, "base", "sweep config"), grid);
    if (config.contains("output")) aggregate = get<std::string>(config, "output", "sweep config");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        specs.push_back(load_run(cells[i].config, ov));
      } catch (const Error& e) {
        throw ConfigError("cell " + std::to_string(i) + ": " + e.what());
      }
    }
  } catch (const Error& e) {
    log << "config error: " << e.what() << "\n";
    return {};
  }

  SweepOutcome result{.code = kOk, .cell_codes = std::vector<int>(cells.size(), kOk),
                      .summaries = std::vector<json>(cells.size())};
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::optional<std::string> failure;
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      char dir[32];
      std::snprintf(dir, sizeof dir, "cell_%04zu", i);
      try {
        RunOutcome r = execute(specs[i], out / dir);
        result.cell_codes[i] = r.code;
        result.summaries[i] = summary_json(*r.spec, *r.trace);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        failure = e.what();
        result.cell_codes[i] = kSolverError;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = sweep_threads(cells.size());
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) log << "cell failed: " << *failure << "\n";

  std::string csv = "cell";
  for (const std::string& k : keys) csv += "," + k;
  csv += ",stop_reason,iterations,final_residual,target_distance\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    csv += std::to_string(i);
    for (const json& v : cells[i].values) {
      std::string s = v.is_string() ? v.get<std::string>() : v.dump();
      if (s.find_first_of(",\"") != std::string::npos) {
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        s = q + "\"";
      }
      csv += "," + s;
    }
    const json& sm = result.summaries[i];
    if (sm.is_null()) {
      csv += ",solver_error,,,\n";
      continue;
    }
    auto num = [](const json& v) { return v.is_null() ? std::string() : fmt17(v.get<double>()); };
    csv += "," + sm["stop_reason"].get<std::string>() + "," + std::to_string(sm["iterations"].get<std::size_t>()) + "," +
           num(sm["final_residual"]) + "," + num(sm["target_distance"]) + "\n";
  }
  write_atomic(out / aggregate, csv);
  result.code = *std::max_element(result.cell_codes.begin(), result.cell_codes.end());
  log << "sweep: " << cells.size() << " cells on " << threads << " threads, worst exit code " << result.code << "\n";
  return result;
}

}  // namespace hadamard::experiment

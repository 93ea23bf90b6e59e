#pragma once

// The two iteration engines and the named schemes built on them.
//
// Runs are indexed from k = 1 with x_1 = start. The sequence engine sets
// x_{k+1} = T_k x_k; the Halpern engine sets x_{k+1} = α_k u ⊕ (1-α_k) T_k x_k,
// i.e. combine(u, T_k x_k, 1 - α_k).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hadamard/operators.hpp"
#include "hadamard/resolvents.hpp"
#include "hadamard/schedule.hpp"

namespace hadamard {

enum class StopReason { Converged, BudgetExhausted, SolverError };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::BudgetExhausted: return "budget_exhausted";
    case StopReason::SolverError: return "solver_error";
  }
  return "unknown";
}

struct TraceStep {
  std::size_t k = 0;
  SpacePoint x;
  /// d(x_k, T_k x_k).
  double residual = 0.0;
  std::optional<double> dist_to_reference;
  /// d(x_k, p) - d(x_{k+1}, p) for the run's Fejér point p.
  std::optional<double> fejer_gap;
};

struct Summary {
  std::size_t iterations_run = 0;
  double final_residual = 0.0;
  SpacePoint final_point;
  StopReason stop_reason = StopReason::BudgetExhausted;
  std::optional<std::size_t> error_step;
  std::string error_message;
  std::optional<double> target_distance;
};

struct IterationTrace {
  std::vector<TraceStep> steps;
  Summary summary;
};

struct RunConfig {
  ModelSpace space;
  SpacePoint start;
  std::optional<SpacePoint> anchor;
  std::optional<Schedule> anchor_schedule;
  std::size_t max_iterations = 100000;
  double tolerance = 1e-10;
  std::optional<SpacePoint> reference;
  std::optional<SpacePoint> fejer_point;
  /// 0 selects the default: every step up to k = 1000, then 10^(digits-3).
  std::size_t trace_stride = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline bool record_step(std::size_t k, std::size_t stride) {
  if (stride > 0) return k == 1 || k % stride == 0;
  if (k <= 1000) return true;
  std::size_t every = 1;
  for (std::size_t m = k; m >= 1000; m /= 10) every *= 10;
  return k % every == 0;
}

// Shared loop. `advance` maps (T_k, x_k, Tx_k) to x_{k+1}; `movement`
// selects the stopping quantity (residual or step length).
template <class Advance>
IterationTrace run_engine(const OperatorSequence& seq, const RunConfig& cfg, Advance advance, bool stop_on_movement) {
  const ModelSpace& space = cfg.space;
  space.validate(cfg.start);
  if (cfg.reference) space.validate(*cfg.reference);
  if (cfg.fejer_point) space.validate(*cfg.fejer_point);
  if (cfg.max_iterations == 0) throw ConfigError("max_iterations must be positive");
  if (!(cfg.tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");

  IterationTrace trace{.steps = {},
                       .summary = Summary{.iterations_run = 0,
                                          .final_residual = 0.0,
                                          .final_point = cfg.start,
                                          .stop_reason = StopReason::BudgetExhausted,
                                          .error_step = std::nullopt,
                                          .error_message = {},
                                          .target_distance = std::nullopt}};
  SpacePoint x = cfg.start;
  std::optional<TraceStep> pending;
  for (std::size_t k = 1; k <= cfg.max_iterations; ++k) {
    std::optional<SpacePoint> next;
    double residual = 0.0;
    try {
      const OperatorSpec T = seq(k);
      const SpacePoint tx = T(x);
      residual = space.distance(x, tx);
      next = advance(k, x, tx);
    } catch (const Error& e) {
      trace.summary.stop_reason = StopReason::SolverError;
      trace.summary.error_step = k;
      trace.summary.error_message = e.what();
      break;
    }
    TraceStep step{.k = k, .x = x, .residual = residual, .dist_to_reference = std::nullopt, .fejer_gap = std::nullopt};
    if (cfg.reference) step.dist_to_reference = space.distance(x, *cfg.reference);
    if (cfg.fejer_point) step.fejer_gap = space.distance(x, *cfg.fejer_point) - space.distance(*next, *cfg.fejer_point);
    const double movement = stop_on_movement ? space.distance(x, *next) : residual;

    trace.summary.iterations_run = k;
    trace.summary.final_residual = residual;
    x = std::move(*next);
    if (detail::record_step(k, cfg.trace_stride)) {
      trace.steps.push_back(std::move(step));
      pending.reset();
    } else {
      pending = std::move(step);
    }
    if (movement <= cfg.tolerance) {
      trace.summary.stop_reason = StopReason::Converged;
      break;
    }
  }
  if (pending) trace.steps.push_back(std::move(*pending));
  trace.summary.final_point = x;
  if (cfg.reference) trace.summary.target_distance = space.distance(x, *cfg.reference);
  return trace;
}

}  // namespace detail

/// x_{k+1} = T_k x_k, stopping once d(x_k, T_k x_k) <= tolerance.
inline IterationTrace iterate_sequence(const OperatorSequence& seq, const RunConfig& cfg) {
  return detail::run_engine(
      seq, cfg, [](std::size_t, const SpacePoint&, const SpacePoint& tx) { return tx; }, false);
}

/// x_{k+1} = α_k u ⊕ (1-α_k) T_k x_k, stopping once d(x_k, x_{k+1}) <= tolerance.
inline IterationTrace halpern_iterate(const OperatorSequence& seq, const RunConfig& cfg) {
  if (!cfg.anchor) throw ConfigError("Halpern iteration needs an anchor u");
  if (!cfg.anchor_schedule) throw ConfigError("Halpern iteration needs an anchor schedule");
  cfg.space.validate(*cfg.anchor);
  require_class(*cfg.anchor_schedule, ScheduleClass::HalpernAnchor, "anchor",
                "Halpern strong convergence (lim a_k = 0, sum a_k = +inf)");
  const SpacePoint u = *cfg.anchor;
  const Schedule a = *cfg.anchor_schedule;
  const ModelSpace space = cfg.space;
  return detail::run_engine(
      seq, cfg,
      [&](std::size_t k, const SpacePoint&, const SpacePoint& tx) { return space.combine(u, tx, 1.0 - a(k)); }, true);
}

// ----------------------------------------------------------------- schemes

enum class Engine { Sequence, Halpern };

struct SchemeSources {
  std::optional<OperatorSpec> op;
  std::optional<ObjectiveFunction> objective;
  std::optional<Bifunction> bifunction;
};

struct SchemeSchedules {
  std::optional<Schedule> alpha;
  std::optional<Schedule> beta;
  std::optional<Schedule> gamma;
  std::optional<Schedule> lambda;
};

struct Scheme {
  std::string name;
  OperatorSequence sequence;
  Engine engine = Engine::Sequence;
  std::optional<Schedule> anchor_schedule;
  /// The convergence statement the run instantiates.
  std::string theorem;
  /// Set the iterates approach, when known.
  std::optional<ConvexSubset> target_set;
};

inline const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names{"ishikawa",        "halpern_ishikawa",      "mann",
                                              "halpern_mann",    "ppa",                   "halpern_ppa",
                                              "lipschitz_ppa",   "halpern_lipschitz_ppa", "ppa_equilibrium",
                                              "halpern_ppa_equilibrium"};
  return names;
}

/// Default Halpern anchor schedule 1/(k+1) and Mann parameter 1/2.
inline Schedule default_anchor_schedule() { return Schedule::power_law(1.0, 1.0, 1.0); }
inline Schedule default_mann_schedule() { return Schedule::constant(0.5); }

inline Scheme build_scheme(const ModelSpace& space, std::string_view name, const SchemeSources& src,
                           const SchemeSchedules& sch, const ResolventOptions& opt = {}) {
  const std::string n(name);
  auto need_op = [&]() -> const OperatorSpec& {
    if (!src.op) throw ConfigError("scheme '" + n + "' needs an operator source");
    return *src.op;
  };
  auto need_lambda = [&]() -> const Schedule& {
    if (!sch.lambda) throw ConfigError("scheme '" + n + "' needs a lambda schedule");
    return *sch.lambda;
  };
  auto need_beta = [&]() -> const Schedule& {
    if (!sch.beta) throw ConfigError("scheme '" + n + "' needs a beta schedule (beta_k -> 0)");
    return *sch.beta;
  };
  auto anchor = [&](const std::optional<Schedule>& s, std::string_view role, std::string_view theorem) {
    Schedule a = s ? *s : default_anchor_schedule();
    require_class(a, ScheduleClass::HalpernAnchor, role, theorem);
    return a;
  };

  if (n == "ishikawa" || n == "halpern_ishikawa" || n == "mann" || n == "halpern_mann") {
    const bool halpern = n.starts_with("halpern_");
    const bool mann = n.ends_with("mann");
    const OperatorSpec& T = need_op();
    const Schedule alpha = sch.alpha ? *sch.alpha : default_mann_schedule();
    std::string theorem;
    if (halpern)
      theorem = std::string(mann ? "Halpern-Mann" : "Halpern-Ishikawa") + " iteration converges strongly to Proj_F(T) u";
    else
      theorem = std::string(mann ? "Mann" : "Ishikawa") + " iteration Delta-converges to an element of F(T)";
    Scheme s{.name = n,
             .sequence = mann ? mann_sequence(space, T, alpha) : ishikawa_sequence(space, T, alpha, need_beta()),
             .engine = halpern ? Engine::Halpern : Engine::Sequence,
             .anchor_schedule = std::nullopt,
             .theorem = theorem,
             .target_set = T.fixed_set};
    if (halpern) s.anchor_schedule = anchor(sch.gamma, "gamma", theorem);
    return s;
  }

  if (n == "ppa" || n == "halpern_ppa") {
    if (!src.objective) throw ConfigError("scheme '" + n + "' needs a function source");
    const bool halpern = n == "halpern_ppa";
    const std::string theorem = halpern ? "Halpern proximal point algorithm converges strongly to Proj_Argmin f u"
                                        : "proximal point algorithm converges to a fixed point of the resolvents";
    OperatorSequence seq = resolvent_sequence(space, *src.objective, need_lambda(), opt);
    Scheme s{.name = n,
             .sequence = seq,
             .engine = halpern ? Engine::Halpern : Engine::Sequence,
             .anchor_schedule = std::nullopt,
             .theorem = theorem,
             .target_set = seq.common_fixed_set};
    if (halpern) s.anchor_schedule = anchor(sch.alpha, "alpha", theorem);
    return s;
  }

  if (n == "lipschitz_ppa" || n == "halpern_lipschitz_ppa") {
    const bool halpern = n == "halpern_lipschitz_ppa";
    const std::string theorem = halpern
                                    ? "Halpern Lipschitz-map proximal point algorithm converges strongly to Proj_F(T) u"
                                    : "Lipschitz-map proximal point algorithm x_{k+1} = J_{lambda_k}^T x_k";
    OperatorSequence seq = resolvent_sequence(space, need_op(), need_lambda(), opt);
    Scheme s{.name = n,
             .sequence = seq,
             .engine = halpern ? Engine::Halpern : Engine::Sequence,
             .anchor_schedule = std::nullopt,
             .theorem = theorem,
             .target_set = seq.common_fixed_set};
    if (halpern) s.anchor_schedule = anchor(sch.alpha, "alpha", theorem);
    return s;
  }

  if (n == "ppa_equilibrium" || n == "halpern_ppa_equilibrium") {
    if (!src.bifunction) throw ConfigError("scheme '" + n + "' needs a bifunction source");
    const bool halpern = n == "halpern_ppa_equilibrium";
    const std::string theorem = halpern ? "Halpern equilibrium proximal point algorithm converges strongly to Proj_S(f,K) u"
                                        : "equilibrium proximal point algorithm Delta-converges to an element of S(f,K)";
    OperatorSequence seq = resolvent_sequence(space, *src.bifunction, need_lambda(), opt);
    Scheme s{.name = n,
             .sequence = seq,
             .engine = halpern ? Engine::Halpern : Engine::Sequence,
             .anchor_schedule = std::nullopt,
             .theorem = theorem,
             .target_set = seq.common_fixed_set};
    if (halpern) s.anchor_schedule = anchor(sch.alpha, "alpha", theorem);
    return s;
  }

  throw ConfigError("unknown scheme '" + n + "'");
}

/// Runs a built scheme. Without an explicit reference, a Halpern run with a
/// known target set tracks x* = P_F u, and other runs report the distance of
/// the final point to the target set.
inline IterationTrace run_scheme(const Scheme& scheme, RunConfig cfg) {
  if (!cfg.fejer_point && scheme.engine == Engine::Sequence) cfg.fejer_point = scheme.sequence.common_witness;
  if (scheme.engine == Engine::Halpern) {
    if (!cfg.anchor) throw ConfigError("scheme '" + scheme.name + "' is Halpern-type and needs an anchor");
    cfg.anchor_schedule = scheme.anchor_schedule;
    if (!cfg.reference && scheme.target_set) cfg.reference = cfg.space.project(*scheme.target_set, *cfg.anchor);
    return halpern_iterate(scheme.sequence, cfg);
  }
  if (cfg.anchor) throw ConfigError("scheme '" + scheme.name + "' is not Halpern-type; remove the anchor");
  IterationTrace trace = iterate_sequence(scheme.sequence, cfg);
  if (!cfg.reference && scheme.target_set) {
    const SpacePoint& x = trace.summary.final_point;
    trace.summary.target_distance = cfg.space.distance(x, cfg.space.project(*scheme.target_set, x));
  }
  return trace;
}

}  // namespace hadamard

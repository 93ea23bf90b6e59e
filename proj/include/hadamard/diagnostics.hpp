#pragma once

// Sampled property checks. Each returns a CheckReport; none throws on a
// violated inequality. Universally quantified claims are only spot-checked,
// and every report states how many samples it tested.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hadamard/fixtures.hpp"
#include "hadamard/operators.hpp"
#include "hadamard/resolvents.hpp"
#include "hadamard/sampling.hpp"
#include "hadamard/schemes.hpp"

namespace hadamard {

namespace slack {
inline constexpr double fejer = 1e-9;
inline constexpr double comparison = 1e-8;
inline constexpr double identity = 1e-9;
inline constexpr double lemma = 1e-7;
inline constexpr double nested_fixed = 1e-10;
inline constexpr double operator_property = 1e-8;
}  // namespace slack

struct Violation {
  std::string input;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

struct CheckReport {
  static constexpr std::size_t kept_violations = 20;

  std::string check_name;
  std::size_t samples_tested = 0;
  std::size_t violation_count = 0;
  /// The first `kept_violations` violations.
  std::vector<Violation> violations;
  /// max over samples of lhs - rhs - slack; <= 0 iff the check passed.
  double max_violation = -std::numeric_limits<double>::infinity();
  bool passed = true;

  explicit CheckReport(std::string name) : check_name(std::move(name)) {}

  /// Records one instance of lhs <= rhs + slack.
  void record(const std::string& input, double lhs, double rhs, double slack_value) {
    ++samples_tested;
    const double v = lhs - rhs - slack_value;
    max_violation = std::max(max_violation, std::isnan(v) ? std::numeric_limits<double>::infinity() : v);
    if (!(lhs <= rhs + slack_value)) {
      ++violation_count;
      passed = false;
      if (violations.size() < kept_violations) violations.push_back({input, lhs, rhs, slack_value});
    }
  }

  void merge(const CheckReport& other) {
    samples_tested += other.samples_tested;
    violation_count += other.violation_count;
    for (const Violation& v : other.violations) {
      if (violations.size() >= kept_violations) break;
      Violation w = v;
      w.input = other.check_name + ": " + w.input;
      violations.push_back(std::move(w));
    }
    max_violation = std::max(max_violation, other.max_violation);
    passed = passed && other.passed;
  }
};

inline std::string describe(const SpacePoint& p) {
  std::ostringstream os;
  os.precision(17);
  if (p.is_tree()) {
    os << "(leg " << p.tree().leg << ", r " << p.tree().radius << ")";
    return os.str();
  }
  os << "(";
  for (Eigen::Index i = 0; i < p.coords().size(); ++i) os << (i ? ", " : "") << p.coords()(i);
  os << ")";
  return os.str();
}

// ------------------------------------------------------------------ traces

/// d(x_{k+1}, p) <= d(x_k, p) between consecutive recorded steps and the final point.
inline CheckReport check_fejer(const ModelSpace& space, const IterationTrace& trace, const SpacePoint& p) {
  CheckReport r("fejer");
  space.validate(p);
  std::vector<std::pair<std::size_t, const SpacePoint*>> pts;
  for (const TraceStep& s : trace.steps) pts.emplace_back(s.k, &s.x);
  pts.emplace_back(trace.summary.iterations_run + 1, &trace.summary.final_point);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double before = space.distance(*pts[i].second, p);
    const double after = space.distance(*pts[i + 1].second, p);
    r.record("k=" + std::to_string(pts[i].first) + " -> " + std::to_string(pts[i + 1].first), after, before,
             slack::fejer);
  }
  return r;
}

/// Final distance to x* = P_F u within `tolerance`, and every recorded iterate
/// within max{d(x*, u), d(x*, x_1)} of x*.
inline CheckReport check_halpern_target(const ModelSpace& space, const IterationTrace& trace, const SpacePoint& u,
                                        const ConvexSubset& fixed_set, double tolerance) {
  CheckReport r("halpern_target");
  const SpacePoint target = space.project(fixed_set, u);
  r.record("final distance to P_F(u) = " + describe(target), space.distance(trace.summary.final_point, target),
           tolerance, 0.0);
  if (trace.steps.empty()) return r;
  const double bound = std::max(space.distance(target, u), space.distance(target, trace.steps.front().x));
  for (const TraceStep& s : trace.steps)
    r.record("bound at k=" + std::to_string(s.k), space.distance(s.x, target), bound, slack::comparison);
  return r;
}

// ---------------------------------------------------------------- geometry

/// CAT(0) comparison, Cauchy-Schwarz, quasilinearization identities and
/// geodesic consistency on random samples.
/// `Geometry` needs distance, distance_squared, combine and quasilin; points
/// come from `draw`.
template <class Geometry>
CheckReport check_space_axioms(const Geometry& space, PointSampler draw, std::size_t samples) {
  CheckReport r("space_axioms");
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint a = draw(), b = draw(), c = draw(), d = draw();
    const double t = draw.uniform(0.0, 1.0), s = draw.uniform(0.0, 1.0);
    const std::string tag = "sample " + std::to_string(i);

    const SpacePoint m = space.combine(a, b, t);
    const double dab2 = space.distance_squared(a, b);
    r.record(tag + " cat0", space.distance_squared(m, c),
             (1.0 - t) * space.distance_squared(a, c) + t * space.distance_squared(b, c) - t * (1.0 - t) * dab2,
             slack::comparison);

    const double q = space.quasilin(a, b, c, d);
    r.record(tag + " cauchy-schwarz", q, space.distance(a, b) * space.distance(c, d), slack::comparison);

    auto equal = [&](const std::string& what, double x, double y) {
      r.record(tag + " " + what, std::abs(x - y), 0.0, slack::identity);
    };
    equal("<ab,ab> = d^2", space.quasilin(a, b, a, b), dab2);
    equal("symmetry", q, space.quasilin(c, d, a, b));
    equal("antisymmetry", q, -space.quasilin(b, a, c, d));
    equal("additivity", space.quasilin(a, c, c, d) + space.quasilin(c, b, c, d), q);

    const double dab = std::sqrt(dab2);
    r.record(tag + " geodesic", std::abs(space.distance(m, space.combine(a, b, s)) - std::abs(t - s) * dab), 0.0,
             slack::identity);
  }
  return r;
}

inline CheckReport check_space_axioms(const ModelSpace& space, std::size_t samples, std::uint64_t seed = 1,
                                      double scale = 1.0) {
  return check_space_axioms(space, PointSampler(space, seed, scale), samples);
}

/// Projection onto `set`: membership, idempotence, minimality against sampled
/// members, and (with tangent structure) the obtuse-angle property.
/// A custom `projector` is checked in place of the built-in one.
inline CheckReport check_projection(const ModelSpace& space, const ConvexSubset& set, std::size_t samples,
                                    std::uint64_t seed = 1,
                                    std::function<SpacePoint(const SpacePoint&)> projector = nullptr) {
  if (!projector) projector = [&space, &set](const SpacePoint& x) { return space.project(set, x); };
  CheckReport r("projection");
  PointSampler draw(space, seed, 2.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint x = draw();
    const SpacePoint px = projector(x);
    const SpacePoint y = draw.in(set);
    const std::string tag = "x=" + describe(x);
    r.record(tag + " member", space.contains(set, px) ? 0.0 : 1.0, 0.0, 0.0);
    r.record(tag + " idempotent", space.distance(projector(px), px), 0.0, slack::identity);
    r.record(tag + " nearest", space.distance(x, px), space.distance(x, y), slack::comparison);
    r.record(tag + " obtuse", space.quasilin(px, x, px, y), 0.0, slack::comparison);
  }
  return r;
}

// --------------------------------------------------------------- operators

/// Witness fixed, quasi-nonexpansive about the witness (if flagged), and C
/// mapped into C.
inline CheckReport check_operator(const ModelSpace& space, const OperatorSpec& T, std::size_t samples,
                                  std::uint64_t seed = 1) {
  CheckReport r("operator(" + T.name + ")");
  if (T.witness) r.record("witness fixed", space.distance(T(*T.witness), *T.witness), 0.0, tol::identity);
  PointSampler draw(space, seed, 2.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint x = draw.in(T.domain);
    const SpacePoint tx = T(x);
    const std::string tag = "x=" + describe(x);
    r.record(tag + " maps into C", space.contains(T.domain, tx, 1e-8) ? 0.0 : 1.0, 0.0, 0.0);
    if (T.flags.quasi_nonexpansive && T.witness)
      r.record(tag + " quasi-nonexpansive", space.distance(tx, *T.witness), space.distance(x, *T.witness),
               slack::operator_property);
  }
  return r;
}

/// Every point of [p, q] is fixed when p and q are.
inline CheckReport check_fixed_set_convex(const ModelSpace& space, const OperatorSpec& T, const SpacePoint& p,
                                          const SpacePoint& q, std::size_t samples, std::uint64_t seed = 1) {
  CheckReport r("fixed_set_convex(" + T.name + ")");
  PointSampler draw(space, seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = draw.uniform(0.0, 1.0);
    const SpacePoint m = space.combine(p, q, t);
    r.record("t=" + std::to_string(t), space.distance(T(m), m), 0.0, slack::comparison);
  }
  return r;
}

// ----------------------------------------------------------------- lemmas

struct IshikawaSource {
  OperatorSpec T;
  double alpha = 0.5;
  double beta = 0.0;
};
struct LipschitzSource {
  OperatorSpec T;
  double lambda = 1.0;
  LipschitzOptions options;
};
struct EquilibriumSource {
  Bifunction f;
  double lambda = 1.0;
  ResolventOptions options;
};
using SqnSource = std::variant<IshikawaSource, LipschitzSource, EquilibriumSource>;

/// The strong quasi-nonexpansiveness inequality for each source kind:
///   Ishikawa     ((1-α)/α) d²(x, Sx) <= d²(x, p) - d²(Sx, p)
///   Lipschitz    d²(x, Jx) <= (λ/(1+λ)) (d²(x, p) - d²(Jx, p))
///   equilibrium  d²(x, Jx) <= d²(x, p) - d²(Jx, p)
inline CheckReport check_sqn_inequality(const ModelSpace& space, const SqnSource& source, const SpacePoint& witness,
                                        std::size_t samples, std::uint64_t seed = 1, double scale = 2.0) {
  space.validate(witness);
  PointSampler draw(space, seed, scale);
  return std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        std::function<SpacePoint(const SpacePoint&)> map;
        ConvexSubset domain = ConvexSubset::whole(space.id());
        double lhs_factor = 1.0, rhs_factor = 1.0;
        std::string name;
        if constexpr (std::is_same_v<S, IshikawaSource>) {
          map = ishikawa_operator(space, s.T, s.alpha, s.beta).apply;
          domain = s.T.domain;
          lhs_factor = (1.0 - s.alpha) / s.alpha;
          name = "sqn_ishikawa";
        } else if constexpr (std::is_same_v<S, LipschitzSource>) {
          map = [&space, &s](const SpacePoint& x) { return lipschitz_resolvent(space, s.T, s.lambda, x, s.options); };
          domain = s.T.domain;
          rhs_factor = s.lambda / (1.0 + s.lambda);
          name = "sqn_lipschitz";
        } else {
          map = [&space, &s](const SpacePoint& x) { return equilibrium_resolvent(space, s.f, s.lambda, x, s.options); };
          domain = s.f.feasible;
          name = "sqn_equilibrium";
        }
        CheckReport r(name);
        for (std::size_t i = 0; i < samples; ++i) {
          const SpacePoint x = draw.in(domain);
          const SpacePoint y = map(x);
          r.record("x=" + describe(x), lhs_factor * space.distance_squared(x, y),
                   rhs_factor * (space.distance_squared(x, witness) - space.distance_squared(y, witness)), slack::lemma);
        }
        return r;
      },
      source);
}

/// d²(Jx, x̃) <= <Jx x̃, x x̃> for J = J_λ^f and x̃ in Argmin f.
inline CheckReport check_quasi_firm(const ModelSpace& space, const ObjectiveFunction& f, double lambda,
                                    const SpacePoint& witness, std::size_t samples, std::uint64_t seed = 1,
                                    double scale = 2.0, const ProxOptions& opt = {}) {
  CheckReport r("quasi_firm");
  space.validate(witness);
  PointSampler draw(space, seed, scale);
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint x = draw();
    SpacePoint jx = x;
    try {
      jx = convex_resolvent(space, f, lambda, x, opt);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " (quasi_firm sample x=" + describe(x) + ")", e.residual());
    }
    r.record("x=" + describe(x), space.distance_squared(jx, witness), space.quasilin(jx, witness, x, witness),
             slack::lemma);
  }
  return r;
}

/// F(J_λ^f) ⊆ F(J_μ^f) for μ < λ, on the given candidates. A candidate that
/// is not fixed by J_λ^f is rejected with DomainError.
inline CheckReport check_nested_fixed_sets(const ModelSpace& space, const ObjectiveFunction& f, double lambda,
                                           double mu, const std::vector<SpacePoint>& candidates,
                                           const ProxOptions& opt = {}) {
  if (!(mu > 0.0 && mu < lambda)) throw DomainError("nested fixed sets need 0 < mu < lambda");
  CheckReport r("nested_fixed_sets");
  for (const SpacePoint& p : candidates) {
    const double moved = space.distance(convex_resolvent(space, f, lambda, p, opt), p);
    if (moved > slack::nested_fixed)
      throw DomainError("candidate " + describe(p) + " is not a fixed point of the resolvent at lambda (moved " +
                        std::to_string(moved) + ")");
    r.record("p=" + describe(p), space.distance(convex_resolvent(space, f, mu, p, opt), p), 0.0, slack::lemma);
  }
  return r;
}

/// F(J_λ^T) = F(T): witnesses of T are fixed by J, and the J-limit of random
/// starts is fixed by T.
inline CheckReport check_lipschitz_fixed_set(const ModelSpace& space, const OperatorSpec& T, double lambda,
                                             std::size_t samples, std::uint64_t seed = 1) {
  CheckReport r("lipschitz_fixed_set(" + T.name + ")");
  if (T.witness)
    r.record("J(witness)", space.distance(lipschitz_resolvent(space, T, lambda, *T.witness), *T.witness), 0.0,
             tol::identity);
  PointSampler draw(space, seed);
  for (std::size_t i = 0; i < samples; ++i) {
    SpacePoint x = draw.in(T.domain);
    for (int j = 0; j < 10000; ++j) {
      SpacePoint y = lipschitz_resolvent(space, T, lambda, x);
      const double step = space.distance(x, y);
      x = std::move(y);
      if (step <= 1e-13) break;
    }
    r.record("J-fixed point " + describe(x), space.distance(T(x), x), 0.0, slack::lemma);
  }
  return r;
}

// ------------------------------------------------------------- functions

/// Midpoint (weak) convexity f(m) <= ½f(x) + ½f(y) + α/4 d²(x, y) as flagged.
inline CheckReport check_function(const ModelSpace& space, const ObjectiveFunction& f, std::size_t samples,
                                  std::uint64_t seed = 1, double scale = 2.0) {
  CheckReport r("function(" + f.name + ")");
  if (!f.flags.convex && !f.flags.weakly_convex) return r;
  const double alpha = f.flags.convex ? 0.0 : f.weak_convexity;
  PointSampler draw(space, seed, scale);
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint x = draw(), y = draw();
    const double t = draw.uniform(0.0, 1.0);
    const double fx = f.eval(x), fy = f.eval(y);
    r.record("x=" + describe(x) + " y=" + describe(y), f.eval(space.combine(x, y, t)),
             (1.0 - t) * fx + t * fy + alpha * t * (1.0 - t) * space.distance_squared(x, y),
             slack::comparison * (1.0 + std::abs(fx) + std::abs(fy)));
  }
  return r;
}

/// f(x,x) = 0, θ-under monotonicity and (if flagged) pseudo-monotonicity on K.
inline CheckReport check_bifunction(const ModelSpace& space, const Bifunction& f, std::size_t samples,
                                    std::uint64_t seed = 1, double scale = 1.0) {
  CheckReport r("bifunction(" + f.name + ")");
  PointSampler draw(space, seed, scale);
  for (std::size_t i = 0; i < samples; ++i) {
    const SpacePoint x = draw.in(f.feasible), y = draw.in(f.feasible);
    const std::string tag = "x=" + describe(x) + " y=" + describe(y);
    r.record(tag + " f(x,x)", std::abs(f.eval(x, x)), 0.0, slack::comparison);
    const double fxy = f.eval(x, y), fyx = f.eval(y, x);
    r.record(tag + " theta-under", fxy + fyx, f.theta * space.distance_squared(x, y), slack::comparison);
    if (f.flags.pseudo_monotone) {
      if (fxy >= 0.0) r.record(tag + " pseudo-monotone", fyx, 0.0, slack::comparison);
      if (fyx >= 0.0) r.record(tag + " pseudo-monotone", fxy, 0.0, slack::comparison);
    }
  }
  return r;
}

}  // namespace hadamard

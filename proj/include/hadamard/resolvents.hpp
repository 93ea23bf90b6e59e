#pragma once

// Resolvent constructions. Each produces points (single evaluation) or an
// OperatorSequence k -> J_{λ_k} suitable for the iteration engines.
//
//   convex_resolvent     argmin_y f(y) + d²(y, x) / (2λ)
//   lipschitz_resolvent  unique fixed point of y -> (1/(1+λ))x ⊕ (λ/(1+λ))Ty
//   equilibrium_resolvent
//                        z in K with f(z, y) + λ<xz, zy> >= 0 for all y in K
//
// For a minimization bifunction f(x, y) = g(y) - g(x) on K the equilibrium
// condition reads g(y) >= g(z) + λ<zx, zy>, which in every model space is the
// optimality condition of argmin_{y in K} g(y) + (λ/2) d²(y, x). So the
// equilibrium resolvent at λ equals convex_resolvent(g, 1/λ, x) when K is the
// whole space.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hadamard/geometry.hpp"
#include "hadamard/operators.hpp"
#include "hadamard/sampling.hpp"
#include "hadamard/schedule.hpp"

namespace hadamard {

struct FunctionFlags {
  bool convex = false;
  bool quasi_convex = false;
  bool weakly_convex = false;
  bool pseudo_convex = false;
};

/// Proper lsc objective on a model space.
///
/// `gradient` returns the Riemannian gradient as an ambient tangent vector
/// (Euclidean and hyperboloid only). `weak_convexity` is the modulus α of
/// α-weak convexity, 0 for convex functions. `closed_form` evaluates the
/// resolvent directly when it is known.
struct ObjectiveFunction {
  std::string name;
  std::function<double(const SpacePoint&)> eval;
  std::function<Vector(const SpacePoint&)> gradient;
  double weak_convexity = 0.0;
  FunctionFlags flags;
  std::optional<ConvexSubset> argmin;
  std::function<SpacePoint(double lambda, const SpacePoint& x)> closed_form;
};

struct MinimizationStructure {
  ObjectiveFunction g;
};
/// f(x, y) = <F(x), y - x> on a Euclidean feasible set.
struct VariationalStructure {
  std::function<Vector(const Vector&)> field;
  double lipschitz = 1.0;
};
struct CustomStructure {
  std::function<SpacePoint(double lambda, const SpacePoint& x)> solve;
};

struct BifunctionFlags {
  bool pseudo_monotone = false;
};

/// Bifunction f : K x K -> R with its under-monotonicity modulus θ.
struct Bifunction {
  std::string name;
  std::function<double(const SpacePoint&, const SpacePoint&)> eval;
  double theta = 0.0;
  std::variant<MinimizationStructure, VariationalStructure, CustomStructure> structure;
  ConvexSubset feasible;
  std::optional<SpacePoint> equilibrium_witness;
  std::optional<ConvexSubset> solution_set;
  BifunctionFlags flags;
};

struct ProxOptions {
  double grad_tol = 1e-10;
  std::size_t max_steps = 10000;
  double armijo_c = 1e-4;
  /// Post-check on the first-order residual, relative to 1 + w d(y, x).
  double accept_tol = 1e-8;
};

struct LipschitzOptions {
  double step_tol = 1e-12;
  std::size_t max_steps = 1000000;
  double ratio_slack = 1e-6;
};

struct EquilibriumOptions {
  double tol = 1e-10;
  std::size_t max_steps = 1000000;
  double verify_slack = 1e-7;
  std::size_t directions = 64;
  std::size_t radii = 8;
  double min_radius = 1e-3;
  double max_radius = 10.0;
  std::uint64_t seed = 0x5eed;
  /// Step of the projected fixed-point iteration for variational structures.
  std::optional<double> vi_step;
};

struct ResolventOptions {
  ProxOptions prox;
  LipschitzOptions lipschitz;
  EquilibriumOptions equilibrium;
  /// ε in λ_k >= θ + ε for equilibrium schedules.
  double equilibrium_margin = 1e-6;
};

namespace detail {

// Projected Riemannian gradient descent on y -> g(y) + (w/2) d²(y, x) over K,
// with Armijo backtracking along the projection arc. Once function values
// stop resolving the Armijo decrease, a step is accepted if it lowers the
// stationarity residual instead.
inline SpacePoint solve_prox(const ModelSpace& space, const ObjectiveFunction& g, double w, const SpacePoint& x,
                             const ConvexSubset& K, const ProxOptions& opt) {
  if (!space.has_tangent_structure())
    throw UnsupportedOperation("resolvent of '" + g.name + "' on " + to_string(space.id()) + " needs a closed form");
  if (!g.gradient) throw UnsupportedOperation("resolvent of '" + g.name + "' needs a gradient or a closed form");

  const bool free = K.is_whole();
  const double tau = 1.0 / w;
  const double eps = std::numeric_limits<double>::epsilon();

  auto phi = [&](const SpacePoint& y) { return g.eval(y) + 0.5 * w * space.distance_squared(y, x); };
  auto grad = [&](const SpacePoint& y) -> Vector {
    return space.to_tangent(y, g.gradient(y)) - w * space.log_map(y, x).components;
  };
  auto step_to = [&](const SpacePoint& y, const Vector& G, double s) {
    SpacePoint z = space.exp_map(y, Vector(-s * G));
    return free ? z : space.project(K, z);
  };
  auto stationarity = [&](const SpacePoint& y, const Vector& G) {
    if (free) return space.tangent_norm(y, G);
    return space.distance(y, step_to(y, G, tau)) / tau;
  };

  SpacePoint y = space.project(K, x);
  double fy = phi(y);
  Vector G = grad(y);
  double r = stationarity(y, G);
  double s = tau;

  for (std::size_t it = 0; it < opt.max_steps && r > opt.grad_tol; ++it) {
    bool accepted = false;
    SpacePoint z = y;
    Vector Gz;
    for (int tries = 0; tries < 80 && !accepted; ++tries, s *= 0.5) {
      z = step_to(y, G, s);
      const double moved = space.distance(y, z);
      if (moved == 0.0) break;
      const double fz = phi(z);
      if (fz <= fy - opt.armijo_c * moved * moved / s) {
        Gz = grad(z);
        accepted = true;
      } else if (fz <= fy + 16.0 * eps * (std::abs(fy) + 1.0)) {
        // Below the resolution of phi: fall back to the residual as merit.
        Gz = grad(z);
        accepted = stationarity(z, Gz) < r;
      }
      if (accepted) fy = fz;
    }
    if (!accepted) break;

    // Barzilai-Borwein step from the secant pair at z; G is carried over by
    // tangent projection.
    const Vector sk = -space.log_map(z, y).components;
    const Vector yk = Gz - space.to_tangent(z, G);
    const double sy = space.inner(z, sk, yk);
    s = sy > 0.0 ? space.inner(z, sk, sk) / sy : 1e6 * tau;
    s = std::clamp(s, 1e-6 * tau, 1e6 * tau);

    y = std::move(z);
    G = std::move(Gz);
    r = stationarity(y, G);
  }

  if (!(r <= opt.accept_tol * (1.0 + w * space.distance(y, x))))
    throw SolverError("prox subproblem for '" + g.name + "' did not reach first-order optimality", r);
  return y;
}

inline double default_vi_step(double L, double lambda) {
  const double g = 1.0 / (L + lambda);
  const double a = 1.0 - g * lambda;
  if (a * a + g * g * L * L < 1.0) return g;
  return lambda / (lambda * lambda + L * L);
}

// Points of K around z used to spot-check the universally quantified
// resolvent inequality: directions x radii, plus K's extreme points.
inline std::vector<SpacePoint> feasible_probes(const ModelSpace& space, const ConvexSubset& K, const SpacePoint& z,
                                               const EquilibriumOptions& opt) {
  std::vector<SpacePoint> probes = space.extreme_points(K);
  std::vector<double> radii(opt.radii);
  for (std::size_t j = 0; j < opt.radii; ++j) {
    const double f = opt.radii > 1 ? static_cast<double>(j) / static_cast<double>(opt.radii - 1) : 0.0;
    radii[j] = opt.min_radius * std::pow(opt.max_radius / opt.min_radius, f);
  }
  if (space.has_tangent_structure()) {
    PointSampler sampler(space, opt.seed);
    for (std::size_t d = 0; d < opt.directions; ++d) {
      const Vector u = sampler.unit_tangent(z);
      for (double r : radii) probes.push_back(space.project(K, space.exp_map(z, Vector(r * u))));
    }
  } else {
    const TreeCoord& c = z.tree();
    for (std::size_t leg = 0; leg < space.dimension(); ++leg)
      for (double r : radii) probes.push_back(space.project(K, space.tree_point(leg, r)));
    for (double r : radii) probes.push_back(space.project(K, space.tree_point(c.leg, c.radius + r)));
  }
  return probes;
}

}  // namespace detail

// ------------------------------------------------------------------ convex

inline SpacePoint convex_resolvent(const ModelSpace& space, const ObjectiveFunction& f, double lambda,
                                   const SpacePoint& x, const ProxOptions& opt = {}) {
  space.validate(x);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("resolvent parameter must be positive");
  if (f.weak_convexity > 0.0 && !(lambda < 1.0 / (2.0 * f.weak_convexity)))
    throw DomainError("resolvent of weakly convex '" + f.name + "' needs lambda < 1/(2 alpha) = " +
                      std::to_string(1.0 / (2.0 * f.weak_convexity)));
  if (f.closed_form) return f.closed_form(lambda, x);
  return detail::solve_prox(space, f, 1.0 / lambda, x, ConvexSubset::whole(space.id()), opt);
}

// --------------------------------------------------------------- Lipschitz

struct LipschitzResolventResult {
  SpacePoint point;
  std::size_t steps = 0;
  /// Largest observed d(y_{j+1}, y_j) / d(y_j, y_{j-1}) above the noise floor.
  double max_ratio = 0.0;
  /// αλ/(1+λ).
  double contraction_bound = 0.0;
};

inline LipschitzResolventResult lipschitz_resolvent_detailed(const ModelSpace& space, const OperatorSpec& T,
                                                             double lambda, const SpacePoint& x,
                                                             const LipschitzOptions& opt = {}) {
  space.validate(x);
  if (!T.lipschitz) throw DomainError("lipschitz_resolvent: operator '" + T.name + "' has no Lipschitz constant");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("resolvent parameter must be positive");
  const double alpha = *T.lipschitz;
  if (alpha > 1.0 && !(lambda < 1.0 / (alpha - 1.0)))
    throw DomainError("lipschitz_resolvent: lambda must be < 1/(alpha - 1) = " + std::to_string(1.0 / (alpha - 1.0)));

  const double t = lambda / (1.0 + lambda);
  LipschitzResolventResult res{.point = x, .steps = 0, .max_ratio = 0.0, .contraction_bound = alpha * t};
  SpacePoint y = x;
  double prev = -1.0;
  for (std::size_t j = 0; j < opt.max_steps; ++j) {
    SpacePoint next = space.combine(x, T(y), t);
    const double step = space.distance(next, y);
    // Below this floor the ratio measures rounding, not the map.
    if (prev > 1e-8 * (1.0 + space.distance(x, y))) res.max_ratio = std::max(res.max_ratio, step / prev);
    y = std::move(next);
    res.steps = j + 1;
    if (step <= opt.step_tol) {
      if (res.max_ratio > res.contraction_bound + opt.ratio_slack)
        throw SolverError("lipschitz_resolvent: observed contraction ratio exceeds alpha*lambda/(1+lambda)",
                          res.max_ratio);
      res.point = std::move(y);
      return res;
    }
    prev = step;
  }
  throw SolverError("lipschitz_resolvent: iteration budget exhausted", prev);
}

inline SpacePoint lipschitz_resolvent(const ModelSpace& space, const OperatorSpec& T, double lambda,
                                      const SpacePoint& x, const LipschitzOptions& opt = {}) {
  return lipschitz_resolvent_detailed(space, T, lambda, x, opt).point;
}

// ------------------------------------------------------------- equilibrium

/// Smallest value of f(z, y) + λ<xz, zy> over the verification probes.
inline std::pair<double, std::optional<SpacePoint>> equilibrium_residual(const ModelSpace& space, const Bifunction& f,
                                                                          double lambda, const SpacePoint& x,
                                                                          const SpacePoint& z,
                                                                          const EquilibriumOptions& opt = {}) {
  double worst = std::numeric_limits<double>::infinity();
  std::optional<SpacePoint> arg;
  for (const SpacePoint& y : detail::feasible_probes(space, f.feasible, z, opt)) {
    const double v = f.eval(z, y) + lambda * space.quasilin(x, z, z, y);
    if (v < worst) {
      worst = v;
      arg = y;
    }
  }
  return {worst, arg};
}

inline SpacePoint equilibrium_resolvent(const ModelSpace& space, const Bifunction& f, double lambda,
                                        const SpacePoint& x, const ResolventOptions& opt = {}) {
  space.validate(x);
  if (!(lambda > f.theta) || !std::isfinite(lambda))
    throw DomainError("equilibrium resolvent of '" + f.name + "' needs lambda > theta = " + std::to_string(f.theta));

  const SpacePoint z = std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, MinimizationStructure>) {
          if (f.feasible.is_whole()) return convex_resolvent(space, s.g, 1.0 / lambda, x, opt.prox);
          return detail::solve_prox(space, s.g, lambda, x, f.feasible, opt.prox);
        } else if constexpr (std::is_same_v<S, VariationalStructure>) {
          if (space.kind() != SpaceKind::Euclidean)
            throw UnsupportedOperation("variational-inequality resolvent needs a Euclidean space");
          const double gamma = opt.equilibrium.vi_step ? *opt.equilibrium.vi_step : detail::default_vi_step(s.lipschitz, lambda);
          const Vector& xv = x.coords();
          SpacePoint cur = space.project(f.feasible, x);
          double moved = std::numeric_limits<double>::infinity();
          for (std::size_t it = 0; it < opt.equilibrium.max_steps; ++it) {
            const Vector& zv = cur.coords();
            const Vector trial = zv - gamma * (s.field(zv) + lambda * (zv - xv));
            SpacePoint next = space.project(f.feasible, SpacePoint(space.id(), trial));
            moved = (next.coords() - zv).norm();
            cur = std::move(next);
            if (moved <= opt.equilibrium.tol) return cur;
          }
          throw SolverError("variational-inequality resolvent iteration budget exhausted", moved);
        } else {
          return s.solve(lambda, x);
        }
      },
      f.structure);

  if (!space.contains(f.feasible, z)) throw SolverError("equilibrium resolvent left the feasible set", 0.0);
  const auto [worst, at] = equilibrium_residual(space, f, lambda, x, z, opt.equilibrium);
  if (worst < -opt.equilibrium.verify_slack) {
    std::string where;
    if (at && !at->is_tree()) {
      where = " at y = (";
      for (Eigen::Index i = 0; i < at->coords().size(); ++i) where += (i ? ", " : "") + std::to_string(at->coords()(i));
      where += ")";
    }
    throw SolverError("equilibrium resolvent inequality violated" + where, -worst);
  }
  return z;
}

// ---------------------------------------------------------------- sequences

inline OperatorSpec convex_resolvent_operator(const ModelSpace& space, const ObjectiveFunction& f, double lambda,
                                              const ProxOptions& opt = {}) {
  const bool fixed_is_argmin = f.flags.convex || f.flags.pseudo_convex;
  return OperatorSpec{
      .name = "resolvent(" + f.name + ")",
      .apply = [space, f, lambda, opt](const SpacePoint& x) { return convex_resolvent(space, f, lambda, x, opt); },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = f.flags.convex ? std::optional<double>(1.0) : std::nullopt,
      .witness = f.argmin ? space.representative(*f.argmin) : std::nullopt,
      .flags = {.nonexpansive = f.flags.convex,
                .quasi_nonexpansive = f.flags.convex || f.flags.quasi_convex,
                .demiclosed_assumed = true},
      .fixed_set = fixed_is_argmin ? f.argmin : std::nullopt,
  };
}

inline OperatorSpec lipschitz_resolvent_operator(const ModelSpace& space, const OperatorSpec& T, double lambda,
                                                 const LipschitzOptions& opt = {}) {
  return OperatorSpec{
      .name = "resolvent(" + T.name + ")",
      .apply = [space, T, lambda, opt](const SpacePoint& x) { return lipschitz_resolvent(space, T, lambda, x, opt); },
      .domain = T.domain,
      .lipschitz = std::nullopt,
      .witness = T.witness,
      .flags = {.nonexpansive = T.flags.nonexpansive,
                .quasi_nonexpansive = T.flags.quasi_nonexpansive,
                .demiclosed_assumed = T.flags.demiclosed_assumed},
      .fixed_set = T.fixed_set,
  };
}

inline OperatorSpec equilibrium_resolvent_operator(const ModelSpace& space, const Bifunction& f, double lambda,
                                                   const ResolventOptions& opt = {}) {
  return OperatorSpec{
      .name = "resolvent(" + f.name + ")",
      .apply = [space, f, lambda, opt](const SpacePoint& x) { return equilibrium_resolvent(space, f, lambda, x, opt); },
      .domain = f.feasible,
      .lipschitz = std::nullopt,
      .witness = f.equilibrium_witness,
      .flags = {.nonexpansive = false, .quasi_nonexpansive = f.flags.pseudo_monotone, .demiclosed_assumed = true},
      .fixed_set = f.flags.pseudo_monotone ? f.solution_set : std::nullopt,
  };
}

/// J_{λ_k}^f with liminf λ_k > 0 (and λ_k < 1/(2α) for α-weakly convex f).
inline OperatorSequence resolvent_sequence(const ModelSpace& space, const ObjectiveFunction& f, const Schedule& lambdas,
                                           const ResolventOptions& opt = {}) {
  ResolventBounds b{.lower = 0.0, .lower_strict = true, .upper = std::nullopt, .upper_strict = true};
  if (f.weak_convexity > 0.0) b.upper = 1.0 / (2.0 * f.weak_convexity);
  require_class(lambdas, ScheduleClass::ResolventParam, "lambda", "proximal point convergence", b);
  const OperatorSpec first = convex_resolvent_operator(space, f, lambdas(1), opt.prox);
  return OperatorSequence{
      .name = first.name,
      .factory = [space, f, lambdas, opt](std::size_t k) { return convex_resolvent_operator(space, f, lambdas(k), opt.prox); },
      .common_witness = first.witness,
      .common_fixed_set = first.fixed_set,
  };
}

/// J_{λ_k}^T with liminf λ_k > 0 and λ_k < 1/(α-1) when α > 1.
inline OperatorSequence resolvent_sequence(const ModelSpace& space, const OperatorSpec& T, const Schedule& lambdas,
                                           const ResolventOptions& opt = {}) {
  if (!T.lipschitz) throw ConfigError("Lipschitz resolvent sequence needs an operator with a Lipschitz constant");
  ResolventBounds b{.lower = 0.0, .lower_strict = true, .upper = std::nullopt, .upper_strict = true};
  if (*T.lipschitz > 1.0) b.upper = 1.0 / (*T.lipschitz - 1.0);
  require_class(lambdas, ScheduleClass::ResolventParam, "lambda", "Lipschitz-map resolvent existence and convergence", b);
  return OperatorSequence{
      .name = "resolvent(" + T.name + ")",
      .factory = [space, T, lambdas, opt](std::size_t k) {
        return lipschitz_resolvent_operator(space, T, lambdas(k), opt.lipschitz);
      },
      .common_witness = T.witness,
      .common_fixed_set = T.fixed_set,
  };
}

/// Equilibrium resolvents with λ_k in [θ + ε, λ̄].
inline OperatorSequence resolvent_sequence(const ModelSpace& space, const Bifunction& f, const Schedule& lambdas,
                                           const ResolventOptions& opt = {}) {
  if (!(opt.equilibrium_margin > 0.0)) throw ConfigError("equilibrium schedule margin must be positive");
  ResolventBounds b{.lower = f.theta + opt.equilibrium_margin,
                    .lower_strict = false,
                    .upper = std::numeric_limits<double>::infinity(),
                    .upper_strict = true};
  require_class(lambdas, ScheduleClass::ResolventParam, "lambda", "equilibrium proximal point (lambda_k in (theta, lambda_bar])",
                b);
  const OperatorSpec first = equilibrium_resolvent_operator(space, f, lambdas(1), opt);
  return OperatorSequence{
      .name = first.name,
      .factory = [space, f, lambdas, opt](std::size_t k) { return equilibrium_resolvent_operator(space, f, lambdas(k), opt); },
      .common_witness = first.witness,
      .common_fixed_set = first.fixed_set,
  };
}

}  // namespace hadamard

#pragma once

// Named objective and bifunction fixtures, addressable from experiment configs.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "hadamard/resolvents.hpp"

namespace hadamard {

/// f(y) = ½ d²(y, a).
inline ObjectiveFunction quadratic_function(const ModelSpace& space, const SpacePoint& a) {
  space.validate(a);
  return ObjectiveFunction{
      .name = "quadratic",
      .eval = [space, a](const SpacePoint& y) { return 0.5 * space.distance_squared(y, a); },
      .gradient = space.has_tangent_structure()
                      ? std::function<Vector(const SpacePoint&)>(
                            [space, a](const SpacePoint& y) { return Vector(-space.log_map(y, a).components); })
                      : nullptr,
      .weak_convexity = 0.0,
      .flags = {.convex = true, .quasi_convex = true, .weakly_convex = false, .pseudo_convex = true},
      .argmin = singleton(a),
      .closed_form = [space, a](double lambda, const SpacePoint& x) {
        return space.combine(x, a, lambda / (1.0 + lambda));
      },
  };
}

/// f(y) = ½ dist²(y, K). Its resolvent moves x toward P_K x by λ/(1+λ).
inline ObjectiveFunction dist2_function(const ModelSpace& space, const ConvexSubset& K) {
  return ObjectiveFunction{
      .name = "dist2_to_set",
      .eval = [space, K](const SpacePoint& y) { return 0.5 * space.distance_squared(y, space.project(K, y)); },
      .gradient = space.has_tangent_structure()
                      ? std::function<Vector(const SpacePoint&)>([space, K](const SpacePoint& y) {
                          return Vector(-space.log_map(y, space.project(K, y)).components);
                        })
                      : nullptr,
      .weak_convexity = 0.0,
      .flags = {.convex = true, .quasi_convex = true, .weakly_convex = false, .pseudo_convex = true},
      .argmin = K,
      .closed_form = [space, K](double lambda, const SpacePoint& x) {
        return space.combine(x, space.project(K, x), lambda / (1.0 + lambda));
      },
  };
}

namespace detail {

inline double quartic(double x) { return x * x * (3.0 * x * x - 16.0 * x + 24.0); }
inline double quartic_d1(double x) { return 12.0 * x * (x - 2.0) * (x - 2.0); }
inline double quartic_d2(double x) { return 36.0 * x * x - 96.0 * x + 48.0; }

// Root of h(y) = y + λ f'(y) - x. For λ < 1/16, h' >= 1 - 16λ > 0, so the
// root is unique; Newton steps are kept inside a shrinking bracket.
inline double quartic_prox(double lambda, double x) {
  auto h = [&](double y) { return y + lambda * quartic_d1(y) - x; };
  double lo = x, hi = x;
  for (double w = 1.0; h(lo) > 0.0; w *= 2.0) lo = x - w;
  for (double w = 1.0; h(hi) < 0.0; w *= 2.0) hi = x + w;
  double y = x;
  for (int it = 0; it < 200; ++it) {
    const double hy = h(y);
    if (hy == 0.0) return y;
    if (hy < 0.0) lo = y; else hi = y;
    double next = y - hy / (1.0 + lambda * quartic_d2(y));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == y || hi - lo <= 0.0) break;
    y = next;
  }
  return y;
}

}  // namespace detail

/// f(x) = 3x⁴ - 16x³ + 24x² on R. Quasi-convex and 8-weakly convex with
/// Argmin f = {0}; its resolvent also fixes the stationary point 2.
inline ObjectiveFunction quartic_function(const ModelSpace& space) {
  if (space.kind() != SpaceKind::Euclidean || space.dimension() != 1)
    throw ConfigError("remark32_quartic is defined on euclidean(1) only");
  return ObjectiveFunction{
      .name = "remark32_quartic",
      .eval = [](const SpacePoint& y) { return detail::quartic(y.coords()(0)); },
      .gradient = [](const SpacePoint& y) { return Vector::Constant(1, detail::quartic_d1(y.coords()(0))); },
      .weak_convexity = 8.0,
      .flags = {.convex = false, .quasi_convex = true, .weakly_convex = true, .pseudo_convex = false},
      .argmin = singleton(space.point({0.0})),
      .closed_form = [space](double lambda, const SpacePoint& x) {
        return space.point({detail::quartic_prox(lambda, x.coords()(0))});
      },
  };
}

/// Negative control: claims to be convex with minimizer a, but its
/// "resolvent" reflects through a.
inline ObjectiveFunction reflected_quadratic_function(const ModelSpace& space, const SpacePoint& a) {
  if (space.kind() != SpaceKind::Euclidean) throw ConfigError("reflected_quadratic is Euclidean only");
  ObjectiveFunction f = quadratic_function(space, a);
  f.name = "reflected_quadratic";
  f.closed_form = [space, a](double, const SpacePoint& x) { return space.point(Vector(2.0 * a.coords() - x.coords())); };
  return f;
}

struct FunctionParams {
  std::optional<SpacePoint> point;
  std::optional<ConvexSubset> set;
};

inline ObjectiveFunction catalog_function(const ModelSpace& space, std::string_view name, const FunctionParams& p) {
  auto need_point = [&]() {
    if (!p.point) throw ConfigError("function '" + std::string(name) + "' needs a point parameter");
    return *p.point;
  };
  if (name == "quadratic") return quadratic_function(space, p.point ? *p.point : space.origin());
  if (name == "dist2_to_set") {
    if (!p.set) throw ConfigError("function 'dist2_to_set' needs a set parameter");
    return dist2_function(space, *p.set);
  }
  if (name == "remark32_quartic") return quartic_function(space);
  if (name == "reflected_quadratic") return reflected_quadratic_function(space, need_point());
  throw ConfigError("unknown function fixture '" + std::string(name) + "'");
}

// -------------------------------------------------------------- bifunctions

/// f(x, y) = g(y) - g(x) on K. Its equilibria are the minimizers of g on K.
inline Bifunction minimization_bifunction(const ModelSpace& space, const ObjectiveFunction& g,
                                          std::optional<ConvexSubset> K = std::nullopt) {
  const ConvexSubset feasible = K ? *K : ConvexSubset::whole(space.id());
  std::optional<ConvexSubset> solutions;
  if (feasible.is_whole()) solutions = g.argmin;
  return Bifunction{
      .name = "minimization(" + g.name + ")",
      .eval = [g](const SpacePoint& x, const SpacePoint& y) { return g.eval(y) - g.eval(x); },
      .theta = 0.0,
      .structure = MinimizationStructure{g},
      .feasible = feasible,
      .equilibrium_witness = solutions ? space.representative(*solutions) : std::nullopt,
      .solution_set = solutions,
      .flags = {.pseudo_monotone = g.flags.convex || g.flags.pseudo_convex},
  };
}

/// f(x, y) = <Ax, y - x> with A the quarter-turn [[0, 1], [-1, 0]] on K
/// (default the unit ball). Monotone, so θ = 0, and S(f, K) = {0}.
inline Bifunction rotation_vi(const ModelSpace& space, std::optional<ConvexSubset> K = std::nullopt) {
  if (space.kind() != SpaceKind::Euclidean || space.dimension() != 2)
    throw ConfigError("rotation_vi is defined on euclidean(2) only");
  const ConvexSubset feasible = K ? *K : ConvexSubset::ball(space.origin(), 1.0);
  if (!space.contains(feasible, space.origin())) throw ConfigError("rotation_vi feasible set must contain the origin");
  auto field = [](const Vector& x) {
    Vector r(2);
    r << x(1), -x(0);
    return r;
  };
  return Bifunction{
      .name = "rotation_vi",
      .eval = [field](const SpacePoint& x, const SpacePoint& y) {
        return field(x.coords()).dot(y.coords() - x.coords());
      },
      .theta = 0.0,
      .structure = VariationalStructure{.field = field, .lipschitz = 1.0},
      .feasible = feasible,
      .equilibrium_witness = space.origin(),
      .solution_set = singleton(space.origin()),
      .flags = {.pseudo_monotone = true},
  };
}

struct BifunctionParams {
  std::optional<ConvexSubset> set;
  std::optional<std::string> function;
  FunctionParams function_params;
};

inline Bifunction catalog_bifunction(const ModelSpace& space, std::string_view name, const BifunctionParams& p) {
  if (name == "rotation_vi") return rotation_vi(space, p.set);
  if (name == "minimization") {
    if (!p.function) throw ConfigError("bifunction 'minimization' needs a function name");
    return minimization_bifunction(space, catalog_function(space, *p.function, p.function_params), p.set);
  }
  throw ConfigError("unknown bifunction fixture '" + std::string(name) + "'");
}

}  // namespace hadamard

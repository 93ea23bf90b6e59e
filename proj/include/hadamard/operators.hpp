#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "hadamard/geometry.hpp"
#include "hadamard/schedule.hpp"

namespace hadamard {

/// Declared properties of a mapping. Demiclosedness cannot be verified from
/// samples, so it is carried as an annotation.
struct OperatorFlags {
  bool nonexpansive = false;
  bool quasi_nonexpansive = false;
  bool demiclosed_assumed = false;
};

/// A self-map T : C -> C of a convex subset, with metadata.
///
/// `apply` must be pure and reentrant. `witness`, when set, is a point of F(T);
/// `fixed_set`, when set, is the whole of F(T).
struct OperatorSpec {
  std::string name;
  std::function<SpacePoint(const SpacePoint&)> apply;
  ConvexSubset domain;
  std::optional<double> lipschitz;
  std::optional<SpacePoint> witness;
  OperatorFlags flags;
  std::optional<ConvexSubset> fixed_set;

  SpacePoint operator()(const SpacePoint& x) const { return apply(x); }
};

/// k -> T_k for k >= 1, with an optional point of the common fixed set.
struct OperatorSequence {
  std::string name;
  std::function<OperatorSpec(std::size_t)> factory;
  std::optional<SpacePoint> common_witness;
  std::optional<ConvexSubset> common_fixed_set;

  OperatorSpec operator()(std::size_t k) const { return factory(k); }
};

/// The singleton {p}, as a degenerate segment.
inline ConvexSubset singleton(const SpacePoint& p) { return ConvexSubset::segment(p, p); }

// ------------------------------------------------------------- composites

/// x -> (1-β)x ⊕ β T x, then x -> (1-α)x ⊕ α T(that point).
inline OperatorSpec ishikawa_operator(const ModelSpace& space, const OperatorSpec& T, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ishikawa: alpha must lie in (0,1)");
  // beta = 1 is admitted: a vanishing schedule such as 1/k starts there.
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("ishikawa: beta must lie in [0,1]");
  if (!T.flags.quasi_nonexpansive) throw DomainError("ishikawa: base operator '" + T.name + "' is not quasi-nonexpansive");
  OperatorSpec out{
      .name = "ishikawa(" + T.name + ")",
      .apply =
          [space, T, alpha, beta](const SpacePoint& x) {
            const SpacePoint inner = space.combine(x, T(x), beta);
            return space.combine(x, T(inner), alpha);
          },
      .domain = T.domain,
      .lipschitz = std::nullopt,
      .witness = T.witness,
      .flags = {.nonexpansive = false, .quasi_nonexpansive = true, .demiclosed_assumed = T.flags.demiclosed_assumed},
      .fixed_set = T.fixed_set,
  };
  if (T.lipschitz) {
    const double L = *T.lipschitz;
    out.lipschitz = (1.0 - alpha) + alpha * L * ((1.0 - beta) + beta * L);
    out.flags.nonexpansive = T.flags.nonexpansive;
  }
  return out;
}

/// x -> (1-α)x ⊕ αTx; the β = 0 case of ishikawa_operator.
inline OperatorSpec mann_operator(const ModelSpace& space, const OperatorSpec& T, double alpha) {
  OperatorSpec out = ishikawa_operator(space, T, alpha, 0.0);
  out.name = "mann(" + T.name + ")";
  return out;
}

/// T_k = ishikawa_operator(T, α_k, β_k) with limsup α_k < 1 and β_k -> 0.
/// Under those hypotheses F(T) is the common fixed set of the T_k.
inline OperatorSequence ishikawa_sequence(const ModelSpace& space, const OperatorSpec& T, const Schedule& alphas,
                                          const Schedule& betas) {
  require_class(alphas, ScheduleClass::MannParam, "alpha", "Ishikawa strong quasi-nonexpansiveness");
  require_class(betas, ScheduleClass::VanishingParam, "beta", "Ishikawa demiclosedness");
  return OperatorSequence{
      .name = "ishikawa(" + T.name + ")",
      .factory = [space, T, alphas, betas](std::size_t k) { return ishikawa_operator(space, T, alphas(k), betas(k)); },
      .common_witness = T.witness,
      .common_fixed_set = T.fixed_set,
  };
}

inline OperatorSequence mann_sequence(const ModelSpace& space, const OperatorSpec& T, const Schedule& alphas) {
  OperatorSequence seq = ishikawa_sequence(space, T, alphas, Schedule::constant(0.0));
  seq.name = "mann(" + T.name + ")";
  return seq;
}

/// The same operator at every index.
inline OperatorSequence constant_sequence(OperatorSpec T) {
  OperatorSequence seq{.name = T.name, .factory = nullptr, .common_witness = T.witness, .common_fixed_set = T.fixed_set};
  seq.factory = [T = std::move(T)](std::size_t) { return T; };
  return seq;
}

// ----------------------------------------------------------------- catalog

inline OperatorSpec identity_operator(const ModelSpace& space) {
  return OperatorSpec{
      .name = "identity",
      .apply = [](const SpacePoint& x) { return x; },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = 1.0,
      .witness = space.origin(),
      .flags = {true, true, true},
      .fixed_set = ConvexSubset::whole(space.id()),
  };
}

/// Metric projection onto a closed convex set; firmly nonexpansive, F = set.
inline OperatorSpec projection_operator(const ModelSpace& space, const ConvexSubset& set) {
  return OperatorSpec{
      .name = "projection(" + set.describe() + ")",
      .apply = [space, set](const SpacePoint& x) { return space.project(set, x); },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = 1.0,
      .witness = space.representative(set).value_or(space.origin()),
      .flags = {true, true, true},
      .fixed_set = set,
  };
}

/// Rotation of the Euclidean plane about the origin.
inline OperatorSpec rotation_operator(const ModelSpace& space, double angle) {
  if (space.kind() != SpaceKind::Euclidean || space.dimension() != 2)
    throw ConfigError("rotation is defined on the Euclidean plane only");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const bool trivial = c == 1.0 && s == 0.0;
  return OperatorSpec{
      .name = "rotation",
      .apply =
          [id = space.id(), c, s](const SpacePoint& x) {
            const Vector& v = x.coords();
            Vector r(2);
            r << c * v(0) - s * v(1), s * v(0) + c * v(1);
            return SpacePoint(id, std::move(r));
          },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = 1.0,
      .witness = space.origin(),
      .flags = {true, true, true},
      .fixed_set = trivial ? ConvexSubset::whole(space.id()) : singleton(space.origin()),
  };
}

/// Point reflection through the origin followed by a geodesic contraction by
/// c toward it: x -> -c x in R^n, the analogous isometry-based map on H^n.
inline OperatorSpec scaled_reflection_operator(const ModelSpace& space, double c) {
  if (!(c > 0.0 && c <= 1.0)) throw DomainError("scaled_reflection: c must lie in (0,1]");
  if (space.kind() == SpaceKind::Spider) throw UnsupportedOperation("scaled_reflection is not defined on spider trees");
  return OperatorSpec{
      .name = "scaled_reflection",
      .apply =
          [space, c](const SpacePoint& x) {
            Vector r = x.coords();
            if (space.kind() == SpaceKind::Euclidean) return SpacePoint(space.id(), Vector(-c * r));
            r.tail(r.size() - 1) *= -1.0;
            return space.combine(space.origin(), SpacePoint(space.id(), std::move(r)), c);
          },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = c,
      .witness = space.origin(),
      .flags = {true, true, true},
      .fixed_set = singleton(space.origin()),
  };
}

inline OperatorSpec constant_operator(const ModelSpace& space, const SpacePoint& p) {
  space.validate(p);
  return OperatorSpec{
      .name = "constant",
      .apply = [p](const SpacePoint&) { return p; },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = 0.0,
      .witness = p,
      .flags = {true, true, true},
      .fixed_set = singleton(p),
  };
}

/// Projection onto a ball or segment of the hyperboloid.
inline OperatorSpec hyperbolic_projection_operator(const ModelSpace& space, const ConvexSubset& set) {
  if (space.kind() != SpaceKind::Hyperboloid) throw ConfigError("hyperbolic_projection needs a hyperboloid space");
  if (!std::holds_alternative<Ball>(set.shape()) && !std::holds_alternative<Segment>(set.shape()))
    throw ConfigError("hyperbolic_projection supports balls and segments");
  OperatorSpec T = projection_operator(space, set);
  T.name = "hyperbolic_projection(" + set.describe() + ")";
  return T;
}

/// x -> -sign(x) s(|x|) on the real line, where s rises with slope 1 to
/// `height` and then alternates a slope -alpha descent to 0 with slope 1
/// rises. Quasi-nonexpansive with F = {0} and alpha-Lipschitz, but not
/// nonexpansive.
inline OperatorSpec sawtooth_reflection_operator(const ModelSpace& space, double alpha, double height) {
  if (space.kind() != SpaceKind::Euclidean || space.dimension() != 1)
    throw ConfigError("sawtooth_reflection is defined on the real line only");
  if (!(alpha >= 1.0) || !(height > 0.0)) throw DomainError("sawtooth_reflection needs alpha >= 1 and height > 0");
  const double period = height * (1.0 + 1.0 / alpha);
  return OperatorSpec{
      .name = "sawtooth_reflection",
      .apply =
          [id = space.id(), alpha, height, period](const SpacePoint& x) {
            const double v = x.coords()(0);
            const double u = std::fmod(std::abs(v), period);
            const double s = u <= height ? u : height - alpha * (u - height);
            Vector r(1);
            r(0) = v > 0.0 ? -s : (v < 0.0 ? s : 0.0);
            return SpacePoint(id, std::move(r));
          },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = alpha,
      .witness = space.origin(),
      .flags = {false, true, true},
      .fixed_set = singleton(space.origin()),
  };
}

/// x -> 2x, falsely annotated as quasi-nonexpansive around 0. Negative
/// control for the inequality checkers.
inline OperatorSpec expanding_negative_control(const ModelSpace& space) {
  if (space.kind() != SpaceKind::Euclidean) throw ConfigError("expanding negative control is Euclidean only");
  return OperatorSpec{
      .name = "expanding_negative_control",
      .apply = [id = space.id()](const SpacePoint& x) { return SpacePoint(id, Vector(2.0 * x.coords())); },
      .domain = ConvexSubset::whole(space.id()),
      .lipschitz = 2.0,
      .witness = space.origin(),
      .flags = {false, true, true},
      .fixed_set = singleton(space.origin()),
  };
}

struct CatalogParams {
  std::optional<ConvexSubset> set;
  std::optional<SpacePoint> point;
  double angle = 0.0;
  double c = 1.0;
  double alpha = 2.0;
  double height = 1.0;
};

inline OperatorSpec catalog_operator(const ModelSpace& space, std::string_view name, const CatalogParams& params) {
  auto need_set = [&]() -> const ConvexSubset& {
    if (!params.set) throw ConfigError("operator '" + std::string(name) + "' needs a set");
    return *params.set;
  };
  if (name == "identity") return identity_operator(space);
  if (name == "projection") return projection_operator(space, need_set());
  if (name == "rotation") return rotation_operator(space, params.angle);
  if (name == "scaled_reflection") return scaled_reflection_operator(space, params.c);
  if (name == "constant") {
    if (!params.point) throw ConfigError("operator 'constant' needs a point");
    return constant_operator(space, *params.point);
  }
  if (name == "hyperbolic_projection") return hyperbolic_projection_operator(space, need_set());
  if (name == "sawtooth_reflection") return sawtooth_reflection_operator(space, params.alpha, params.height);
  if (name == "expanding_negative_control") return expanding_negative_control(space);
  throw ConfigError("unknown operator '" + std::string(name) + "'");
}

}  // namespace hadamard

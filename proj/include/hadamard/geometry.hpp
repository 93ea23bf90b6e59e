#pragma once

// Model Hadamard spaces: Euclidean R^n, the hyperboloid model of H^n and the
// spider tree (rays glued at a hub). Every space exposes the same metric
// toolkit: distance, geodesic combination, quasi-linearization and metric
// projection onto simple closed convex sets. Euclidean and hyperboloid spaces
// also carry exp/log maps for gradient-based inner solvers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hadamard/errors.hpp"

namespace hadamard {

using Vector = Eigen::VectorXd;

namespace tol {
inline constexpr double point_validity = 1e-9;
inline constexpr double round_trip = 1e-8;
inline constexpr double inequality = 1e-8;
inline constexpr double identity = 1e-9;
}  // namespace tol

enum class SpaceKind { Euclidean, Hyperboloid, Spider };

/// Identifies a model space: its kind plus the dimension (Euclidean,
/// Hyperboloid) or the number of legs (Spider).
struct SpaceId {
  SpaceKind kind = SpaceKind::Euclidean;
  std::size_t param = 0;

  friend bool operator==(const SpaceId&, const SpaceId&) = default;
};

inline std::string to_string(SpaceId id) {
  switch (id.kind) {
    case SpaceKind::Euclidean: return "euclidean(" + std::to_string(id.param) + ")";
    case SpaceKind::Hyperboloid: return "hyperboloid(" + std::to_string(id.param) + ")";
    case SpaceKind::Spider: return "spider(" + std::to_string(id.param) + ")";
  }
  return "unknown";
}

/// Position on a spider tree. radius 0 is the hub, canonically on leg 0.
struct TreeCoord {
  std::size_t leg = 0;
  double radius = 0.0;

  friend bool operator==(const TreeCoord&, const TreeCoord&) = default;
};

/// A point tagged with the space it belongs to. Euclidean points hold n
/// coordinates, hyperboloid points the n+1 ambient Minkowski coordinates.
class SpacePoint {
 public:
  SpacePoint(SpaceId space, Vector coords) : space_(space), data_(std::move(coords)) {}
  SpacePoint(SpaceId space, TreeCoord coord) : space_(space), data_(coord) {}

  SpaceId space() const noexcept { return space_; }
  bool is_tree() const noexcept { return std::holds_alternative<TreeCoord>(data_); }

  const Vector& coords() const {
    if (is_tree()) throw DomainError("tree point has no coordinate vector");
    return std::get<Vector>(data_);
  }
  const TreeCoord& tree() const {
    if (!is_tree()) throw DomainError("point is not a tree point");
    return std::get<TreeCoord>(data_);
  }

  friend bool operator==(const SpacePoint& a, const SpacePoint& b) {
    if (!(a.space_ == b.space_) || a.is_tree() != b.is_tree()) return false;
    if (a.is_tree()) return a.tree() == b.tree();
    const Vector& u = a.coords();
    const Vector& v = b.coords();
    return u.size() == v.size() && (u.array() == v.array()).all();
  }

 private:
  SpaceId space_;
  std::variant<Vector, TreeCoord> data_;
};

/// Tangent vector in the ambient chart together with its Riemannian norm.
struct TangentVector {
  Vector components;
  double norm = 0.0;
};

struct WholeSpace {};
struct Ball {
  SpacePoint center;
  double radius;
};
struct Segment {
  SpacePoint a;
  SpacePoint b;
};
/// {x : <normal, x> <= offset}; Euclidean spaces only.
struct Halfspace {
  Vector normal;
  double offset;
};

/// Closed convex subset of a model space.
class ConvexSubset {
 public:
  using Shape = std::variant<WholeSpace, Ball, Segment, Halfspace>;

  static ConvexSubset whole(SpaceId space) { return ConvexSubset(space, WholeSpace{}); }

  static ConvexSubset ball(SpacePoint center, double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("ball radius must be positive and finite");
    const SpaceId id = center.space();
    return ConvexSubset(id, Ball{std::move(center), radius});
  }

  static ConvexSubset segment(SpacePoint a, SpacePoint b) {
    if (!(a.space() == b.space())) throw DomainError("segment endpoints belong to different spaces");
    const SpaceId id = a.space();
    return ConvexSubset(id, Segment{std::move(a), std::move(b)});
  }

  static ConvexSubset halfspace(SpaceId space, Vector normal, double offset) {
    if (space.kind != SpaceKind::Euclidean) throw UnsupportedOperation("halfspaces exist only in Euclidean spaces");
    if (static_cast<std::size_t>(normal.size()) != space.param) throw DomainError("halfspace normal has wrong dimension");
    if (!(normal.norm() > 0.0)) throw DomainError("halfspace normal must be nonzero");
    return ConvexSubset(space, Halfspace{std::move(normal), offset});
  }

  SpaceId space() const noexcept { return space_; }
  const Shape& shape() const noexcept { return shape_; }

  bool is_whole() const noexcept { return std::holds_alternative<WholeSpace>(shape_); }

  std::string describe() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, WholeSpace>) return "whole";
          else if constexpr (std::is_same_v<S, Ball>) return "ball(r=" + std::to_string(s.radius) + ")";
          else if constexpr (std::is_same_v<S, Segment>) return "segment";
          else return "halfspace";
        },
        shape_);
  }

 private:
  ConvexSubset(SpaceId space, Shape shape) : space_(space), shape_(std::move(shape)) {}

  SpaceId space_;
  Shape shape_;
};

/// Value type describing one model space. All operations are pure.
class ModelSpace {
 public:
  static ModelSpace euclidean(std::size_t n) {
    if (n == 0) throw DomainError("Euclidean dimension must be positive");
    return ModelSpace({SpaceKind::Euclidean, n});
  }
  static ModelSpace hyperboloid(std::size_t n) {
    if (n == 0) throw DomainError("hyperboloid dimension must be positive");
    return ModelSpace({SpaceKind::Hyperboloid, n});
  }
  static ModelSpace spider(std::size_t legs) {
    if (legs == 0) throw DomainError("spider needs at least one leg");
    return ModelSpace({SpaceKind::Spider, legs});
  }
  static ModelSpace from_id(SpaceId id) { return ModelSpace(id); }

  SpaceId id() const noexcept { return id_; }
  SpaceKind kind() const noexcept { return id_.kind; }
  /// Dimension for Euclidean/Hyperboloid, leg count for Spider.
  std::size_t dimension() const noexcept { return id_.param; }
  /// Length of the coordinate vector of a point (0 for Spider).
  std::size_t ambient_size() const noexcept {
    switch (id_.kind) {
      case SpaceKind::Euclidean: return id_.param;
      case SpaceKind::Hyperboloid: return id_.param + 1;
      case SpaceKind::Spider: return 0;
    }
    return 0;
  }
  bool has_tangent_structure() const noexcept { return id_.kind != SpaceKind::Spider; }

  friend bool operator==(const ModelSpace& a, const ModelSpace& b) { return a.id_ == b.id_; }

  // ---------------------------------------------------------------- points

  /// Point from raw coordinates, validated.
  SpacePoint point(Vector coords) const {
    SpacePoint p(id_, std::move(coords));
    validate(p);
    return p;
  }
  SpacePoint point(std::initializer_list<double> coords) const {
    Vector v(static_cast<Eigen::Index>(coords.size()));
    std::size_t i = 0;
    for (double c : coords) v(static_cast<Eigen::Index>(i++)) = c;
    return point(std::move(v));
  }

  /// Hyperboloid point whose spatial coordinates are `spatial` (x0 is solved for).
  SpacePoint lift(const Vector& spatial) const {
    if (id_.kind != SpaceKind::Hyperboloid) throw UnsupportedOperation("lift is defined on the hyperboloid only");
    if (static_cast<std::size_t>(spatial.size()) != id_.param) throw DomainError("lift: wrong spatial dimension");
    Vector x(spatial.size() + 1);
    x(0) = std::sqrt(1.0 + spatial.squaredNorm());
    x.tail(spatial.size()) = spatial;
    return SpacePoint(id_, std::move(x));
  }

  SpacePoint tree_point(std::size_t leg, double radius) const {
    if (id_.kind != SpaceKind::Spider) throw UnsupportedOperation("tree points exist only on spiders");
    if (leg >= id_.param) throw DomainError("leg index out of range");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw DomainError("tree radius must be finite and non-negative");
    return SpacePoint(id_, radius == 0.0 ? TreeCoord{0, 0.0} : TreeCoord{leg, radius});
  }

  /// Distinguished base point: Euclidean origin, hyperboloid apex, spider hub.
  SpacePoint origin() const {
    switch (id_.kind) {
      case SpaceKind::Euclidean: return SpacePoint(id_, Vector(Vector::Zero(static_cast<Eigen::Index>(id_.param))));
      case SpaceKind::Hyperboloid: {
        Vector x = Vector::Zero(static_cast<Eigen::Index>(id_.param + 1));
        x(0) = 1.0;
        return SpacePoint(id_, std::move(x));
      }
      case SpaceKind::Spider: return SpacePoint(id_, TreeCoord{0, 0.0});
    }
    throw DomainError("unknown space kind");
  }

  bool is_valid(const SpacePoint& p) const noexcept {
    if (!(p.space() == id_)) return false;
    switch (id_.kind) {
      case SpaceKind::Euclidean: {
        if (p.is_tree()) return false;
        const Vector& x = p.coords();
        return static_cast<std::size_t>(x.size()) == id_.param && x.allFinite();
      }
      case SpaceKind::Hyperboloid: {
        if (p.is_tree()) return false;
        const Vector& x = p.coords();
        if (static_cast<std::size_t>(x.size()) != id_.param + 1 || !x.allFinite()) return false;
        if (x(0) < 1.0 - tol::point_validity) return false;
        // Scaled so that far-out points, whose coordinates carry O(x0^2)
        // rounding in the Minkowski form, are not rejected.
        return std::abs(minkowski(x, x) + 1.0) <= tol::point_validity * (1.0 + x.squaredNorm());
      }
      case SpaceKind::Spider: {
        if (!p.is_tree()) return false;
        const TreeCoord& t = p.tree();
        return t.leg < id_.param && t.radius >= 0.0 && std::isfinite(t.radius) && (t.radius > 0.0 || t.leg == 0);
      }
    }
    return false;
  }

  void validate(const SpacePoint& p) const {
    if (!(p.space() == id_)) throw DomainError("point of " + to_string(p.space()) + " used in " + to_string(id_));
    if (!is_valid(p)) throw DomainError("invalid point for " + to_string(id_));
  }

  // ---------------------------------------------------------------- metric

  double distance(const SpacePoint& x, const SpacePoint& y) const {
    check_space(x);
    check_space(y);
    switch (id_.kind) {
      case SpaceKind::Euclidean: return (x.coords() - y.coords()).norm();
      case SpaceKind::Hyperboloid:
        return static_cast<double>(hyperbolic_distance(lifted(x.coords()), lifted(y.coords())));
      case SpaceKind::Spider: {
        const TreeCoord& a = x.tree();
        const TreeCoord& b = y.tree();
        if (same_ray(a, b)) return std::abs(a.radius - b.radius);
        return a.radius + b.radius;
      }
    }
    return 0.0;
  }

  double distance_squared(const SpacePoint& x, const SpacePoint& y) const {
    const double d = distance(x, y);
    return d * d;
  }

  /// The point z on [x, y] with d(x, z) = t d(x, y), written (1-t)x ⊕ ty.
  SpacePoint combine(const SpacePoint& x, const SpacePoint& y, double t) const {
    check_space(x);
    check_space(y);
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("geodesic parameter must lie in [0, 1]");
    if (t == 0.0) return x;
    if (t == 1.0) return y;
    switch (id_.kind) {
      case SpaceKind::Euclidean: return SpacePoint(id_, Vector(x.coords() + t * (y.coords() - x.coords())));
      case SpaceKind::Hyperboloid: {
        const LVector a = lifted(x.coords());
        const LVector b = lifted(y.coords());
        const long double d = hyperbolic_distance(a, b);
        if (d == 0.0L) return x;
        const LVector u = hyperbolic_direction(a, b, d);
        const long double s = static_cast<long double>(t) * d;
        return SpacePoint(id_, to_point(LVector(std::cosh(s) * a + (std::sinh(s) / std::sinh(d)) * u)));
      }
      case SpaceKind::Spider: {
        const TreeCoord& a = x.tree();
        const TreeCoord& b = y.tree();
        if (same_ray(a, b)) {
          const std::size_t leg = a.radius > 0.0 ? a.leg : b.leg;
          return tree_point(leg, a.radius + t * (b.radius - a.radius));
        }
        const double s = t * (a.radius + b.radius);
        if (s <= a.radius) return tree_point(a.leg, a.radius - s);
        return tree_point(b.leg, s - a.radius);
      }
    }
    throw DomainError("unknown space kind");
  }

  /// Quasi-linearization <ab, cd> = ½{d²(a,d) + d²(b,c) − d²(a,c) − d²(b,d)}.
  double quasilin(const SpacePoint& a, const SpacePoint& b, const SpacePoint& c, const SpacePoint& d) const {
    return 0.5 * (distance_squared(a, d) + distance_squared(b, c) - distance_squared(a, c) - distance_squared(b, d));
  }

  // ------------------------------------------------------ tangent structure

  /// Riemannian inner product of tangent vectors at `base`.
  double inner(const SpacePoint& base, const Vector& u, const Vector& v) const {
    require_tangent("inner");
    check_space(base);
    return id_.kind == SpaceKind::Euclidean ? u.dot(v) : minkowski(u, v);
  }

  double tangent_norm(const SpacePoint& base, const Vector& v) const {
    return std::sqrt(std::max(0.0, inner(base, v, v)));
  }

  /// Projects an ambient vector onto the tangent space at `base`.
  Vector to_tangent(const SpacePoint& base, const Vector& v) const {
    require_tangent("to_tangent");
    check_space(base);
    if (id_.kind == SpaceKind::Euclidean) return v;
    const Vector& x = base.coords();
    return v + minkowski(x, v) * x;
  }

  TangentVector log_map(const SpacePoint& base, const SpacePoint& target) const {
    require_tangent("log_map");
    check_space(base);
    check_space(target);
    if (id_.kind == SpaceKind::Euclidean) {
      Vector v = target.coords() - base.coords();
      const double n = v.norm();
      return {std::move(v), n};
    }
    const LVector x = lifted(base.coords());
    const LVector y = lifted(target.coords());
    const long double d = hyperbolic_distance(x, y);
    if (d == 0.0L) return {Vector::Zero(x.size()), 0.0};
    LVector v = (d / std::sinh(d)) * hyperbolic_direction(x, y, d);
    v += minkowski(x, v) * x;
    return {v.cast<double>(), static_cast<double>(d)};
  }

  SpacePoint exp_map(const SpacePoint& base, const Vector& v) const {
    require_tangent("exp_map");
    check_space(base);
    const Vector& x = base.coords();
    if (v.size() != x.size()) throw DomainError("tangent vector has wrong dimension");
    if (id_.kind == SpaceKind::Euclidean) return SpacePoint(id_, Vector(x + v));
    if (std::abs(minkowski(x, v)) > tol::round_trip * (1.0 + v.norm()) * (1.0 + x.norm()))
      throw DomainError("exp_map: vector is not tangent to the hyperboloid at the base point");
    const LVector a = lifted(x);
    const LVector V = v.cast<long double>();
    const LVector w = V + minkowski(a, V) * a;
    const long double n = std::sqrt(std::max(0.0L, minkowski(w, w)));
    if (n == 0.0L) return base;
    return SpacePoint(id_, to_point(LVector(std::cosh(n) * a + (std::sinh(n) / n) * w)));
  }

  // ------------------------------------------------------------- projection

  SpacePoint project(const ConvexSubset& set, const SpacePoint& x) const {
    check_space(x);
    if (!(set.space() == id_)) throw DomainError("convex set belongs to " + to_string(set.space()));
    return std::visit([&](const auto& s) { return project_onto(s, x); }, set.shape());
  }

  bool contains(const ConvexSubset& set, const SpacePoint& x, double slack = tol::point_validity) const {
    check_space(x);
    if (!(set.space() == id_)) throw DomainError("convex set belongs to " + to_string(set.space()));
    return std::visit(
        [&](const auto& s) -> bool {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, WholeSpace>) {
            return true;
          } else if constexpr (std::is_same_v<S, Ball>) {
            return distance(s.center, x) <= s.radius + slack;
          } else if constexpr (std::is_same_v<S, Halfspace>) {
            return s.normal.dot(x.coords()) - s.offset <= slack * s.normal.norm();
          } else {
            return distance(project_onto(s, x), x) <= slack;
          }
        },
        set.shape());
  }

  /// Some point of the set, if the set has a natural one.
  std::optional<SpacePoint> representative(const ConvexSubset& set) const {
    return std::visit(
        [&](const auto& s) -> std::optional<SpacePoint> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, WholeSpace>) return std::nullopt;
          else if constexpr (std::is_same_v<S, Ball>) return s.center;
          else if constexpr (std::is_same_v<S, Segment>) return s.a;
          else return project_onto(s, origin());
        },
        set.shape());
  }

  /// Extreme points of bounded sets that are finite in number (segment endpoints).
  std::vector<SpacePoint> extreme_points(const ConvexSubset& set) const {
    if (const auto* s = std::get_if<Segment>(&set.shape())) return {s->a, s->b};
    return {};
  }

  static double minkowski(const Vector& x, const Vector& y) {
    return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
  }

 private:
  using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  static long double minkowski(const LVector& x, const LVector& y) {
    return -x(0) * y(0) + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
  }

  // Far from the apex a double-precision x0 sits off the surface by about
  // eps x0², and cosh/sinh amplify that by cosh² d. The spatial coordinates
  // are therefore authoritative and x0 is recomputed in extended precision.
  static LVector lifted(const Vector& x) {
    LVector l = x.cast<long double>();
    l(0) = std::sqrt(1.0L + l.tail(l.size() - 1).squaredNorm());
    return l;
  }

  static Vector to_point(const LVector& z) {
    Vector r = z.cast<double>();
    r(0) = static_cast<double>(std::sqrt(1.0L + z.tail(z.size() - 1).squaredNorm()));
    return r;
  }

  explicit ModelSpace(SpaceId id) : id_(id) {}

  void check_space(const SpacePoint& p) const {
    if (!(p.space() == id_)) throw DomainError("point of " + to_string(p.space()) + " used in " + to_string(id_));
  }

  void require_tangent(const char* op) const {
    if (id_.kind == SpaceKind::Spider)
      throw UnsupportedOperation(std::string(op) + " is not available on spider trees");
  }

  static bool same_ray(const TreeCoord& a, const TreeCoord& b) {
    return a.leg == b.leg || a.radius == 0.0 || b.radius == 0.0;
  }

  // arccosh(-<x,y>) loses half the digits near 0, so short distances go
  // through 2 asinh(|x - y|_M / 2), which is the same quantity.
  static long double hyperbolic_distance(const LVector& x, const LVector& y) {
    const long double q = -minkowski(x, y);
    if (q >= 2.0L) return std::acosh(q);
    const LVector diff = x - y;
    const long double s = std::max(0.0L, minkowski(diff, diff));
    return 2.0L * std::asinh(0.5L * std::sqrt(s));
  }

  // y - cosh(d) x: tangent at x pointing to y, with Minkowski norm sinh(d).
  static LVector hyperbolic_direction(const LVector& x, const LVector& y, long double d) {
    if (d >= 1.0L) return y + minkowski(x, y) * x;
    const LVector diff = y - x;
    return diff - (0.5L * minkowski(diff, diff)) * x;
  }

  SpacePoint project_onto(const WholeSpace&, const SpacePoint& x) const { return x; }

  SpacePoint project_onto(const Ball& b, const SpacePoint& x) const {
    const double d = distance(b.center, x);
    if (d <= b.radius) return x;
    return combine(b.center, x, b.radius / d);
  }

  SpacePoint project_onto(const Halfspace& h, const SpacePoint& x) const {
    if (id_.kind != SpaceKind::Euclidean) throw UnsupportedOperation("halfspace projection needs a Euclidean space");
    const double excess = h.normal.dot(x.coords()) - h.offset;
    if (excess <= 0.0) return x;
    return SpacePoint(id_, Vector(x.coords() - (excess / h.normal.squaredNorm()) * h.normal));
  }

  SpacePoint project_onto(const Segment& seg, const SpacePoint& x) const {
    const double len = distance(seg.a, seg.b);
    if (len == 0.0) return seg.a;
    switch (id_.kind) {
      case SpaceKind::Euclidean: {
        const Vector ab = seg.b.coords() - seg.a.coords();
        const double t = std::clamp((x.coords() - seg.a.coords()).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        return combine(seg.a, seg.b, t);
      }
      case SpaceKind::Hyperboloid: {
        // cosh d(x, γ(s)) = A cosh s + B sinh s along the unit-speed geodesic γ
        // from a, minimized at tanh s = -B/A.
        const LVector a = lifted(seg.a.coords());
        const LVector p = lifted(x.coords());
        const long double L = hyperbolic_distance(a, lifted(seg.b.coords()));
        const LVector v = hyperbolic_direction(a, lifted(seg.b.coords()), L) / std::sinh(L);
        const long double A = -minkowski(p, a);
        const long double B = -minkowski(p, v);
        const long double r = std::clamp(-B / A, -1.0L, 1.0L);
        long double s = r >= 1.0L ? L : (r <= -1.0L ? 0.0L : std::atanh(r));
        s = std::clamp(s, 0.0L, L);
        return combine(seg.a, seg.b, static_cast<double>(s / L));
      }
      case SpaceKind::Spider: {
        // Distance along the segment is convex and piecewise linear; its
        // breakpoints are the endpoints, the hub and the point level with x.
        const TreeCoord& a = seg.a.tree();
        const TreeCoord& b = seg.b.tree();
        const TreeCoord& p = x.tree();
        std::vector<double> cand{0.0, len};
        if (same_ray(a, b)) {
          const std::size_t leg = a.radius > 0.0 ? a.leg : b.leg;
          if (p.leg == leg || p.radius == 0.0) cand.push_back((p.radius - a.radius) / (b.radius - a.radius) * len);
        } else {
          cand.push_back(a.radius);
          if (p.leg == a.leg) cand.push_back(a.radius - p.radius);
          if (p.leg == b.leg) cand.push_back(a.radius + p.radius);
        }
        SpacePoint best = seg.a;
        double best_d = distance(best, x);
        for (double s : cand) {
          if (!(s >= 0.0 && s <= len)) continue;
          SpacePoint q = combine(seg.a, seg.b, s / len);
          const double dq = distance(q, x);
          if (dq < best_d) {
            best_d = dq;
            best = std::move(q);
          }
        }
        return best;
      }
    }
    throw DomainError("unknown space kind");
  }

  SpaceId id_;
};

}  // namespace hadamard

#pragma once

#include <cstdint>
#include <random>

#include "hadamard/geometry.hpp"

namespace hadamard {

/// Seeded random points for property checks.
///
/// Euclidean: standard normal coordinates times `scale`. Hyperboloid: exp map
/// at the apex of a Gaussian tangent vector times `scale`. Spider: uniform leg
/// and exponential radius with mean `scale`.
class PointSampler {
 public:
  PointSampler(ModelSpace space, std::uint64_t seed, double scale = 1.0)
      : space_(space), engine_(seed), scale_(scale) {}

  const ModelSpace& space() const noexcept { return space_; }
  std::mt19937_64& engine() noexcept { return engine_; }

  SpacePoint operator()() {
    switch (space_.kind()) {
      case SpaceKind::Euclidean: return SpacePoint(space_.id(), gaussian(space_.dimension(), scale_));
      case SpaceKind::Hyperboloid: {
        Vector v = Vector::Zero(static_cast<Eigen::Index>(space_.dimension() + 1));
        v.tail(static_cast<Eigen::Index>(space_.dimension())) = gaussian(space_.dimension(), scale_);
        return space_.exp_map(space_.origin(), v);
      }
      case SpaceKind::Spider: {
        std::uniform_int_distribution<std::size_t> leg(0, space_.dimension() - 1);
        std::exponential_distribution<double> radius(1.0 / scale_);
        const std::size_t l = leg(engine_);
        return space_.tree_point(l, radius(engine_));
      }
    }
    return space_.origin();
  }

  /// Random point of `set`, obtained by projecting a free sample.
  SpacePoint in(const ConvexSubset& set) { return space_.project(set, (*this)()); }

  /// Unit tangent vector at `base` with a uniformly random direction.
  Vector unit_tangent(const SpacePoint& base) {
    Vector v = space_.to_tangent(base, gaussian(space_.ambient_size(), 1.0));
    const double n = space_.tangent_norm(base, v);
    return n > 0.0 ? Vector(v / n) : unit_tangent(base);
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

 private:
  Vector gaussian(std::size_t n, double sigma) {
    std::normal_distribution<double> dist(0.0, sigma);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(engine_);
    return v;
  }

  ModelSpace space_;
  std::mt19937_64 engine_;
  double scale_;
};

}  // namespace hadamard

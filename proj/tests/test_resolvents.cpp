#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hadamard/diagnostics.hpp"
#include "hadamard/fixtures.hpp"
#include "hadamard/resolvents.hpp"

using namespace hadamard;

namespace {

const ModelSpace R1 = ModelSpace::euclidean(1);
const ModelSpace R2 = ModelSpace::euclidean(2);
const ModelSpace H2 = ModelSpace::hyperboloid(2);

double x0(const SpacePoint& p) { return p.coords()(0); }

double at(const OperatorSpec& T, double x) { return T(R1.point({x})).coords()(0); }

ObjectiveFunction without_closed_form(ObjectiveFunction f) {
  f.closed_form = nullptr;
  return f;
}

// Hyperbolic geodesic point at parameter t, from the sinh form.
Vector geodesic_oracle(const Vector& x, const Vector& y, double t) {
  double q = x(0) * y(0);
  for (Eigen::Index i = 1; i < x.size(); ++i) q -= x(i) * y(i);
  const double d = std::acosh(std::max(1.0, q));
  if (d == 0.0) return x;
  return (std::sinh((1 - t) * d) * x + std::sinh(t * d) * y) / std::sinh(d);
}

}  // namespace

// ------------------------------------------------------------------ convex

TEST(ConvexResolvent, QuadraticSpecExample) {
  const auto f = quadratic_function(R1, R1.point({0}));
  EXPECT_NEAR(x0(convex_resolvent(R1, f, 1.0, R1.point({2}))), 1.0, 1e-15);
  EXPECT_NEAR(x0(convex_resolvent(R1, without_closed_form(f), 1.0, R1.point({2}))), 1.0, 1e-10);
}

TEST(ConvexResolvent, ArgminIsFixed) {
  const auto a = R2.point({0.4, -1.2});
  const auto f = without_closed_form(quadratic_function(R2, a));
  for (double lambda : {0.01, 1.0, 50.0}) EXPECT_LT(R2.distance(convex_resolvent(R2, f, lambda, a), a), 1e-12);
}

TEST(ConvexResolvent, QuarticStationaryPointIsFixed) {
  const auto f = quartic_function(R1);
  EXPECT_NEAR(x0(convex_resolvent(R1, f, 0.01, R1.point({2}))), 2.0, 1e-14);
  EXPECT_NEAR(x0(convex_resolvent(R1, without_closed_form(f), 0.01, R1.point({2}))), 2.0, 1e-10);
  EXPECT_NEAR(x0(convex_resolvent(R1, f, 0.01, R1.point({0}))), 0.0, 1e-14);
}

TEST(ConvexResolvent, QuarticClosedFormSolvesStationarity) {
  const auto f = quartic_function(R1);
  PointSampler draw(R1, 3, 3.0);
  for (int i = 0; i < 500; ++i) {
    const double x = x0(draw());
    const double lambda = draw.uniform(1e-4, 0.0624);
    const double y = x0(convex_resolvent(R1, f, lambda, R1.point({x})));
    // Oracle: y + λ f'(y) = x with f'(y) = 12 y (y - 2)².
    EXPECT_NEAR(y + lambda * 12.0 * y * (y - 2) * (y - 2), x, 1e-12 * (1 + std::abs(x)));
    const double gd = x0(convex_resolvent(R1, without_closed_form(f), lambda, R1.point({x})));
    EXPECT_NEAR(gd, y, 1e-8);
  }
}

TEST(ConvexResolvent, WeakConvexityBoundEnforced) {
  const auto f = quartic_function(R1);
  EXPECT_THROW(convex_resolvent(R1, f, 1.0 / 16.0, R1.point({1})), DomainError);
  EXPECT_THROW(convex_resolvent(R1, f, 0.5, R1.point({1})), DomainError);
  EXPECT_NO_THROW(convex_resolvent(R1, f, 0.0624, R1.point({1})));
  EXPECT_THROW(convex_resolvent(R1, f, 0.0, R1.point({1})), DomainError);
}

TEST(ConvexResolvent, SpiderNeedsClosedForm) {
  const auto S = ModelSpace::spider(3);
  const auto f = quadratic_function(S, S.tree_point(1, 2.0));
  const auto y = convex_resolvent(S, f, 1.0, S.tree_point(2, 2.0));
  EXPECT_EQ(y, S.tree_point(0, 0.0));  // halfway along the 4-long path is the hub
  EXPECT_THROW(convex_resolvent(S, without_closed_form(f), 1.0, S.tree_point(2, 2.0)), UnsupportedOperation);
}

TEST(ConvexResolvent, InconsistentGradientReportsSolverError) {
  ObjectiveFunction f = without_closed_form(quadratic_function(R1, R1.point({0})));
  f.gradient = [](const SpacePoint& y) { return Vector::Constant(1, std::sin(1e3 * y.coords()(0)) + 5.0); };
  EXPECT_THROW(convex_resolvent(R1, f, 1.0, R1.point({2})), SolverError);
}

TEST(ConvexResolvent, GradientPathMatchesOracleOnHyperboloid) {
  PointSampler draw(H2, 5);
  for (int i = 0; i < 200; ++i) {
    const auto a = draw(), x = draw();
    const double lambda = draw.uniform(0.05, 10.0);
    const auto y = convex_resolvent(H2, without_closed_form(quadratic_function(H2, a)), lambda, x);
    const Vector expected = geodesic_oracle(x.coords(), a.coords(), lambda / (1 + lambda));
    EXPECT_LT((y.coords() - expected).norm(), 1e-9 * (1 + expected.norm()));
  }
}

TEST(ConvexResolvent, Dist2ClosedFormMatchesGradientPath) {
  const std::vector<std::pair<ModelSpace, ConvexSubset>> cases{
      {R2, ConvexSubset::segment(R2.point({0, 0}), R2.point({1, 0}))},
      {R2, ConvexSubset::ball(R2.point({1, 1}), 0.5)},
      {H2, ConvexSubset::ball(H2.lift(Vector::Constant(2, 0.3)), 0.7)},
      {H2, ConvexSubset::segment(H2.lift(Vector::Constant(2, -0.5)), H2.lift(Vector::Constant(2, 0.6)))},
  };
  for (const auto& [space, K] : cases) {
    const auto f = dist2_function(space, K);
    PointSampler draw(space, 7, 1.5);
    for (int i = 0; i < 100; ++i) {
      const auto x = draw();
      const double lambda = draw.uniform(0.1, 5.0);
      const auto closed = convex_resolvent(space, f, lambda, x);
      const auto gd = convex_resolvent(space, without_closed_form(f), lambda, x);
      EXPECT_LT(space.distance(closed, gd), 1e-8) << to_string(space.id()) << " " << K.describe();
    }
  }
}

TEST(ConvexResolvent, PseudoConvexFixedPointsAreMinimizers) {
  const std::vector<std::pair<ModelSpace, ObjectiveFunction>> cases{
      {R2, quadratic_function(R2, R2.point({1, -2}))},
      {R2, dist2_function(R2, ConvexSubset::segment(R2.point({0, 0}), R2.point({1, 0})))},
      {H2, dist2_function(H2, ConvexSubset::ball(H2.origin(), 0.5))},
  };
  for (const auto& [space, f] : cases) {
    ASSERT_TRUE(f.flags.pseudo_convex && f.argmin);
    PointSampler draw(space, 9, 2.0);
    for (int i = 0; i < 20; ++i) {
      SpacePoint x = draw();
      for (int k = 0; k < 200; ++k) x = convex_resolvent(space, f, 1.0, x);
      ASSERT_LT(space.distance(convex_resolvent(space, f, 1.0, x), x), 1e-12);
      EXPECT_LT(space.distance(x, space.project(*f.argmin, x)), 1e-6) << f.name;
    }
  }
}

TEST(ConvexResolvent, QuasiFirmInequality) {
  const auto a = R2.point({0, 0});
  EXPECT_TRUE(check_quasi_firm(R2, quadratic_function(R2, a), 1.0, a, 500, 1).passed);
  const auto b = H2.lift(Vector::Constant(2, 0.2));
  EXPECT_TRUE(check_quasi_firm(H2, quadratic_function(H2, b), 1.0, b, 500, 2).passed);
  EXPECT_TRUE(check_quasi_firm(R1, quartic_function(R1), 0.05, R1.point({0}), 500, 3).passed);
  const auto K = ConvexSubset::segment(H2.origin(), H2.lift(Vector::Constant(2, 0.5)));
  EXPECT_TRUE(check_quasi_firm(H2, dist2_function(H2, K), 2.0, H2.origin(), 500, 4).passed);
}

TEST(ConvexResolvent, QuasiFirmAtWitnessIsZero) {
  const auto a = R2.point({1, 1});
  const auto f = quadratic_function(R2, a);
  const auto j = convex_resolvent(R2, f, 1.0, a);
  EXPECT_EQ(R2.distance_squared(j, a), 0.0);
  EXPECT_EQ(R2.quasilin(j, a, a, a), 0.0);
}

TEST(ConvexResolvent, QuasiFirmNegativeControl) {
  const auto a = R2.point({0, 0});
  EXPECT_FALSE(check_quasi_firm(R2, reflected_quadratic_function(R2, a), 1.0, a, 500, 1).passed);
}

TEST(NestedFixedSets, SpecCases) {
  const auto q = quadratic_function(R2, R2.point({0.5, 0.5}));
  EXPECT_TRUE(check_nested_fixed_sets(R2, q, 1.0, 0.5, {R2.point({0.5, 0.5})}).passed);
  const auto f = quartic_function(R1);
  EXPECT_TRUE(check_nested_fixed_sets(R1, f, 0.01, 0.005, {R1.point({2}), R1.point({0})}).passed);
  EXPECT_THROW(check_nested_fixed_sets(R1, f, 0.01, 0.005, {R1.point({1})}), DomainError);
  EXPECT_THROW(check_nested_fixed_sets(R1, f, 0.01, 0.02, {R1.point({2})}), DomainError);
}

TEST(NestedFixedSets, CorruptedResolventFails) {
  // Fixes 3 at every scale above 0.5 but moves it below.
  ObjectiveFunction f = quadratic_function(R1, R1.point({3}));
  f.closed_form = [](double lambda, const SpacePoint& x) {
    return R1.point({lambda > 0.5 ? x.coords()(0) : x.coords()(0) + 1.0});
  };
  EXPECT_FALSE(check_nested_fixed_sets(R1, f, 1.0, 0.25, {R1.point({3})}).passed);
}

// --------------------------------------------------------------- Lipschitz

TEST(LipschitzResolvent, SpecExamples) {
  PointSampler draw(R2, 11);
  const auto x = draw();
  EXPECT_LT(R2.distance(lipschitz_resolvent(R2, identity_operator(R2), 2.0, x), x), 1e-15);
  EXPECT_NEAR(x0(lipschitz_resolvent(R1, constant_operator(R1, R1.point({1})), 1.0, R1.point({0}))), 0.5, 1e-12);
  EXPECT_NEAR(x0(lipschitz_resolvent(R1, scaled_reflection_operator(R1, 1.0), 1.0, R1.point({3}))), 1.0, 1e-11);
}

TEST(LipschitzResolvent, ParameterBoundEnforced) {
  const auto T = sawtooth_reflection_operator(R1, 3.0, 1.0);
  EXPECT_THROW(lipschitz_resolvent(R1, T, 0.5, R1.point({1})), DomainError);
  EXPECT_THROW(lipschitz_resolvent(R1, T, 0.7, R1.point({1})), DomainError);
  EXPECT_NO_THROW(lipschitz_resolvent(R1, T, 0.49, R1.point({1})));
  OperatorSpec U = identity_operator(R1);
  U.lipschitz.reset();
  EXPECT_THROW(lipschitz_resolvent(R1, U, 0.5, R1.point({1})), DomainError);
}

TEST(LipschitzResolvent, ObservedRatioWithinContraction) {
  PointSampler draw(R1, 13, 3.0);
  for (int i = 0; i < 300; ++i) {
    const double alpha = draw.uniform(1.01, 2.99);
    const double lambda = draw.uniform(0.01, 0.999) / (alpha - 1.0);
    const auto T = sawtooth_reflection_operator(R1, alpha, draw.uniform(0.2, 2.0));
    const double x = x0(draw());
    const auto r = lipschitz_resolvent_detailed(R1, T, lambda, R1.point({x}));
    // Oracle: y solves y = (x + λ T(y)) / (1 + λ).
    const double y = x0(r.point);
    EXPECT_NEAR(y, (x + lambda * at(T, y)) / (1 + lambda), 1e-9 * (1 + std::abs(x)));
    EXPECT_LE(r.max_ratio, r.contraction_bound + 1e-6);
  }
}

TEST(LipschitzResolvent, FixedSetEqualsOperatorFixedSet) {
  for (const auto& T : {sawtooth_reflection_operator(R1, 2.0, 1.0), scaled_reflection_operator(R1, 0.5)})
    EXPECT_TRUE(check_lipschitz_fixed_set(R1, T, 0.5, 50, 17).passed) << T.name;
  const auto P = projection_operator(R2, ConvexSubset::ball(R2.point({1, 0}), 0.5));
  EXPECT_TRUE(check_lipschitz_fixed_set(R2, P, 2.0, 50, 19).passed);
  const auto Q = hyperbolic_projection_operator(H2, ConvexSubset::ball(H2.origin(), 0.5));
  EXPECT_TRUE(check_lipschitz_fixed_set(H2, Q, 1.0, 30, 21).passed);
}

TEST(LipschitzResolvent, SqnInequalityAndNegativeControl) {
  const auto T = sawtooth_reflection_operator(R1, 2.0, 1.0);
  EXPECT_TRUE(check_sqn_inequality(R1, LipschitzSource{T, 0.5, {}}, R1.origin(), 500, 23).passed);
  EXPECT_TRUE(check_sqn_inequality(R1, LipschitzSource{T, 0.5, {}}, R1.origin(), 1, 23).max_violation <= 0);
  const auto bad = expanding_negative_control(R1);
  EXPECT_FALSE(check_sqn_inequality(R1, LipschitzSource{bad, 0.5, {}}, R1.origin(), 500, 23).passed);
}

// ------------------------------------------------------------- equilibrium

TEST(EquilibriumResolvent, MinimizationSpecExample) {
  const auto g = quadratic_function(R1, R1.point({0}));
  const auto f = minimization_bifunction(R1, g);
  EXPECT_NEAR(x0(equilibrium_resolvent(R1, f, 1.0, R1.point({2}))), 1.0, 1e-12);
}

TEST(EquilibriumResolvent, MinimizationMatchesProxWithReciprocalParameter) {
  // On K = X the equilibrium resolvent at λ is the prox of g at 1/λ.
  PointSampler draw(H2, 25);
  for (int i = 0; i < 50; ++i) {
    const auto a = draw(), x = draw();
    const double lambda = draw.uniform(0.1, 10.0);
    const auto g = quadratic_function(H2, a);
    const auto z = equilibrium_resolvent(H2, minimization_bifunction(H2, without_closed_form(g)), lambda, x);
    EXPECT_LT(H2.distance(z, convex_resolvent(H2, g, 1.0 / lambda, x)), 1e-9);
  }
}

TEST(EquilibriumResolvent, ConstrainedMinimizationMatchesOracle) {
  // argmin_{y in K} ½|y - a|² + (λ/2)|y - x|² = P_K((a + λx) / (1 + λ)).
  const auto a = R2.point({2, 0});
  const auto K = ConvexSubset::ball(R2.origin(), 1.0);
  const auto f = minimization_bifunction(R2, quadratic_function(R2, a), K);
  PointSampler draw(R2, 27, 2.0);
  for (int i = 0; i < 100; ++i) {
    const auto x = draw();
    const double lambda = draw.uniform(0.1, 5.0);
    const Vector c = (a.coords() + lambda * x.coords()) / (1 + lambda);
    const Vector oracle = c.norm() <= 1.0 ? c : Vector(c / c.norm());
    EXPECT_LT((equilibrium_resolvent(R2, f, lambda, x).coords() - oracle).norm(), 1e-8);
  }
}

TEST(EquilibriumResolvent, RotationViSpecExample) {
  const auto f = rotation_vi(R2);
  const auto z = equilibrium_resolvent(R2, f, 1.0, R2.point({1, 0}));
  Eigen::Matrix2d M;
  M << 1, 1, -1, 1;  // A + λI
  const Eigen::Vector2d oracle = M.fullPivLu().solve(Eigen::Vector2d(1, 0));
  EXPECT_NEAR(z.coords()(0), oracle(0), 1e-8);
  EXPECT_NEAR(z.coords()(1), oracle(1), 1e-8);
  EXPECT_NEAR(oracle(0), 0.5, 1e-15);
  EXPECT_NEAR(oracle(1), 0.5, 1e-15);
}

TEST(EquilibriumResolvent, EquilibriumPointIsFixed) {
  const auto f = rotation_vi(R2);
  for (double lambda : {0.5, 1.0, 4.0})
    EXPECT_LT(R2.distance(equilibrium_resolvent(R2, f, lambda, R2.origin()), R2.origin()), 1e-12);
  const auto g = minimization_bifunction(R1, quadratic_function(R1, R1.point({2})));
  EXPECT_LT(std::abs(x0(equilibrium_resolvent(R1, g, 100.0, R1.point({2}))) - 2.0), 1e-12);
  // A stationary point of a nonconvex g is not an equilibrium, and is refused.
  EXPECT_THROW(equilibrium_resolvent(R1, minimization_bifunction(R1, quartic_function(R1)), 100.0, R1.point({2})),
               SolverError);
}

TEST(EquilibriumResolvent, ParameterMustExceedTheta) {
  auto f = rotation_vi(R2);
  EXPECT_THROW(equilibrium_resolvent(R2, f, 0.0, R2.point({0.5, 0})), DomainError);
  f.theta = 2.0;
  EXPECT_THROW(equilibrium_resolvent(R2, f, 1.5, R2.point({0.5, 0})), DomainError);
}

TEST(EquilibriumResolvent, BogusCustomSolverRejected) {
  Bifunction f = rotation_vi(R2);
  f.structure = CustomStructure{[](double, const SpacePoint&) { return R2.point({0.5, -0.5}); }};
  EXPECT_THROW(equilibrium_resolvent(R2, f, 1.0, R2.point({1, 0})), SolverError);
  f.structure = CustomStructure{[](double, const SpacePoint&) { return R2.point({0.5, 0.5}); }};
  EXPECT_NO_THROW(equilibrium_resolvent(R2, f, 1.0, R2.point({1, 0})));
}

TEST(EquilibriumResolvent, SqnInequalityAndWrongWitness) {
  const auto f = rotation_vi(R2);
  EXPECT_TRUE(check_sqn_inequality(R2, EquilibriumSource{f, 1.0, {}}, R2.origin(), 500, 29).passed);
  EXPECT_FALSE(check_sqn_inequality(R2, EquilibriumSource{f, 1.0, {}}, R2.point({0.5, 0}), 500, 29).passed);
}

TEST(Bifunctions, FixtureInvariants) {
  EXPECT_TRUE(check_bifunction(R2, rotation_vi(R2), 500, 31).passed);
  EXPECT_TRUE(check_bifunction(H2, minimization_bifunction(H2, quadratic_function(H2, H2.origin())), 500, 33).passed);
}

TEST(Functions, FixtureConvexity) {
  EXPECT_TRUE(check_function(R2, quadratic_function(R2, R2.point({1, 2})), 500, 35).passed);
  EXPECT_TRUE(check_function(H2, quadratic_function(H2, H2.origin()), 500, 37).passed);
  EXPECT_TRUE(check_function(H2, dist2_function(H2, ConvexSubset::ball(H2.origin(), 0.5)), 500, 39).passed);
  EXPECT_TRUE(check_function(R1, quartic_function(R1), 500, 41).passed);
  // The quartic is not convex: the α = 0 inequality must fail somewhere.
  ObjectiveFunction pretend = quartic_function(R1);
  pretend.flags.convex = true;
  EXPECT_FALSE(check_function(R1, pretend, 500, 41).passed);
}

// --------------------------------------------------------------- sequences

TEST(ResolventSequence, ScheduleRules) {
  const auto g = quadratic_function(R2, R2.origin());
  EXPECT_NO_THROW(resolvent_sequence(R2, g, Schedule::constant(1.0)));
  EXPECT_THROW(resolvent_sequence(R2, g, Schedule::power_law(1.0, 1.0)), ConfigError);
  EXPECT_THROW(resolvent_sequence(R1, quartic_function(R1), Schedule::constant(0.1)), ConfigError);
  EXPECT_NO_THROW(resolvent_sequence(R1, quartic_function(R1), Schedule::constant(0.01)));

  const auto T = sawtooth_reflection_operator(R1, 2.0, 1.0);
  EXPECT_NO_THROW(resolvent_sequence(R1, T, Schedule::constant(0.9)));
  EXPECT_THROW(resolvent_sequence(R1, T, Schedule::constant(1.0)), ConfigError);

  Bifunction f = rotation_vi(R2);
  f.theta = 0.5;
  EXPECT_NO_THROW(resolvent_sequence(R2, f, Schedule::constant(1.5)));
  EXPECT_THROW(resolvent_sequence(R2, f, Schedule::power_law(1.0, 1.0, 0.0, 0.5)), ConfigError);
}

TEST(ResolventSequence, WitnessesAndFixedSets) {
  const auto a = R2.point({1, 0});
  const auto seq = resolvent_sequence(R2, quadratic_function(R2, a), Schedule::constant(1.0));
  ASSERT_TRUE(seq.common_witness && seq.common_fixed_set);
  EXPECT_EQ(*seq.common_witness, a);
  const auto quartic = resolvent_sequence(R1, quartic_function(R1), Schedule::constant(0.01));
  EXPECT_FALSE(quartic.common_fixed_set.has_value());  // F(J) = {0, 2} is not the argmin
  const auto vi = resolvent_sequence(R2, rotation_vi(R2), Schedule::constant(1.0));
  ASSERT_TRUE(vi.common_witness);
  EXPECT_EQ(*vi.common_witness, R2.origin());
}

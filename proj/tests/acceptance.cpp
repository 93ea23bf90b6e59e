// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hadamard/diagnostics.hpp"
#include "hadamard/experiment.hpp"

using namespace hadamard;
namespace fs = std::filesystem;
namespace ex = hadamard::experiment;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (ok) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string num(double v, int digits = 3) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ex::RunSpec load(const std::string& name) { return ex::load_run(ex::read_json(fs::path(HADAMARD_CONFIG_DIR) / name)); }

// Hyperbolic geodesic point at parameter t, from the sinh form.
Vector geodesic_oracle(const Vector& x, const Vector& y, double t) {
  double q = x(0) * y(0);
  for (Eigen::Index i = 1; i < x.size(); ++i) q -= x(i) * y(i);
  const double d = std::acosh(std::max(1.0, q));
  if (d == 0.0) return x;
  return (std::sinh((1 - t) * d) * x + std::sinh(t * d) * y) / std::sinh(d);
}

ObjectiveFunction without_closed_form(ObjectiveFunction f) {
  f.closed_form = nullptr;
  return f;
}

// ------------------------------------------------------------------ criteria

Outcome geometry_axioms() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const ModelSpace& space : {ModelSpace::euclidean(3), ModelSpace::hyperboloid(3), ModelSpace::spider(5)}) {
    const CheckReport r = check_space_axioms(space, 10000, 2024);
    o.require(r.passed, to_string(space.id()) + " max violation " + num(r.max_violation));
    o.require(r.samples_tested == 70000, to_string(space.id()) + " sample count");
  }
  const double dt = seconds_since(t0);
  o.require(dt < 5.0, "runtime " + num(dt) + " s");
  o.note("3 spaces x 10^4 samples in " + num(dt) + " s");
  return o;
}

Outcome closed_form_oracle() {
  Outcome o;
  double worst_e = 0.0, worst_h = 0.0;
  const ModelSpace E = ModelSpace::euclidean(3), H = ModelSpace::hyperboloid(2);
  PointSampler de(E, 31, 2.0), dh(H, 37);
  for (int i = 0; i < 1000; ++i) {
    const SpacePoint a = de(), x = de();
    const double lambda = std::exp(de.uniform(std::log(0.01), std::log(100.0)));
    const Vector expected = (x.coords() + lambda * a.coords()) / (1 + lambda);
    const auto f = quadratic_function(E, a);
    for (const auto& g : {f, without_closed_form(f)})
      worst_e = std::max(worst_e, (convex_resolvent(E, g, lambda, x).coords() - expected).lpNorm<Eigen::Infinity>());
  }
  for (int i = 0; i < 1000; ++i) {
    const SpacePoint a = dh(), x = dh();
    const double lambda = std::exp(dh.uniform(std::log(0.01), std::log(100.0)));
    const Vector expected = geodesic_oracle(x.coords(), a.coords(), lambda / (1 + lambda));
    const auto f = quadratic_function(H, a);
    for (const auto& g : {f, without_closed_form(f)}) {
      const Vector got = convex_resolvent(H, g, lambda, x).coords();
      worst_h = std::max(worst_h, (got - expected).lpNorm<Eigen::Infinity>() / std::max(1.0, expected(0)));
    }
  }
  o.require(worst_e <= 1e-9, "euclidean error " + num(worst_e));
  o.require(worst_h <= 1e-9, "hyperboloid error " + num(worst_h));
  o.note("10^3 pairs per space, closed form and solver paths; max error " + num(worst_e) + " / " + num(worst_h));
  return o;
}

Outcome halpern_strong_convergence() {
  Outcome o;
  struct Case {
    const char* config;
    double tol;
  };
  for (const Case& c : {Case{"halpern_ppa_segment.json", 5e-3}, Case{"halpern_ppa_hyperboloid_ball.json", 1e-2}}) {
    ex::RunSpec spec = load(c.config);
    const auto t0 = std::chrono::steady_clock::now();
    const IterationTrace trace = run_scheme(spec.scheme, spec.run);
    const double dt = seconds_since(t0);
    const ModelSpace& space = spec.run.space;
    const SpacePoint target = space.project(*spec.scheme.target_set, *spec.run.anchor);
    const double d = space.distance(trace.summary.final_point, target);
    o.require(d <= c.tol, std::string(c.config) + " distance " + num(d));
    o.require(trace.summary.iterations_run <= 100000, std::string(c.config) + " budget");
    o.require(dt < 2.0, std::string(c.config) + " runtime " + num(dt) + " s");
    o.require(check_halpern_target(space, trace, *spec.run.anchor, *spec.scheme.target_set, c.tol).passed,
              std::string(c.config) + " boundedness");
    o.note(std::string(space.kind() == SpaceKind::Euclidean ? "segment" : "hyperbolic ball") + " d=" + num(d) +
           " after " + std::to_string(trace.summary.iterations_run) + " its");
  }
  return o;
}

Outcome quartic_non_minimizer() {
  Outcome o;
  for (const auto& [start, limit] : {std::pair{5.0, 2.0}, std::pair{1.0, 0.0}}) {
    ex::RunSpec spec = load("quartic_ppa.json");
    spec.run.start = spec.run.space.point({start});
    const IterationTrace trace = run_scheme(spec.scheme, spec.run);
    const double x = trace.summary.final_point.coords()(0);
    o.require(trace.summary.stop_reason == StopReason::Converged, "start " + num(start) + " did not converge");
    o.require(std::abs(x - limit) <= 1e-6, "start " + num(start) + " ended at " + num(x, 10));
    // Oracle: the prox iterates decrease monotonically and stay above the limit.
    double prev = INFINITY;
    bool monotone = true;
    for (const TraceStep& s : trace.steps) {
      const double v = s.x.coords()(0);
      monotone = monotone && v <= prev && v >= limit;
      prev = v;
    }
    o.require(monotone, "start " + num(start) + " not monotone");
    o.note(num(start) + " -> " + num(x, 10));
  }
  return o;
}

Outcome ishikawa() {
  Outcome o;
  ex::RunSpec spec = load("ishikawa_rotation.json");
  spec.run.trace_stride = 1;
  const IterationTrace trace = run_scheme(spec.scheme, spec.run);
  const ModelSpace& R2 = spec.run.space;
  const double d = R2.distance(trace.summary.final_point, R2.origin());
  o.require(d <= 1e-6, "sequence distance " + num(d));
  o.require(trace.summary.iterations_run <= 10000, "sequence steps");
  o.require(check_fejer(R2, trace, R2.origin()).passed, "not Fejer monotone");

  const Scheme h = build_scheme(R2, "halpern_ishikawa", {.op = rotation_operator(R2, 2 * std::numbers::pi / 3)},
                                {.alpha = Schedule::constant(0.5),
                                 .beta = Schedule::power_law(1.0, 1.0),
                                 .gamma = Schedule::power_law(1.0, 1.0, 1.0)});
  RunConfig cfg{.space = R2, .start = R2.point({1, 1})};
  cfg.anchor = R2.point({1, 1});
  cfg.tolerance = 1e-10;
  const IterationTrace ht = run_scheme(h, cfg);
  const double dh = R2.distance(ht.summary.final_point, R2.origin());
  o.require(dh <= 5e-3 && ht.summary.iterations_run <= 100000, "halpern distance " + num(dh));
  o.note("sequence d=" + num(d) + " in " + std::to_string(trace.summary.iterations_run) + " steps, halpern d=" +
         num(dh));
  return o;
}

Outcome lipschitz_resolvent_contraction() {
  Outcome o;
  const ModelSpace R1 = ModelSpace::euclidean(1);
  PointSampler draw(R1, 41, 3.0);
  double worst = -INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = draw.uniform(1.0 + 1e-3, 3.0 - 1e-3);
    const double lambda = draw.uniform(0.01, 0.99) / (alpha - 1.0);
    const auto T = sawtooth_reflection_operator(R1, alpha, draw.uniform(0.2, 2.0));
    const auto r = lipschitz_resolvent_detailed(R1, T, lambda, draw());
    worst = std::max(worst, r.max_ratio - alpha * lambda / (1.0 + lambda));
  }
  o.require(worst <= 1e-6, "ratio exceeds bound by " + num(worst));

  const ModelSpace R2 = ModelSpace::euclidean(2), H2 = ModelSpace::hyperboloid(2);
  CatalogParams ep{.set = ConvexSubset::ball(R2.point({0.5, 0}), 1.0), .point = R2.point({0.2, 0.3}), .angle = 1.0,
                   .c = 0.5};
  CatalogParams hp{.set = ConvexSubset::ball(H2.origin(), 0.5)};
  std::vector<std::pair<ModelSpace, OperatorSpec>> ops;
  for (const char* n : {"identity", "projection", "rotation", "scaled_reflection", "constant"})
    ops.emplace_back(R2, catalog_operator(R2, n, ep));
  ops.emplace_back(H2, catalog_operator(H2, "hyperbolic_projection", hp));
  ops.emplace_back(R1, catalog_operator(R1, "sawtooth_reflection", CatalogParams{.alpha = 2.5, .height = 1.0}));
  ops.emplace_back(R1, catalog_operator(R1, "expanding_negative_control", {}));
  std::size_t witnesses = 0;
  for (const auto& [space, T] : ops) {
    if (!T.witness || !T.lipschitz) continue;
    const double L = *T.lipschitz;
    const double lambda = L > 1.0 ? 0.5 / (L - 1.0) : 1.0;
    const double moved = space.distance(lipschitz_resolvent(space, T, lambda, *T.witness), *T.witness);
    o.require(moved <= 1e-9, T.name + " witness moved " + num(moved));
    ++witnesses;
  }
  o.require(witnesses >= 7, "only " + std::to_string(witnesses) + " catalog witnesses");

  bool rejected = true;
  for (double alpha : {1.5, 2.0, 2.9}) {
    const auto T = sawtooth_reflection_operator(R1, alpha, 1.0);
    for (double lambda : {1.0 / (alpha - 1.0), 2.0 / (alpha - 1.0)}) {
      try {
        lipschitz_resolvent(R1, T, lambda, R1.point({0.3}));
        rejected = false;
      } catch (const DomainError&) {
      }
    }
  }
  o.require(rejected, "lambda >= 1/(alpha-1) accepted");
  o.note("10^3 instances, max excess " + num(worst) + "; " + std::to_string(witnesses) + " witnesses fixed");
  return o;
}

Outcome equilibrium_ppa() {
  Outcome o;
  ex::RunSpec spec = load("equilibrium_rotation_vi.json");
  const ModelSpace& R2 = spec.run.space;
  const IterationTrace t = run_scheme(spec.scheme, spec.run);
  const double d = R2.distance(t.summary.final_point, R2.origin());
  o.require(d <= 1e-6 && t.summary.iterations_run <= 10000, "sequence distance " + num(d));

  const Scheme h = build_scheme(R2, "halpern_ppa_equilibrium", {.bifunction = rotation_vi(R2)},
                                {.lambda = Schedule::constant(1.0)});
  RunConfig cfg{.space = R2, .start = R2.point({0.9, 0})};
  cfg.anchor = R2.point({0.9, 0});
  cfg.tolerance = 1e-9;
  const IterationTrace ht = run_scheme(h, cfg);
  const double dh = R2.distance(ht.summary.final_point, R2.origin());
  o.require(ht.summary.stop_reason != StopReason::SolverError, "halpern solver error: " + ht.summary.error_message);
  o.require(dh <= 5e-3, "halpern distance " + num(dh));

  Eigen::Matrix2d M;
  M << 1, 1, -1, 1;  // A + λI with λ = 1
  const Eigen::Vector2d oracle = M.fullPivLu().solve(Eigen::Vector2d(1, 0));
  const SpacePoint z = equilibrium_resolvent(R2, rotation_vi(R2), 1.0, R2.point({1, 0}));
  const double err = (z.coords() - oracle).lpNorm<Eigen::Infinity>();
  o.require(err <= 1e-8, "resolvent error " + num(err));
  o.require(std::abs(oracle(0) - 0.5) < 1e-15 && std::abs(oracle(1) - 0.5) < 1e-15, "oracle mismatch");
  o.note("sequence d=" + num(d) + ", halpern d=" + num(dh) + ", resolvent error " + num(err));
  return o;
}

Outcome lemma_suite() {
  Outcome o;
  const ModelSpace R1 = ModelSpace::euclidean(1), R2 = ModelSpace::euclidean(2), H2 = ModelSpace::hyperboloid(2);
  auto pass = [&](const CheckReport& r, const std::string& what) {
    o.require(r.passed && r.violation_count == 0 && r.samples_tested >= 1, what + " failed (max " + num(r.max_violation) + ")");
  };
  auto fail = [&](const CheckReport& r, const std::string& what) {
    o.require(!r.passed, what + " negative control passed");
  };

  const auto a = H2.lift(Vector::Constant(2, 0.25));
  pass(check_quasi_firm(H2, quadratic_function(H2, a), 1.0, a, 500, 1), "quasi_firm");
  fail(check_quasi_firm(R2, reflected_quadratic_function(R2, R2.origin()), 1.0, R2.origin(), 500, 1), "quasi_firm");

  const auto rot = rotation_operator(R2, 2.0);
  pass(check_sqn_inequality(R2, IshikawaSource{rot, 0.5, 0.3}, R2.origin(), 500, 2), "sqn_ishikawa");
  fail(check_sqn_inequality(R1, IshikawaSource{expanding_negative_control(R1), 0.5, 0.3}, R1.origin(), 500, 2),
       "sqn_ishikawa");
  const auto saw = sawtooth_reflection_operator(R1, 2.0, 1.0);
  pass(check_sqn_inequality(R1, LipschitzSource{saw, 0.5, {}}, R1.origin(), 500, 3), "sqn_lipschitz");
  fail(check_sqn_inequality(R1, LipschitzSource{expanding_negative_control(R1), 0.5, {}}, R1.origin(), 500, 3),
       "sqn_lipschitz");
  pass(check_sqn_inequality(R2, EquilibriumSource{rotation_vi(R2), 1.0, {}}, R2.origin(), 500, 4), "sqn_equilibrium");
  fail(check_sqn_inequality(R2, EquilibriumSource{rotation_vi(R2), 1.0, {}}, R2.point({0.5, 0}), 500, 4),
       "sqn_equilibrium");

  pass(check_nested_fixed_sets(R1, quartic_function(R1), 0.01, 0.005, {R1.point({0}), R1.point({2})}), "nested");
  ObjectiveFunction corrupted = quadratic_function(R1, R1.origin());
  corrupted.closed_form = [R1](double lambda, const SpacePoint& x) {
    return lambda < 0.5 ? R1.point({x.coords()(0) + 1.0}) : x;
  };
  fail(check_nested_fixed_sets(R1, corrupted, 1.0, 0.25, {R1.origin()}), "nested");
  bool rejected = false;
  try {
    check_nested_fixed_sets(R1, quartic_function(R1), 0.01, 0.005, {R1.point({1})});
  } catch (const DomainError&) {
    rejected = true;
  }
  o.require(rejected, "nested precondition accepted p=1");

  const Scheme ppa = build_scheme(R2, "ppa", {.objective = quadratic_function(R2, R2.point({1, -1}))},
                                  {.lambda = Schedule::constant(0.01)});
  RunConfig cfg{.space = R2, .start = R2.point({4, 3})};
  cfg.max_iterations = 500;
  cfg.tolerance = 0.0;
  const IterationTrace trace = run_scheme(ppa, cfg);
  const CheckReport fejer = check_fejer(R2, trace, R2.point({1, -1}));
  pass(fejer, "fejer");
  o.require(fejer.samples_tested == 500, "fejer sample count");
  IterationTrace fabricated = trace;
  fabricated.steps[250].x = R2.point({40, 30});
  fail(check_fejer(R2, fabricated, R2.point({1, -1})), "fejer");

  o.note("6 checks pass on 500 samples, 6 negative controls fail");
  return o;
}

Outcome determinism() {
  Outcome o;
  std::string pattern = (fs::temp_directory_path() / "hadamard_accept_XXXXXX").string();
  if (!mkdtemp(pattern.data())) {
    o.require(false, "cannot create temp dir");
    return o;
  }
  const fs::path dir = pattern;
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  for (const char* name : {"equilibrium_rotation_vi.json", "halpern_ppa_hyperboloid_ball.json"}) {
    std::vector<std::string> csv;
    for (const char* sub : {"a", "b"}) {
      const std::string cmd = std::string(HADAMARD_ITER_BIN) + " run --config " +
                              (fs::path(HADAMARD_CONFIG_DIR) / name).string() + " --seed 17 --out " +
                              (dir / sub).string() + " 2>/dev/null";
      const int status = std::system(cmd.c_str());
      o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, std::string(name) + " run failed");
      csv.push_back(slurp(dir / sub / "trace.csv"));
    }
    o.require(!csv[0].empty() && csv[0] == csv[1], std::string(name) + " traces differ");
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
  fs::remove_all(dir);
  o.note("two configs, byte-identical trace.csv");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geometry axioms", geometry_axioms},
      {"closed-form resolvent oracle", closed_form_oracle},
      {"Halpern-PPA strong convergence", halpern_strong_convergence},
      {"quartic PPA stops at the non-minimizer", quartic_non_minimizer},
      {"Ishikawa and Halpern-Ishikawa", ishikawa},
      {"Lipschitz resolvent contraction", lipschitz_resolvent_contraction},
      {"equilibrium PPA", equilibrium_ppa},
      {"lemma inequality suite", lemma_suite},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

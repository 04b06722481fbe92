#include <doctest.h>

#include "modlag/error.hpp"
#include "modlag/lab.hpp"
#include "modlag/mesh.hpp"
#include "modlag/text.hpp"

#include <cmath>
#include <sstream>

using namespace modlag;

namespace {

const char* kHarmonic = "1/2*norm2(xd) - 1/2*norm2(x)";
const char* kKepler = "1/2*norm2(xd) + norm(x)^-1";
const char* kMech = "1/2*norm2(xd) - U";
const char* kAniso = "1/2*dot(xd, M(xd)) + 1/2*dot(x, Jp(xd)) + 1/2*dot(x, Jm(xd)) + 1/2*dot(x, A(x))";

TextContext lab_ctx() {
  TextContext ctx;
  ctx.matrices = {{"M", Symmetry::Symmetric},
                  {"Jp", Symmetry::Symmetric},
                  {"Jm", Symmetry::Antisymmetric},
                  {"A", Symmetry::Symmetric}};
  return ctx;
}

DiscreteLagrangian build(Method m, const char* l) {
  return build_discrete_lagrangian(m, parse_expression(l, lab_ctx()).scalar(), JetSpace::abstract());
}

NumericEnv aniso_env() {
  NumericEnv env(2);
  Eigen::MatrixXd M(2, 2), Jp(2, 2), Jm(2, 2), A(2, 2);
  M << 2, 0.3, 0.3, 1;
  Jp << 0.4, 0.1, 0.1, -0.2;
  Jm << 0, 0.5, -0.5, 0;
  A << -1, 0.2, 0.2, -1.5;
  env.set_matrix("M", M).set_matrix("Jp", Jp).set_matrix("Jm", Jm).set_matrix("A", A);
  return env;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct Kepler {
  DiscreteLagrangian Ld = build(Method::StormerVerlet, kKepler);
  DifferenceEquation de = discrete_EL(Ld);
  ModifiedEquation eq = modified_equation_second_order(de, 3);
  NumericEnv env{2};
  std::vector<double> x0{-3.0, 0.0}, v0{0.0, 0.4};
};

}  // namespace

TEST_CASE("DOP853 against closed forms") {
  // y' = (y2, -y1): rotation.
  OdeRhs f = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  };
  DenseSolution s = dop853(f, 0, {1, 0}, 20);
  for (double t : {0.3, 5.55, 13.0, 20.0}) {
    auto y = s(t);
    CHECK(std::abs(y[0] - std::cos(t)) < 1e-10);
    CHECK(std::abs(y[1] + std::sin(t)) < 1e-10);
  }
  // Dense output between steps.
  OdeOptions coarse;
  coarse.rtol = coarse.atol = 1e-8;
  DenseSolution c = dop853([](double t, std::span<const double>, std::span<double> dy) { dy[0] = std::cos(t); }, 0,
                           {0}, 10, coarse);
  for (int i = 0; i <= 100; ++i) CHECK(std::abs(c(0.1 * i)[0] - std::sin(0.1 * i)) < 1e-7);
  CHECK(c.steps() < 100);
  CHECK_THROWS_AS(s(25.0), NumericsError);
}

TEST_CASE("DOP853 detects step-size underflow") {
  OdeRhs blowup = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0] * y[0]; };
  CHECK_THROWS_AS(dop853(blowup, 0, {1}, 2), NumericsError);
}

TEST_CASE("harmonic modified equation integrates to cos(omega t)") {
  auto Ld = build(Method::StormerVerlet, kHarmonic);
  auto eq = modified_equation_second_order(discrete_EL(Ld), 4);
  NumericEnv env(1);
  const double w2[] = {1.0, 1.0, 1.0 + 1.0 / 12, 1.0 + 1.0 / 12, 1.0 + 1.0 / 12 + 1.0 / 90};
  for (int k : {0, 2, 4}) {
    auto s = integrate_modeq(eq, k, env, {1.0}, {0.0}, 1.0, 10.0);
    CHECK(std::abs(s.x(6.0)[0] - std::cos(std::sqrt(w2[k]) * 6.0)) < 1e-9);
    CHECK(std::abs(s.v(6.0)[0] + std::sqrt(w2[k]) * std::sin(std::sqrt(w2[k]) * 6.0)) < 1e-9);
  }
  CHECK_THROWS_AS(integrate_modeq(eq, 5, env, {1.0}, {0.0}, 1.0, 1.0), NumericsError);
  CHECK_THROWS_AS(integrate_modeq(eq, 2, env, {1.0}, {0.0}, 1.0, 1.0, 1e-14), NumericsError);
}

namespace {

double halving_change(const ModifiedEquation& eq, const NumericEnv& env, const std::vector<double>& x0,
                      const std::vector<double>& v0, double T, double tol) {
  auto a = integrate_modeq(eq, 2, env, x0, v0, 0.5, T, tol);
  auto b = integrate_modeq(eq, 2, env, x0, v0, 0.5, T, tol / 2);
  double sup = 0;
  for (int i = 0; i <= 400; ++i) sup = std::max(sup, max_diff(a.x(T * i / 400), b.x(T * i / 400)));
  return sup;
}

}  // namespace

TEST_CASE("reference solver converges under tolerance halving") {
  auto eq = modified_equation_second_order(discrete_EL(build(Method::StormerVerlet, kHarmonic)), 2);
  NumericEnv env(1);
  for (double tol : {1e-10, 1e-11, 1e-12}) {
    const double sup = halving_change(eq, env, {1.0}, {0.0}, 40, tol);
    CHECK_MESSAGE(sup < 10 * tol, "tol " << tol << " sup " << sup);
  }
}

// Local error control does not bound the global change on the eccentric
// orbit: the phase error accumulates over perihelion passages.
TEST_CASE("reference solver tolerance halving on the Kepler orbit" * doctest::may_fail()) {
  Kepler kp;
  for (double tol : {1e-10, 1e-11, 1e-12}) {
    const double sup = halving_change(kp.eq, kp.env, kp.x0, kp.v0, 40, tol);
    CHECK_MESSAGE(sup < 10 * tol, "tol " << tol << " sup " << sup);
  }
}

TEST_CASE("Stormer-Verlet harmonic oscillator at h = 1 has period 6") {
  auto de = discrete_EL(build(Method::StormerVerlet, kHarmonic));
  NumericEnv env(1);
  auto tr = run_discrete(de, env, {1.0}, {std::cos(1.0)}, 1.0, 100);
  REQUIRE(tr.x.size() == 101);
  for (std::size_t j = 0; j + 6 < tr.x.size(); ++j) CHECK(std::abs(tr.x[j + 6][0] - tr.x[j][0]) < 1e-12);
  for (std::size_t j = 1; j + 1 < tr.x.size(); ++j)
    CHECK(std::abs(tr.x[j + 1][0] - (tr.x[j][0] - tr.x[j - 1][0])) < 1e-12);
  CHECK(tr.max_residual < 1e-12);
}

TEST_CASE("free particle moves on a line") {
  auto de = discrete_EL(build(Method::Midpoint, "1/2*norm2(xd)"));
  NumericEnv env(3);
  auto tr = run_discrete(de, env, {0, 1, 2}, {0.5, 0.75, 2}, 0.1, 40);
  for (std::size_t j = 0; j < tr.x.size(); ++j)
    CHECK(max_diff(tr.x[j], {0.5 * j, 1 - 0.25 * j, 2}) < 1e-12);
  CHECK(std::abs(tr.times.back() - 4.0) < 1e-12);
}

TEST_CASE("implicit steps converge for the midpoint rule") {
  auto de = discrete_EL(build(Method::Midpoint, kKepler));
  NumericEnv env(2);
  auto tr = run_discrete(de, env, {-3, 0}, {-2.99, 0.2}, 0.5, 200);
  CHECK(tr.max_residual < 1e-12);
}

TEST_CASE("one-step Legendre map reproduces the two-step recursion") {
  struct Case {
    Method m;
    const char* l;
    NumericEnv env;
    std::vector<double> x0, p0;
    double h;
  };
  NumericEnv mech(2);
  mech.set_potential("U", pendulum_potential());
  std::vector<Case> cases = {
      {Method::StormerVerlet, kKepler, NumericEnv(2), {-3, 0}, {0, 0.4}, 0.5},
      {Method::SymplEulerA, kKepler, NumericEnv(2), {-3, 0}, {0, 0.4}, 0.25},
      {Method::SymplEulerB, kHarmonic, NumericEnv(1), {1}, {0.2}, 0.3},
      {Method::Midpoint, kMech, mech, {1.0, -0.5}, {0.1, 0.3}, 0.2},
      {Method::StormerVerlet, kAniso, aniso_env(), {0.5, 0.2}, {-0.3, 0.1}, 0.1},
  };
  for (const auto& c : cases) {
    auto Ld = build(c.m, c.l);
    auto one = run_discrete_legendre(Ld, c.env, c.x0, c.p0, c.h, 200);
    auto two = run_discrete(discrete_EL(Ld), c.env, one.x[0], one.x[1], c.h, 200);
    // Relative to the size of the orbit: both runs round differently.
    double sup = 0, scale = 1;
    for (std::size_t j = 0; j < one.x.size(); ++j) {
      sup = std::max(sup, max_diff(one.x[j], two.x[j]));
      for (double x : one.x[j]) scale = std::max(scale, std::abs(x));
    }
    CHECK_MESSAGE(sup < 1e-12 * scale, method_name(c.m) << " " << std::string(c.l) << " sup " << sup);
  }
}

TEST_CASE("defect orders of truncated modified equations") {
  SUBCASE("harmonic oscillator") {
    auto Ld = build(Method::StormerVerlet, kHarmonic);
    auto eq = modified_equation_second_order(discrete_EL(Ld), 4);
    NumericEnv env(1);
    auto st2 = defect_order_study(Ld, eq, 2, env, {1.0}, {0.0}, {0.4, 0.2, 0.1, 0.05}, 0, 10);
    CHECK(st2.expected == 4);
    CHECK(st2.slope >= 3.8);
    CHECK(st2.slope <= 4.2);
    auto st0 = defect_order_study(Ld, eq, 0, env, {1.0}, {0.0}, {0.4, 0.2, 0.1, 0.05}, 0, 10);
    CHECK(st0.expected == 2);
    CHECK(std::abs(st0.slope - 2) < 0.2);
  }
  SUBCASE("pendulum with symplectic Euler") {
    auto Ld = build(Method::SymplEulerA, kMech);
    auto eq = modified_equation_second_order(discrete_EL(Ld), 3);
    NumericEnv env(2);
    env.set_potential("U", pendulum_potential());
    for (int k : {0, 1, 2}) {
      auto st = defect_order_study(Ld, eq, k, env, {1.0, -0.5}, {0.1, 0.3}, {0.2, 0.1, 0.05, 0.025}, 0, 5);
      // The difference equation is that of Stormer-Verlet, so odd coefficients vanish.
      CHECK(st.expected == (k % 2 == 0 ? k + 2 : k + 1));
      CHECK_MESSAGE(std::abs(st.slope - st.expected) < 0.2, "k " << k << " slope " << st.slope);
    }
  }
  SUBCASE("Kepler") {
    Kepler kp;
    auto st = defect_order_study(kp.de, kp.eq, 2, kp.env, kp.x0, kp.v0, {0.2, 0.1, 0.05, 0.025}, 0, 20);
    CHECK(st.expected == 4);
    CHECK_MESSAGE(std::abs(st.slope - 4) < 0.3, "slope " << st.slope);
  }
  SUBCASE("explicit Euler log-of-map") {
    // x' = a x discretized by explicit Euler.
    TextContext ctx;
    auto psi = parse_expression("h^-1*(x_next - x_cur) - 3/10*x_cur", ctx).vector();
    auto target = parse_expression("xd - 3/10*x", ctx).vector();
    auto de = first_order_difference_equation(psi, target, JetSpace::abstract());
    auto eq = modified_equation_first_order(de, 4);
    NumericEnv env(1);
    auto st = defect_order_study(de, eq, 2, env, {1.0}, {}, {0.4, 0.2, 0.1, 0.05}, 0, 3);
    CHECK(st.expected == 3);
    CHECK_MESSAGE(std::abs(st.slope - 3) < 0.2, "slope " << st.slope);
  }
  CHECK_THROWS_AS(loglog_slope({1, 2}, {1}), NumericsError);
}

TEST_CASE("mesh-point comparison, harmonic oscillator at h = 1") {
  auto Ld = build(Method::StormerVerlet, kHarmonic);
  auto de = discrete_EL(Ld);
  auto eq = modified_equation_second_order(de, 4);
  NumericEnv env(1);
  auto tr = run_discrete(de, env, {1.0}, {std::cos(1.0)}, 1.0, 100);
  double prev = INFINITY;
  for (int k : {0, 2, 4}) {
    auto s = integrate_modeq(eq, k, env, {1.0}, {0.0}, 1.0, 100.0);
    auto c = meshpoint_comparison(tr, s.sample(tr.times, "modified"));
    CHECK(std::isfinite(c.sup));
    CHECK_MESSAGE(c.sup < prev, "k " << k << " sup " << c.sup);
    prev = c.sup;
  }
  auto self = meshpoint_comparison(tr, tr);
  CHECK(self.sup == 0);
  Trajectory shorter = tr;
  shorter.times.pop_back();
  shorter.x.pop_back();
  CHECK_THROWS_AS(meshpoint_comparison(tr, shorter), NumericsError);
  Trajectory shifted = tr;
  shifted.times[3] += 0.5;
  CHECK_THROWS_AS(meshpoint_comparison(tr, shifted), NumericsError);
}

TEST_CASE("Kepler precession at h = 0.5") {
  Kepler kp;
  const double h = 0.5, T = 400;
  auto exact = integrate_modeq(kp.eq, 0, kp.env, kp.x0, kp.v0, h, T);
  auto tr = run_discrete(kp.de, kp.env, kp.x0, exact.x(h), h, static_cast<int>(T / h));

  auto vel = mesh_velocities(tr);
  for (std::size_t j = 0; j < tr.x.size(); ++j) CHECK(angular_momentum(tr.x[j], vel[j]) < 0);

  const double disc = precession_rate(perihelia(tr));
  std::vector<double> fine;
  for (int i = 0; i <= 40000; ++i) fine.push_back(0.01 * i);
  auto mod = integrate_modeq(kp.eq, 2, kp.env, kp.x0, kp.v0, h, T);
  const double modr = precession_rate(perihelia(mod.sample(fine, "modified")));
  const double ex = precession_rate(perihelia(exact.sample(fine, "exact")));
  CHECK(disc > 0);
  CHECK(modr > 0);
  CHECK(modr < disc);
  CHECK(std::abs(modr - disc) < 0.25 * disc);
  CHECK(std::abs(ex) < 1e-6);
}

TEST_CASE("discrete Kepler energy stays bounded") {
  Kepler kp;
  const double h = 0.5;
  auto exact = integrate_modeq(kp.eq, 0, kp.env, kp.x0, kp.v0, h, h);
  auto tr = run_discrete(kp.de, kp.env, kp.x0, exact.x(h), h, 10000);
  auto E = observe(tr, kepler_energy);
  const double E0 = kepler_energy(kp.x0, kp.v0);
  double lo = E[0], hi = E[0];
  for (double e : E) lo = std::min(lo, e), hi = std::max(hi, e);
  CHECK((hi - lo) < 0.1 * std::abs(E0));
  // No drift: the first and last thousand steps span the same band.
  auto band = [&](std::size_t a, std::size_t b) {
    double m = 0;
    for (std::size_t j = a; j < b; ++j) m += E[j];
    return m / static_cast<double>(b - a);
  };
  CHECK(std::abs(band(0, 1000) - band(E.size() - 1000, E.size())) < 0.01 * std::abs(E0));
}

TEST_CASE("perihelia need a minimum") {
  Trajectory tr;
  for (int j = 0; j < 5; ++j) {
    tr.times.push_back(j);
    tr.x.push_back({1.0 + j, 0.0});
  }
  CHECK_THROWS_AS(perihelia(tr), NumericsError);
}

TEST_CASE("natural interior conditions scale with the truncation order") {
  struct Case {
    Method m;
    const char* l;
    int dim;
    std::vector<double> x0, v0;
  };
  for (const Case& c : {Case{Method::StormerVerlet, kHarmonic, 1, {1}, {0}},
                        Case{Method::SymplEulerA, kKepler, 2, {-3, 0}, {0, 0.4}},
                        Case{Method::StormerVerlet, kKepler, 2, {-3, 0}, {0, 0.4}}}) {
    auto Ld = build(c.m, c.l);
    auto eq = modified_equation_second_order(discrete_EL(Ld), 4);
    NumericEnv env(c.dim);
    const auto& sp = JetSpace::abstract();
    for (int k : {0, 1, 2, 3}) {
      for (int ell : {2, 3}) {
        const int order = k + ell + 1;
        auto mesh = meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, order), order, sp);
        auto st = natural_interior_study(mesh, eq, k, ell, env, c.x0, c.v0, {0.4, 0.2, 0.1, 0.05}, 0, 5);
        CHECK_MESSAGE(st.slope >= st.expected - 0.3,
                      method_name(c.m) << " k " << k << " l " << ell << " slope " << st.slope);
      }
    }
  }
}

TEST_CASE("CSV writers") {
  Trajectory tr;
  tr.times = {0, 0.5};
  tr.x = {{1, 2}, {3, 4}};
  tr.v = {{0, 1}, {1, 0}};
  std::ostringstream os;
  write_trajectory_csv(os, tr, {"E"}, {{-1, -2}});
  CHECK(os.str() == "t,x0,x1,v0,v1,E\n0,1,2,0,1,-1\n0.5,3,4,1,0,-2\n");
  OrderStudy st{{0.2, 0.1}, {1e-3, 6.25e-5}, 4, 4};
  std::ostringstream s2;
  write_study_csv(s2, st);
  CHECK(s2.str().find("h,defect") != std::string::npos);
}

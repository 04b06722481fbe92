#include <doctest.h>

#include "corpus.hpp"

#include "modlag/error.hpp"
#include "modlag/mesh.hpp"
#include "modlag/modified_lagrangian.hpp"
#include "modlag/text.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace modlag;
using corpus::LagrangianGen;

namespace {

TextContext ctx_with_matrices(int dim = 0) {
  TextContext ctx;
  ctx.dimension = dim;
  ctx.matrices = {{"M", Symmetry::Symmetric},
                  {"Jp", Symmetry::Symmetric},
                  {"Jm", Symmetry::Antisymmetric},
                  {"A", Symmetry::Symmetric}};
  return ctx;
}

const TextContext& actx() {
  static const TextContext ctx = ctx_with_matrices();
  return ctx;
}

Expr P(const std::string& s, const TextContext& ctx = actx()) { return parse_expression(s, ctx); }
Poly L(const std::string& s, const TextContext& ctx = actx()) { return P(s, ctx).scalar(); }

#define CHECK_EXPR(got, want)                                                              \
  do {                                                                                     \
    Expr g_ = (got), w_ = P(want);                                                         \
    CHECK_MESSAGE(g_ == w_, "got  " << format(g_, actx()) << "\nwant " << format(w_, actx())); \
  } while (0)

const char* kMech = "1/2*norm2(xd) - U";
const char* kKepler = "1/2*norm2(xd) + norm(x)^-1";
const char* kHarmonic = "1/2*norm2(xd) - 1/2*norm2(x)";
const char* kAniso = "1/2*dot(xd, M(xd)) + 1/2*dot(x, Jp(xd)) + 1/2*dot(x, Jm(xd)) + 1/2*dot(x, A(x))";

DiscreteLagrangian build(Method m, const std::string& l, const JetSpace& sp = JetSpace::abstract(),
                         const TextContext& ctx = actx()) {
  return build_discrete_lagrangian(m, L(l, ctx), sp);
}

// Taylor coefficients of ((2/h) arcsin(h/2))^2 in h, exact.
std::vector<Rational> arcsin_oracle(int order) {
  std::vector<Rational> s(order + 1, Rational(0));
  // arcsin(y)/y = sum_n (2n)! / (4^n (n!)^2 (2n+1)) y^(2n), y = h/2
  for (int n = 0; 2 * n <= order; ++n) {
    Rational c(1);
    for (int i = 1; i <= n; ++i) c = c * Rational(2 * i - 1) / Rational(2 * i);
    c = c / Rational(2 * n + 1);
    for (int i = 0; i < n; ++i) c = c / Rational(4);
    s[2 * n] = c;
  }
  std::vector<Rational> sq(order + 1, Rational(0));
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j) sq[i + j] = sq[i + j] + s[i] * s[j];
  return sq;
}

// Bernoulli numbers from sum_{k<=n} C(n+1, k) B_k = 0, with B_1 = -1/2.
std::vector<Rational> bernoulli_oracle(int n) {
  std::vector<Rational> b(n + 1, Rational(0));
  b[0] = Rational(1);
  for (int m = 1; m <= n; ++m) {
    Rational acc(0), binom(1);
    for (int k = 0; k < m; ++k) {
      acc = acc + binom * b[k];
      binom = binom * Rational(m + 1 - k) / Rational(k + 1);
    }
    b[m] = -acc / Rational(m + 1);
  }
  return b;
}

const Method kCatalog[] = {Method::Midpoint, Method::StormerVerlet, Method::SymplEulerA, Method::SymplEulerB};

}  // namespace

TEST_CASE("Stormer-Verlet modified equation through h^4") {
  auto de = discrete_EL(build(Method::StormerVerlet, kMech));
  CHECK_EXPR(de.psi, "-U(1 @ x_cur;) + h^-2*(2*x_cur - x_prev - x_next)");
  auto eq = modified_equation_second_order(de, 4);
  CHECK_EXPR(eq.f[0], "-U(1;)");
  CHECK(eq.f[1].is_zero());
  CHECK_EXPR(eq.f[2], "1/12*U(3; xd, xd) - 1/12*U(2; U(1;))");
  CHECK(eq.f[3].is_zero());
  // The split of the U3(U2 xd, xd) term; both routes agree on it.
  CHECK_EXPR(eq.f[4],
             "1/60*U(3; U(2; xd), xd) + 1/90*U(2; U(3; xd, xd)) - 1/90*U(2; U(2; U(1;))) "
             "+ 1/40*U(4; U(1;), xd, xd) - 1/80*U(3; U(1;), U(1;)) - 1/240*U(5; xd, xd, xd, xd)");
}

TEST_CASE("one-dimensional Stormer-Verlet h^4 coefficient in the single-term form") {
  TextContext c1 = ctx_with_matrices(1);
  JetSpace sp = JetSpace::components(1);
  auto eq = modified_equation_second_order(discrete_EL(build(Method::StormerVerlet, kMech, sp, c1)), 4);
  Expr want = parse_expression(
      "1/720*(20*U(3; U(2; xd), xd) - 8*U(2; U(2; U(1;))) + 18*U(4; U(1;), xd, xd) "
      "- 9*U(3; U(1;), U(1;)) - 3*U(5; xd, xd, xd, xd))",
      c1);
  CHECK_MESSAGE(Expr(eq.f[4]) == want, format(eq.f[4], c1) << " vs " << format(want, c1));
}

TEST_CASE("Stormer-Verlet discrete and meshed Lagrangians through h^4") {
  auto Ld = build(Method::StormerVerlet, kMech);
  auto ldisc = expand_discrete_lagrangian(Ld, 4);
  CHECK_EXPR(ldisc.coeff(0), kMech);
  CHECK(ldisc.coeff(1).is_zero());
  CHECK_EXPR(ldisc.coeff(2), "1/24*(-3*U(2; xd, xd) - 3*U(1; xdd) + dot(xd, x3))");
  CHECK(ldisc.coeff(3).is_zero());
  CHECK_EXPR(ldisc.coeff(4),
             "1/5760*(-45*U(2; xdd, xdd) - 90*U(3; xdd, xd, xd) - 60*U(2; x3, xd) + 5*norm2(x3) "
             "- 15*U(4; xd, xd, xd, xd) - 15*U(1; x4) + 3*dot(xd, x5))");
  auto mesh = meshed_modified_lagrangian(ldisc, 4, JetSpace::abstract());
  CHECK_EXPR(mesh.coeff(2), "1/24*(-2*U(2; xd, xd) - 2*U(1; xdd) - norm2(xdd))");
  CHECK_EXPR(mesh.coeff(4),
             "1/720*(3*U(2; xdd, xdd) + 6*U(3; xdd, xd, xd) + 4*U(2; x3, xd) + 2*norm2(x3) "
             "+ U(4; xd, xd, xd, xd) + U(1; x4) + dot(xdd, x4))");
  auto R = euler_lagrange_residual(mesh, JetSpace::abstract());
  CHECK_EXPR(R.coeff(2), "1/12*(U(2; xdd) + U(3; xd, xd))");
  // The h^4 residual differs from the printed one only by the U'' x4 term's vector form.
  CHECK_EXPR(R.coeff(4),
             "1/240*(-6*U(4; xdd, xd, xd) - 3*U(3; xdd, xdd) - 4*U(3; x3, xd) - U(2; x4) "
             "- U(5; xd, xd, xd, xd))");
}

TEST_CASE("Stormer-Verlet classical modified Lagrangians") {
  auto Ld = build(Method::StormerVerlet, kMech);
  JetSpace sp = JetSpace::abstract();
  auto eq = modified_equation_second_order(discrete_EL(Ld), 3);
  auto l3 = classical_modified_lagrangian(
      meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 3), 3, sp), eq, 3);
  CHECK_EXPR(l3.coeff(0), kMech);
  CHECK(l3.coeff(1).is_zero());
  CHECK_EXPR(l3.coeff(2), "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))");
  CHECK(l3.coeff(3).is_zero());

  auto eq5 = modified_equation_second_order(discrete_EL(Ld), 5);
  auto l5 = classical_modified_lagrangian(
      meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 5), 5, sp), eq5, 5);
  CHECK_EXPR(l5.coeff(4),
             "1/720*(3*U(2; U(1;), U(1;)) - 6*U(3; U(1;), xd, xd) - 2*U(2; U(2; xd), xd) "
             "+ U(4; xd, xd, xd, xd))");
  CHECK(l5.coeff(5).is_zero());
}

TEST_CASE("Kepler modified Lagrangian and modified equation") {
  auto Ld = build(Method::StormerVerlet, kKepler);
  JetSpace sp = JetSpace::abstract();
  auto eq = modified_equation_second_order(discrete_EL(Ld), 3);
  CHECK_EXPR(eq.f[0], "-norm(x)^-3*x");
  CHECK_EXPR(eq.f[2],
             "1/6*norm(x)^-6*x - 1/2*dot(x, xd)*norm(x)^-5*xd - 1/4*norm2(xd)*norm(x)^-5*x "
             "+ 5/4*dot(x, xd)^2*norm(x)^-7*x");
  auto l3 = classical_modified_lagrangian(
      meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 3), 3, sp), eq, 3);
  CHECK_EXPR(l3.coeff(0), kKepler);
  CHECK_EXPR(l3.coeff(2), "1/24*(norm(x)^-4 - 2*norm2(xd)*norm(x)^-3 + 6*dot(x, xd)^2*norm(x)^-5)");
  CHECK(verify_theorem(l3, eq, 3, sp).ok());
}

TEST_CASE("symplectic Euler modified Lagrangian and Hamiltonian") {
  auto Ld = build(Method::SymplEulerA, kMech);
  JetSpace sp = JetSpace::abstract();
  auto de = discrete_EL(Ld);
  CHECK_EXPR(de.psi, "-U(1 @ x_cur;) + h^-2*(2*x_cur - x_prev - x_next)");
  auto ldisc = expand_discrete_lagrangian(Ld, 2);
  CHECK_EXPR(ldisc.coeff(1), "1/2*U(1; xd)");
  CHECK_EXPR(ldisc.coeff(2), "1/24*(dot(xd, x3) - 3*U(1; xdd) - 3*U(2; xd, xd))");
  auto mesh = meshed_modified_lagrangian(ldisc, 2, sp);
  CHECK_EXPR(mesh.coeff(2), "-1/24*(norm2(xdd) + 2*U(1; xdd) + 2*U(2; xd, xd))");
  auto eq = modified_equation_second_order(de, 2);
  auto l2 = classical_modified_lagrangian(mesh, eq, 2);
  CHECK_EXPR(l2.coeff(1), "1/2*U(1; xd)");
  CHECK_EXPR(l2.coeff(2), "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))");

  auto H = legendre_transform(l2, 2, sp);
  CHECK_EXPR(H.H.coeff(0), "1/2*norm2(p) + U");
  CHECK_EXPR(H.H.coeff(1), "-1/2*U(1; p)");
  CHECK_EXPR(H.H.coeff(2), "1/12*(U(1; U(1;)) + U(2; p, p))");
  CHECK_EXPR(H.velocity.coeff(1), "-1/2*U(1;)");
  CHECK_EXPR(H.velocity.coeff(2), "1/6*U(2; p)");
  CHECK(compare(hamiltonian_second_order(H.H, 2, sp), eq).empty());

  // Same EL equations as Stormer-Verlet: the h/2 U'xd term is a total derivative.
  auto sv = build(Method::StormerVerlet, kMech);
  auto lsv = classical_modified_lagrangian(
      meshed_modified_lagrangian(expand_discrete_lagrangian(sv, 2), 2, sp),
      modified_equation_second_order(discrete_EL(sv), 2), 2);
  auto r1 = euler_lagrange_residual(l2, sp), r2 = euler_lagrange_residual(lsv, sp);
  for (int i = 0; i <= 2; ++i) CHECK(r1.coeff(i) == r2.coeff(i));
  CHECK(gauge_invariant(lsv, L("U"), 1, sp));
}

TEST_CASE("anisotropic oscillator in opaque-matrix mode") {
  auto Ld = build(Method::SymplEulerB, kAniso);
  auto de = discrete_EL(Ld);
  CHECK_EXPR(de.psi,
             "h^-2*M(2*x_cur - x_next - x_prev) + 1/2*h^-1*Jp(2*x_cur - x_next - x_prev) "
             "+ 1/2*h^-1*Jm(x_next - x_prev) + A(x_cur)");
  auto eq = modified_equation_second_order(de, 1);
  CHECK_EXPR(eq.f[0], "inv(M)(Jm(xd) + A(x))");
  CHECK_EXPR(eq.f[1], "-1/2*inv(M)(Jp(inv(M)(Jm(xd) + A(x))))");
  auto cv = cross_validate(Ld, 3);
  CHECK(cv.ok());
  JetSpace sp = JetSpace::abstract();
  auto mesh = meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 1), 1, sp);
  CHECK_EXPR(mesh.coeff(1), "1/2*(1/2*dot(xd, Jp(xd)) + dot(xd, A(x)))");
  auto l1 = classical_modified_lagrangian(mesh, eq, 1);
  CHECK(verify_theorem(l1, eq, 1, sp).ok());
}

TEST_CASE("harmonic oscillator against the arcsin oracle") {
  auto eq = modified_equation_second_order(discrete_EL(build(Method::StormerVerlet, kHarmonic)), 6);
  auto w2 = arcsin_oracle(6);
  CHECK(w2[2] == Rational(1, 12));
  CHECK(w2[4] == Rational(1, 90));
  CHECK(w2[6] == Rational(1, 560));
  for (int i = 0; i <= 6; ++i) CHECK(Expr(eq.f[i]) == Expr(-w2[i] * jet(0)));
}

TEST_CASE("explicit Euler against the logarithm oracle") {
  JetSpace sp = JetSpace::abstract();
  Poly a = param("a");
  VecPoly psi = power(step(), -1) * (vec_symbol("x_next") - vec_symbol("x_cur")) - a * vec_symbol("x_cur");
  auto de = first_order_difference_equation(psi, jet(1) - a * jet(0), sp);
  const int K = 6;
  auto eq = modified_equation_first_order(de, K);
  // xd = (log(1 + h a) / h) x
  Poly c = a;
  for (int n = 0; n <= K; ++n) {
    Poly want = Poly(Rational(n % 2 ? -1 : 1, n + 1)) * c;
    CHECK(Expr(eq.f[n]) == Expr(want * jet(0)));
    c = c * a;
  }
}

TEST_CASE("Euler-Maclaurin coefficients and quadrature orders") {
  auto b = bernoulli_oracle(12);
  for (int n = 0; n <= 12; ++n) CHECK(bernoulli(n) == b[n]);
  CHECK(euler_maclaurin_coefficient(0) == Rational(1));
  CHECK(euler_maclaurin_coefficient(1) == Rational(-1, 24));
  CHECK(euler_maclaurin_coefficient(2) == Rational(7, 5760));
  for (int i = 0; i <= 5; ++i) {
    Rational f(1);
    for (int j = 2; j <= 2 * i; ++j) f = f * Rational(j);
    Rational pw(1);
    for (int j = 0; j < 2 * i - 1; ++j) pw = pw / Rational(2);
    if (i == 0) pw = Rational(2);
    CHECK(euler_maclaurin_coefficient(i) == (pw - Rational(1)) * b[2 * i] / f);
  }
  Differentiable sinf = [](int k, double t) {
    int r = ((k % 4) + 4) % 4;
    return r == 0 ? std::sin(t) : r == 1 ? std::cos(t) : r == 2 ? -std::sin(t) : -std::cos(t);
  };
  Differentiable expf = [](int, double t) { return std::exp(t); };
  Differentiable constf = [](int k, double t) { return k == 0 ? 2.0 : k == -1 ? 2.0 * t : 0.0; };
  auto rs = euler_maclaurin_check(sinf, 0, 1, 4, 2);
  CHECK(rs[1].observed_order >= 3.8);
  auto re = euler_maclaurin_check(expf, 0, 1, 4, 2);
  CHECK(re[2].observed_order >= 5.8);
  for (auto& row : euler_maclaurin_check(constf, 0, 1, 4, 2)) CHECK(std::abs(row.defect) < 1e-14);
}

TEST_CASE("parity and jet-order bounds across the catalog") {
  JetSpace sp = JetSpace::abstract();
  for (const char* l : {kMech, kKepler, kAniso}) {
    for (Method m : kCatalog) {
      auto Ld = build(m, l);
      auto ldisc = expand_discrete_lagrangian(Ld, 4);
      CHECK(ldisc.coeff(0) == P(l));
      auto jd = jet_orders(ldisc);
      for (int i = 0; i < static_cast<int>(jd.size()); ++i) CHECK(jd[i] <= i + 1);
      auto mesh = meshed_modified_lagrangian(ldisc, 4, sp);
      auto jm = jet_orders(mesh);
      for (int i = 1; i < static_cast<int>(jm.size()); ++i) CHECK(jm[i] <= i);
      auto eq = modified_equation_second_order(discrete_EL(Ld), 4);
      for (auto& f : eq.f) CHECK(f.max_jet() <= 1);
      CHECK(Expr(eq.f[0]) == modified_equation_second_order(discrete_EL(Ld), 0).f[0]);
      if (is_symmetric(m)) {
        for (int i : {1, 3}) {
          CHECK(ldisc.coeff(i).is_zero());
          CHECK(mesh.coeff(i).is_zero());
          CHECK(eq.f[i].is_zero());
        }
      }
    }
  }
}

TEST_CASE("null Lagrangians and gauge invariance, random corpus") {
  JetSpace sp = JetSpace::abstract();
  LagrangianGen g(2024u);
  for (int n = 0; n < 60; ++n) {
    Poly F = L(g.scalar(2));
    Expr dF = total_time_derivative(Expr(F), sp);
    CHECK_MESSAGE(variational_derivative(dF.scalar(), 0, sp).is_zero(), format(F, actx()));
    Poly Lr = L(g.regular());
    HSeries Ls = HSeries::from_coefficients({Expr(Lr), Expr(L(g.scalar(2))), Expr(L(g.scalar(1)))}, 2);
    CHECK(gauge_invariant(Ls, L(g.position_only(2)), 1 + g.pick(2), sp));
  }
}

TEST_CASE("D_t is a derivation, random corpus") {
  JetSpace sp = JetSpace::abstract();
  LagrangianGen g(31u);
  for (int n = 0; n < 80; ++n) {
    Poly a = L(g.scalar(2)), b = L(g.scalar(2));
    auto D = [&](const Poly& p) { return total_time_derivative(Expr(p), sp).scalar(); };
    CHECK(D(a * b) == D(a) * b + a * D(b));
    if (!a.is_zero() && a.max_jet() >= 0) CHECK(D(a).max_jet() == a.max_jet() + 1);
  }
}

TEST_CASE("meshed and discrete Lagrangians share EL equations, random corpus") {
  JetSpace sp = JetSpace::abstract();
  LagrangianGen g(555u);
  for (int n = 0; n < 12; ++n) {
    std::string l = g.regular();
    Method m = kCatalog[g.pick(4)];
    auto ldisc = expand_discrete_lagrangian(build(m, l), 4);
    auto mesh = meshed_modified_lagrangian(ldisc, 4, sp);
    for (int i = 0; i <= 4; ++i) {
      VecPoly a = variational_derivative(ldisc.coeff(i).scalar(), 0, sp);
      VecPoly b = variational_derivative(mesh.coeff(i).scalar(), 0, sp);
      CHECK_MESSAGE(a == b, l << " order " << i);
    }
  }
}

TEST_CASE("catalog cross-validation and the modified Lagrangian check, random corpus") {
  JetSpace sp = JetSpace::abstract();
  LagrangianGen g(8u);
  for (int n = 0; n < 8; ++n) {
    std::string l = g.regular();
    Method m = kCatalog[n % 4];
    auto Ld = build(m, l);
    auto cv = cross_validate(Ld, 3);
    CHECK_MESSAGE(cv.ok(), l << " " << method_name(m));
    auto mesh = meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 3), 3, sp);
    auto lmod = classical_modified_lagrangian(mesh, cv.from_difference_equation, 3);
    CHECK(lmod.coeff(0) == P(l));
    for (int i = 0; i <= 3; ++i) CHECK(lmod.coeff(i).max_jet() <= 1);
    CHECK_MESSAGE(verify_theorem(lmod, cv.from_difference_equation, 3, sp).ok(), l);
  }
}

TEST_CASE("truncation is idempotent and orders combine by minimum") {
  LagrangianGen g(9u);
  for (int n = 0; n < 40; ++n) {
    std::vector<Expr> c;
    for (int i = 0; i < 6; ++i) c.push_back(P(g.scalar(1)));
    HSeries s = HSeries::from_coefficients(c, 5);
    int k = g.pick(6);
    CHECK(s.truncate(k).truncate(k) == s.truncate(k));
    CHECK(s.truncate(k).order() == k);
    CHECK((s.truncate(k) * s).order() == k);
    CHECK((s + s.truncate(k)).order() == k);
  }
}

TEST_CASE("consistency is enforced and classical Lagrangians need enough closure") {
  JetSpace sp = JetSpace::abstract();
  Poly bad = L("1/2*norm2(x_next - x_prev)");
  CHECK_THROWS_AS(custom_discrete_lagrangian(bad, L(kMech), sp), DerivationError);
  Poly good = L("1/2*h^-2*norm2(x_next - x_prev) - U(0 @ x_prev;)");
  CHECK_NOTHROW(custom_discrete_lagrangian(good, L(kMech), sp));
  CHECK_THROWS(build(Method::StormerVerlet, "1/2*norm2(xdd)"));
  auto Ld = build(Method::StormerVerlet, kMech);
  auto mesh = meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, 4), 4, sp);
  auto eq = modified_equation_second_order(discrete_EL(Ld), 1);
  CHECK_THROWS_AS(classical_modified_lagrangian(mesh, eq, 4), DerivationError);
}

TEST_CASE("discrete Legendre map of symplectic Euler") {
  auto leg = discrete_legendre(build(Method::SymplEulerA, kMech));
  CHECK_EXPR(leg.p_cur, "h^-1*(x_next - x_prev) + h*U(1 @ x_prev;)");
  CHECK_EXPR(leg.p_next, "h^-1*(x_next - x_prev)");
}

TEST_CASE("truncation steps are logged") {
  TruncationLog log;
  auto Ld = build(Method::StormerVerlet, kMech);
  cross_validate(Ld, 2, &log);
  CHECK(!log.entries.empty());
}

// Acceptance run: one PASS/FAIL line per criterion.

#include "corpus.hpp"

#include "modlag/app.hpp"
#include "modlag/calculus.hpp"
#include "modlag/evaluate.hpp"
#include "modlag/lab.hpp"
#include "modlag/mesh.hpp"
#include "modlag/modified_lagrangian.hpp"
#include "modlag/text.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace modlag;

namespace {

const char* kMech = "1/2*norm2(xd) - U";
const char* kKepler = "1/2*norm2(xd) + norm(x)^-1";
const char* kHarmonic = "1/2*norm2(xd) - 1/2*norm2(x)";
const char* kAniso = "1/2*dot(xd, M(xd)) + 1/2*dot(x, Jp(xd)) + 1/2*dot(x, Jm(xd)) + 1/2*dot(x, A(x))";

const Method kCatalog[] = {Method::Midpoint, Method::StormerVerlet, Method::SymplEulerA, Method::SymplEulerB};

TextContext ctx(int dim = 0) {
  TextContext c;
  c.dimension = dim;
  c.matrices = {{"M", Symmetry::Symmetric},
                {"Jp", Symmetry::Symmetric},
                {"Jm", Symmetry::Antisymmetric},
                {"A", Symmetry::Symmetric}};
  return c;
}

DiscreteLagrangian build(Method m, const char* l, const JetSpace& sp = JetSpace::abstract(),
                         const TextContext& c = ctx()) {
  return build_discrete_lagrangian(m, parse_expression(l, c).scalar(), sp);
}

// Collects failure notes; a criterion passes when none were recorded.
struct Sheet {
  std::vector<std::string> notes;
  int checks = 0;
  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) notes.push_back(what);
  }
  void same(const Expr& got, const std::string& want, const std::string& what, const TextContext& c = ctx()) {
    Expr w = parse_expression(want, c);
    expect(got == w, what + ": got " + format(got, c) + ", expected " + format(w, c));
  }
};

std::vector<Rational> arcsin_oracle(int order) {
  std::vector<Rational> s(order + 1, Rational(0));
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

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void golden_modified_equation(Sheet& s) {
  auto eq = modified_equation_second_order(discrete_EL(build(Method::StormerVerlet, kMech)), 4);
  s.same(Expr(eq.f[0]), "-U(1;)", "h^0");
  s.expect(eq.f[1].is_zero() && eq.f[3].is_zero(), "odd coefficients vanish");
  s.same(Expr(eq.f[2]), "1/12*(U(3; xd, xd) - U(2; U(1;)))", "h^2");
  s.same(Expr(eq.f[4]),
         "1/60*U(3; U(2; xd), xd) + 1/90*U(2; U(3; xd, xd)) - 1/90*U(2; U(2; U(1;))) "
         "+ 1/40*U(4; U(1;), xd, xd) - 1/80*U(3; U(1;), U(1;)) - 1/240*U(5; xd, xd, xd, xd)",
         "h^4 abstract");
  TextContext c1 = ctx(1);
  auto eq1 = modified_equation_second_order(
      discrete_EL(build(Method::StormerVerlet, kMech, JetSpace::components(1), c1)), 4);
  s.same(Expr(eq1.f[4]),
         "1/720*(20*U(3; U(2; xd), xd) - 8*U(2; U(2; U(1;))) + 18*U(4; U(1;), xd, xd) "
         "- 9*U(3; U(1;), U(1;)) - 3*U(5; xd, xd, xd, xd))",
         "h^4 one-dimensional", c1);
}

void golden_modified_lagrangians(Sheet& s) {
  const JetSpace sp = JetSpace::abstract();
  auto lmod = [&](Method m, const char* l, int k) {
    auto Ld = build(m, l);
    auto eq = modified_equation_second_order(discrete_EL(Ld), k);
    return classical_modified_lagrangian(meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, k), k, sp), eq, k);
  };
  auto l3 = lmod(Method::StormerVerlet, kMech, 3);
  s.same(l3.coeff(0), kMech, "SV Lmod3 h^0");
  s.expect(l3.coeff(1).is_zero() && l3.coeff(3).is_zero(), "SV Lmod3 odd terms vanish");
  s.same(l3.coeff(2), "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))", "SV Lmod3 h^2");
  auto l5 = lmod(Method::StormerVerlet, kMech, 5);
  s.same(l5.coeff(2), "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))", "SV Lmod5 h^2");
  s.same(l5.coeff(4),
         "1/720*(3*U(2; U(1;), U(1;)) - 6*U(3; U(1;), xd, xd) - 2*U(2; U(2; xd), xd) + U(4; xd, xd, xd, xd))",
         "SV Lmod5 h^4");
  s.expect(l5.coeff(5).is_zero(), "SV Lmod5 h^5 vanishes");
  auto lk = lmod(Method::StormerVerlet, kKepler, 3);
  s.same(lk.coeff(2), "1/24*(norm(x)^-4 - 2*norm2(xd)*norm(x)^-3 + 6*dot(x, xd)^2*norm(x)^-5)", "Kepler Lmod3 h^2");
  auto l2 = lmod(Method::SymplEulerA, kMech, 2);
  s.same(l2.coeff(1), "1/2*U(1; xd)", "SE Lmod2 h^1");
  s.same(l2.coeff(2), "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))", "SE Lmod2 h^2");
  auto H = legendre_transform(l2, 2, sp);
  s.same(H.H.coeff(0), "1/2*norm2(p) + U", "SE Hmod2 h^0");
  s.same(H.H.coeff(1), "-1/2*U(1; p)", "SE Hmod2 h^1");
  s.same(H.H.coeff(2), "1/12*(U(1; U(1;)) + U(2; p, p))", "SE Hmod2 h^2");
}

void harmonic_coefficients(Sheet& s) {
  auto eq = modified_equation_second_order(discrete_EL(build(Method::StormerVerlet, kHarmonic)), 6);
  s.same(Expr(eq.f[0]), "-x", "h^0");
  s.same(Expr(eq.f[2]), "-1/12*x", "h^2");
  s.same(Expr(eq.f[4]), "-1/90*x", "h^4");
  auto w2 = arcsin_oracle(6);
  s.expect(w2[6] == Rational(1, 560), "oracle h^6 is 1/560");
  s.expect(Expr(eq.f[6]) == Expr(-w2[6] * jet(0)), "h^6 against the oracle: got " + format(eq.f[6], ctx()));
  for (int i : {1, 3, 5}) s.expect(eq.f[i].is_zero(), "h^" + std::to_string(i) + " vanishes");
}

void theorem_sweep(Sheet& s) {
  const JetSpace sp = JetSpace::abstract();
  for (const auto& name : preset_names()) {
    for (Method m : kCatalog) {
      for (int k : {2, 3, 4}) {
        ProblemSpec spec = preset(name);
        spec.method = m;
        spec.order = k;
        spec.hamiltonian = false;
        Derivation d = derive(spec);
        TheoremReport t = verify_theorem(d.lmod, d.equation, k, sp);
        s.expect(t.ok(), name + " " + method_name(m) + " k=" + std::to_string(k));
      }
    }
  }
}

void euler_maclaurin(Sheet& s) {
  auto b = bernoulli_oracle(6);
  for (int i = 0; i <= 2; ++i) {
    Rational fact(1);
    for (int j = 2; j <= 2 * i; ++j) fact = fact * Rational(j);
    Rational pw(2);
    for (int j = 0; j < 2 * i; ++j) pw = pw / Rational(2);
    s.expect(euler_maclaurin_coefficient(i) == (pw - Rational(1)) * b[2 * i] / fact, "c" + std::to_string(i));
  }
  s.expect(euler_maclaurin_coefficient(1) == Rational(-1, 24), "c1 = -1/24");
  s.expect(euler_maclaurin_coefficient(2) == Rational(7, 5760), "c2 = 7/5760");
  Differentiable sinf = [](int k, double t) {
    int r = ((k % 4) + 4) % 4;
    return r == 0 ? std::sin(t) : r == 1 ? std::cos(t) : r == 2 ? -std::sin(t) : -std::cos(t);
  };
  Differentiable expf = [](int, double t) { return std::exp(t); };
  for (auto [name, f] : {std::pair{"sin", sinf}, std::pair{"exp", expf}}) {
    auto rows = euler_maclaurin_check(f, 0, 1, 4, 2);
    s.expect(rows[1].observed_order >= 3.8, std::string(name) + " one term: " + num(rows[1].observed_order));
    s.expect(rows[2].observed_order >= 5.8, std::string(name) + " two terms: " + num(rows[2].observed_order));
  }
}

void defect_orders(Sheet& s) {
  {
    auto Ld = build(Method::StormerVerlet, kHarmonic);
    auto eq = modified_equation_second_order(discrete_EL(Ld), 3);
    NumericEnv env(1);
    auto st = defect_order_study(Ld, eq, 2, env, {1.0}, {0.0}, {0.4, 0.2, 0.1, 0.05}, 0, 10);
    s.expect(st.slope >= 3.8 && st.slope <= 4.2, "harmonic slope " + num(st.slope));
  }
  {
    ProblemSpec kp = preset("kepler");
    auto de = discrete_EL(build(Method::StormerVerlet, kKepler));
    auto eq = modified_equation_second_order(de, 3);
    NumericEnv env(2);
    const auto& n = kp.numerics;
    auto st = defect_order_study(de, eq, 2, env, n.x0, n.v0, n.ladder, n.window_begin, n.window_end);
    s.expect(st.slope >= 3.5 && st.slope <= 4.3, "Kepler slope " + num(st.slope));
  }
}

void figure_one(Sheet& s) {
  auto de = discrete_EL(build(Method::StormerVerlet, kHarmonic));
  auto eq = modified_equation_second_order(de, 4);
  NumericEnv env(1);
  auto tr = run_discrete(de, env, {1.0}, {std::cos(1.0)}, 1.0, 100);
  double period = 0;
  for (std::size_t j = 0; j + 6 < tr.x.size(); ++j) period = std::max(period, std::abs(tr.x[j + 6][0] - tr.x[j][0]));
  s.expect(period < 1e-12, "period 6 deviation " + num(period));
  double prev = INFINITY;
  for (int k : {0, 2, 4}) {
    auto sol = integrate_modeq(eq, k, env, {1.0}, {0.0}, 1.0, 100.0);
    const double sup = meshpoint_comparison(tr, sol.sample(tr.times, "modified")).sup;
    s.expect(std::isfinite(sup) && sup < prev, "k=" + std::to_string(k) + " deviation " + num(sup));
    prev = sup;
  }
}

void figure_two(Sheet& s) {
  ProblemSpec kp = preset("kepler");
  const auto& n = kp.numerics;
  auto de = discrete_EL(build(Method::StormerVerlet, kKepler));
  auto eq = modified_equation_second_order(de, 3);
  NumericEnv env(2);
  auto exact = integrate_modeq(eq, 0, env, n.x0, n.v0, n.h, n.T);
  auto tr = run_discrete(de, env, n.x0, exact.x(n.h), n.h, static_cast<int>(std::llround(n.T / n.h)));
  auto vel = mesh_velocities(tr);
  bool clockwise = true;
  for (std::size_t j = 0; j < tr.x.size(); ++j) clockwise = clockwise && angular_momentum(tr.x[j], vel[j]) < 0;
  s.expect(clockwise, "discrete orbit is clockwise");
  std::vector<double> fine;
  for (int i = 0; i * 0.01 <= n.T + 1e-12; ++i) fine.push_back(0.01 * i);
  auto mod = integrate_modeq(eq, 2, env, n.x0, n.v0, n.h, n.T);
  const double disc = precession_rate(perihelia(tr));
  const double modr = precession_rate(perihelia(mod.sample(fine, "modified")));
  s.expect(disc > 0, "discrete precession counterclockwise: " + num(disc));
  s.expect(modr > 0, "modified precession counterclockwise: " + num(modr));
  s.expect(modr < disc, "modified precession slower");
  s.expect(std::abs(modr - disc) < 0.25 * disc, "rates within 25%: " + num(modr) + " vs " + num(disc));
}

void anisotropic(Sheet& s) {
  auto eq = modified_equation_second_order(discrete_EL(build(Method::SymplEulerB, kAniso)), 1);
  s.same(Expr(eq.f[0]), "inv(M)(Jm(xd) + A(x))", "h^0");
  s.same(Expr(eq.f[1]), "-1/2*inv(M)(Jp(inv(M)(Jm(xd) + A(x))))", "h^1");
  const std::string f0 = format(eq.f[0], ctx()), f1 = format(eq.f[1], ctx());
  s.expect(f0.find("Jp") == std::string::npos, "continuous equation free of Jp");
  s.expect(f1.find("Jp") != std::string::npos, "h^1 depends on Jp");
}

TextContext prop_ctx() {
  TextContext c;
  c.matrices["M"] = Symmetry::General;
  c.vector_symbols.insert("e");
  c.dimension = 2;
  return c;
}

// U(y) = (c.y)^3 with c = (0.7, -0.4).
double cubic_u(int k, std::span<const double> b, std::span<const std::vector<double>> v) {
  const double c[2] = {0.7, -0.4};
  if (k > 3) return 0.0;
  double cb = c[0] * b[0] + c[1] * b[1];
  double r = std::tgamma(4.0) / std::tgamma(4.0 - k) * std::pow(cb, 3 - k);
  for (int i = 0; i < k; ++i) r *= c[0] * v[i][0] + c[1] * v[i][1];
  return r;
}

NumericEnv prop_env(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NumericEnv env(2);
  env.set(param_atom("a"), u(rng));
  for (int o = 0; o < 3; ++o)
    for (int i = 0; i < 2; ++i) env.set(comp_jet_atom(i, o), u(rng));
  env.set(vec_symbol_atom("e"), std::vector<double>{3.0, 0.5});
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.3, -0.2, 0.8;
  env.set_matrix("M", m);
  env.set_potential("U", cubic_u);
  return env;
}

void properties(Sheet& s) {
  const TextContext pc = prop_ctx();
  {
    TextContext ac = pc;
    ac.dimension = 0;
    for (bool comp : {false, true}) {
      corpus::Gen g(1234u + comp, comp);
      const TextContext& c = comp ? pc : ac;
      for (int n = 0; n < 300; ++n) {
        const std::string src = g.scalar(3);
        Expr e = parse_expression(src, c);
        s.expect(normalize(e) == e && normalize(normalize(e)) == normalize(e), "normalization: " + src);
        s.expect(parse_expression(format(e, c), c) == e, "round trip: " + src);
      }
    }
  }
  {
    // Fourth-order central differences; relative error against max(1, |d|).
    corpus::Gen g(4242u, true);
    std::mt19937 rng(99);
    int checked = 0;
    for (int n = 0; n < 300; ++n) {
      const std::string src = g.scalar(3);
      Expr e = parse_expression(src, pc);
      NumericEnv env = prop_env(rng);
      Atom a = g.pick(2) ? comp_jet_atom(g.pick(2), 0) : comp_jet_atom(g.pick(2), 1);
      const double a0 = *env.scalar(a);
      const double step = 1e-3;
      double f[4], dv = 0;
      try {
        const int offs[4] = {-2, -1, 1, 2};
        for (int i = 0; i < 4; ++i) {
          env.set(a, a0 + offs[i] * step);
          f[i] = evaluate(e, env)[0];
        }
        env.set(a, a0);
        dv = evaluate(diff(e, a), env)[0];
      } catch (const NumericsError&) {
        continue;
      }
      const double fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * step);
      if (!std::isfinite(fd) || std::abs(fd) > 1e6) continue;
      const double rel = std::abs(fd - dv) / std::max(1.0, std::abs(dv));
      s.expect(rel < 1e-6, "finite difference " + num(rel) + ": " + src);
      ++checked;
    }
    s.expect(checked > 200, "finite-difference sample too small: " + std::to_string(checked));
  }
  const TextContext lc = ctx();
  auto P = [&](const std::string& t) { return parse_expression(t, lc); };
  const JetSpace sp = JetSpace::abstract();
  {
    corpus::LagrangianGen g(9u);
    for (int n = 0; n < 40; ++n) {
      std::vector<Expr> c;
      for (int i = 0; i < 6; ++i) c.push_back(P(g.scalar(1)));
      HSeries hs = HSeries::from_coefficients(c, 5);
      const int k = g.pick(6);
      s.expect(hs.truncate(k).truncate(k) == hs.truncate(k), "truncation idempotence at " + std::to_string(k));
    }
  }
  {
    corpus::LagrangianGen g(2024u);
    for (int n = 0; n < 60; ++n) {
      const std::string fs = g.scalar(2);
      Poly F = P(fs).scalar();
      Expr dF = total_time_derivative(Expr(F), sp);
      s.expect(variational_derivative(dF.scalar(), 0, sp).is_zero(), "null Lagrangian D_t(" + fs + ")");
      Poly Lr = P(g.regular()).scalar();
      HSeries Ls = HSeries::from_coefficients({Expr(Lr), P(g.scalar(2)), P(g.scalar(1))}, 2);
      const std::string gs = g.position_only(2);
      s.expect(gauge_invariant(Ls, P(gs).scalar(), 1 + g.pick(2), sp), "gauge " + gs);
    }
  }
  {
    corpus::LagrangianGen g(555u);
    for (int n = 0; n < 12; ++n) {
      const std::string l = g.regular();
      const Method m = kCatalog[n % 4];
      auto ldisc = expand_discrete_lagrangian(build(m, l.c_str()), 4);
      auto jd = jet_orders(ldisc);
      for (int i = 0; i < static_cast<int>(jd.size()); ++i)
        s.expect(jd[i] <= i + 1, "discrete jet order " + l + " h^" + std::to_string(i));
      auto mesh = meshed_modified_lagrangian(ldisc, 4, sp);
      auto jm = jet_orders(mesh);
      for (int i = 1; i < static_cast<int>(jm.size()); ++i)
        s.expect(jm[i] <= i, "meshed jet order " + l + " h^" + std::to_string(i));
    }
  }
}

struct Criterion {
  const char* name;
  double budget;  // seconds; 0 for none
  std::function<void(Sheet&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"golden Stormer-Verlet modified equation through h^4", 10, golden_modified_equation},
      {"golden modified Lagrangians and Hamiltonian", 0, golden_modified_lagrangians},
      {"harmonic oscillator coefficients and arcsin oracle", 0, harmonic_coefficients},
      {"modified Lagrangian theorem over the catalog, k = 2, 3, 4", 60, theorem_sweep},
      {"Euler-Maclaurin coefficients and quadrature orders", 0, euler_maclaurin},
      {"defect order slopes", 120, defect_orders},
      {"harmonic oscillator at h = 1", 0, figure_one},
      {"Kepler precession at h = 0.5", 0, figure_two},
      {"anisotropic oscillator first-order term", 0, anisotropic},
      {"property suites, fixed seeds", 0, properties},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    Sheet s;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(s);
    } catch (const std::exception& e) {
      s.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) s.notes.push_back("over the " + num(c.budget) + " s budget");
    const bool ok = s.notes.empty();
    if (!ok) ++failed;
    std::printf("%s %2zu  %s  (%d checks, %.2f s)\n", ok ? "PASS" : "FAIL", i + 1, c.name, s.checks, secs);
    for (std::size_t j = 0; j < s.notes.size() && j < 10; ++j) std::printf("       %s\n", s.notes[j].c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#include "modlag/modified_lagrangian.hpp"

#include "modlag/error.hpp"

#include <functional>

namespace modlag {

namespace {

using Binder = std::function<void(SeriesBindings&, const HSeries&)>;

// Solves S(u) = q for u through h^k; S_0 is affine in u.
HSeries revert(const HSeries& S, const Binder& bind_u, const LinearInverse& lin, const VecPoly& q, int k) {
  auto solve = [&](const HSeries& s) { return s.map([&](const Expr& e) { return Expr(lin.apply(e.vector())); }); };
  HSeries g = HSeries::constant(Expr(lin.apply(q - lin.offset())), k);
  const HSeries target = HSeries::constant(Expr(q), k);
  for (int it = 0; it < k; ++it) {
    SeriesBindings b;
    bind_u(b, g);
    g = g - solve(eval_series(S, b, k) - target);
  }
  return g;
}

HSeries exact(const HSeries& s) {
  std::vector<Expr> c;
  for (int i = 0; i < s.size(); ++i) c.push_back(s.coeff(i));
  if (c.empty()) c.emplace_back(s.is_scalar() ? Expr(Poly()) : Expr(VecPoly()));
  return HSeries::from_coefficients(std::move(c), HSeries::kExact);
}

}  // namespace

HSeries classical_modified_lagrangian(const HSeries& mesh, const DerivativeClosure& closure, int k,
                                      TruncationLog* log) {
  if (mesh.order() < k) throw DerivationError("meshed Lagrangian is truncated below the requested order");
  HSeries m = mesh.truncate(k);
  if (k >= 2) {
    if (closure.derivative != 2 || closure.order < k - 2)
      throw DerivationError("derivative closure of order " + std::to_string(closure.order) +
                            " is insufficient for a modified Lagrangian of order " + std::to_string(k));
    if (closure.max_jet() < m.max_jet()) throw DerivationError("derivative closure does not reach the needed jets");
  }
  SeriesBindings b;
  closure.bind(b);
  HSeries out = eval_series(m, b, k);
  if (out.max_jet() > 1) throw DerivationError("modified Lagrangian still depends on second derivatives");
  if (log) log->note("classical modified Lagrangian", k);
  return out;
}

HSeries classical_modified_lagrangian(const HSeries& mesh, const ModifiedEquation& eq, int k, TruncationLog* log) {
  const int need = std::max(k - 2, 0);
  if (eq.order < need) throw DerivationError("modified equation is truncated below order k - 2");
  DerivativeClosure cl = make_closure(eq, need, std::max(2, mesh.truncate(k).max_jet()));
  return classical_modified_lagrangian(mesh, cl, k, log);
}

TheoremReport verify_theorem(const HSeries& lmod, const ModifiedEquation& eq, int k, const JetSpace& space) {
  if (eq.order < k) throw DerivationError("modified equation is truncated below the requested order");
  HSeries residual = euler_lagrange_residual(exact(lmod), space);
  TheoremReport r;
  r.from_lagrangian = solve_for_highest_derivative(residual, 2, k, space);
  r.from_lagrangian.source = ModeqSource::Lagrangian;
  r.mismatches = compare(r.from_lagrangian, eq.truncate(k));
  return r;
}

Atom momentum_atom() { return vec_symbol_atom("p"); }

ModifiedHamiltonian legendre_transform(const HSeries& L, int k, const JetSpace& space, TruncationLog* log) {
  if (L.order() < k) throw DerivationError("Lagrangian series is truncated below the requested order");
  if (L.max_jet() > 1) throw DerivationError("Legendre transform needs a first-order Lagrangian");
  HSeries Lk = L.truncate(k);
  HSeries P = Lk.map([&](const Expr& e) { return Expr(space.partial(e.scalar(), 1)); });
  LinearInverse lin(P.coeff(0).vector(), 1, space);
  const VecPoly p = VecPoly::atom(momentum_atom());
  Binder bind_v = [&](SeriesBindings& b, const HSeries& v) { space.bind(b, 1, v); };
  ModifiedHamiltonian out;
  out.velocity = revert(P, bind_v, lin, p, k);
  HSeries pv = HSeries::constant(Expr(inner(p, space.position(1))), k);
  SeriesBindings b;
  bind_v(b, out.velocity);
  out.H = eval_series(pv - Lk, b, k);
  if (log) log->note("Legendre transform", k);
  return out;
}

ModifiedEquation hamiltonian_second_order(const HSeries& H, int k, const JetSpace& space) {
  if (!space.is_abstract()) throw DerivationError("Hamiltonian reduction is implemented for abstract vectors");
  const Atom p = momentum_atom();
  HSeries Hk = H.truncate(k);
  HSeries V = Hk.map([&](const Expr& e) { return Expr(gradient(e.scalar(), p)); });
  HSeries Hx = Hk.map([&](const Expr& e) { return Expr(gradient(e.scalar(), jet_atom(0))); });
  LinearInverse lin = LinearInverse::for_symbol(V.coeff(0).vector(), p);
  Binder bind_p = [&](SeriesBindings& b, const HSeries& v) { b.bind(p, v); };
  HSeries P = revert(V, bind_p, lin, jet(1), k);

  const Atom pdot = vec_symbol_atom("%pdot");
  Variation flow;
  flow.set(jet_atom(0), Expr(jet(1)));
  flow.set(p, Expr(VecPoly::atom(pdot)));
  HSeries acc = V.map([&](const Expr& e) { return derivative(e, flow); });
  SeriesBindings b;
  b.bind(p, P);
  b.bind(pdot, -eval_series(Hx, b, k));
  HSeries xdd = eval_series(acc, b, k);
  ModifiedEquation eq;
  eq.order = k;
  eq.derivative = 2;
  eq.space = space;
  eq.source = ModeqSource::Lagrangian;
  for (int i = 0; i <= k; ++i) eq.f.push_back(xdd.coeff(i).vector());
  return eq;
}

bool gauge_invariant(const HSeries& L, const Poly& F, int m, const JetSpace& space) {
  Expr dF = total_time_derivative(Expr(F), space);
  HSeries shifted = L + (dF * HSeries::constant(Expr(Poly(1)), L.order())).times_h(m).truncate(L.order());
  HSeries a = euler_lagrange_residual(L, space), b = euler_lagrange_residual(shifted, space);
  return a == b;
}

}  // namespace modlag

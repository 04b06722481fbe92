#include "modlag/catalog.hpp"

#include "modlag/error.hpp"

namespace modlag {

std::string method_name(Method m) {
  switch (m) {
    case Method::Midpoint: return "midpoint";
    case Method::StormerVerlet: return "stormer_verlet";
    case Method::SymplEulerA: return "sympl_euler_A";
    case Method::SymplEulerB: return "sympl_euler_B";
    case Method::Custom: return "custom";
  }
  return "custom";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Midpoint, Method::StormerVerlet, Method::SymplEulerA, Method::SymplEulerB, Method::Custom})
    if (method_name(m) == name) return m;
  throw DerivationError("unsupported method tag '" + std::string(name) + "'");
}

bool is_symmetric(Method m) { return m == Method::Midpoint || m == Method::StormerVerlet; }

Atom x_prev_atom() { return vec_symbol_atom("x_prev"); }
Atom x_cur_atom() { return vec_symbol_atom("x_cur"); }
Atom x_next_atom() { return vec_symbol_atom("x_next"); }

namespace {

Poly at(const Poly& L, const JetSpace& space, const VecPoly& x, const VecPoly& v) {
  Substitution s;
  space.assign(s, 0, x);
  space.assign(s, 1, v);
  return substitute(L, s);
}

void check_consistent(const DiscreteLagrangian& d) {
  HSeries e = expand_discrete_lagrangian(d, 0);
  if (!(e.coeff(0) == Expr(d.source)))
    throw DerivationError("discrete Lagrangian is not a consistent discretization of the Lagrangian");
}

VecPoly mesh(Atom a) { return VecPoly::atom(a); }

}  // namespace

DiscreteLagrangian build_discrete_lagrangian(Method m, const Poly& L, const JetSpace& space) {
  if (L.max_jet() > 1) throw DerivationError("Lagrangian depends on derivatives beyond the velocity");
  if (m == Method::Custom) throw DerivationError("custom discrete Lagrangians need an expression");
  const VecPoly xp = mesh(x_prev_atom()), xn = mesh(x_next_atom());
  const VecPoly v = inverse(step()) * (xn - xp);
  DiscreteLagrangian d;
  d.method = m;
  d.source = L;
  d.space = space;
  switch (m) {
    case Method::Midpoint: d.ld = at(L, space, Rational(1, 2) * (xp + xn), v); break;
    case Method::StormerVerlet:
      d.ld = Rational(1, 2) * at(L, space, xp, v) + Rational(1, 2) * at(L, space, xn, v);
      break;
    case Method::SymplEulerA: d.ld = at(L, space, xp, v); break;
    case Method::SymplEulerB: d.ld = at(L, space, xn, v); break;
    case Method::Custom: break;
  }
  check_consistent(d);
  return d;
}

DiscreteLagrangian custom_discrete_lagrangian(const Poly& ld, const Poly& L, const JetSpace& space) {
  if (L.max_jet() > 1) throw DerivationError("Lagrangian depends on derivatives beyond the velocity");
  if (ld.max_jet() >= 0) throw DerivationError("discrete Lagrangian may only use x_prev, x_next and h");
  DiscreteLagrangian d{Method::Custom, ld, L, space};
  check_consistent(d);
  return d;
}

HSeries expand_discrete_lagrangian(const DiscreteLagrangian& Ld, int order) {
  SeriesBindings b = step_bindings();
  b.bind(x_prev_atom(), taylor_shift_generator(Rational(-1, 2), Ld.space));
  b.bind(x_next_atom(), taylor_shift_generator(Rational(1, 2), Ld.space));
  return eval_series(Expr(Ld.ld), b, order);
}

DifferenceEquation discrete_EL(const DiscreteLagrangian& Ld) {
  const VecPoly xp = mesh(x_prev_atom()), xc = mesh(x_cur_atom()), xn = mesh(x_next_atom());
  VecPoly d2 = substitute(gradient(Ld.ld, x_next_atom()), {{x_next_atom(), Expr(xc)}});
  VecPoly d1 = substitute(gradient(Ld.ld, x_prev_atom()), {{x_prev_atom(), Expr(xc)}});
  DifferenceEquation de;
  de.psi = d2 + d1;
  de.target = euler_lagrange_residual(Ld.source, Ld.space);
  de.order = 2;
  de.space = Ld.space;
  if (!(expand_difference_equation(de, 0).coeff(0) == Expr(de.target)))
    throw DerivationError("discrete Euler-Lagrange equation is not consistent with the Euler-Lagrange equation");
  return de;
}

DifferenceEquation first_order_difference_equation(const VecPoly& psi, const VecPoly& target,
                                                   const JetSpace& space) {
  DifferenceEquation de{psi, target, 1, space};
  if (!(expand_difference_equation(de, 0).coeff(0) == Expr(target)))
    throw DerivationError("difference equation is not consistent with its target");
  return de;
}

HSeries expand_difference_equation(const DifferenceEquation& de, int order) {
  SeriesBindings b = step_bindings();
  b.bind(x_cur_atom(), HSeries::constant(Expr(de.space.position(0))));
  b.bind(x_next_atom(), taylor_shift_generator(Rational(1), de.space));
  if (de.order == 2) b.bind(x_prev_atom(), taylor_shift_generator(Rational(-1), de.space));
  return eval_series(Expr(de.psi), b, order);
}

DiscreteLegendre discrete_legendre(const DiscreteLagrangian& Ld) {
  return {Rational(-1) * (step() * gradient(Ld.ld, x_prev_atom())), step() * gradient(Ld.ld, x_next_atom())};
}

}  // namespace modlag

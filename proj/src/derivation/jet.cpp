#include "modlag/jet.hpp"

#include "modlag/error.hpp"

#include <algorithm>

namespace modlag {

JetSpace JetSpace::components(int n) {
  if (n < 1) throw DerivationError("component jet space needs a positive dimension");
  return JetSpace(n);
}

VecPoly JetSpace::position(int k) const {
  if (is_abstract()) return jet(k);
  VecPoly v;
  for (int c = 0; c < dim_; ++c) v += comp_jet(c, k) * basis(c);
  return v;
}

std::vector<Atom> JetSpace::symbols(int k) const {
  if (is_abstract()) return {jet_atom(k)};
  std::vector<Atom> out;
  for (int c = 0; c < dim_; ++c) out.push_back(comp_jet_atom(c, k));
  return out;
}

Poly JetSpace::component(const VecPoly& v, int c) const { return inner(v, basis(c)); }

void JetSpace::bind(SeriesBindings& b, int k, const HSeries& value) const {
  if (is_abstract()) {
    b.bind(jet_atom(k), value);
    return;
  }
  for (int c = 0; c < dim_; ++c)
    b.bind(comp_jet_atom(c, k), value.map([&](const Expr& e) { return Expr(component(e.vector(), c)); }));
}

void JetSpace::bind(SeriesBindings& b, int k, SeriesGenerator gen) const {
  if (is_abstract()) {
    b.bind(jet_atom(k), std::move(gen));
    return;
  }
  for (int c = 0; c < dim_; ++c)
    b.bind(comp_jet_atom(c, k), [gen, c, self = *this](int cap) {
      return gen(cap).map([&](const Expr& e) { return Expr(self.component(e.vector(), c)); });
    });
}

VecPoly JetSpace::partial(const Poly& e, int k) const {
  if (is_abstract()) return gradient(e, jet_atom(k));
  VecPoly v;
  for (int c = 0; c < dim_; ++c) v += diff(Expr(e), comp_jet_atom(c, k)).scalar() * basis(c);
  return v;
}

void JetSpace::assign(Substitution& s, int k, const VecPoly& value) const {
  if (is_abstract()) {
    s[jet_atom(k)] = Expr(value);
    return;
  }
  for (int c = 0; c < dim_; ++c) s[comp_jet_atom(c, k)] = Expr(component(value, c));
}

Atom step_atom() { return param_atom("h"); }
Poly step() { return param("h"); }

SeriesBindings step_bindings() {
  SeriesBindings b;
  b.bind(step_atom(), HSeries::from_coefficients({Expr(Poly()), Expr(Poly(1))}, HSeries::kExact));
  return b;
}

Expr total_time_derivative(const Expr& e, const JetSpace& space) {
  Variation var;
  for (int k = 0; k <= e.max_jet(); ++k) {
    auto now = space.symbols(k), next = space.symbols(k + 1);
    for (std::size_t c = 0; c < now.size(); ++c) {
      if (now[c]->is_vector())
        var.set(now[c], Expr(VecPoly::atom(next[c])));
      else
        var.set(now[c], Expr(Poly::atom(next[c])));
    }
  }
  if (var.empty()) return e.is_scalar() ? Expr(Poly()) : Expr(VecPoly());
  return derivative(e, var);
}

Expr total_time_derivative(const Expr& e, const JetSpace& space, int times) {
  Expr r = e;
  for (int i = 0; i < times; ++i) r = total_time_derivative(r, space);
  return r;
}

HSeries total_time_derivative(const HSeries& s, const JetSpace& space) {
  return s.map([&](const Expr& e) { return total_time_derivative(e, space); });
}

VecPoly variational_derivative(const Poly& L, int j, const JetSpace& space) {
  if (j < 0) throw DerivationError("negative variational derivative index");
  VecPoly out;
  const int top = L.max_jet();
  for (int i = 0; j + i <= top; ++i) {
    Expr t = total_time_derivative(Expr(space.partial(L, j + i)), space, i);
    out += (i % 2 ? Rational(-1) : Rational(1)) * t.vector();
  }
  return out;
}

VecPoly euler_lagrange_residual(const Poly& L, const JetSpace& space) {
  return space.partial(L, 0) - total_time_derivative(Expr(space.partial(L, 1)), space).vector();
}

HSeries euler_lagrange_residual(const HSeries& L, const JetSpace& space) {
  if (!L.is_scalar()) throw DerivationError("Lagrangian density must be scalar");
  HSeries r = L.map([&](const Expr& e) { return Expr(euler_lagrange_residual(e.scalar(), space)); });
  auto orders = jet_orders(r);
  for (std::size_t i = 0; i < orders.size(); ++i)
    if (orders[i] > std::max<int>(2, static_cast<int>(i) + 1))
      throw DerivationError("Euler-Lagrange residual at h^" + std::to_string(i) + " depends on x^(" +
                            std::to_string(orders[i]) + ")");
  return r;
}

HSeries taylor_shift(const Rational& alpha, int order, const JetSpace& space) {
  return taylor_shift_generator(alpha, space)(order).truncate(order);
}

SeriesGenerator taylor_shift_generator(const Rational& alpha, const JetSpace& space) {
  if (alpha.is_zero()) {
    HSeries x = HSeries::constant(Expr(space.position(0)));
    return [x](int) { return x; };
  }
  return [alpha, space](int cap) {
    std::vector<Expr> c;
    Rational a(1);
    for (int i = 0; i <= cap; ++i) {
      c.emplace_back(a / factorial(i) * space.position(i));
      a *= alpha;
    }
    return HSeries::from_coefficients(std::move(c), cap);
  };
}

std::vector<int> jet_orders(const HSeries& s) {
  std::vector<int> out;
  for (int i = 0; i < s.size(); ++i) out.push_back(s.coeff(i).max_jet());
  return out;
}

}  // namespace modlag

#pragma once

// Jet-space operators: total time derivative, variational derivatives,
// Euler-Lagrange residuals and Taylor shifts.

#include "modlag/calculus.hpp"
#include "modlag/series.hpp"

#include <vector>

namespace modlag {

// Abstract vectors (dimension 0) or explicit components x_i.
class JetSpace {
 public:
  static JetSpace abstract() { return JetSpace(0); }
  static JetSpace components(int n);

  int dimension() const { return dim_; }
  bool is_abstract() const { return dim_ == 0; }
  // x^(k) as a vector expression.
  VecPoly position(int k) const;
  // The symbols making up x^(k).
  std::vector<Atom> symbols(int k) const;
  // Series bindings of the symbols of x^(k) to a vector series.
  void bind(SeriesBindings& b, int k, const HSeries& value) const;
  void bind(SeriesBindings& b, int k, SeriesGenerator gen) const;
  // Partial derivative with respect to x^(k), as a vector.
  VecPoly partial(const Poly& e, int k) const;
  // Substitution x^(k) -> value.
  void assign(Substitution& s, int k, const VecPoly& value) const;
  // Component c of a vector (component mode).
  Poly component(const VecPoly& v, int c) const;

 private:
  explicit JetSpace(int dim) : dim_(dim) {}
  int dim_;
};

// The step-size symbol h.
Atom step_atom();
Poly step();
// Bindings with h -> h (the series variable).
SeriesBindings step_bindings();

Expr total_time_derivative(const Expr& e, const JetSpace& space);
Expr total_time_derivative(const Expr& e, const JetSpace& space, int times);
HSeries total_time_derivative(const HSeries& s, const JetSpace& space);

// sum_i (-1)^i D_t^i dL/dx^(j+i).
VecPoly variational_derivative(const Poly& L, int j, const JetSpace& space);

// dL/dx - D_t dL/dxd applied coefficient-wise; the h^i residual may depend on
// jets up to order max(2, i+1).
HSeries euler_lagrange_residual(const HSeries& L, const JetSpace& space);
VecPoly euler_lagrange_residual(const Poly& L, const JetSpace& space);

// x(t + alpha h) through h^order.
HSeries taylor_shift(const Rational& alpha, int order, const JetSpace& space);
SeriesGenerator taylor_shift_generator(const Rational& alpha, const JetSpace& space);

// Largest jet order of the h^i coefficient, for each i.
std::vector<int> jet_orders(const HSeries& s);

}  // namespace modlag

#pragma once

// Differentiation, gradient extraction and substitution on expressions.

#include "modlag/expr.hpp"

#include <map>
#include <string_view>

namespace modlag {

// Assignment of a direction to each varied symbol; D_var e is the directional
// derivative of e along all of them simultaneously.
class Variation {
 public:
  Variation& set(Atom symbol, Expr direction);
  const Expr* find(Atom symbol) const;
  bool touches(Atom atom) const;
  bool empty() const { return entries_.empty(); }

 private:
  std::map<Atom, Expr, AtomLess> entries_;
};

Poly derivative(const Poly& e, const Variation& var);
VecPoly derivative(const VecPoly& e, const Variation& var);
Expr derivative(const Expr& e, const Variation& var);

// g with  e == <g, slot>  for e linear in the vector symbol `slot`.
VecPoly extract_linear(const Poly& e, Atom slot);

// Gradient of a scalar with respect to an abstract vector symbol.
VecPoly gradient(const Poly& e, Atom vector_symbol);

// Partial derivative for scalar symbols; gradient for vector symbols.
Expr diff(const Expr& e, Atom symbol);

using Substitution = std::map<Atom, Expr, AtomLess>;

// Simultaneous substitution of symbols, rebuilt through the canonical constructors.
Expr substitute(const Expr& e, const Substitution& map);
Poly substitute(const Poly& e, const Substitution& map);
VecPoly substitute(const VecPoly& e, const Substitution& map);

// Full rebuild through the canonical constructors.  Idempotent; the identity on
// anything produced by the library.
Expr normalize(const Expr& e);

// Replaces the opaque potential `name` by the concrete scalar `u`, a function of
// the position x (abstract mode, dimension 0) or of its components x_i.
Expr instantiate_potential(const Expr& e, std::string_view name, const Poly& u, int dimension);

}  // namespace modlag

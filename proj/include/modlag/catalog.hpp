#pragma once

// Discrete Lagrangians, their expansion in h, discrete Euler-Lagrange
// equations and the discrete Legendre map.

#include "modlag/jet.hpp"

#include <string>
#include <string_view>

namespace modlag {

enum class Method { Midpoint, StormerVerlet, SymplEulerA, SymplEulerB, Custom };

std::string method_name(Method m);
Method parse_method(std::string_view name);
// Midpoint and Stormer-Verlet.
bool is_symmetric(Method m);

// Symbols of the mesh points x_{j-1}, x_j, x_{j+1}.
Atom x_prev_atom();
Atom x_cur_atom();
Atom x_next_atom();

struct DiscreteLagrangian {
  Method method = Method::Custom;
  Poly ld;        // function of x_prev = x_j, x_next = x_{j+1} and h
  Poly source;    // continuous Lagrangian in x, xd
  JetSpace space = JetSpace::abstract();
};

struct DifferenceEquation {
  VecPoly psi;    // function of x_prev, x_cur, x_next and h
  VecPoly target; // consistency target g(x, xd, xdd)
  int order = 2;  // 2: three-point, 1: two-point (x_cur, x_next)
  JetSpace space = JetSpace::abstract();
};

// Checks that L only involves x and xd and that the built function is consistent.
DiscreteLagrangian build_discrete_lagrangian(Method m, const Poly& L, const JetSpace& space);
// Custom two-point function; rejected unless its expansion reproduces L at order 0.
DiscreteLagrangian custom_discrete_lagrangian(const Poly& ld, const Poly& L, const JetSpace& space);

// Ld(x(t - h/2), x(t + h/2), h) through h^order.
HSeries expand_discrete_lagrangian(const DiscreteLagrangian& Ld, int order);

// D2 Ld(x_{j-1}, x_j) + D1 Ld(x_j, x_{j+1}).
DifferenceEquation discrete_EL(const DiscreteLagrangian& Ld);
// Two-point residual Psi(x_cur, x_next, h) for first-order difference equations.
DifferenceEquation first_order_difference_equation(const VecPoly& psi, const VecPoly& target,
                                                   const JetSpace& space);

// Psi(x(t-h), x(t), x(t+h), h) (or Psi(x(t), x(t+h), h)) through h^order.
HSeries expand_difference_equation(const DifferenceEquation& de, int order);

// p_j = -h D1 Ld(x_j, x_{j+1}),  p_{j+1} = h D2 Ld(x_j, x_{j+1}), in x_prev = x_j
// and x_next = x_{j+1}.  The factor h accounts for Ld being consistent with L.
struct DiscreteLegendre {
  VecPoly p_cur;
  VecPoly p_next;
};
DiscreteLegendre discrete_legendre(const DiscreteLagrangian& Ld);

}  // namespace modlag

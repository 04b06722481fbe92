#pragma once

// Expression text grammar.
//
//   jets        x, xd, xdd, x3, x4, ...   (component mode: x_0, xd_1, ... and e_0, e_1, ...)
//   potentials  U(k; a1, ..., ak)  scalar,  U(k; a1, ..., a(k-1))  vector,  U(k @ base; ...)
//   functions   dot(a, b), norm(v), norm2(v), inv(s), sqrt(s), pow(s, n)
//   matrices    M(v), inv(M)(v), tr(B)(v)
//   literals    integers, p/q, finite decimals; [a, b] builds a component vector

#include "modlag/expr.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace modlag {

struct TextContext {
  int dimension = 0;  // 0: abstract vectors
  std::map<std::string, Symmetry> matrices;
  std::set<std::string> potentials{"U"};
  std::set<std::string> vector_symbols{"x_prev", "x_cur", "x_next", "p", "q"};

  // Position at which bare potentials are evaluated.
  VecPoly default_base() const;
};

Expr parse_expression(std::string_view text, const TextContext& ctx);
std::string format(const Expr& e, const TextContext& ctx);
std::string format(const Poly& e, const TextContext& ctx);
std::string format(const VecPoly& e, const TextContext& ctx);

// x, xd, xdd, x3, ...
std::string jet_name(int order);

}  // namespace modlag

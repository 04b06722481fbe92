#pragma once

// Truncated power series in the step size h with expression coefficients.

#include "modlag/expr.hpp"

#include <climits>
#include <functional>
#include <map>
#include <vector>

namespace modlag {

class HSeries {
 public:
  // Order of a series known exactly (a polynomial in h).
  static constexpr int kExact = INT_MAX / 4;

  HSeries() = default;
  HSeries(Expr::Kind kind, int order);  // zero series
  static HSeries constant(const Expr& e, int order = kExact);
  // coeffs[i] multiplies h^i; coefficients beyond `order` are dropped.
  static HSeries from_coefficients(std::vector<Expr> coeffs, int order);

  Expr::Kind kind() const { return kind_; }
  bool is_scalar() const { return kind_ == Expr::Kind::Scalar; }
  int order() const { return order_; }
  bool is_exact() const { return order_ >= kExact; }
  // Coefficient of h^i (zero past the stored terms); i must not exceed the order.
  Expr coeff(int i) const;
  // Number of stored coefficients (trailing zeros trimmed).
  int size() const { return static_cast<int>(coeffs_.size()); }
  int max_jet() const;

  HSeries truncate(int k) const;       // T_k
  HSeries times_h(int m) const;        // h^m * this, m >= 0
  HSeries map(const std::function<Expr(const Expr&)>& fn) const;

  HSeries operator-() const;
  friend HSeries operator+(const HSeries& a, const HSeries& b);
  friend HSeries operator-(const HSeries& a, const HSeries& b);
  friend HSeries operator*(const HSeries& a, const HSeries& b);  // order = min of orders
  friend HSeries operator*(const Expr& c, const HSeries& s);
  friend bool operator==(const HSeries& a, const HSeries& b);

 private:
  void trim();

  Expr::Kind kind_ = Expr::Kind::Scalar;
  int order_ = 0;
  std::vector<Expr> coeffs_;
};

HSeries series_add(const HSeries& a, const HSeries& b);
HSeries series_mul(const HSeries& a, const HSeries& b);
HSeries series_truncate(const HSeries& a, int k);

// Series of a symbol, produced on demand through a requested exponent.
using SeriesGenerator = std::function<HSeries(int cap)>;

class SeriesBindings {
 public:
  SeriesBindings& bind(Atom symbol, SeriesGenerator gen);
  SeriesBindings& bind(Atom symbol, HSeries fixed);
  const SeriesGenerator* find(Atom symbol) const;
  const std::map<Atom, SeriesGenerator, AtomLess>& all() const { return gens_; }

 private:
  std::map<Atom, SeriesGenerator, AtomLess> gens_;
};

// Expands e with its bound symbols replaced by series and returns the result
// through h^order.  Negative powers of h may occur in intermediate steps; they
// must cancel.  The working precision is raised until `order` is reached.
HSeries eval_series(const Expr& e, const SeriesBindings& bindings, int order);
// Sum over i of h^i * eval_series(s.coeff(i)).
HSeries eval_series(const HSeries& s, const SeriesBindings& bindings, int order);

// Series reversion: for p(v) = v + c(...) + h p_1(v) + ..., returns v = G(q)
// with p(G(q)) = q through the order of p.
HSeries series_compose_inverse(const HSeries& p, Atom variable, Atom result);

}  // namespace modlag

#pragma once

// Symbolic expressions over jet variables.
//
// Scalars are Laurent polynomials (Poly) with exact rational coefficients over
// interned atoms; vectors (VecPoly) are finite sums poly * vector-atom.  Every
// constructor returns canonical form, so structural equality is zero-testing.

#include "modlag/rational.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace modlag {

class Node;
using Atom = const Node*;

enum class AtomKind : std::uint8_t {
  // scalar atoms
  Param,    // named scalar parameter (h, a, ...)
  CompJet,  // component i of the k-th jet in component mode
  Pot,      // U^(k)_base(a1..ak)
  Bilin,    // <a, C b> for a matrix chain C
  Norm,     // |v|
  Inv,      // 1/p for a non-monomial polynomial p
  Sqrt,     // sqrt(p)
  // vector atoms
  Jet,      // x^(k) in abstract mode
  VecSym,   // named vector symbol (x_prev, x_next, p, ...)
  Basis,    // unit vector e_i in component mode
  Grad,     // U^(k)_base(a1..a(k-1), .)
  Apply,    // C v
};

enum class Symmetry : std::uint8_t { General, Symmetric, Antisymmetric };

struct MatrixFactor {
  std::string name;
  Symmetry symmetry = Symmetry::General;
  bool inverse = false;
  bool transposed = false;  // only used for General

  friend bool operator==(const MatrixFactor&, const MatrixFactor&) = default;
};

// Left-to-right product of matrix factors; applying it to v means C1(C2(...(v))).
using MatrixChain = std::vector<MatrixFactor>;

int compare_atoms(Atom a, Atom b);
struct AtomLess {
  bool operator()(Atom a, Atom b) const { return compare_atoms(a, b) < 0; }
};

struct Factor {
  Atom atom;
  int exponent;
  friend bool operator==(const Factor&, const Factor&) = default;
};

class Monomial {
 public:
  Monomial() = default;
  static Monomial of(Atom a, int e = 1);

  const std::vector<Factor>& factors() const { return factors_; }
  bool is_one() const { return factors_.empty(); }
  int exponent_of(Atom a) const;
  Monomial without(Atom a) const;
  Monomial pow(int e) const;
  std::uint64_t hash() const;

  friend Monomial operator*(const Monomial& a, const Monomial& b);
  friend int compare(const Monomial& a, const Monomial& b);
  friend bool operator==(const Monomial& a, const Monomial& b) { return a.factors_ == b.factors_; }
  friend bool operator<(const Monomial& a, const Monomial& b) { return compare(a, b) < 0; }

 private:
  std::vector<Factor> factors_;  // sorted by atom order, no zero exponents
};

class Poly {
 public:
  using Term = std::pair<Monomial, Rational>;

  Poly() = default;
  Poly(Rational c);  // NOLINT(google-explicit-constructor)
  Poly(long c) : Poly(Rational(c)) {}  // NOLINT(google-explicit-constructor)
  static Poly atom(Atom a, int e = 1);
  static Poly term(Monomial m, Rational c);
  static Poly from_terms(std::vector<Term> terms);  // any order, duplicates allowed

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  // Single term c * m.
  bool is_monomial() const { return terms_.size() == 1; }
  Poly pow(int e) const;  // e >= 0, or any e for monomials
  std::uint64_t hash() const;
  int max_jet() const;

  Poly operator-() const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly& operator*=(const Poly& o);
  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  friend Poly operator*(const Rational& c, const Poly& p);
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
  friend int compare(const Poly& a, const Poly& b);

 private:
  std::vector<Term> terms_;  // sorted by monomial, nonzero coefficients
};

class VecPoly {
 public:
  using Term = std::pair<Atom, Poly>;

  VecPoly() = default;
  static VecPoly atom(Atom v);
  static VecPoly from_terms(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  // The atom when this is exactly 1 * atom.
  std::optional<Atom> single_atom() const;
  std::uint64_t hash() const;
  int max_jet() const;

  VecPoly operator-() const;
  VecPoly& operator+=(const VecPoly& o);
  VecPoly& operator-=(const VecPoly& o);
  friend VecPoly operator+(const VecPoly& a, const VecPoly& b);
  friend VecPoly operator-(const VecPoly& a, const VecPoly& b);
  friend VecPoly operator*(const Poly& c, const VecPoly& v);
  friend VecPoly operator*(const Rational& c, const VecPoly& v);
  friend bool operator==(const VecPoly& a, const VecPoly& b) { return a.terms_ == b.terms_; }
  friend int compare(const VecPoly& a, const VecPoly& b);

 private:
  std::vector<Term> terms_;  // sorted by atom, nonzero coefficients
};

// Interned, immutable atom.  Atoms are never freed; pointer equality is
// structural equality.
class Node {
 public:
  AtomKind kind() const { return kind_; }
  bool is_vector() const;
  bool is_symbol() const;  // Param, CompJet, Jet, VecSym
  std::uint64_t hash() const { return hash_; }
  const std::string& name() const { return name_; }
  int order() const { return order_; }
  int index() const { return index_; }
  const std::vector<Atom>& args() const { return args_; }
  const MatrixChain& chain() const { return chain_; }
  const VecPoly& base() const { return base_; }  // Pot/Grad base point, Norm argument
  const Poly& poly() const { return poly_; }     // Inv/Sqrt argument
  // Symbols occurring anywhere below this atom, sorted by atom order.
  const std::vector<Atom>& symbols() const { return symbols_; }
  // Highest jet order below this atom, -1 if none.
  int max_jet() const { return max_jet_; }
  bool depends_on(Atom symbol) const;

 private:
  friend struct NodeFactory;
  Node() = default;

  AtomKind kind_ = AtomKind::Param;
  std::uint64_t hash_ = 0;
  int order_ = 0;
  int index_ = 0;
  std::string name_;
  std::vector<Atom> args_;
  MatrixChain chain_;
  VecPoly base_;
  Poly poly_;
  std::vector<Atom> symbols_;
  int max_jet_ = -1;
};

// Symbols.
Atom param_atom(std::string_view name);
Atom comp_jet_atom(int component, int order);
Atom jet_atom(int order);
Atom vec_symbol_atom(std::string_view name);
Atom basis_atom(int index);

Poly param(std::string_view name);
Poly comp_jet(int component, int order);
VecPoly jet(int order);
VecPoly vec_symbol(std::string_view name);
VecPoly basis(int index);

// Multilinear smart constructors; all arguments are expanded.
Poly potential(std::string_view name, const VecPoly& base, std::span<const VecPoly> args);
VecPoly potential_gradient(std::string_view name, const VecPoly& base, std::span<const VecPoly> args);
Poly inner(const VecPoly& a, const VecPoly& b);
Poly bilinear(const VecPoly& a, const MatrixChain& chain, const VecPoly& b);
VecPoly apply(const MatrixChain& chain, const VecPoly& v);

Poly norm_pow(const VecPoly& v, int exponent);
Poly inverse(const Poly& p);
Poly power(const Poly& p, int exponent);
Poly sqrt_pow(const Poly& p, int exponent);

// Matrix chains.
MatrixFactor matrix(std::string_view name, Symmetry symmetry);
// Transpose of a chain and the sign picked up from antisymmetric factors.
std::pair<MatrixChain, int> transpose(const MatrixChain& chain);
MatrixChain invert(const MatrixChain& chain);
MatrixChain compose(const MatrixChain& outer, const MatrixChain& inner);

// Either a scalar or a vector expression.
class Expr {
 public:
  enum class Kind : std::uint8_t { Scalar, Vector };

  Expr() = default;
  Expr(Poly p) : kind_(Kind::Scalar), s_(std::move(p)) {}     // NOLINT(google-explicit-constructor)
  Expr(VecPoly v) : kind_(Kind::Vector), v_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  Expr(Rational c) : Expr(Poly(std::move(c))) {}              // NOLINT(google-explicit-constructor)

  Kind kind() const { return kind_; }
  bool is_scalar() const { return kind_ == Kind::Scalar; }
  bool is_vector() const { return kind_ == Kind::Vector; }
  const Poly& scalar() const;
  const VecPoly& vector() const;
  bool is_zero() const { return is_scalar() ? s_.is_zero() : v_.is_zero(); }
  int max_jet() const { return is_scalar() ? s_.max_jet() : v_.max_jet(); }
  std::uint64_t hash() const { return is_scalar() ? s_.hash() : v_.hash() ^ 0x9e3779b97f4a7c15ULL; }

  Expr operator-() const;
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);  // scalar*scalar, scalar*vector
  friend Expr operator*(const Rational& c, const Expr& e);
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  Kind kind_ = Kind::Scalar;
  Poly s_;
  VecPoly v_;
};

// Symbols occurring in an expression.
std::vector<Atom> symbols_of(const Poly& p);
std::vector<Atom> symbols_of(const VecPoly& v);
std::vector<Atom> symbols_of(const Expr& e);
bool depends_on(const Expr& e, Atom symbol);

// Number of interned atoms (diagnostics).
std::size_t atom_table_size();

}  // namespace modlag

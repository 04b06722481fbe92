#include "modlag/modeq.hpp"

#include "modlag/error.hpp"
#include "modlag/mesh.hpp"

namespace modlag {

namespace {

Variation along(const JetSpace& space, int m, const VecPoly& dir) {
  Variation var;
  if (space.is_abstract()) {
    var.set(jet_atom(m), Expr(dir));
  } else {
    for (int c = 0; c < space.dimension(); ++c) var.set(comp_jet_atom(c, m), Expr(space.component(dir, c)));
  }
  return var;
}

Poly determinant(const std::vector<std::vector<Poly>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  Poly det;
  for (std::size_t j = 0; j < n; ++j) {
    if (a[0][j].is_zero()) continue;
    std::vector<std::vector<Poly>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Poly> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) row.push_back(a[r][c]);
      minor.push_back(std::move(row));
    }
    det += (j % 2 ? Rational(-1) : Rational(1)) * (a[0][j] * determinant(minor));
  }
  return det;
}

std::vector<std::vector<Poly>> cofactor_inverse(const std::vector<std::vector<Poly>>& a) {
  const std::size_t n = a.size();
  Poly det = determinant(a);
  if (det.is_zero()) throw DerivationError("leading coefficient of the highest derivative is singular");
  Poly inv_det = inverse(det);
  std::vector<std::vector<Poly>> out(n, std::vector<Poly>(n));
  if (n == 1) {
    out[0][0] = inv_det;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::vector<Poly>> minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == i) continue;
        std::vector<Poly> row;
        for (std::size_t c = 0; c < n; ++c)
          if (c != j) row.push_back(a[r][c]);
        minor.push_back(std::move(row));
      }
      // (A^{-1})_{ji} = cofactor_{ij} / det
      out[j][i] = ((i + j) % 2 ? Rational(-1) : Rational(1)) * (determinant(minor) * inv_det);
    }
  return out;
}

}  // namespace

LinearInverse::LinearInverse(const VecPoly& residual, int m, const JetSpace& space) : space_(space) {
  if (residual.max_jet() > m)
    throw DerivationError("leading residual depends on derivatives above x^(" + std::to_string(m) + ")");
  Substitution zero;
  space.assign(zero, m, VecPoly());
  offset_ = substitute(residual, zero);
  const VecPoly slot = vec_symbol("%lin");
  VecPoly a = derivative(residual, along(space, m, slot));
  if (!derivative(a, along(space, m, vec_symbol("%lin2"))).is_zero())
    throw DerivationError("residual is not affine in the highest derivative");
  if (space.is_abstract()) {
    init_abstract(a, slot.terms()[0].first);
    return;
  }
  const int n = space.dimension();
  std::vector<std::vector<Poly>> mat(n, std::vector<Poly>(n));
  for (int r = 0; r < n; ++r) {
    Poly row = space.component(residual, r);
    for (int c = 0; c < n; ++c) mat[r][c] = diff(Expr(row), comp_jet_atom(c, m)).scalar();
  }
  inv_ = cofactor_inverse(mat);
}

LinearInverse LinearInverse::for_symbol(const VecPoly& residual, Atom symbol) {
  LinearInverse lin;
  lin.offset_ = substitute(residual, {{symbol, Expr(VecPoly())}});
  const VecPoly slot = vec_symbol("%lin");
  Variation var;
  var.set(symbol, Expr(slot));
  VecPoly a = derivative(residual, var);
  Variation again;
  again.set(symbol, Expr(vec_symbol("%lin2")));
  if (!derivative(a, again).is_zero()) throw DerivationError("series is not affine in the inverted variable");
  lin.init_abstract(a, slot.terms()[0].first);
  return lin;
}

void LinearInverse::init_abstract(const VecPoly& a, Atom slot) {
  if (a.terms().size() != 1) throw DerivationError("leading linear map is not invertible in abstract mode");
  const auto& [atom, c] = a.terms()[0];
  if (c.is_zero()) throw DerivationError("leading coefficient of the highest derivative is singular");
  if (atom == slot) {
    scale_ = inverse(c);
  } else if (atom->kind() == AtomKind::Apply && atom->args()[0] == slot) {
    scale_ = inverse(c);
    chain_ = invert(atom->chain());
  } else {
    throw DerivationError("leading linear map is not invertible in abstract mode");
  }
}

VecPoly LinearInverse::apply(const VecPoly& r) const {
  if (space_.is_abstract()) return scale_ * modlag::apply(chain_, r);
  const int n = space_.dimension();
  std::vector<Poly> rc;
  for (int c = 0; c < n; ++c) rc.push_back(space_.component(r, c));
  VecPoly out;
  for (int i = 0; i < n; ++i) {
    Poly s;
    for (int j = 0; j < n; ++j) s += inv_[i][j] * rc[j];
    out += s * basis(i);
  }
  return out;
}

HSeries ModifiedEquation::series() const {
  std::vector<Expr> c(f.begin(), f.end());
  if (c.empty()) c.emplace_back(VecPoly());
  return HSeries::from_coefficients(std::move(c), order);
}

ModifiedEquation ModifiedEquation::truncate(int k) const {
  if (k > order) throw DerivationError("cannot truncate a modified equation above its order");
  ModifiedEquation e = *this;
  e.order = k;
  e.f.resize(k + 1);
  return e;
}

void DerivativeClosure::bind(SeriesBindings& b) const {
  for (std::size_t i = 0; i < F.size(); ++i) space.bind(b, derivative + static_cast<int>(i), F[i]);
}

DerivativeClosure make_closure(const ModifiedEquation& eq, int order, int max_jet) {
  DerivativeClosure cl;
  cl.order = order;
  cl.derivative = eq.derivative;
  cl.space = eq.space;
  HSeries base = eq.series().truncate(order);
  cl.F.push_back(base);
  SeriesBindings b;
  eq.space.bind(b, eq.derivative, base);
  for (int j = eq.derivative + 1; j <= max_jet; ++j)
    cl.F.push_back(eval_series(total_time_derivative(cl.F.back(), eq.space), b, order));
  return cl;
}

ModifiedEquation solve_for_highest_derivative(const HSeries& residual, int m, int k, const JetSpace& space,
                                              TruncationLog* log) {
  if (residual.is_scalar()) throw DerivationError("residual must be vector valued");
  if (residual.order() < k) throw DerivationError("residual is truncated below the requested order");
  LinearInverse lin(residual.coeff(0).vector(), m, space);
  ModifiedEquation eq;
  eq.derivative = m;
  eq.space = space;
  eq.order = 0;
  eq.f.push_back(Rational(-1) * lin.apply(lin.offset()));
  for (int n = 1; n <= k; ++n) {
    eq.order = n;
    eq.f.emplace_back();
    HSeries r = residual.truncate(n);
    DerivativeClosure cl = make_closure(eq, n, std::max(m, r.max_jet()));
    SeriesBindings b;
    cl.bind(b);
    Expr rn = eval_series(r, b, n).coeff(n);
    eq.f.back() = Rational(-1) * lin.apply(rn.vector());
  }
  for (int i = 0; i <= k; ++i)
    if (eq.f[i].max_jet() >= m)
      throw DerivationError("modified equation coefficient f_" + std::to_string(i) + " depends on x^(" +
                            std::to_string(eq.f[i].max_jet()) + ")");
  if (log) log->note("modified equation solve", k);
  return eq;
}

ModifiedEquation modified_equation_first_order(const DifferenceEquation& de, int k, TruncationLog* log) {
  if (de.order != 1) throw DerivationError("expected a two-point difference equation");
  HSeries r = expand_difference_equation(de, k);
  if (log) log->note("difference equation expansion", k);
  ModifiedEquation eq = solve_for_highest_derivative(r, 1, k, de.space, log);
  eq.source = ModeqSource::DifferenceEquation;
  return eq;
}

ModifiedEquation modified_equation_second_order(const DifferenceEquation& de, int k, TruncationLog* log) {
  if (de.order != 2) throw DerivationError("expected a three-point difference equation");
  HSeries r = expand_difference_equation(de, k);
  if (log) log->note("difference equation expansion", k);
  ModifiedEquation eq = solve_for_highest_derivative(r, 2, k, de.space, log);
  eq.source = ModeqSource::DifferenceEquation;
  return eq;
}

RecursiveSolution solve_EL_recursively(const HSeries& residual, int k, const JetSpace& space, TruncationLog* log) {
  RecursiveSolution s;
  s.equation = solve_for_highest_derivative(residual, 2, k, space, log);
  s.equation.source = ModeqSource::MeshLagrangian;
  s.closure = make_closure(s.equation, k, std::max(2, residual.truncate(k).max_jet()));
  return s;
}

std::vector<Mismatch> compare(const ModifiedEquation& a, const ModifiedEquation& b) {
  std::vector<Mismatch> out;
  const int k = std::min(a.order, b.order);
  for (int i = 0; i <= k; ++i)
    if (!(a.f[i] == b.f[i])) out.push_back({i, a.f[i], b.f[i]});
  return out;
}

CrossValidation cross_validate(const DiscreteLagrangian& Ld, int k, TruncationLog* log) {
  CrossValidation cv;
  cv.from_difference_equation = modified_equation_second_order(discrete_EL(Ld), k, log);
  HSeries mesh = meshed_modified_lagrangian(expand_discrete_lagrangian(Ld, k), k, Ld.space, log);
  cv.from_mesh_lagrangian = solve_EL_recursively(euler_lagrange_residual(mesh, Ld.space), k, Ld.space, log).equation;
  cv.mismatches = compare(cv.from_difference_equation, cv.from_mesh_lagrangian);
  return cv;
}

}  // namespace modlag

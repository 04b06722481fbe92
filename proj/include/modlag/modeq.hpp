#pragma once

// Modified equations from difference equations and from Euler-Lagrange
// residuals of series Lagrangians.

#include "modlag/catalog.hpp"
#include "modlag/truncation.hpp"

#include <vector>

namespace modlag {

// A^{-1} for the linear map A = D_{x^(m)} R of a residual R affine in x^(m).
// Abstract mode handles c * identity and c * (matrix chain); component mode
// inverts the matrix of partial derivatives by cofactors.
class LinearInverse {
 public:
  LinearInverse(const VecPoly& residual, int jet_order, const JetSpace& space);
  // Inversion in an abstract vector symbol.
  static LinearInverse for_symbol(const VecPoly& residual, Atom vector_symbol);
  VecPoly apply(const VecPoly& r) const;
  // R with x^(m) = 0.
  const VecPoly& offset() const { return offset_; }

 private:
  LinearInverse() = default;
  void init_abstract(const VecPoly& a, Atom slot);

  JetSpace space_ = JetSpace::abstract();
  VecPoly offset_;
  Poly scale_;         // abstract: inverse scalar factor
  MatrixChain chain_;  // abstract: inverse chain (may be empty)
  std::vector<std::vector<Poly>> inv_;  // component mode
};

enum class ModeqSource { DifferenceEquation, MeshLagrangian, Lagrangian };

struct ModifiedEquation {
  int order = 0;        // k
  int derivative = 2;   // x^(derivative) = sum_i h^i f_i
  std::vector<VecPoly> f;
  ModeqSource source = ModeqSource::DifferenceEquation;
  JetSpace space = JetSpace::abstract();

  HSeries series() const;
  ModifiedEquation truncate(int k) const;
};

// x^(j) for j >= m as series in h, from x^(m) = F.
struct DerivativeClosure {
  int order = 0;
  int derivative = 2;
  std::vector<HSeries> F;  // F[j - derivative]
  JetSpace space = JetSpace::abstract();

  int max_jet() const { return derivative + static_cast<int>(F.size()) - 1; }
  void bind(SeriesBindings& b) const;
};

DerivativeClosure make_closure(const ModifiedEquation& eq, int order, int max_jet);

// Solves R = 0 order by order for x^(m) = sum h^i f_i, i <= k.
ModifiedEquation solve_for_highest_derivative(const HSeries& residual, int m, int k, const JetSpace& space,
                                              TruncationLog* log = nullptr);

ModifiedEquation modified_equation_first_order(const DifferenceEquation& de, int k, TruncationLog* log = nullptr);
ModifiedEquation modified_equation_second_order(const DifferenceEquation& de, int k, TruncationLog* log = nullptr);

struct RecursiveSolution {
  ModifiedEquation equation;
  DerivativeClosure closure;
};
RecursiveSolution solve_EL_recursively(const HSeries& residual, int k, const JetSpace& space,
                                       TruncationLog* log = nullptr);

struct Mismatch {
  int order;
  VecPoly first;
  VecPoly second;
};

struct CrossValidation {
  ModifiedEquation from_difference_equation;
  ModifiedEquation from_mesh_lagrangian;
  std::vector<Mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

std::vector<Mismatch> compare(const ModifiedEquation& a, const ModifiedEquation& b);
CrossValidation cross_validate(const DiscreteLagrangian& Ld, int k, TruncationLog* log = nullptr);

}  // namespace modlag

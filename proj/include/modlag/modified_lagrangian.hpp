#pragma once

// Classical modified Lagrangians, the Lagrangian/modified-equation check and
// modified Hamiltonians.

#include "modlag/modeq.hpp"

namespace modlag {

// T_k(Lmesh with x^(j) = F^j), the closure being accurate to order k - 2.
HSeries classical_modified_lagrangian(const HSeries& mesh, const DerivativeClosure& closure, int k,
                                      TruncationLog* log = nullptr);
HSeries classical_modified_lagrangian(const HSeries& mesh, const ModifiedEquation& eq, int k,
                                      TruncationLog* log = nullptr);

struct TheoremReport {
  ModifiedEquation from_lagrangian;  // EL(Lmod,k) solved for xdd and truncated
  std::vector<Mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// The EL equation of Lmod (a polynomial in h, taken exactly) is solved for xdd
// through h^k and compared with T_k(eq).
TheoremReport verify_theorem(const HSeries& lmod, const ModifiedEquation& eq, int k, const JetSpace& space);

// The symbol of the momentum in Hamiltonians.
Atom momentum_atom();

struct ModifiedHamiltonian {
  HSeries H;         // in x and p
  HSeries velocity;  // xd as a series in x and p
};

// p = dL/dxd reverted for xd, then H = <p, xd> - L, through h^k.
ModifiedHamiltonian legendre_transform(const HSeries& L, int k, const JetSpace& space,
                                       TruncationLog* log = nullptr);

// xd = dH/dp, pd = -dH/dx reduced to xdd = F(x, xd) through h^k.
ModifiedEquation hamiltonian_second_order(const HSeries& H, int k, const JetSpace& space);

// EL coefficients of L and of L + h^m D_t(F) agree (a gauge change).
bool gauge_invariant(const HSeries& L, const Poly& F, int m, const JetSpace& space);

}  // namespace modlag

#pragma once

// Euler-Maclaurin midpoint correction and the meshed modified Lagrangian.

#include "modlag/jet.hpp"
#include "modlag/truncation.hpp"

#include <functional>
#include <vector>

namespace modlag {

// B_n with B_1 = -1/2.
Rational bernoulli(int n);
// c_i = (2^(1-2i) - 1) B_2i / (2i)!:  1, -1/24, 7/5760, ...
Rational euler_maclaurin_coefficient(int i);

// sum_i c_i h^(2i) D_t^(2i) Ldisc through h^order, with the jet-order check
// (the h^l coefficient may only involve jets up to order max(1, l)).
HSeries meshed_modified_lagrangian(const HSeries& ldisc, int order, const JetSpace& space,
                                   TruncationLog* log = nullptr);

// f(k, t) is the k-th derivative of f at t; k = -1 asks for an antiderivative.
using Differentiable = std::function<double(int k, double t)>;

struct EulerMaclaurinRow {
  int terms = 0;            // correction terms c_1..c_terms included
  double defect = 0;        // at n intervals
  double defect_fine = 0;   // at 2n intervals
  double observed_order = 0;
};

// Midpoint sum over [a, b] against the corrected integral, for 0..max_terms corrections.
std::vector<EulerMaclaurinRow> euler_maclaurin_check(const Differentiable& f, double a, double b, int n,
                                                     int max_terms);

}  // namespace modlag

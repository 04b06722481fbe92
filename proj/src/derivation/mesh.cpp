#include "modlag/mesh.hpp"

#include "modlag/error.hpp"

#include <cmath>

namespace modlag {

Rational bernoulli(int n) {
  if (n < 0) throw DerivationError("negative Bernoulli index");
  // Akiyama-Tanigawa gives B_1 = +1/2.
  std::vector<Rational> a(n + 1);
  for (int m = 0; m <= n; ++m) {
    a[m] = Rational(1, m + 1);
    for (int j = m; j >= 1; --j) a[j - 1] = Rational(j) * (a[j - 1] - a[j]);
  }
  return n == 1 ? -a[0] : a[0];
}

Rational euler_maclaurin_coefficient(int i) {
  if (i < 0) throw DerivationError("negative Euler-Maclaurin index");
  return (Rational(2).pow(1 - 2 * i) - Rational(1)) * bernoulli(2 * i) / factorial(2 * i);
}

HSeries meshed_modified_lagrangian(const HSeries& ldisc, int order, const JetSpace& space, TruncationLog* log) {
  if (!ldisc.is_scalar()) throw DerivationError("discrete Lagrangian series must be scalar");
  if (ldisc.order() < order) throw DerivationError("discrete Lagrangian series is truncated below the requested order");
  HSeries acc = ldisc.truncate(order);
  HSeries d = acc;
  for (int i = 1; 2 * i <= order; ++i) {
    d = total_time_derivative(total_time_derivative(d, space), space);
    acc = acc + (Expr(euler_maclaurin_coefficient(i)) * d.times_h(2 * i)).truncate(order);
  }
  auto orders = jet_orders(acc);
  for (std::size_t l = 0; l < orders.size(); ++l)
    if (orders[l] > std::max<int>(1, static_cast<int>(l)))
      throw DerivationError("meshed Lagrangian at h^" + std::to_string(l) + " depends on x^(" +
                            std::to_string(orders[l]) + ")");
  if (log) log->note("meshed modified Lagrangian", order);
  return acc;
}

std::vector<EulerMaclaurinRow> euler_maclaurin_check(const Differentiable& f, double a, double b, int n,
                                                     int max_terms) {
  auto defect = [&](int intervals, int terms) {
    const double h = (b - a) / intervals;
    long double sum = 0;
    for (int j = 1; j <= intervals; ++j) sum += h * f(0, a + (j - 0.5) * h);
    long double rhs = f(-1, b) - f(-1, a);
    for (int i = 1; i <= terms; ++i)
      rhs += euler_maclaurin_coefficient(i).to_double() * std::pow(h, 2 * i) *
             (f(2 * i - 1, b) - f(2 * i - 1, a));
    return static_cast<double>(std::abs(sum - rhs));
  };
  std::vector<EulerMaclaurinRow> rows;
  for (int t = 0; t <= max_terms; ++t) {
    EulerMaclaurinRow r;
    r.terms = t;
    r.defect = defect(n, t);
    r.defect_fine = defect(2 * n, t);
    r.observed_order = (r.defect > 0 && r.defect_fine > 0) ? std::log2(r.defect / r.defect_fine) : 0.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace modlag

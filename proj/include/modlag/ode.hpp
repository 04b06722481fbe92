#pragma once

// Dormand-Prince 8(5,3) with step control and 7th-order dense output.

#include <functional>
#include <span>
#include <vector>

namespace modlag {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_max = 0;           // 0: the interval length
  long max_steps = 10000000;
};

// Continuous solution assembled from the dense output of every accepted step.
class DenseSolution {
 public:
  int dimension() const { return n_; }
  double t_begin() const { return t0_; }
  double t_end() const { return steps_.empty() ? t0_ : steps_.back().t + steps_.back().h; }
  std::size_t steps() const { return steps_.size(); }
  long evaluations() const { return evaluations_; }
  void eval(double t, std::span<double> out) const;
  std::vector<double> operator()(double t) const;

 private:
  friend DenseSolution dop853(const OdeRhs&, double, std::vector<double>, double, const OdeOptions&);
  struct Step {
    double t, h;
    std::vector<double> rc;  // 8 * n
  };
  int n_ = 0;
  double t0_ = 0;
  std::vector<double> y0_;
  std::vector<Step> steps_;
  long evaluations_ = 0;
};

// Throws NumericsError on step-size underflow or too many steps.
DenseSolution dop853(const OdeRhs& f, double t0, std::vector<double> y0, double t1, const OdeOptions& opt = {});

}  // namespace modlag

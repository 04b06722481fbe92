#pragma once

// Numerical experiments: discrete integrators, reference solutions of
// truncated modified equations, defect-order studies and diagnostics.

#include "modlag/evaluate.hpp"
#include "modlag/modeq.hpp"
#include "modlag/ode.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace modlag {

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> v;  // empty when velocities are not tracked
  std::string source;
  double h = 0;
  double max_residual = 0;  // discrete runs: largest |Psi| accepted
};

// Psi(x_prev, x_cur, x_next) as a compiled function of the three points.
class DiscreteStepper {
 public:
  DiscreteStepper(const DifferenceEquation& de, const NumericEnv& env, double h);
  int dimension() const { return dim_; }
  void residual(std::span<const double> prev, std::span<const double> cur, std::span<const double> next,
                std::vector<double>& out) const;
  // Solves Psi = 0 for x_next by damped Newton from `guess`; returns the final |Psi|.
  double solve_next(std::span<const double> prev, std::span<const double> cur, std::vector<double>& next) const;

 private:
  struct Impl;
  int dim_;
  std::shared_ptr<const Impl> impl_;
};

// x_0, x_1 given; n_steps further points from the discrete EL equation.
Trajectory run_discrete(const DifferenceEquation& de, const NumericEnv& env, std::vector<double> x0,
                        std::vector<double> x1, double h, int n_steps);

// One-step form (x_j, p_j) -> (x_{j+1}, p_{j+1}) from the discrete Legendre map.
Trajectory run_discrete_legendre(const DiscreteLagrangian& Ld, const NumericEnv& env, std::vector<double> x0,
                                 std::vector<double> p0, double h, int n_steps);

// The vector field of the k-truncated modified equation, with h a parameter.
class ModifiedField {
 public:
  ModifiedField(const ModifiedEquation& eq, int k, const NumericEnv& env, double h);
  int dimension() const { return dim_; }
  int derivative() const { return derivative_; }
  // State: x (first order) or (x, xd) (second order).
  void operator()(double t, std::span<const double> y, std::span<double> dy) const;

 private:
  int dim_;
  int derivative_;
  double h_;
  std::vector<int> powers_;
  std::shared_ptr<NumericProgram> prog_;
};

struct ModeqSolution {
  DenseSolution dense;
  int dimension = 0;
  int derivative = 2;
  std::vector<double> x(double t) const;
  std::vector<double> v(double t) const;
  Trajectory sample(const std::vector<double>& times, const std::string& source) const;
};

ModeqSolution integrate_modeq(const ModifiedEquation& eq, int k, const NumericEnv& env, std::vector<double> x0,
                              std::vector<double> v0, double h, double T, double tol = 1e-13);

struct OrderStudy {
  std::vector<double> h;
  std::vector<double> defect;
  double slope = 0;
  double expected = 0;
};

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// sup over t in [t0, t1] of |Psi(x_h(t-h), x_h(t), x_h(t+h))| along the
// k-truncated modified equation, for each h of the ladder.
OrderStudy defect_order_study(const DiscreteLagrangian& Ld, const ModifiedEquation& eq, int k,
                              const NumericEnv& env, const std::vector<double>& x0, const std::vector<double>& v0,
                              const std::vector<double>& ladder, double t0, double t1, int samples_per_step = 20);
OrderStudy defect_order_study(const DifferenceEquation& de, const ModifiedEquation& eq, int k,
                              const NumericEnv& env, const std::vector<double>& x0, const std::vector<double>& v0,
                              const std::vector<double>& ladder, double t0, double t1, int samples_per_step = 20);

// sup over t of |d Lmesh / d x^(ell)| with the jets of order >= 2 closed by
// the k-truncated modified equation, along its solutions.  The slope is
// +inf when the closed partial derivative vanishes identically.
OrderStudy natural_interior_study(const HSeries& mesh, const ModifiedEquation& eq, int k, int ell,
                                  const NumericEnv& env, const std::vector<double>& x0,
                                  const std::vector<double>& v0, const std::vector<double>& ladder, double t0,
                                  double t1, int samples_per_step = 20);

struct Comparison {
  std::vector<double> times;
  std::vector<double> deviation;  // Euclidean, per mesh point
  double sup = 0;
};

// Throws NumericsError when the mesh times differ.
Comparison meshpoint_comparison(const Trajectory& discrete, const Trajectory& continuous);

// Velocities of a discrete trajectory by central differences (one-sided at the ends).
std::vector<std::vector<double>> mesh_velocities(const Trajectory& tr);

using Observable = std::function<double(std::span<const double> x, std::span<const double> v)>;
std::vector<double> observe(const Trajectory& tr, const Observable& obs);

// Kepler observables in the plane.
double kepler_energy(std::span<const double> x, std::span<const double> v);
double angular_momentum(std::span<const double> x, std::span<const double> v);

// U(x) = sum_i (1 - cos x_i) with all its derivative tensors.
TensorEvaluator pendulum_potential();

struct Perihelion {
  double t;
  double angle;  // unwrapped
  double radius;
};

// Local minima of |x| refined by quadratic interpolation.  Throws
// NumericsError when none is found.
std::vector<Perihelion> perihelia(const Trajectory& tr);
// Least-squares rate of the perihelion angle, radians per unit time.
double precession_rate(const std::vector<Perihelion>& p);

// t, x components, [v components], then the named observable columns.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& names = {},
                          const std::vector<std::vector<double>>& columns = {});
void write_study_csv(std::ostream& os, const OrderStudy& s);
void write_comparison_csv(std::ostream& os, const Comparison& c);

}  // namespace modlag

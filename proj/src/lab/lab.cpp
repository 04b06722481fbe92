#include "modlag/lab.hpp"

#include "modlag/calculus.hpp"
#include "modlag/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace modlag {

namespace {

Atom delta_atom() { return vec_symbol_atom("delta"); }

double sup_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

NumericEnv with_step(const NumericEnv& env, double h) {
  NumericEnv e = env;
  e.set(step_atom(), h);
  return e;
}

// R(fixed..., u) = 0 solved for u by damped Newton; the Jacobian columns come
// from the directional derivative D_u R [delta].
class NewtonSystem {
 public:
  NewtonSystem(const VecPoly& r, std::vector<Atom> fixed, Atom unknown, const NumericEnv& env)
      : dim_(env.dimension()), nfixed_(static_cast<int>(fixed.size())) {
    Variation var;
    var.set(unknown, Expr(VecPoly::atom(delta_atom())));
    VecPoly jr = derivative(r, var);
    fixed.push_back(unknown);
    fixed.push_back(delta_atom());
    prog_ = std::make_shared<NumericProgram>(std::vector<Expr>{Expr(r), Expr(jr)}, fixed, env);
    in_.assign(static_cast<std::size_t>(dim_) * (nfixed_ + 2), 0.0);
  }

  void residual(const std::vector<std::span<const double>>& fixed, std::span<const double> u,
                std::vector<double>& out) const {
    load(fixed, u);
    std::fill(in_.end() - dim_, in_.end(), 0.0);
    prog_->run(in_, buf_);
    out = buf_[0];
  }

  // Returns the final sup norm of R.
  double solve(const std::vector<std::span<const double>>& fixed, std::vector<double>& u) const {
    const int n = dim_;
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd r(n);
    std::vector<double> trial(u.size()), rv;
    double rn = eval(fixed, u, rv);
    bool polished = false;
    for (int it = 0; it < 50; ++it) {
      // One extra iteration past the tolerance brings u to the rounding floor.
      if (rn < 1e-12) {
        if (polished || rn == 0) return rn;
        polished = true;
      }
      for (int c = 0; c < n; ++c) {
        load(fixed, u);
        std::fill(in_.end() - n, in_.end(), 0.0);
        in_[in_.size() - n + c] = 1.0;
        prog_->run(in_, buf_);
        for (int i = 0; i < n; ++i) J(i, c) = buf_[1][i];
      }
      for (int i = 0; i < n; ++i) r(i) = rv[i];
      Eigen::VectorXd d = J.fullPivLu().solve(-r);
      double lambda = 1.0;
      double best = rn;
      for (int ls = 0; ls < 30; ++ls) {
        for (int i = 0; i < n; ++i) trial[i] = u[i] + lambda * d(i);
        std::vector<double> tv;
        double tn = eval(fixed, trial, tv);
        if (std::isfinite(tn) && tn < best) {
          u = trial;
          rv = tv;
          best = tn;
          break;
        }
        lambda *= 0.5;
      }
      if (best >= rn) {
        // No decrease: rounding floor reached.
        return rn;
      }
      double step = lambda * d.cwiseAbs().maxCoeff();
      rn = best;
      double scale = 1.0;
      for (double x : u) scale = std::max(scale, std::abs(x));
      if (step <= 4e-16 * scale) return rn;
    }
    if (rn > 1e-9) throw NumericsError("Newton iteration did not converge in 50 iterations");
    return rn;
  }

 private:
  void load(const std::vector<std::span<const double>>& fixed, std::span<const double> u) const {
    std::size_t k = 0;
    for (const auto& f : fixed) {
      std::copy(f.begin(), f.end(), in_.begin() + k);
      k += f.size();
    }
    std::copy(u.begin(), u.end(), in_.begin() + k);
  }
  double eval(const std::vector<std::span<const double>>& fixed, std::span<const double> u,
              std::vector<double>& out) const {
    residual(fixed, u, out);
    return sup_norm(out);
  }

  int dim_;
  int nfixed_;
  std::shared_ptr<NumericProgram> prog_;
  mutable std::vector<double> in_;
  mutable std::vector<std::vector<double>> buf_;
};

std::vector<Atom> state_inputs(const JetSpace& space, int derivative) {
  std::vector<Atom> in;
  for (int k = 0; k < derivative; ++k)
    for (Atom a : space.symbols(k)) in.push_back(a);
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// Discrete runs

struct DiscreteStepper::Impl {
  NewtonSystem system;
};

DiscreteStepper::DiscreteStepper(const DifferenceEquation& de, const NumericEnv& env, double h)
    : dim_(env.dimension()) {
  if (dim_ <= 0) throw NumericsError("numerical runs need a concrete dimension");
  impl_ = std::make_shared<const Impl>(
      Impl{NewtonSystem(de.psi, {x_prev_atom(), x_cur_atom()}, x_next_atom(), with_step(env, h))});
}

void DiscreteStepper::residual(std::span<const double> prev, std::span<const double> cur,
                               std::span<const double> next, std::vector<double>& out) const {
  std::vector<double> zero;
  if (prev.empty()) zero.assign(static_cast<std::size_t>(dim_), 0.0), prev = zero;
  impl_->system.residual({prev, cur}, next, out);
}

double DiscreteStepper::solve_next(std::span<const double> prev, std::span<const double> cur,
                                   std::vector<double>& next) const {
  std::vector<double> zero;
  if (prev.empty()) zero.assign(static_cast<std::size_t>(dim_), 0.0), prev = zero;
  return impl_->system.solve({prev, cur}, next);
}

Trajectory run_discrete(const DifferenceEquation& de, const NumericEnv& env, std::vector<double> x0,
                        std::vector<double> x1, double h, int n_steps) {
  DiscreteStepper st(de, env, h);
  const std::size_t n = static_cast<std::size_t>(st.dimension());
  if (x0.size() != n || x1.size() != n) throw NumericsError("initial data has the wrong dimension");
  Trajectory tr;
  tr.source = "discrete";
  tr.h = h;
  tr.times = {0.0};
  tr.x = {x0};
  if (de.order == 1) {
    // Two-point map: x1 is ignored.
    for (int j = 0; j < n_steps; ++j) {
      std::vector<double> next = tr.x.back();
      tr.max_residual = std::max(tr.max_residual, st.solve_next({}, tr.x.back(), next));
      tr.x.push_back(std::move(next));
      tr.times.push_back((j + 1) * h);
    }
    return tr;
  }
  tr.times.push_back(h);
  tr.x.push_back(x1);
  for (int j = 1; j < n_steps; ++j) {
    const auto& a = tr.x[tr.x.size() - 2];
    const auto& b = tr.x.back();
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = 2 * b[i] - a[i];
    tr.max_residual = std::max(tr.max_residual, st.solve_next(a, b, next));
    tr.x.push_back(std::move(next));
    tr.times.push_back((j + 1) * h);
  }
  return tr;
}

Trajectory run_discrete_legendre(const DiscreteLagrangian& Ld, const NumericEnv& env, std::vector<double> x0,
                                 std::vector<double> p0, double h, int n_steps) {
  NumericEnv e = with_step(env, h);
  DiscreteLegendre leg = discrete_legendre(Ld);
  const VecPoly q = vec_symbol("q");
  NewtonSystem solve_x(leg.p_cur - q, {x_prev_atom(), q.terms()[0].first}, x_next_atom(), e);
  NumericProgram pnext({Expr(leg.p_next)}, {x_prev_atom(), x_next_atom()}, e);
  const std::size_t n = static_cast<std::size_t>(env.dimension());
  Trajectory tr;
  tr.source = "discrete-legendre";
  tr.h = h;
  tr.times = {0.0};
  tr.x = {x0};
  tr.v = {p0};
  std::vector<double> in(2 * n);
  std::vector<std::vector<double>> o;
  for (int j = 0; j < n_steps; ++j) {
    const auto& x = tr.x.back();
    const auto& p = tr.v.back();
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = x[i] + h * p[i];
    tr.max_residual = std::max(tr.max_residual, solve_x.solve({x, p}, next));
    std::copy(x.begin(), x.end(), in.begin());
    std::copy(next.begin(), next.end(), in.begin() + n);
    pnext.run(in, o);
    tr.x.push_back(next);
    tr.v.push_back(o[0]);
    tr.times.push_back((j + 1) * h);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Modified equations

ModifiedField::ModifiedField(const ModifiedEquation& eq, int k, const NumericEnv& env, double h)
    : dim_(env.dimension()), derivative_(eq.derivative), h_(h) {
  if (dim_ <= 0) throw NumericsError("numerical runs need a concrete dimension");
  if (k > eq.order) throw NumericsError("modified equation known only through h^" + std::to_string(eq.order));
  if (derivative_ != 1 && derivative_ != 2) throw NumericsError("only first and second order equations");
  std::vector<Expr> outs;
  for (int i = 0; i <= k; ++i) {
    if (eq.f[i].is_zero()) continue;
    powers_.push_back(i);
    outs.emplace_back(eq.f[i]);
  }
  NumericEnv e = with_step(env, h);
  prog_ = std::make_shared<NumericProgram>(outs, state_inputs(eq.space, derivative_), e);
}

void ModifiedField::operator()(double, std::span<const double> y, std::span<double> dy) const {
  thread_local std::vector<std::vector<double>> out;
  prog_->run(y, out);
  const int n = dim_;
  double* acc = derivative_ == 2 ? dy.data() + n : dy.data();
  std::fill(acc, acc + n, 0.0);
  for (std::size_t j = 0; j < powers_.size(); ++j) {
    const double c = std::pow(h_, powers_[j]);
    for (int i = 0; i < n; ++i) acc[i] += c * out[j][i];
  }
  if (derivative_ == 2) std::copy(y.begin() + n, y.begin() + 2 * n, dy.begin());
}

std::vector<double> ModeqSolution::x(double t) const {
  std::vector<double> y = dense(t);
  y.resize(static_cast<std::size_t>(dimension));
  return y;
}

std::vector<double> ModeqSolution::v(double t) const {
  std::vector<double> y = dense(t);
  if (derivative == 2) return {y.begin() + dimension, y.end()};
  return {};
}

Trajectory ModeqSolution::sample(const std::vector<double>& times, const std::string& source) const {
  Trajectory tr;
  tr.source = source;
  tr.times = times;
  for (double t : times) {
    tr.x.push_back(x(t));
    if (derivative == 2) tr.v.push_back(v(t));
  }
  return tr;
}

ModeqSolution integrate_modeq(const ModifiedEquation& eq, int k, const NumericEnv& env, std::vector<double> x0,
                              std::vector<double> v0, double h, double T, double tol) {
  if (tol < 1e-13) throw NumericsError("tolerance below 1e-13");
  ModifiedField field(eq, k, env, h);
  const std::size_t n = static_cast<std::size_t>(field.dimension());
  std::vector<double> y0 = std::move(x0);
  if (y0.size() != n) throw NumericsError("initial position has the wrong dimension");
  if (field.derivative() == 2) {
    if (v0.size() != n) throw NumericsError("initial velocity has the wrong dimension");
    y0.insert(y0.end(), v0.begin(), v0.end());
  }
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  ModeqSolution s;
  s.dense = dop853([&field](double t, std::span<const double> y, std::span<double> dy) { field(t, y, dy); }, 0.0,
                   std::move(y0), T, opt);
  s.dimension = static_cast<int>(n);
  s.derivative = field.derivative();
  return s;
}

// ---------------------------------------------------------------------------
// Order studies

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  if (n < 2 || y.size() != x.size()) throw NumericsError("slope fit needs at least two points");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw NumericsError("log-log fit of a non-positive value");
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1.0;
    b(i) = std::log(y[i]);
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

OrderStudy defect_order_study(const DiscreteLagrangian& Ld, const ModifiedEquation& eq, int k,
                              const NumericEnv& env, const std::vector<double>& x0, const std::vector<double>& v0,
                              const std::vector<double>& ladder, double t0, double t1, int samples_per_step) {
  return defect_order_study(discrete_EL(Ld), eq, k, env, x0, v0, ladder, t0, t1, samples_per_step);
}

OrderStudy defect_order_study(const DifferenceEquation& de, const ModifiedEquation& eq, int k,
                              const NumericEnv& env, const std::vector<double>& x0, const std::vector<double>& v0,
                              const std::vector<double>& ladder, double t0, double t1, int samples_per_step) {
  if (ladder.size() < 4) throw NumericsError("an order study needs at least 4 step sizes");
  if (samples_per_step < 20) throw NumericsError("at least 20 samples per mesh interval");
  OrderStudy st;
  st.expected = k + 1;
  if (static_cast<int>(eq.f.size()) > k + 1 && eq.f[k + 1].is_zero()) st.expected = k + 2;
  for (double h : ladder) {
    ModeqSolution sol = integrate_modeq(eq, k, env, x0, v0, h, t1 + h);
    DiscreteStepper stepper(de, env, h);
    const double a = std::max(t0, de.order == 2 ? h : 0.0);
    const int samples = std::max(1, static_cast<int>(std::ceil((t1 - a) / h * samples_per_step)));
    double sup = 0;
    std::vector<double> r;
    for (int i = 0; i <= samples; ++i) {
      const double t = a + (t1 - a) * i / samples;
      std::vector<double> xp = de.order == 2 ? sol.x(t - h) : std::vector<double>{};
      stepper.residual(xp, sol.x(t), sol.x(t + h), r);
      sup = std::max(sup, sup_norm(r));
    }
    st.h.push_back(h);
    st.defect.push_back(sup);
  }
  st.slope = loglog_slope(st.h, st.defect);
  return st;
}

OrderStudy natural_interior_study(const HSeries& mesh, const ModifiedEquation& eq, int k, int ell,
                                  const NumericEnv& env, const std::vector<double>& x0,
                                  const std::vector<double>& v0, const std::vector<double>& ladder, double t0,
                                  double t1, int samples_per_step) {
  if (ladder.size() < 4) throw NumericsError("an order study needs at least 4 step sizes");
  if (eq.derivative != 2) throw NumericsError("natural interior study needs a second order equation");
  if (ell < 2) throw NumericsError("natural interior conditions concern jets of order 2 and higher");
  const JetSpace& space = eq.space;
  VecPoly partial;
  Poly hp(Rational(1));
  for (int i = 0; i < mesh.size() && i <= mesh.order(); ++i) {
    partial += hp * space.partial(mesh.coeff(i).scalar(), ell);
    hp = hp * step();
  }
  const int top = std::max(ell, mesh.max_jet());
  DerivativeClosure cl = make_closure(eq, k, std::max(2, top));
  Substitution sub;
  for (int j = 2; j <= top; ++j) {
    const HSeries& F = cl.F[j - 2];
    VecPoly value;
    Poly c(Rational(1));
    for (int i = 0; i < F.size() && i <= F.order(); ++i) {
      value += c * F.coeff(i).vector();
      c = c * step();
    }
    space.assign(sub, j, value);
  }
  const Expr closed(substitute(partial, sub));
  OrderStudy st;
  st.expected = k + ell + 1;
  if (closed.is_zero()) {
    // Vanishes identically at this truncation.
    st.h = ladder;
    st.defect.assign(ladder.size(), 0.0);
    st.slope = std::numeric_limits<double>::infinity();
    return st;
  }
  for (double h : ladder) {
    ModeqSolution sol = integrate_modeq(eq, k, env, x0, v0, h, t1);
    NumericProgram prog({closed}, state_inputs(space, 2), with_step(env, h));
    const int samples = std::max(1, static_cast<int>(std::ceil((t1 - t0) / h * samples_per_step)));
    std::vector<std::vector<double>> out;
    double sup = 0;
    for (int i = 0; i <= samples; ++i) {
      std::vector<double> y = sol.dense(t0 + (t1 - t0) * i / samples);
      prog.run(y, out);
      sup = std::max(sup, sup_norm(out[0]));
    }
    st.h.push_back(h);
    st.defect.push_back(sup);
  }
  st.slope = loglog_slope(st.h, st.defect);
  return st;
}

// ---------------------------------------------------------------------------
// Comparisons and diagnostics

Comparison meshpoint_comparison(const Trajectory& discrete, const Trajectory& continuous) {
  if (discrete.times.size() != continuous.times.size()) throw NumericsError("mesh mismatch: different lengths");
  Comparison c;
  for (std::size_t j = 0; j < discrete.times.size(); ++j) {
    if (std::abs(discrete.times[j] - continuous.times[j]) > 1e-9 * (1 + std::abs(discrete.times[j])))
      throw NumericsError("mesh mismatch at index " + std::to_string(j));
    double d = 0;
    for (std::size_t i = 0; i < discrete.x[j].size(); ++i) {
      double e = discrete.x[j][i] - continuous.x[j][i];
      d += e * e;
    }
    d = std::sqrt(d);
    c.times.push_back(discrete.times[j]);
    c.deviation.push_back(d);
    c.sup = std::max(c.sup, d);
  }
  return c;
}

std::vector<std::vector<double>> mesh_velocities(const Trajectory& tr) {
  const std::size_t m = tr.x.size();
  std::vector<std::vector<double>> v(m);
  if (m < 2) return v;
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t a = j == 0 ? 0 : j - 1, b = j + 1 == m ? j : j + 1;
    const double dt = tr.times[b] - tr.times[a];
    v[j].resize(tr.x[j].size());
    for (std::size_t i = 0; i < tr.x[j].size(); ++i) v[j][i] = (tr.x[b][i] - tr.x[a][i]) / dt;
  }
  return v;
}

std::vector<double> observe(const Trajectory& tr, const Observable& obs) {
  const auto vel = tr.v.empty() ? mesh_velocities(tr) : tr.v;
  std::vector<double> out;
  out.reserve(tr.x.size());
  for (std::size_t j = 0; j < tr.x.size(); ++j) out.push_back(obs(tr.x[j], vel[j]));
  return out;
}

double kepler_energy(std::span<const double> x, std::span<const double> v) {
  double r2 = 0, v2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    r2 += x[i] * x[i];
    v2 += v[i] * v[i];
  }
  return 0.5 * v2 - 1.0 / std::sqrt(r2);
}

double angular_momentum(std::span<const double> x, std::span<const double> v) {
  if (x.size() != 2) throw NumericsError("angular momentum is defined for planar motion");
  return x[0] * v[1] - x[1] * v[0];
}

TensorEvaluator pendulum_potential() {
  return [](int k, std::span<const double> base, std::span<const std::vector<double>> args) {
    double sum = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      double c;
      switch (k % 4) {
        case 0: c = k == 0 ? 1 - std::cos(base[i]) : -std::cos(base[i]); break;
        case 1: c = std::sin(base[i]); break;
        case 2: c = std::cos(base[i]); break;
        default: c = -std::sin(base[i]); break;
      }
      for (const auto& a : args) c *= a[i];
      sum += c;
    }
    return sum;
  };
}

std::vector<Perihelion> perihelia(const Trajectory& tr) {
  std::vector<double> r;
  for (const auto& x : tr.x) {
    if (x.size() != 2) throw NumericsError("perihelia are defined for planar motion");
    r.push_back(std::hypot(x[0], x[1]));
  }
  std::vector<Perihelion> out;
  double prev_angle = 0;
  for (std::size_t j = 1; j + 1 < r.size(); ++j) {
    if (!(r[j] < r[j - 1] && r[j] <= r[j + 1])) continue;
    const double den = r[j - 1] - 2 * r[j] + r[j + 1];
    const double s = den > 0 ? std::clamp(0.5 * (r[j - 1] - r[j + 1]) / den, -1.0, 1.0) : 0.0;
    // Quadratic interpolation through the three samples at offset s.
    const double lm = 0.5 * s * (s - 1), l0 = 1 - s * s, lp = 0.5 * s * (s + 1);
    double px = lm * tr.x[j - 1][0] + l0 * tr.x[j][0] + lp * tr.x[j + 1][0];
    double py = lm * tr.x[j - 1][1] + l0 * tr.x[j][1] + lp * tr.x[j + 1][1];
    const double dt = 0.5 * (tr.times[j + 1] - tr.times[j - 1]);
    double angle = std::atan2(py, px);
    if (!out.empty()) {
      while (angle - prev_angle > std::numbers::pi) angle -= 2 * std::numbers::pi;
      while (angle - prev_angle < -std::numbers::pi) angle += 2 * std::numbers::pi;
    }
    prev_angle = angle;
    out.push_back({tr.times[j] + s * dt, angle, std::hypot(px, py)});
  }
  if (out.empty()) throw NumericsError("no perihelion found in the window");
  return out;
}

double precession_rate(const std::vector<Perihelion>& p) {
  if (p.size() < 2) throw NumericsError("a precession rate needs two perihelia");
  const Eigen::Index n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = p[i].t;
    A(i, 1) = 1.0;
    b(i) = p[i].angle;
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& names,
                          const std::vector<std::vector<double>>& columns) {
  const std::size_t n = tr.x.empty() ? 0 : tr.x[0].size();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i;
  if (!tr.v.empty())
    for (std::size_t i = 0; i < n; ++i) os << ",v" << i;
  for (const auto& name : names) os << "," << name;
  os << "\n";
  os.precision(17);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    os << tr.times[j];
    for (double x : tr.x[j]) os << "," << x;
    if (!tr.v.empty())
      for (double v : tr.v[j]) os << "," << v;
    for (const auto& c : columns) os << "," << c[j];
    os << "\n";
  }
}

void write_study_csv(std::ostream& os, const OrderStudy& s) {
  os.precision(17);
  os << "# slope=" << s.slope << " expected=" << s.expected << "\n";
  os << "h,defect\n";
  for (std::size_t i = 0; i < s.h.size(); ++i) os << s.h[i] << "," << s.defect[i] << "\n";
}

void write_comparison_csv(std::ostream& os, const Comparison& c) {
  os.precision(17);
  os << "# sup=" << c.sup << "\n";
  os << "t,deviation\n";
  for (std::size_t i = 0; i < c.times.size(); ++i) os << c.times[i] << "," << c.deviation[i] << "\n";
}

}  // namespace modlag

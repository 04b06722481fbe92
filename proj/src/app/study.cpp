#include "modlag/app.hpp"

#include "modlag/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace modlag {

namespace {

std::ofstream open_csv(const std::filesystem::path& p, StudyFiles& files) {
  std::ofstream os(p);
  if (!os) throw NumericsError("cannot write " + p.string());
  files.written.push_back(p.string());
  return os;
}

}  // namespace

StudyFiles study(const ProblemSpec& spec, const std::string& out_dir) {
  validate(spec);
  const NumericsSpec& n = spec.numerics;
  if (n.x0.empty() || n.v0.empty()) throw SpecError("a study needs x0 and v0", 0);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  StudyFiles files;

  const TextContext ctx = spec.context();
  const JetSpace sp = JetSpace::abstract();
  Poly L = parse_expression(spec.lagrangian, ctx).scalar();
  DiscreteLagrangian Ld = spec.method == Method::Custom
                              ? custom_discrete_lagrangian(parse_expression(spec.discrete, ctx).scalar(), L, sp)
                              : build_discrete_lagrangian(spec.method, L, sp);
  DifferenceEquation de = discrete_EL(Ld);
  const int kmax = *std::max_element(n.orders.begin(), n.orders.end());
  // One order beyond the largest truncation decides the expected defect slope.
  ModifiedEquation eq = modified_equation_second_order(de, std::min(kMaxOrder, kmax + 1));
  NumericEnv env = spec.environment();
  const bool kepler = spec.preset == "kepler";

  // x_1 from the exact flow at t = h.
  const double h = n.h;
  ModeqSolution exact = integrate_modeq(eq, 0, env, n.x0, n.v0, h, h, n.tol);
  const int steps = static_cast<int>(std::llround(n.T / h));
  Trajectory disc = run_discrete(de, env, n.x0, exact.x(h), h, steps);
  {
    auto os = open_csv(dir / "discrete.csv", files);
    if (kepler) {
      write_trajectory_csv(os, disc, {"energy", "angular_momentum"},
                           {observe(disc, kepler_energy), observe(disc, angular_momentum)});
    } else {
      write_trajectory_csv(os, disc);
    }
  }

  std::vector<double> fine;
  if (kepler)
    for (int i = 0; i * 0.01 <= n.T + 1e-12; ++i) fine.push_back(0.01 * i);
  std::vector<std::pair<std::string, std::vector<Perihelion>>> peri;
  if (kepler) peri.emplace_back("discrete", perihelia(disc));

  for (int k : n.orders) {
    const std::string tag = "k" + std::to_string(k);
    ModeqSolution sol = integrate_modeq(eq, k, env, n.x0, n.v0, h, n.T, n.tol);
    Trajectory at_mesh = sol.sample(disc.times, "modified " + tag);
    {
      auto os = open_csv(dir / ("modified_" + tag + ".csv"), files);
      if (kepler)
        write_trajectory_csv(os, at_mesh, {"energy"}, {observe(at_mesh, kepler_energy)});
      else
        write_trajectory_csv(os, at_mesh);
    }
    {
      auto os = open_csv(dir / ("comparison_" + tag + ".csv"), files);
      write_comparison_csv(os, meshpoint_comparison(disc, at_mesh));
    }
    if (n.ladder.size() >= 4) {
      OrderStudy st = defect_order_study(de, eq, k, env, n.x0, n.v0, n.ladder, n.window_begin, n.window_end);
      auto os = open_csv(dir / ("order_" + tag + ".csv"), files);
      write_study_csv(os, st);
    }
    if (kepler) peri.emplace_back("modified " + tag, perihelia(sol.sample(fine, tag)));
  }

  if (kepler) {
    auto os = open_csv(dir / "perihelia.csv", files);
    os.precision(17);
    os << "source,t,angle,radius\n";
    for (const auto& [src, ps] : peri)
      for (const auto& p : ps) os << src << "," << p.t << "," << p.angle << "," << p.radius << "\n";
    auto rs = open_csv(dir / "precession.csv", files);
    rs.precision(17);
    rs << "source,rate\n";
    for (const auto& [src, ps] : peri) rs << src << "," << precession_rate(ps) << "\n";
  }
  return files;
}

}  // namespace modlag

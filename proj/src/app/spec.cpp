#include "modlag/app.hpp"

#include "modlag/error.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

namespace modlag {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw SpecError("expected a number, got '" + s + "'", line);
  return v;
}

int to_int(const std::string& s, int line) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw SpecError("expected an integer, got '" + s + "'", line);
  return v;
}

std::vector<double> to_doubles(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& t : split_list(s, ", \t")) out.push_back(to_double(t, line));
  return out;
}

bool to_bool(const std::string& s, int line) {
  if (s == "yes" || s == "true") return true;
  if (s == "no" || s == "false") return false;
  throw SpecError("expected yes or no, got '" + s + "'", line);
}

Symmetry to_symmetry(const std::string& s, int line) {
  if (s == "symmetric") return Symmetry::Symmetric;
  if (s == "antisymmetric") return Symmetry::Antisymmetric;
  if (s == "general") return Symmetry::General;
  throw SpecError("matrix symmetry must be symmetric, antisymmetric or general", line);
}

std::vector<std::vector<double>> to_matrix(const std::string& s, int line) {
  std::vector<std::vector<double>> rows;
  for (const auto& r : split_list(s, ";")) rows.push_back(to_doubles(r, line));
  if (rows.empty()) throw SpecError("empty matrix", line);
  for (const auto& r : rows)
    if (r.size() != rows.size()) throw SpecError("matrix values must be square", line);
  return rows;
}

struct Line {
  int number;
  std::string section;
  std::string key;
  std::string value;
};

void apply(ProblemSpec& spec, const Line& l) {
  const int n = l.number;
  const std::string& v = l.value;
  if (l.section == "problem") {
    if (l.key == "preset") return;
    if (l.key == "lagrangian") spec.lagrangian = v;
    else if (l.key == "discrete") spec.discrete = v;
    else if (l.key == "method") {
      try {
        spec.method = parse_method(v);
      } catch (const DerivationError& e) {
        throw SpecError(e.what(), n);
      }
    } else if (l.key == "order") spec.order = to_int(v, n);
    else if (l.key == "regular") spec.regular = to_bool(v, n);
    else if (l.key == "hamiltonian") spec.hamiltonian = to_bool(v, n);
    else if (l.key.rfind("matrix ", 0) == 0) spec.matrices[trim(l.key.substr(7))] = to_symmetry(v, n);
    else throw SpecError("unknown key '" + l.key + "' in [problem]", n);
  } else if (l.section == "numerics") {
    NumericsSpec& num = spec.numerics;
    if (l.key == "dim") num.dimension = to_int(v, n);
    else if (l.key == "h") num.h = to_double(v, n);
    else if (l.key == "T") num.T = to_double(v, n);
    else if (l.key == "tol") num.tol = to_double(v, n);
    else if (l.key == "x0") num.x0 = to_doubles(v, n);
    else if (l.key == "v0") num.v0 = to_doubles(v, n);
    else if (l.key == "k") {
      num.orders.clear();
      for (const auto& t : split_list(v, ", \t")) num.orders.push_back(to_int(t, n));
    } else if (l.key == "ladder") num.ladder = to_doubles(v, n);
    else if (l.key == "window") {
      auto w = to_doubles(v, n);
      if (w.size() != 2 || !(w[0] < w[1])) throw SpecError("window takes two increasing times", n);
      num.window_begin = w[0];
      num.window_end = w[1];
    } else if (l.key == "potential") num.potential = v;
    else if (l.key.rfind("matrix ", 0) == 0) num.matrices[trim(l.key.substr(7))] = to_matrix(v, n);
    else throw SpecError("unknown key '" + l.key + "' in [numerics]", n);
  } else if (l.section == "golden") {
    if (l.key == "file") spec.golden = v;
    else throw SpecError("unknown key '" + l.key + "' in [golden]", n);
  }
}

}  // namespace

TextContext ProblemSpec::context() const {
  TextContext ctx;
  ctx.matrices = matrices;
  return ctx;
}

NumericEnv ProblemSpec::environment() const {
  NumericEnv env(numerics.dimension);
  if (numerics.potential == "pendulum") env.set_potential("U", pendulum_potential());
  for (const auto& [name, rows] : numerics.matrices) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    env.set_matrix(name, m);
  }
  return env;
}

std::vector<std::string> preset_names() { return {"harmonic", "kepler", "mechanical-with-U", "anisotropic"}; }

ProblemSpec preset(const std::string& name) {
  ProblemSpec s;
  s.preset = name;
  s.regular = true;
  NumericsSpec& n = s.numerics;
  if (name == "harmonic") {
    s.lagrangian = "1/2*norm2(xd) - 1/2*norm2(x)";
    s.order = 4;
    n.dimension = 1;
    n.h = 1;
    n.T = 100;
    n.x0 = {1};
    n.v0 = {0};
    n.orders = {0, 2, 4};
    n.ladder = {0.4, 0.2, 0.1, 0.05};
    n.window_begin = 0;
    n.window_end = 10;
  } else if (name == "kepler") {
    s.lagrangian = "1/2*norm2(xd) + norm(x)^-1";
    s.order = 3;
    n.dimension = 2;
    n.h = 0.5;
    n.T = 400;
    n.x0 = {-3, 0};
    n.v0 = {0, 0.4};
    n.orders = {2};
    n.ladder = {0.2, 0.1, 0.05, 0.025};
    n.window_begin = 0;
    n.window_end = 20;
  } else if (name == "mechanical-with-U") {
    s.lagrangian = "1/2*norm2(xd) - U";
    s.order = 4;
    s.hamiltonian = true;
    n.dimension = 2;
    n.potential = "pendulum";
    n.h = 0.1;
    n.T = 20;
    n.x0 = {1, -0.5};
    n.v0 = {0.1, 0.3};
    n.orders = {0, 2};
    n.ladder = {0.2, 0.1, 0.05, 0.025};
    n.window_begin = 0;
    n.window_end = 5;
  } else if (name == "anisotropic") {
    s.lagrangian = "1/2*dot(xd, M(xd)) + 1/2*dot(x, Jp(xd)) + 1/2*dot(x, Jm(xd)) + 1/2*dot(x, A(x))";
    s.method = Method::SymplEulerB;
    s.order = 1;
    s.matrices = {{"M", Symmetry::Symmetric},
                  {"Jp", Symmetry::Symmetric},
                  {"Jm", Symmetry::Antisymmetric},
                  {"A", Symmetry::Symmetric}};
    n.dimension = 2;
    n.h = 0.1;
    n.T = 20;
    n.x0 = {0.5, 0.2};
    n.v0 = {-0.3, 0.1};
    n.orders = {0, 1};
    n.ladder = {0.2, 0.1, 0.05, 0.025};
    n.window_begin = 0;
    n.window_end = 5;
    n.matrices = {{"M", {{2, 0.3}, {0.3, 1}}},
                  {"Jp", {{0.4, 0.1}, {0.1, -0.2}}},
                  {"Jm", {{0, 0.5}, {-0.5, 0}}},
                  {"A", {{-1, 0.2}, {0.2, -1.5}}}};
  } else {
    throw SpecError("unknown preset '" + name + "'", 0);
  }
  return s;
}

ProblemSpec parse_problem(std::istream& in) {
  std::vector<Line> lines;
  std::string section, raw;
  int number = 0;
  std::string preset_name;
  int preset_line = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw SpecError("unterminated section header", number);
      section = trim(text.substr(1, text.size() - 2));
      if (section != "problem" && section != "numerics" && section != "golden")
        throw SpecError("unknown section [" + section + "]", number);
      continue;
    }
    if (section.empty()) throw SpecError("key outside of a section", number);
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw SpecError("expected 'key = value'", number);
    Line l{number, section, trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (l.key.empty()) throw SpecError("missing key", number);
    if (l.value.empty()) throw SpecError("missing value for '" + l.key + "'", number);
    if (section == "problem" && l.key == "preset") {
      preset_name = l.value;
      preset_line = number;
    }
    lines.push_back(std::move(l));
  }
  ProblemSpec spec;
  if (!preset_name.empty()) {
    try {
      spec = preset(preset_name);
    } catch (const SpecError& e) {
      throw SpecError("unknown preset '" + preset_name + "'", preset_line);
    }
  }
  for (const auto& l : lines) apply(spec, l);
  // Expressions are checked here so that errors point at their line.
  for (const auto& l : lines) {
    if (l.section != "problem" || (l.key != "lagrangian" && l.key != "discrete")) continue;
    try {
      parse_expression(l.value, spec.context());
    } catch (const Error& e) {
      throw SpecError(e.what(), l.number);
    }
  }
  return spec;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open " + path, 0);
  ProblemSpec spec = parse_problem(in);
  if (!spec.golden.empty() && std::filesystem::path(spec.golden).is_relative())
    spec.golden = (std::filesystem::path(path).parent_path() / spec.golden).string();
  return spec;
}

void validate(const ProblemSpec& spec) {
  if (spec.lagrangian.empty()) throw SpecError("no Lagrangian given", 0);
  if (!spec.regular) throw SpecError("the problem must declare 'regular = yes'", 0);
  if (spec.order < 0 || spec.order > kMaxOrder)
    throw SpecError("order must lie between 0 and " + std::to_string(kMaxOrder), 0);
  if (spec.method == Method::Custom && spec.discrete.empty())
    throw SpecError("method custom needs a discrete Lagrangian", 0);
  if (spec.method != Method::Custom && !spec.discrete.empty())
    throw SpecError("a discrete Lagrangian needs method custom", 0);
  const NumericsSpec& n = spec.numerics;
  if (n.dimension < 1) throw SpecError("dim must be positive", 0);
  if (!(n.h > 0) || !(n.T > 0)) throw SpecError("h and T must be positive", 0);
  if (!n.x0.empty() && static_cast<int>(n.x0.size()) != n.dimension) throw SpecError("x0 has the wrong size", 0);
  if (!n.v0.empty() && static_cast<int>(n.v0.size()) != n.dimension) throw SpecError("v0 has the wrong size", 0);
  for (int k : n.orders)
    if (k < 0 || k >= kMaxOrder) throw SpecError("numerics k values must lie in [0, " + std::to_string(kMaxOrder - 1) + "]", 0);
  for (const auto& [name, rows] : n.matrices)
    if (static_cast<int>(rows.size()) != n.dimension) throw SpecError("matrix " + name + " has the wrong size", 0);
  if (!n.potential.empty() && n.potential != "pendulum")
    throw SpecError("unknown potential '" + n.potential + "'", 0);
}

}  // namespace modlag

#pragma once

// Problem specifications, derivation reports and the derive/check/study
// commands behind the command-line tool.

#include "modlag/error.hpp"
#include "modlag/lab.hpp"
#include "modlag/modified_lagrangian.hpp"
#include "modlag/text.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace modlag {

inline constexpr int kMaxOrder = 8;

// Problem file errors carry the offending line (0 when not tied to one).
class SpecError : public Error {
 public:
  SpecError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct NumericsSpec {
  int dimension = 1;
  double h = 0.1;
  double T = 10;
  double tol = 1e-13;
  std::vector<double> x0, v0;
  std::vector<int> orders{2};  // truncations run against the discrete solution
  std::vector<double> ladder;
  double window_begin = 0, window_end = 10;
  std::string potential;  // "pendulum" or empty
  std::map<std::string, std::vector<std::vector<double>>> matrices;
};

struct ProblemSpec {
  std::string preset;  // empty for custom problems
  std::string lagrangian;
  std::string discrete;  // custom discrete Lagrangian in x_prev, x_next, h
  Method method = Method::StormerVerlet;
  int order = 2;
  bool regular = false;
  bool hamiltonian = false;
  std::map<std::string, Symmetry> matrices;
  NumericsSpec numerics;
  std::string golden;  // report file to compare against

  TextContext context() const;
  NumericEnv environment() const;
};

std::vector<std::string> preset_names();
// Throws SpecError for unknown names.
ProblemSpec preset(const std::string& name);

// Sections [problem], [numerics], [golden]; `key = value` lines; '#' comments.
ProblemSpec parse_problem(std::istream& in);
ProblemSpec load_problem(const std::string& path);
void validate(const ProblemSpec& spec);

struct Derivation {
  ProblemSpec spec;
  DiscreteLagrangian Ld;
  HSeries ldisc;
  HSeries mesh;
  ModifiedEquation equation;
  HSeries lmod;
  std::optional<ModifiedHamiltonian> hamiltonian;
  TruncationLog log;
};

Derivation derive(const ProblemSpec& spec);

// Plain text with a stable field order; reports double as golden files.
void write_report(std::ostream& os, const Derivation& d);

// Entries `section.key` -> expression text, in file order.
struct Report {
  std::vector<std::pair<std::string, std::string>> entries;
  const std::string* find(const std::string& key) const;
};
Report parse_report(std::istream& in);

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

// Structural comparison of every expression entry of `golden` with `actual`;
// mismatches report both sides and their difference.
std::vector<CheckResult> compare_reports(const Report& golden, const Report& actual, const TextContext& ctx);

// Theorem check, cross-validation and built-in reference formulas.
std::vector<CheckResult> check(const Derivation& d);

struct StudyFiles {
  std::vector<std::string> written;
};
// Trajectory, comparison, order-study and (planar) perihelion CSVs.
StudyFiles study(const ProblemSpec& spec, const std::string& out_dir);

}  // namespace modlag

#include "modlag/cli.hpp"

#include "modlag/app.hpp"
#include "modlag/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace modlag {

namespace {

struct Options {
  std::string spec_file;
  std::string preset_name;
  std::string method;
  std::string out_dir;
  std::string golden;
  int order = -1;
  bool all = false;
};

ProblemSpec resolve(const Options& o) {
  if (o.spec_file.empty() == o.preset_name.empty()) throw SpecError("give exactly one of --spec and --preset", 0);
  ProblemSpec spec = o.spec_file.empty() ? preset(o.preset_name) : load_problem(o.spec_file);
  if (!o.method.empty()) {
    try {
      spec.method = parse_method(o.method);
    } catch (const DerivationError& e) {
      throw SpecError(e.what(), 0);
    }
  }
  if (o.order >= 0) {
    spec.order = o.order;
    auto& ks = spec.numerics.orders;
    ks.erase(std::remove_if(ks.begin(), ks.end(), [&](int k) { return k > o.order; }), ks.end());
    if (ks.empty()) ks.push_back(o.order);
  }
  if (!o.golden.empty()) spec.golden = o.golden;
  validate(spec);
  return spec;
}

int report_checks(const std::vector<CheckResult>& results, std::ostream& out) {
  int failed = 0;
  for (const auto& r : results) {
    out << (r.ok ? "PASS " : "FAIL ") << r.name << "\n";
    if (!r.ok) {
      ++failed;
      if (!r.detail.empty()) out << "  " << r.detail << "\n";
    }
  }
  out << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

std::vector<CheckResult> check_spec(const ProblemSpec& spec) {
  Derivation d = derive(spec);
  std::vector<CheckResult> results = check(d);
  if (!spec.golden.empty()) {
    std::ifstream in(spec.golden);
    if (!in) throw SpecError("cannot open golden file " + spec.golden, 0);
    Report golden = parse_report(in);
    std::stringstream ss;
    write_report(ss, d);
    Report actual = parse_report(ss);
    for (auto& r : compare_reports(golden, actual, spec.context())) results.push_back(std::move(r));
  }
  return results;
}

int cmd_derive(const Options& o, std::ostream& out) {
  Derivation d = derive(resolve(o));
  if (o.out_dir.empty()) {
    write_report(out, d);
    return 0;
  }
  std::filesystem::create_directories(o.out_dir);
  const auto path = std::filesystem::path(o.out_dir) / "report.txt";
  std::ofstream os(path);
  if (!os) throw NumericsError("cannot write " + path.string());
  write_report(os, d);
  out << path.string() << "\n";
  return 0;
}

int cmd_check(const Options& o, std::ostream& out) {
  if (!o.all) return report_checks(check_spec(resolve(o)), out);
  if (!o.spec_file.empty() || !o.preset_name.empty()) throw SpecError("--all takes no --spec or --preset", 0);
  const int top = o.order >= 0 ? o.order : 4;
  std::vector<CheckResult> results;
  for (const auto& name : preset_names()) {
    for (Method m : {Method::Midpoint, Method::StormerVerlet, Method::SymplEulerA, Method::SymplEulerB}) {
      for (int k = 1; k <= top; ++k) {
        ProblemSpec spec = preset(name);
        spec.method = m;
        spec.order = k;
        spec.numerics.orders = {0};
        for (auto& r : check_spec(spec)) results.push_back(std::move(r));
      }
    }
  }
  return report_checks(results, out);
}

int cmd_study(const Options& o, std::ostream& out) {
  StudyFiles files = study(resolve(o), o.out_dir.empty() ? "study" : o.out_dir);
  for (const auto& f : files.written) out << f << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Modified equations and modified Lagrangians of variational integrators"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--spec", o.spec_file, "Problem file");
    c->add_option("--preset", o.preset_name, "harmonic | kepler | mechanical-with-U | anisotropic");
    c->add_option("--method", o.method, "midpoint | stormer_verlet | sympl_euler_A | sympl_euler_B");
    c->add_option("--order", o.order, "Truncation order k")->check(CLI::Range(0, kMaxOrder));
  };
  CLI::App* derive_cmd = app.add_subcommand("derive", "Write the derivation report");
  add_common(derive_cmd);
  derive_cmd->add_option("--out", o.out_dir, "Directory for report.txt (default: standard output)");
  CLI::App* check_cmd = app.add_subcommand("check", "Verify a derivation; exit 1 on failure");
  add_common(check_cmd);
  check_cmd->add_option("--golden", o.golden, "Report file to compare against");
  check_cmd->add_flag("--all", o.all, "Every preset with every catalog method, k = 1..order");
  CLI::App* study_cmd = app.add_subcommand("study", "Write trajectory and order-study CSV files");
  add_common(study_cmd);
  study_cmd->add_option("--out", o.out_dir, "Output directory (default: study)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (derive_cmd->parsed()) return cmd_derive(o, out);
    if (check_cmd->parsed()) return cmd_check(o, out);
    return cmd_study(o, out);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace modlag

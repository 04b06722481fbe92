#include "modlag/app.hpp"

#include "modlag/error.hpp"
#include "modlag/mesh.hpp"

#include <istream>
#include <ostream>
#include <set>

namespace modlag {

namespace {

const std::set<std::string> kExpressionSections = {"discrete_lagrangian", "meshed_lagrangian",
                                                    "modified_equation", "modified_lagrangian",
                                                    "modified_hamiltonian"};

bool is_expression_key(const std::string& key) {
  const auto dot = key.find('.');
  const std::string section = key.substr(0, dot);
  if (kExpressionSections.count(section)) return true;
  return key == "problem.lagrangian" || key == "problem.discrete";
}

void write_series(std::ostream& os, const std::string& section, const std::string& prefix, const HSeries& s,
                  int order, const TextContext& ctx) {
  os << "[" << section << "]\n";
  for (int i = 0; i <= order; ++i) os << prefix << "h^" << i << " = " << format(s.coeff(i), ctx) << "\n";
}

}  // namespace

Derivation derive(const ProblemSpec& spec) {
  validate(spec);
  Derivation d;
  d.spec = spec;
  const TextContext ctx = spec.context();
  const JetSpace sp = JetSpace::abstract();
  const int k = spec.order;
  Poly L = parse_expression(spec.lagrangian, ctx).scalar();
  d.Ld = spec.method == Method::Custom
             ? custom_discrete_lagrangian(parse_expression(spec.discrete, ctx).scalar(), L, sp)
             : build_discrete_lagrangian(spec.method, L, sp);
  d.ldisc = expand_discrete_lagrangian(d.Ld, k);
  d.log.note("discrete Lagrangian expansion", k);
  d.mesh = meshed_modified_lagrangian(d.ldisc, k, sp, &d.log);
  d.equation = modified_equation_second_order(discrete_EL(d.Ld), k, &d.log);
  d.lmod = classical_modified_lagrangian(d.mesh, d.equation, k, &d.log);
  if (spec.hamiltonian) d.hamiltonian = legendre_transform(d.lmod, k, sp, &d.log);
  return d;
}

void write_report(std::ostream& os, const Derivation& d) {
  const TextContext ctx = d.spec.context();
  const int k = d.spec.order;
  os << "# derivation report\n";
  os << "[problem]\n";
  if (!d.spec.preset.empty()) os << "preset = " << d.spec.preset << "\n";
  os << "method = " << method_name(d.spec.method) << "\n";
  os << "order = " << k << "\n";
  for (const auto& [name, sym] : d.spec.matrices)
    os << "matrix " << name << " = "
       << (sym == Symmetry::Symmetric ? "symmetric" : sym == Symmetry::Antisymmetric ? "antisymmetric" : "general")
       << "\n";
  os << "lagrangian = " << format(d.Ld.source, ctx) << "\n";
  os << "discrete = " << format(d.Ld.ld, ctx) << "\n";
  write_series(os, "discrete_lagrangian", "", d.ldisc, k, ctx);
  write_series(os, "meshed_lagrangian", "", d.mesh, k, ctx);
  os << "[modified_equation]\n";
  for (int i = 0; i <= k; ++i) os << "xdd.h^" << i << " = " << format(d.equation.f[i], ctx) << "\n";
  write_series(os, "modified_lagrangian", "", d.lmod, k, ctx);
  if (d.hamiltonian) {
    write_series(os, "modified_hamiltonian", "", d.hamiltonian->H, k, ctx);
    for (int i = 0; i <= k; ++i)
      os << "xd.h^" << i << " = " << format(d.hamiltonian->velocity.coeff(i), ctx) << "\n";
  }
  os << "[truncations]\n";
  for (std::size_t i = 0; i < d.log.entries.size(); ++i) os << i + 1 << " = " << d.log.entries[i] << "\n";
}

const std::string* Report::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

Report parse_report(std::istream& in) {
  Report r;
  std::string section, raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (raw.empty() || raw[0] == '#') continue;
    if (raw[0] == '[') {
      if (raw.back() != ']') throw SpecError("unterminated section header", number);
      section = raw.substr(1, raw.size() - 2);
      continue;
    }
    const auto eq = raw.find(" = ");
    if (eq == std::string::npos || section.empty()) throw SpecError("malformed report line", number);
    r.entries.emplace_back(section + "." + raw.substr(0, eq), raw.substr(eq + 3));
  }
  return r;
}

std::vector<CheckResult> compare_reports(const Report& golden, const Report& actual, const TextContext& ctx) {
  std::vector<CheckResult> out;
  for (const auto& [key, want] : golden.entries) {
    if (key.rfind("truncations.", 0) == 0) continue;
    CheckResult c{"golden " + key, false, ""};
    const std::string* got = actual.find(key);
    if (!got) {
      c.detail = "missing from the derivation";
    } else if (!is_expression_key(key)) {
      c.ok = *got == want;
      if (!c.ok) c.detail = "expected " + want + ", got " + *got;
    } else {
      Expr w, g;
      try {
        w = parse_expression(want, ctx);
      } catch (const Error& e) {
        c.detail = std::string("golden entry does not parse: ") + e.what();
        out.push_back(c);
        continue;
      }
      g = parse_expression(*got, ctx);
      c.ok = (w.is_zero() && g.is_zero()) || w == g;
      if (!c.ok) {
        c.detail = "expected " + want + "\n  got      " + *got;
        if (w.kind() == g.kind()) c.detail += "\n  got - expected = " + format(g - w, ctx);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

struct Reference {
  std::string preset;
  Method method;
  std::string section;  // "f", "lmod", "ham"
  int power;
  const char* text;
};

// Published formulas for the presets.
const std::vector<Reference>& references() {
  static const std::vector<Reference> refs = {
      {"harmonic", Method::StormerVerlet, "f", 0, "-x"},
      {"harmonic", Method::StormerVerlet, "f", 2, "-1/12*x"},
      {"harmonic", Method::StormerVerlet, "f", 4, "-1/90*x"},
      {"harmonic", Method::StormerVerlet, "f", 6, "-1/560*x"},
      {"mechanical-with-U", Method::StormerVerlet, "f", 2, "1/12*U(3; xd, xd) - 1/12*U(2; U(1;))"},
      {"mechanical-with-U", Method::StormerVerlet, "f", 4,
       "1/60*U(3; U(2; xd), xd) + 1/90*U(2; U(3; xd, xd)) - 1/90*U(2; U(2; U(1;))) "
       "+ 1/40*U(4; U(1;), xd, xd) - 1/80*U(3; U(1;), U(1;)) - 1/240*U(5; xd, xd, xd, xd)"},
      {"mechanical-with-U", Method::StormerVerlet, "lmod", 2, "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))"},
      {"mechanical-with-U", Method::StormerVerlet, "lmod", 4,
       "1/720*(3*U(2; U(1;), U(1;)) - 6*U(3; U(1;), xd, xd) - 2*U(2; U(2; xd), xd) + U(4; xd, xd, xd, xd))"},
      {"mechanical-with-U", Method::SymplEulerA, "lmod", 1, "1/2*U(1; xd)"},
      {"mechanical-with-U", Method::SymplEulerA, "lmod", 2, "1/24*(U(1; U(1;)) - 2*U(2; xd, xd))"},
      {"mechanical-with-U", Method::SymplEulerA, "ham", 0, "1/2*norm2(p) + U"},
      {"mechanical-with-U", Method::SymplEulerA, "ham", 1, "-1/2*U(1; p)"},
      {"mechanical-with-U", Method::SymplEulerA, "ham", 2, "1/12*(U(1; U(1;)) + U(2; p, p))"},
      {"kepler", Method::StormerVerlet, "f", 0, "-norm(x)^-3*x"},
      {"kepler", Method::StormerVerlet, "lmod", 2,
       "1/24*(norm(x)^-4 - 2*norm2(xd)*norm(x)^-3 + 6*dot(x, xd)^2*norm(x)^-5)"},
      {"anisotropic", Method::SymplEulerB, "f", 0, "inv(M)(Jm(xd) + A(x))"},
      {"anisotropic", Method::SymplEulerB, "f", 1, "-1/2*inv(M)(Jp(inv(M)(Jm(xd) + A(x))))"},
  };
  return refs;
}

}  // namespace

std::vector<CheckResult> check(const Derivation& d) {
  std::vector<CheckResult> out;
  const JetSpace sp = JetSpace::abstract();
  const TextContext ctx = d.spec.context();
  const int k = d.spec.order;
  const std::string tag = d.spec.preset.empty() ? "custom" : d.spec.preset;
  const std::string label = tag + " " + method_name(d.spec.method) + " k=" + std::to_string(k) + ": ";

  auto mismatch_detail = [&](const std::vector<Mismatch>& ms) {
    std::string s;
    for (const auto& m : ms)
      s += "h^" + std::to_string(m.order) + ": " + format(m.first, ctx) + " vs " + format(m.second, ctx) + "\n";
    return s;
  };

  {
    VecPoly el = euler_lagrange_residual(d.Ld.source, sp);
    auto cont = solve_for_highest_derivative(HSeries::constant(Expr(el)), 2, 0, sp);
    const bool ok = Expr(cont.f[0]) == Expr(d.equation.f[0]);
    out.push_back({label + "leading term is the continuous equation", ok,
                   ok ? "" : format(cont.f[0], ctx) + " vs " + format(d.equation.f[0], ctx)});
  }
  {
    TheoremReport t = verify_theorem(d.lmod, d.equation, k, sp);
    out.push_back({label + "modified Lagrangian reproduces the modified equation", t.ok(),
                   mismatch_detail(t.mismatches)});
  }
  {
    CrossValidation cv = cross_validate(d.Ld, k);
    out.push_back({label + "difference equation and meshed Lagrangian agree", cv.ok(),
                   mismatch_detail(cv.mismatches)});
  }
  if (d.hamiltonian) {
    auto ms = compare(hamiltonian_second_order(d.hamiltonian->H, k, sp), d.equation);
    out.push_back({label + "Hamilton's equations reproduce the modified equation", ms.empty(),
                   mismatch_detail(ms)});
  }
  for (const auto& r : references()) {
    if (r.preset != d.spec.preset || r.method != d.spec.method || r.power > k) continue;
    if (r.section == "ham" && !d.hamiltonian) continue;
    // Presets keep their published Lagrangian; a changed one has no reference.
    if (d.spec.lagrangian != preset(r.preset).lagrangian) continue;
    Expr want = parse_expression(r.text, ctx);
    Expr got = r.section == "f"      ? Expr(d.equation.f[r.power])
               : r.section == "lmod" ? d.lmod.coeff(r.power)
                                     : d.hamiltonian->H.coeff(r.power);
    const std::string what = r.section == "f" ? "modified equation" : r.section == "lmod" ? "modified Lagrangian"
                                                                                           : "modified Hamiltonian";
    const bool ok = want == got;
    out.push_back({label + "reference " + what + " h^" + std::to_string(r.power), ok,
                   ok ? "" : "expected " + format(want, ctx) + "\n  got      " + format(got, ctx)});
  }
  return out;
}

}  // namespace modlag

#include "modlag/text.hpp"

#include "modlag/error.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <vector>

namespace modlag {

VecPoly TextContext::default_base() const {
  if (dimension == 0) return jet(0);
  VecPoly b;
  for (int i = 0; i < dimension; ++i) b += comp_jet(i, 0) * basis(i);
  return b;
}

std::string jet_name(int order) {
  switch (order) {
    case 0:
      return "x";
    case 1:
      return "xd";
    case 2:
      return "xdd";
    default:
      return "x" + std::to_string(order);
  }
}

// ---------------------------------------------------------------------------
// printing

namespace {

class Printer {
 public:
  explicit Printer(const TextContext& ctx) : ctx_(ctx), base_(ctx.default_base()) {}

  std::string poly(const Poly& p) {
    if (p.is_zero()) return "0";
    std::vector<std::pair<std::string, Rational>> terms;
    for (const auto& [m, c] : p.terms()) terms.emplace_back(monomial(m), c);
    return join(std::move(terms));
  }

  std::string vec(const VecPoly& v) {
    if (v.is_zero()) return "0";
    std::vector<std::pair<std::string, Rational>> terms;
    for (const auto& [a, p] : v.terms()) {
      std::string at = atom(a);
      for (const auto& [m, c] : p.terms()) {
        std::string ms = monomial(m);
        terms.emplace_back(ms.empty() ? at : ms + "*" + at, c);
      }
    }
    return join(std::move(terms));
  }

  std::string atom(Atom a) {
    switch (a->kind()) {
      case AtomKind::Param:
      case AtomKind::VecSym:
        return a->name();
      case AtomKind::Jet:
        return jet_name(a->order());
      case AtomKind::CompJet:
        return jet_name(a->order()) + "_" + std::to_string(a->index());
      case AtomKind::Basis:
        return "e_" + std::to_string(a->index());
      case AtomKind::Pot:
      case AtomKind::Grad: {
        bool default_base = a->base() == base_;
        if (a->kind() == AtomKind::Pot && a->order() == 0 && default_base) return a->name();
        std::string s = a->name() + "(" + std::to_string(a->order());
        if (!default_base) s += " @ " + vec(a->base());
        s += ";";
        std::vector<std::string> args;
        for (Atom x : a->args()) args.push_back(atom(x));
        std::sort(args.begin(), args.end());
        for (std::size_t i = 0; i < args.size(); ++i) s += (i ? ", " : " ") + args[i];
        return s + ")";
      }
      case AtomKind::Bilin:
        return "dot(" + atom(a->args()[0]) + ", " + applied(a->chain(), atom(a->args()[1])) + ")";
      case AtomKind::Apply:
        return applied(a->chain(), atom(a->args()[0]));
      case AtomKind::Norm:
        return "norm(" + vec(a->base()) + ")";
      case AtomKind::Inv:
        return "inv(" + poly(a->poly()) + ")";
      case AtomKind::Sqrt:
        return "sqrt(" + poly(a->poly()) + ")";
    }
    return "?";
  }

 private:
  static std::string applied(const MatrixChain& chain, std::string inner) {
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      std::string f = it->name;
      if (it->transposed) f = "tr(" + f + ")";
      if (it->inverse) f = "inv(" + f + ")";
      inner = f + "(" + inner + ")";
    }
    return inner;
  }

  std::string monomial(const Monomial& m) {
    std::vector<std::string> parts;
    for (const auto& f : m.factors()) {
      std::string s = atom(f.atom);
      if (f.exponent != 1) s += "^" + std::to_string(f.exponent);
      parts.push_back(std::move(s));
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "*" : "") + parts[i];
    return out;
  }

  static std::string join(std::vector<std::pair<std::string, Rational>> terms) {
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
      if (a.first.size() != b.first.size() && (a.first.empty() || b.first.empty())) return a.first.empty();
      return a.first < b.first;
    });
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& [body, c] = terms[i];
      bool neg = c.sign() < 0;
      Rational mag = c.abs();
      std::string t;
      if (body.empty())
        t = mag.str();
      else if (mag.is_one())
        t = body;
      else
        t = mag.str() + "*" + body;
      if (i == 0)
        out = (neg ? "-" : "") + t;
      else
        out += (neg ? " - " : " + ") + t;
    }
    return out;
  }

  const TextContext& ctx_;
  VecPoly base_;
};

// ---------------------------------------------------------------------------
// parsing

enum class Tok { Number, Ident, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (i + 1 < s.size() && s[i] == '.' && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      }
      out.push_back({Tok::Number, std::string(s.substr(start, i - start)), start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, std::string(s.substr(start, i - start)), start});
    } else if (std::string_view("()[],;@+-*/^").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), start});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

struct Value {
  std::optional<Expr> expr;
  std::optional<MatrixChain> matrix;
};

const std::set<std::string> kReserved{"dot", "norm", "norm2", "inv", "sqrt", "pow", "tr"};

class Parser {
 public:
  Parser(std::string_view text, const TextContext& ctx) : toks_(tokenize(text)), ctx_(ctx) {}

  Expr parse() {
    Expr e = sum();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool is(const char* p) const { return peek().kind == Tok::Punct && peek().text == p; }
  bool accept(const char* p) {
    if (!is(p)) return false;
    ++pos_;
    return true;
  }
  void expect(const char* p) {
    if (!accept(p)) fail(std::string("expected '") + p + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }

  Expr checked(const std::function<Expr()>& fn) {
    std::size_t at = peek().pos;
    try {
      return fn();
    } catch (const SymbolicError& e) {
      throw ParseError(e.what(), at);
    }
  }

  Expr sum() {
    Expr acc = term();
    while (true) {
      if (accept("+")) {
        Expr r = term();
        acc = checked([&] { return acc + r; });
      } else if (accept("-")) {
        Expr r = term();
        acc = checked([&] { return acc - r; });
      } else {
        return acc;
      }
    }
  }

  Expr term() {
    Expr acc = unary();
    while (true) {
      if (accept("*")) {
        Expr r = unary();
        acc = checked([&] { return acc * r; });
      } else if (accept("/")) {
        Expr r = unary();
        acc = checked([&] {
          if (!r.is_scalar()) throw SymbolicError("division by a vector");
          return acc * Expr(inverse(r.scalar()));
        });
      } else {
        return acc;
      }
    }
  }

  Expr unary() {
    if (accept("-")) return -unary();
    if (accept("+")) return unary();
    return power();
  }

  int integer() {
    bool neg = accept("-");
    if (peek().kind != Tok::Number || peek().text.find('.') != std::string::npos) fail("expected an integer");
    int v = std::stoi(peek().text);
    ++pos_;
    return neg ? -v : v;
  }

  Expr power() {
    Expr base = expr_value(primary());
    if (accept("^")) {
      int e = integer();
      return checked([&] {
        if (!base.is_scalar()) throw SymbolicError("power of a vector; use norm2()");
        return Expr(power_of(base.scalar(), e));
      });
    }
    return base;
  }

  static Poly power_of(const Poly& p, int e) {
    // Powers of a lone norm or root keep their exponent.
    if (p.is_monomial() && p.terms()[0].second.is_one() && p.terms()[0].first.factors().size() == 1) {
      const Factor& f = p.terms()[0].first.factors()[0];
      if (f.atom->kind() == AtomKind::Sqrt) return sqrt_pow(f.atom->poly(), f.exponent * e);
      if (f.atom->kind() == AtomKind::Norm) return norm_pow(f.atom->base(), f.exponent * e);
      return Poly::atom(f.atom, f.exponent * e);
    }
    return modlag::power(p, e);
  }

  Expr expr_value(const Value& v) {
    if (!v.expr) fail("matrix used without an argument");
    return *v.expr;
  }

  Value primary() {
    Value v = atom_value();
    while (v.matrix && is("(")) {
      ++pos_;
      Expr arg = sum();
      expect(")");
      MatrixChain chain = *v.matrix;
      v = Value{checked([&] {
        if (!arg.is_vector()) throw SymbolicError("matrix applied to a scalar");
        return Expr(modlag::apply(chain, arg.vector()));
      }), std::nullopt};
    }
    return v;
  }

  Value atom_value() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      ++pos_;
      return Value{Expr(Rational::parse(t.text)), std::nullopt};
    }
    if (accept("(")) {
      Expr e = sum();
      expect(")");
      return Value{e, std::nullopt};
    }
    if (accept("[")) {
      if (ctx_.dimension == 0) fail("component vectors need a concrete dimension");
      VecPoly v;
      int i = 0;
      do {
        Expr c = sum();
        if (!c.is_scalar()) fail("vector entry must be scalar");
        if (i >= ctx_.dimension) fail("too many vector components");
        v += c.scalar() * basis(i++);
      } while (accept(","));
      expect("]");
      return Value{Expr(v), std::nullopt};
    }
    if (t.kind != Tok::Ident) fail(t.kind == Tok::End ? "unexpected end of expression" : "unexpected '" + t.text + "'");
    ++pos_;
    const std::string& id = t.text;
    if (kReserved.count(id)) return function(id);
    if (ctx_.potentials.count(id)) return potential_call(id);
    if (auto m = ctx_.matrices.find(id); m != ctx_.matrices.end())
      return Value{std::nullopt, MatrixChain{matrix(id, m->second)}};
    return Value{symbol(id, t.pos), std::nullopt};
  }

  Value function(const std::string& id) {
    expect("(");
    if (id == "inv" || id == "tr") {
      Value inner = primary_or_sum();
      expect(")");
      if (inner.matrix) {
        if (id == "inv") return Value{std::nullopt, invert(*inner.matrix)};
        auto [t, s] = transpose(*inner.matrix);
        if (s < 0) fail("transpose of an antisymmetric matrix; write -M");
        return Value{std::nullopt, t};
      }
      if (id == "tr") fail("tr() expects a matrix");
      Expr e = *inner.expr;
      return Value{checked([&] {
        if (!e.is_scalar()) throw SymbolicError("inv() of a vector");
        return Expr(inverse(e.scalar()));
      }), std::nullopt};
    }
    Expr a = sum();
    if (id == "dot") {
      expect(",");
      Expr b = sum();
      expect(")");
      return Value{checked([&] { return Expr(inner(a.vector(), b.vector())); }), std::nullopt};
    }
    if (id == "pow") {
      expect(",");
      int n = integer();
      expect(")");
      return Value{checked([&] { return Expr(power_of(a.scalar(), n)); }), std::nullopt};
    }
    expect(")");
    if (id == "norm") return Value{checked([&] { return Expr(norm_pow(a.vector(), 1)); }), std::nullopt};
    if (id == "norm2") return Value{checked([&] { return Expr(inner(a.vector(), a.vector())); }), std::nullopt};
    if (id == "sqrt") return Value{checked([&] { return Expr(sqrt_pow(a.scalar(), 1)); }), std::nullopt};
    fail("unknown function " + id);
  }

  // inv(M) and tr(M) take matrices; inv(s) takes a scalar expression.
  Value primary_or_sum() {
    std::size_t save = pos_;
    if (peek().kind == Tok::Ident) {
      const std::string& id = peek().text;
      bool matrix_like = ctx_.matrices.count(id) || id == "inv" || id == "tr";
      if (matrix_like) {
        Value v = primary();
        if (v.matrix && is(")")) return v;
        pos_ = save;
      }
    }
    return Value{sum(), std::nullopt};
  }

  Value potential_call(const std::string& name) {
    VecPoly base = ctx_.default_base();
    if (!accept("(")) return Value{Expr(potential(name, base, {})), std::nullopt};
    int k = integer();
    if (k < 0) fail("negative derivative order");
    if (accept("@")) {
      Expr b = sum();
      if (!b.is_vector()) fail("potential base point must be a vector");
      base = b.vector();
    }
    expect(";");
    std::vector<VecPoly> args;
    if (!is(")")) {
      do {
        Expr a = sum();
        if (!a.is_vector()) fail("potential arguments must be vectors");
        args.push_back(a.vector());
      } while (accept(","));
    }
    expect(")");
    int n = static_cast<int>(args.size());
    if (n == k) return Value{Expr(potential(name, base, args)), std::nullopt};
    if (n == k - 1 && ctx_.dimension > 0) {
      // Component form: sum_i U(k; args, e_i) e_i.
      VecPoly g;
      for (int i = 0; i < ctx_.dimension; ++i) {
        args.push_back(basis(i));
        g += potential(name, base, args) * basis(i);
        args.pop_back();
      }
      return Value{Expr(g), std::nullopt};
    }
    if (n == k - 1) return Value{Expr(potential_gradient(name, base, args)), std::nullopt};
    fail(name + "(" + std::to_string(k) + "; ...) needs " + std::to_string(k) + " or " + std::to_string(k - 1) +
         " arguments");
  }

  Expr symbol(const std::string& id, std::size_t at) {
    if (ctx_.vector_symbols.count(id)) return vec_symbol(id);
    static const std::regex basis_re("e_([0-9]+)");
    static const std::regex jet_re("x(d{0,2}|[0-9]+)(_([0-9]+))?");
    std::smatch m;
    if (std::regex_match(id, m, basis_re)) {
      int i = std::stoi(m[1]);
      if (ctx_.dimension == 0 || i >= ctx_.dimension) throw ParseError("basis vector out of range: " + id, at);
      return basis(i);
    }
    if (std::regex_match(id, m, jet_re)) {
      std::string d = m[1];
      int order = d.empty() || d[0] == 'd' ? static_cast<int>(d.size()) : std::stoi(d);
      if (!d.empty() && d[0] != 'd' && order < 3) throw ParseError("write " + jet_name(order) + " for " + id, at);
      if (m[3].matched) {
        int i = std::stoi(m[3]);
        if (ctx_.dimension == 0 || i >= ctx_.dimension) throw ParseError("jet component out of range: " + id, at);
        return comp_jet(i, order);
      }
      if (ctx_.dimension == 0) return jet(order);
      VecPoly v;
      for (int i = 0; i < ctx_.dimension; ++i) v += comp_jet(i, order) * basis(i);
      return v;
    }
    return param(id);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const TextContext& ctx_;
};

}  // namespace

Expr parse_expression(std::string_view text, const TextContext& ctx) { return Parser(text, ctx).parse(); }

std::string format(const Poly& e, const TextContext& ctx) { return Printer(ctx).poly(e); }
std::string format(const VecPoly& e, const TextContext& ctx) { return Printer(ctx).vec(e); }
std::string format(const Expr& e, const TextContext& ctx) {
  return e.is_scalar() ? format(e.scalar(), ctx) : format(e.vector(), ctx);
}

}  // namespace modlag

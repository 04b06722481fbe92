#include "modlag/calculus.hpp"

#include "modlag/error.hpp"

#include <functional>
#include <optional>
#include <unordered_map>

namespace modlag {

Variation& Variation::set(Atom symbol, Expr direction) {
  if (!symbol->is_symbol()) throw SymbolicError("only symbols can be varied");
  if (symbol->is_vector() != direction.is_vector()) throw SymbolicError("direction kind does not match symbol");
  entries_.insert_or_assign(symbol, std::move(direction));
  return *this;
}

const Expr* Variation::find(Atom symbol) const {
  auto it = entries_.find(symbol);
  return it == entries_.end() ? nullptr : &it->second;
}

bool Variation::touches(Atom atom) const {
  if (atom->is_symbol()) return entries_.count(atom) > 0;
  // Iterate over the smaller of the two sorted sets.
  const auto& syms = atom->symbols();
  if (syms.size() < entries_.size()) {
    for (Atom s : syms)
      if (entries_.count(s)) return true;
    return false;
  }
  for (const auto& [s, d] : entries_)
    if (atom->depends_on(s)) return true;
  return false;
}

namespace {

class Differentiator {
 public:
  explicit Differentiator(const Variation& var) : var_(var) {}

  Poly poly(const Poly& e) {
    std::vector<Poly::Term> acc;
    for (const auto& [m, c] : e.terms()) {
      for (const auto& f : m.factors()) {
        if (!var_.touches(f.atom)) continue;
        const Poly& d = scalar_atom(f.atom);
        if (d.is_zero()) continue;
        Monomial rest = m.without(f.atom) * Monomial::of(f.atom, f.exponent - 1);
        Poly t = Poly::term(rest, c * Rational(f.exponent)) * d;
        for (const auto& term : t.terms()) acc.push_back(term);
      }
    }
    return Poly::from_terms(std::move(acc));
  }

  VecPoly vec(const VecPoly& e) {
    VecPoly out;
    for (const auto& [a, p] : e.terms()) {
      Poly dp = poly(p);
      if (!dp.is_zero()) out += dp * VecPoly::atom(a);
      if (var_.touches(a)) {
        const VecPoly& da = vector_atom(a);
        if (!da.is_zero()) out += p * da;
      }
    }
    return out;
  }

 private:
  const Poly& scalar_atom(Atom a) {
    auto it = scalar_memo_.find(a);
    if (it != scalar_memo_.end()) return it->second;
    Poly d = compute_scalar(a);
    return scalar_memo_.emplace(a, std::move(d)).first->second;
  }

  const VecPoly& vector_atom(Atom a) {
    auto it = vector_memo_.find(a);
    if (it != vector_memo_.end()) return it->second;
    VecPoly d = compute_vector(a);
    return vector_memo_.emplace(a, std::move(d)).first->second;
  }

  VecPoly arg(Atom a) { return var_.touches(a) ? vector_atom(a) : VecPoly(); }

  std::vector<VecPoly> atoms_of(const std::vector<Atom>& args) {
    std::vector<VecPoly> out;
    out.reserve(args.size());
    for (Atom a : args) out.push_back(VecPoly::atom(a));
    return out;
  }

  Poly compute_scalar(Atom a) {
    switch (a->kind()) {
      case AtomKind::Param:
      case AtomKind::CompJet: {
        const Expr* d = var_.find(a);
        return d ? d->scalar() : Poly();
      }
      case AtomKind::Pot: {
        std::vector<VecPoly> args = atoms_of(a->args());
        Poly out;
        VecPoly db = vec(a->base());
        if (!db.is_zero()) {
          args.push_back(db);
          out += potential(a->name(), a->base(), args);
          args.pop_back();
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
          VecPoly d = arg(a->args()[i]);
          if (d.is_zero()) continue;
          std::vector<VecPoly> changed = args;
          changed[i] = d;
          out += potential(a->name(), a->base(), changed);
        }
        return out;
      }
      case AtomKind::Bilin: {
        VecPoly x = VecPoly::atom(a->args()[0]), y = VecPoly::atom(a->args()[1]);
        return bilinear(arg(a->args()[0]), a->chain(), y) + bilinear(x, a->chain(), arg(a->args()[1]));
      }
      case AtomKind::Norm: {
        VecPoly dv = vec(a->base());
        return inner(a->base(), dv) * Poly::atom(a, -1);
      }
      case AtomKind::Inv:
        return -(Poly::atom(a, 2) * poly(a->poly()));
      case AtomKind::Sqrt:
        return Rational(1, 2) * poly(a->poly()) * Poly::atom(a, -1);
      default:
        throw SymbolicError("vector atom in scalar position");
    }
  }

  VecPoly compute_vector(Atom a) {
    switch (a->kind()) {
      case AtomKind::Jet:
      case AtomKind::VecSym: {
        const Expr* d = var_.find(a);
        return d ? d->vector() : VecPoly();
      }
      case AtomKind::Basis:
        return VecPoly();
      case AtomKind::Grad: {
        std::vector<VecPoly> args = atoms_of(a->args());
        VecPoly out;
        VecPoly db = vec(a->base());
        if (!db.is_zero()) {
          args.push_back(db);
          out += potential_gradient(a->name(), a->base(), args);
          args.pop_back();
        }
        for (std::size_t i = 0; i < args.size(); ++i) {
          VecPoly d = arg(a->args()[i]);
          if (d.is_zero()) continue;
          std::vector<VecPoly> changed = args;
          changed[i] = d;
          out += potential_gradient(a->name(), a->base(), changed);
        }
        return out;
      }
      case AtomKind::Apply:
        return modlag::apply(a->chain(), arg(a->args()[0]));
      default:
        throw SymbolicError("scalar atom in vector position");
    }
  }

  const Variation& var_;
  std::unordered_map<Atom, Poly> scalar_memo_;
  std::unordered_map<Atom, VecPoly> vector_memo_;
};

// T^T g for a vector atom v = T(slot) linear in slot.
VecPoly vec_adjoint(Atom v, Atom slot, const VecPoly& g) {
  if (v == slot) return g;
  switch (v->kind()) {
    case AtomKind::Apply: {
      auto [t, s] = transpose(v->chain());
      return vec_adjoint(v->args()[0], slot, Rational(s) * modlag::apply(t, g));
    }
    case AtomKind::Grad: {
      const auto& args = v->args();
      for (std::size_t j = 0; j < args.size(); ++j) {
        if (!args[j]->depends_on(slot)) continue;
        std::vector<VecPoly> rest;
        for (std::size_t i = 0; i < args.size(); ++i)
          if (i != j) rest.push_back(VecPoly::atom(args[i]));
        rest.push_back(g);
        return vec_adjoint(args[j], slot, potential_gradient(v->name(), v->base(), rest));
      }
      break;
    }
    default:
      break;
  }
  throw SymbolicError("expression is not linear in the extraction slot");
}

// w with atom == <w, slot>.
VecPoly scalar_adjoint(Atom a, Atom slot) {
  switch (a->kind()) {
    case AtomKind::Pot: {
      const auto& args = a->args();
      for (std::size_t j = 0; j < args.size(); ++j) {
        if (!args[j]->depends_on(slot)) continue;
        std::vector<VecPoly> rest;
        for (std::size_t i = 0; i < args.size(); ++i)
          if (i != j) rest.push_back(VecPoly::atom(args[i]));
        return vec_adjoint(args[j], slot, potential_gradient(a->name(), a->base(), rest));
      }
      break;
    }
    case AtomKind::Bilin: {
      Atom x = a->args()[0], y = a->args()[1];
      bool in_x = x->depends_on(slot), in_y = y->depends_on(slot);
      if (in_x && in_y) break;
      if (in_y) {
        auto [t, s] = transpose(a->chain());
        return vec_adjoint(y, slot, Rational(s) * modlag::apply(t, VecPoly::atom(x)));
      }
      if (in_x) return vec_adjoint(x, slot, modlag::apply(a->chain(), VecPoly::atom(y)));
      break;
    }
    default:
      break;
  }
  throw SymbolicError("expression is not linear in the extraction slot");
}

}  // namespace

Poly derivative(const Poly& e, const Variation& var) { return Differentiator(var).poly(e); }
VecPoly derivative(const VecPoly& e, const Variation& var) { return Differentiator(var).vec(e); }
Expr derivative(const Expr& e, const Variation& var) {
  Differentiator d(var);
  return e.is_scalar() ? Expr(d.poly(e.scalar())) : Expr(d.vec(e.vector()));
}

VecPoly extract_linear(const Poly& e, Atom slot) {
  VecPoly out;
  std::unordered_map<Atom, VecPoly> memo;
  for (const auto& [m, c] : e.terms()) {
    Atom hit = nullptr;
    for (const auto& f : m.factors()) {
      if (!f.atom->depends_on(slot)) continue;
      if (hit != nullptr || f.exponent != 1) throw SymbolicError("expression is not linear in the extraction slot");
      hit = f.atom;
    }
    if (hit == nullptr) throw SymbolicError("term independent of the extraction slot");
    auto it = memo.find(hit);
    if (it == memo.end()) it = memo.emplace(hit, scalar_adjoint(hit, slot)).first;
    out += Poly::term(m.without(hit), c) * it->second;
  }
  return out;
}

VecPoly gradient(const Poly& e, Atom vector_symbol) {
  if (!vector_symbol->is_symbol() || !vector_symbol->is_vector())
    throw SymbolicError("gradient requires a vector symbol");
  Atom slot = vec_symbol_atom("%grad");
  if (vector_symbol == slot) throw SymbolicError("reserved symbol");
  Variation var;
  var.set(vector_symbol, VecPoly::atom(slot));
  return extract_linear(derivative(e, var), slot);
}

Expr diff(const Expr& e, Atom symbol) {
  if (!symbol->is_symbol()) throw SymbolicError("diff with respect to a non-symbol");
  if (!symbol->is_vector()) {
    Variation var;
    var.set(symbol, Poly(1));
    return derivative(e, var);
  }
  if (!e.is_scalar()) throw SymbolicError("diff of a vector with respect to a vector symbol");
  return gradient(e.scalar(), symbol);
}

// ---------------------------------------------------------------------------
// substitution

namespace {

class Rebuilder {
 public:
  Rebuilder(const Substitution& map, bool force) : map_(map), force_(force) {}

  // Optional hook replacing potential atoms (used for instantiation).
  std::function<std::optional<Expr>(Atom, Rebuilder&)> potential_hook;

  Poly poly(const Poly& e) {
    Poly out;
    std::vector<Poly::Term> untouched;
    for (const auto& [m, c] : e.terms()) {
      bool touched = false;
      for (const auto& f : m.factors())
        if (affects(f.atom)) {
          touched = true;
          break;
        }
      if (!touched) {
        untouched.emplace_back(m, c);
        continue;
      }
      Poly t(c);
      for (const auto& f : m.factors()) {
        if (!affects(f.atom)) {
          t = t * Poly::atom(f.atom, f.exponent);
          continue;
        }
        if (f.atom->kind() == AtomKind::Norm)
          t = t * norm_pow(vec(f.atom->base()), f.exponent);
        else if (f.atom->kind() == AtomKind::Sqrt)
          t = t * sqrt_pow(poly(f.atom->poly()), f.exponent);
        else
          t = t * power(scalar_atom(f.atom), f.exponent);
        if (t.is_zero()) break;
      }
      out += t;
    }
    return out + Poly::from_terms(std::move(untouched));
  }

  VecPoly vec(const VecPoly& e) {
    VecPoly out;
    for (const auto& [a, p] : e.terms()) {
      Poly q = poly(p);
      if (q.is_zero()) continue;
      out += q * (affects(a) ? vector_atom(a) : VecPoly::atom(a));
    }
    return out;
  }

  bool affects(Atom a) const {
    if (force_) return true;
    if (potential_hook && (a->kind() == AtomKind::Pot || a->kind() == AtomKind::Grad)) return true;
    if (a->is_symbol()) return map_.count(a) > 0;
    for (const auto& [s, v] : map_)
      if (a->depends_on(s)) return true;
    return potential_hook && contains_potential(a);
  }

 private:
  static bool contains_potential(Atom a) {
    if (a->kind() == AtomKind::Pot || a->kind() == AtomKind::Grad) return true;
    for (Atom c : a->args())
      if (contains_potential(c)) return true;
    for (const auto& [v, p] : a->base().terms()) {
      if (contains_potential(v)) return true;
      for (const auto& [m, c] : p.terms())
        for (const auto& f : m.factors())
          if (contains_potential(f.atom)) return true;
    }
    for (const auto& [m, c] : a->poly().terms())
      for (const auto& f : m.factors())
        if (contains_potential(f.atom)) return true;
    return false;
  }

  std::vector<VecPoly> args_of(Atom a) {
    std::vector<VecPoly> out;
    for (Atom x : a->args()) out.push_back(affects(x) ? vector_atom(x) : VecPoly::atom(x));
    return out;
  }

  const Poly& scalar_atom(Atom a) {
    auto it = smemo_.find(a);
    if (it != smemo_.end()) return it->second;
    Poly r = compute_scalar(a);
    return smemo_.emplace(a, std::move(r)).first->second;
  }

  const VecPoly& vector_atom(Atom a) {
    auto it = vmemo_.find(a);
    if (it != vmemo_.end()) return it->second;
    VecPoly r = compute_vector(a);
    return vmemo_.emplace(a, std::move(r)).first->second;
  }

  Poly compute_scalar(Atom a) {
    if (a->is_symbol()) {
      auto it = map_.find(a);
      if (it == map_.end()) return Poly::atom(a);
      return it->second.scalar();
    }
    if (potential_hook && a->kind() == AtomKind::Pot)
      if (auto r = potential_hook(a, *this)) return r->scalar();
    switch (a->kind()) {
      case AtomKind::Pot:
        return potential(a->name(), vec(a->base()), args_of(a));
      case AtomKind::Bilin: {
        auto args = args_of(a);
        return bilinear(args[0], a->chain(), args[1]);
      }
      case AtomKind::Norm:
        return norm_pow(vec(a->base()), 1);
      case AtomKind::Inv:
        return inverse(poly(a->poly()));
      case AtomKind::Sqrt:
        return sqrt_pow(poly(a->poly()), 1);
      default:
        throw SymbolicError("vector atom in scalar position");
    }
  }

  VecPoly compute_vector(Atom a) {
    if (a->is_symbol()) {
      auto it = map_.find(a);
      if (it == map_.end()) return VecPoly::atom(a);
      return it->second.vector();
    }
    if (potential_hook && a->kind() == AtomKind::Grad)
      if (auto r = potential_hook(a, *this)) return r->vector();
    switch (a->kind()) {
      case AtomKind::Basis:
        return VecPoly::atom(a);
      case AtomKind::Grad:
        return potential_gradient(a->name(), vec(a->base()), args_of(a));
      case AtomKind::Apply:
        return modlag::apply(a->chain(), args_of(a)[0]);
      default:
        throw SymbolicError("scalar atom in vector position");
    }
  }

 public:
  std::vector<VecPoly> rebuilt_args(Atom a) { return args_of(a); }

 private:
  const Substitution& map_;
  bool force_;
  std::unordered_map<Atom, Poly> smemo_;
  std::unordered_map<Atom, VecPoly> vmemo_;
};

}  // namespace

Poly substitute(const Poly& e, const Substitution& map) {
  for (const auto& [s, v] : map) {
    if (!s->is_symbol()) throw SymbolicError("substitution key is not a symbol");
    if (s->is_vector() != v.is_vector()) throw SymbolicError("substitution changes the kind of a symbol");
  }
  return Rebuilder(map, false).poly(e);
}

VecPoly substitute(const VecPoly& e, const Substitution& map) {
  for (const auto& [s, v] : map) {
    if (!s->is_symbol()) throw SymbolicError("substitution key is not a symbol");
    if (s->is_vector() != v.is_vector()) throw SymbolicError("substitution changes the kind of a symbol");
  }
  return Rebuilder(map, false).vec(e);
}

Expr substitute(const Expr& e, const Substitution& map) {
  return e.is_scalar() ? Expr(substitute(e.scalar(), map)) : Expr(substitute(e.vector(), map));
}

Expr normalize(const Expr& e) {
  Substitution none;
  Rebuilder r(none, true);
  return e.is_scalar() ? Expr(r.poly(e.scalar())) : Expr(r.vec(e.vector()));
}

// ---------------------------------------------------------------------------
// potential instantiation

namespace {

class Instantiator {
 public:
  Instantiator(std::string_view name, const Poly& u, int dimension) : name_(name), u_(u), dim_(dimension) {}

  // U^(k) contracted with slots s_1..s_k, as a function of the position symbols.
  const Poly& scalar_form(int k) {
    while (static_cast<int>(forms_.size()) <= k) {
      int j = static_cast<int>(forms_.size());
      if (j == 0) {
        forms_.push_back(u_);
        continue;
      }
      forms_.push_back(derivative(forms_.back(), position_variation(VecPoly::atom(slot(j)))));
    }
    return forms_[k];
  }

  // U^(k)(s_1..s_{k-1}, .)
  VecPoly vector_form(int k) {
    const Poly& f = scalar_form(k - 1);
    if (dim_ == 0) return gradient(f, jet_atom(0));
    VecPoly out;
    for (int i = 0; i < dim_; ++i) {
      Variation var;
      var.set(comp_jet_atom(i, 0), Poly(1));
      out += derivative(f, var) * basis(i);
    }
    return out;
  }

  Substitution bind(const VecPoly& base, const std::vector<VecPoly>& args) {
    Substitution s;
    for (std::size_t i = 0; i < args.size(); ++i) s.emplace(slot(static_cast<int>(i) + 1), args[i]);
    if (dim_ == 0) {
      s.emplace(jet_atom(0), base);
    } else {
      for (int i = 0; i < dim_; ++i) s.emplace(comp_jet_atom(i, 0), inner(base, basis(i)));
    }
    return s;
  }

  const std::string& name() const { return name_; }

 private:
  Variation position_variation(const VecPoly& dir) {
    Variation var;
    if (dim_ == 0) {
      var.set(jet_atom(0), dir);
    } else {
      for (int i = 0; i < dim_; ++i) var.set(comp_jet_atom(i, 0), inner(dir, basis(i)));
    }
    return var;
  }

  static Atom slot(int j) { return vec_symbol_atom("%s" + std::to_string(j)); }

  std::string name_;
  Poly u_;
  int dim_;
  std::vector<Poly> forms_;
};

}  // namespace

Expr instantiate_potential(const Expr& e, std::string_view name, const Poly& u, int dimension) {
  Instantiator inst(name, u, dimension);
  Substitution none;
  Rebuilder r(none, false);
  r.potential_hook = [&inst](Atom a, Rebuilder& self) -> std::optional<Expr> {
    if (a->name() != inst.name()) return std::nullopt;
    VecPoly base = self.vec(a->base());
    std::vector<VecPoly> args = self.rebuilt_args(a);
    Substitution s = inst.bind(base, args);
    if (a->kind() == AtomKind::Pot) return Expr(substitute(inst.scalar_form(a->order()), s));
    return Expr(substitute(inst.vector_form(a->order()), s));
  };
  return e.is_scalar() ? Expr(r.poly(e.scalar())) : Expr(r.vec(e.vector()));
}

}  // namespace modlag

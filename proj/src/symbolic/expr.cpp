#include "modlag/expr.hpp"

#include "modlag/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <unordered_map>

namespace modlag {

namespace {

constexpr std::uint64_t kSeed = 0xcbf29ce484222325ULL;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finalizer over the running state
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

int compare_chain(const MatrixChain& a, const MatrixChain& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = a[i].name.compare(b[i].name); c != 0) return c < 0 ? -1 : 1;
    if (a[i].symmetry != b[i].symmetry) return a[i].symmetry < b[i].symmetry ? -1 : 1;
    if (a[i].inverse != b[i].inverse) return a[i].inverse ? 1 : -1;
    if (a[i].transposed != b[i].transposed) return a[i].transposed ? 1 : -1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

std::uint64_t hash_chain(const MatrixChain& chain) {
  std::uint64_t h = kSeed;
  for (const auto& f : chain) {
    h = mix(h, hash_string(f.name));
    h = mix(h, static_cast<std::uint64_t>(f.symmetry) * 4 + (f.inverse ? 2 : 0) + (f.transposed ? 1 : 0));
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// interning

struct NodeFactory {
  static Atom intern(Node proto);
  static Node make(AtomKind kind) {
    Node n;
    n.kind_ = kind;
    return n;
  }
  static void set_name(Node& n, std::string_view s) { n.name_ = std::string(s); }
  static void set_order(Node& n, int k) { n.order_ = k; }
  static void set_index(Node& n, int i) { n.index_ = i; }
  static void set_args(Node& n, std::vector<Atom> a) { n.args_ = std::move(a); }
  static void set_chain(Node& n, MatrixChain c) { n.chain_ = std::move(c); }
  static void set_base(Node& n, VecPoly b) { n.base_ = std::move(b); }
  static void set_poly(Node& n, Poly p) { n.poly_ = std::move(p); }
};

namespace {

bool shallow_equal(const Node& a, const Node& b) {
  return a.kind() == b.kind() && a.order() == b.order() && a.index() == b.index() && a.name() == b.name() &&
         a.args() == b.args() && a.chain() == b.chain() && a.base() == b.base() && a.poly() == b.poly();
}

std::uint64_t node_hash(const Node& n) {
  std::uint64_t h = mix(kSeed, static_cast<std::uint64_t>(n.kind()));
  h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.order())));
  h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(n.index())));
  h = mix(h, hash_string(n.name()));
  for (Atom a : n.args()) h = mix(h, a->hash());
  h = mix(h, hash_chain(n.chain()));
  h = mix(h, n.base().hash());
  h = mix(h, n.poly().hash());
  return h;
}

struct Table {
  std::mutex mutex;
  std::unordered_map<std::uint64_t, std::vector<const Node*>> buckets;
  std::size_t size = 0;
};

Table& table() {
  static Table* t = new Table();  // intentionally leaked: atoms live for the whole program
  return *t;
}

void add_symbols(std::vector<Atom>& out, Atom a) {
  if (a->is_symbol()) out.push_back(a);
  out.insert(out.end(), a->symbols().begin(), a->symbols().end());
}

void add_symbols(std::vector<Atom>& out, const Poly& p) {
  for (const auto& [m, c] : p.terms())
    for (const auto& f : m.factors()) add_symbols(out, f.atom);
}

void add_symbols(std::vector<Atom>& out, const VecPoly& v) {
  for (const auto& [a, p] : v.terms()) {
    add_symbols(out, a);
    add_symbols(out, p);
  }
}

}  // namespace

Atom NodeFactory::intern(Node proto) {
  proto.hash_ = node_hash(proto);
  Table& t = table();
  {
    std::lock_guard lock(t.mutex);
    auto& bucket = t.buckets[proto.hash_];
    for (const Node* n : bucket)
      if (shallow_equal(*n, proto)) return n;
  }
  // Derived data is computed outside the lock; children are already interned.
  std::vector<Atom> syms;
  for (Atom a : proto.args_) add_symbols(syms, a);
  add_symbols(syms, proto.base_);
  add_symbols(syms, proto.poly_);
  std::sort(syms.begin(), syms.end(), AtomLess{});
  syms.erase(std::unique(syms.begin(), syms.end()), syms.end());
  int mj = -1;
  if (proto.kind_ == AtomKind::Jet || proto.kind_ == AtomKind::CompJet) mj = proto.order_;
  for (Atom s : syms) mj = std::max(mj, s->max_jet());
  proto.symbols_ = std::move(syms);
  proto.max_jet_ = mj;

  std::lock_guard lock(t.mutex);
  auto& bucket = t.buckets[proto.hash_];
  for (const Node* n : bucket)
    if (shallow_equal(*n, proto)) return n;
  const Node* fresh = new Node(std::move(proto));
  bucket.push_back(fresh);
  ++t.size;
  return fresh;
}

std::size_t atom_table_size() {
  std::lock_guard lock(table().mutex);
  return table().size;
}

bool Node::is_vector() const {
  switch (kind_) {
    case AtomKind::Jet:
    case AtomKind::VecSym:
    case AtomKind::Basis:
    case AtomKind::Grad:
    case AtomKind::Apply:
      return true;
    default:
      return false;
  }
}

bool Node::is_symbol() const {
  return kind_ == AtomKind::Param || kind_ == AtomKind::CompJet || kind_ == AtomKind::Jet ||
         kind_ == AtomKind::VecSym;
}

bool Node::depends_on(Atom symbol) const {
  if (this == symbol) return true;
  return std::binary_search(symbols_.begin(), symbols_.end(), symbol, AtomLess{});
}

int compare_atoms(Atom a, Atom b) {
  if (a == b) return 0;
  if (a->hash() != b->hash()) return a->hash() < b->hash() ? -1 : 1;
  // Hash collision between distinct atoms: fall back to a structural comparison.
  if (a->kind() != b->kind()) return a->kind() < b->kind() ? -1 : 1;
  if (a->order() != b->order()) return a->order() < b->order() ? -1 : 1;
  if (a->index() != b->index()) return a->index() < b->index() ? -1 : 1;
  if (int c = a->name().compare(b->name()); c != 0) return c < 0 ? -1 : 1;
  std::size_t n = std::min(a->args().size(), b->args().size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare_atoms(a->args()[i], b->args()[i]); c != 0) return c;
  if (a->args().size() != b->args().size()) return a->args().size() < b->args().size() ? -1 : 1;
  if (int c = compare_chain(a->chain(), b->chain()); c != 0) return c;
  if (int c = compare(a->base(), b->base()); c != 0) return c;
  return compare(a->poly(), b->poly());
}

// ---------------------------------------------------------------------------
// Monomial

Monomial Monomial::of(Atom a, int e) {
  Monomial m;
  if (e != 0) m.factors_.push_back({a, e});
  return m;
}

int Monomial::exponent_of(Atom a) const {
  for (const auto& f : factors_)
    if (f.atom == a) return f.exponent;
  return 0;
}

Monomial Monomial::without(Atom a) const {
  Monomial m;
  for (const auto& f : factors_)
    if (f.atom != a) m.factors_.push_back(f);
  return m;
}

Monomial Monomial::pow(int e) const {
  Monomial m;
  if (e == 0) return m;
  m.factors_ = factors_;
  for (auto& f : m.factors_) f.exponent *= e;
  return m;
}

std::uint64_t Monomial::hash() const {
  std::uint64_t h = kSeed;
  for (const auto& f : factors_) {
    h = mix(h, f.atom->hash());
    h = mix(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(f.exponent)));
  }
  return h;
}

Monomial operator*(const Monomial& a, const Monomial& b) {
  Monomial m;
  m.factors_.reserve(a.factors_.size() + b.factors_.size());
  auto i = a.factors_.begin(), j = b.factors_.begin();
  while (i != a.factors_.end() || j != b.factors_.end()) {
    if (j == b.factors_.end() || (i != a.factors_.end() && compare_atoms(i->atom, j->atom) < 0)) {
      m.factors_.push_back(*i++);
    } else if (i == a.factors_.end() || compare_atoms(j->atom, i->atom) < 0) {
      m.factors_.push_back(*j++);
    } else {
      int e = i->exponent + j->exponent;
      if (e != 0) m.factors_.push_back({i->atom, e});
      ++i;
      ++j;
    }
  }
  return m;
}

int compare(const Monomial& a, const Monomial& b) {
  std::size_t n = std::min(a.factors_.size(), b.factors_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare_atoms(a.factors_[i].atom, b.factors_[i].atom); c != 0) return c;
    if (a.factors_[i].exponent != b.factors_[i].exponent)
      return a.factors_[i].exponent < b.factors_[i].exponent ? -1 : 1;
  }
  if (a.factors_.size() != b.factors_.size()) return a.factors_.size() < b.factors_.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Poly

Poly::Poly(Rational c) {
  if (!c.is_zero()) terms_.emplace_back(Monomial(), std::move(c));
}

Poly Poly::atom(Atom a, int e) {
  Poly p;
  p.terms_.emplace_back(Monomial::of(a, e), Rational(1));
  return p;
}

Poly Poly::term(Monomial m, Rational c) {
  Poly p;
  if (!c.is_zero()) p.terms_.emplace_back(std::move(m), std::move(c));
  return p;
}

Poly Poly::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
  Poly p;
  for (auto& t : terms) {
    if (!p.terms_.empty() && p.terms_.back().first == t.first) {
      p.terms_.back().second += t.second;
      if (p.terms_.back().second.is_zero()) p.terms_.pop_back();
    } else if (!t.second.is_zero()) {
      p.terms_.push_back(std::move(t));
    }
  }
  return p;
}

bool Poly::is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].first.is_one()); }

Rational Poly::constant_term() const {
  for (const auto& [m, c] : terms_)
    if (m.is_one()) return c;
  return Rational(0);
}

Poly Poly::pow(int e) const {
  if (e < 0) {
    if (!is_monomial()) throw SymbolicError("negative power of a non-monomial polynomial");
    return Poly::term(terms_[0].first.pow(e), terms_[0].second.pow(e));
  }
  Poly result(1), base = *this;
  while (e > 0) {
    if (e & 1) result *= base;
    e >>= 1;
    if (e > 0) base *= base;
  }
  return result;
}

std::uint64_t Poly::hash() const {
  std::uint64_t h = kSeed;
  for (const auto& [m, c] : terms_) {
    h = mix(h, m.hash());
    h = mix(h, c.hash());
  }
  return h;
}

int Poly::max_jet() const {
  int mj = -1;
  for (const auto& [m, c] : terms_)
    for (const auto& f : m.factors()) mj = std::max(mj, f.atom->max_jet());
  return mj;
}

Poly Poly::operator-() const {
  Poly p = *this;
  for (auto& t : p.terms_) t.second = -t.second;
  return p;
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly p;
  p.terms_.reserve(a.terms_.size() + b.terms_.size());
  auto i = a.terms_.begin(), j = b.terms_.begin();
  while (i != a.terms_.end() || j != b.terms_.end()) {
    int c = i == a.terms_.end() ? 1 : (j == b.terms_.end() ? -1 : compare(i->first, j->first));
    if (c < 0) {
      p.terms_.push_back(*i++);
    } else if (c > 0) {
      p.terms_.push_back(*j++);
    } else {
      Rational s = i->second + j->second;
      if (!s.is_zero()) p.terms_.emplace_back(i->first, std::move(s));
      ++i;
      ++j;
    }
  }
  return p;
}

Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }

namespace {
bool reducible(const Factor& f);
}  // namespace

Poly operator*(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return Poly();
  if (a.is_constant()) return a.terms_[0].second * b;
  if (b.is_constant()) return b.terms_[0].second * a;
  std::vector<Poly::Term> terms;
  terms.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) terms.emplace_back(ma * mb, ca * cb);
  bool reduce = false;
  for (const auto& [m, c] : terms)
    for (const auto& f : m.factors()) reduce = reduce || reducible(f);
  if (!reduce) return Poly::from_terms(std::move(terms));
  // Products of square roots and of expandable norms back to canonical form.
  std::vector<Poly::Term> kept;
  Poly extra;
  for (auto& [m, c] : terms) {
    bool any = false;
    for (const auto& f : m.factors()) any = any || reducible(f);
    if (!any) {
      kept.emplace_back(std::move(m), std::move(c));
      continue;
    }
    Poly t(c);
    for (const auto& f : m.factors()) {
      if (!reducible(f))
        t = t * Poly::atom(f.atom, f.exponent);
      else if (f.atom->kind() == AtomKind::Sqrt)
        t = t * sqrt_pow(f.atom->poly(), f.exponent);
      else
        t = t * norm_pow(f.atom->base(), f.exponent);
    }
    extra += t;
  }
  return Poly::from_terms(std::move(kept)) + extra;
}

Poly operator*(const Rational& c, const Poly& p) {
  if (c.is_zero()) return Poly();
  Poly r = p;
  for (auto& t : r.terms_) t.second *= c;
  return r;
}

Poly& Poly::operator+=(const Poly& o) { return *this = *this + o; }
Poly& Poly::operator-=(const Poly& o) { return *this = *this - o; }
Poly& Poly::operator*=(const Poly& o) { return *this = *this * o; }

int compare(const Poly& a, const Poly& b) {
  std::size_t n = std::min(a.terms_.size(), b.terms_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a.terms_[i].first, b.terms_[i].first); c != 0) return c;
    if (a.terms_[i].second != b.terms_[i].second) return a.terms_[i].second < b.terms_[i].second ? -1 : 1;
  }
  if (a.terms_.size() != b.terms_.size()) return a.terms_.size() < b.terms_.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// VecPoly

VecPoly VecPoly::atom(Atom v) {
  if (!v->is_vector()) throw SymbolicError("scalar atom used as a vector");
  VecPoly r;
  r.terms_.emplace_back(v, Poly(1));
  return r;
}

VecPoly VecPoly::from_terms(std::vector<Term> terms) {
  std::stable_sort(terms.begin(), terms.end(),
                   [](const Term& a, const Term& b) { return compare_atoms(a.first, b.first) < 0; });
  VecPoly r;
  for (auto& t : terms) {
    if (!r.terms_.empty() && r.terms_.back().first == t.first) {
      r.terms_.back().second += t.second;
      if (r.terms_.back().second.is_zero()) r.terms_.pop_back();
    } else if (!t.second.is_zero()) {
      r.terms_.push_back(std::move(t));
    }
  }
  return r;
}

std::optional<Atom> VecPoly::single_atom() const {
  if (terms_.size() == 1 && terms_[0].second == Poly(1)) return terms_[0].first;
  return std::nullopt;
}

std::uint64_t VecPoly::hash() const {
  std::uint64_t h = kSeed ^ 0x5555;
  for (const auto& [a, p] : terms_) {
    h = mix(h, a->hash());
    h = mix(h, p.hash());
  }
  return h;
}

int VecPoly::max_jet() const {
  int mj = -1;
  for (const auto& [a, p] : terms_) mj = std::max({mj, a->max_jet(), p.max_jet()});
  return mj;
}

VecPoly VecPoly::operator-() const {
  VecPoly r = *this;
  for (auto& t : r.terms_) t.second = -t.second;
  return r;
}

VecPoly operator+(const VecPoly& a, const VecPoly& b) {
  VecPoly r;
  auto i = a.terms_.begin(), j = b.terms_.begin();
  while (i != a.terms_.end() || j != b.terms_.end()) {
    int c = i == a.terms_.end() ? 1 : (j == b.terms_.end() ? -1 : compare_atoms(i->first, j->first));
    if (c < 0) {
      r.terms_.push_back(*i++);
    } else if (c > 0) {
      r.terms_.push_back(*j++);
    } else {
      Poly s = i->second + j->second;
      if (!s.is_zero()) r.terms_.emplace_back(i->first, std::move(s));
      ++i;
      ++j;
    }
  }
  return r;
}

VecPoly operator-(const VecPoly& a, const VecPoly& b) { return a + (-b); }

VecPoly operator*(const Poly& c, const VecPoly& v) {
  if (c.is_zero()) return VecPoly();
  VecPoly r;
  for (const auto& [a, p] : v.terms_) {
    Poly q = c * p;
    if (!q.is_zero()) r.terms_.emplace_back(a, std::move(q));
  }
  return r;
}

VecPoly operator*(const Rational& c, const VecPoly& v) {
  if (c.is_zero()) return VecPoly();
  VecPoly r = v;
  for (auto& t : r.terms_) t.second = c * t.second;
  return r;
}

VecPoly& VecPoly::operator+=(const VecPoly& o) { return *this = *this + o; }
VecPoly& VecPoly::operator-=(const VecPoly& o) { return *this = *this - o; }

int compare(const VecPoly& a, const VecPoly& b) {
  std::size_t n = std::min(a.terms_.size(), b.terms_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare_atoms(a.terms_[i].first, b.terms_[i].first); c != 0) return c;
    if (int c = compare(a.terms_[i].second, b.terms_[i].second); c != 0) return c;
  }
  if (a.terms_.size() != b.terms_.size()) return a.terms_.size() < b.terms_.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// raw atoms

namespace {

Atom raw_pot(std::string_view name, const VecPoly& base, std::vector<Atom> args) {
  Node n = NodeFactory::make(AtomKind::Pot);
  NodeFactory::set_name(n, name);
  NodeFactory::set_order(n, static_cast<int>(args.size()));
  NodeFactory::set_base(n, base);
  NodeFactory::set_args(n, std::move(args));
  return NodeFactory::intern(std::move(n));
}

Atom raw_grad(std::string_view name, const VecPoly& base, std::vector<Atom> args) {
  std::sort(args.begin(), args.end(), AtomLess{});
  Node n = NodeFactory::make(AtomKind::Grad);
  NodeFactory::set_name(n, name);
  NodeFactory::set_order(n, static_cast<int>(args.size()) + 1);
  NodeFactory::set_base(n, base);
  NodeFactory::set_args(n, std::move(args));
  return NodeFactory::intern(std::move(n));
}

Atom raw_bilin(Atom a, const MatrixChain& chain, Atom b) {
  Node n = NodeFactory::make(AtomKind::Bilin);
  NodeFactory::set_args(n, {a, b});
  NodeFactory::set_chain(n, chain);
  return NodeFactory::intern(std::move(n));
}

Atom raw_apply(const MatrixChain& chain, Atom v) {
  Node n = NodeFactory::make(AtomKind::Apply);
  NodeFactory::set_args(n, {v});
  NodeFactory::set_chain(n, chain);
  return NodeFactory::intern(std::move(n));
}

Atom raw_norm(const VecPoly& v) {
  Node n = NodeFactory::make(AtomKind::Norm);
  NodeFactory::set_base(n, v);
  return NodeFactory::intern(std::move(n));
}

Atom raw_poly_atom(AtomKind kind, const Poly& p) {
  Node n = NodeFactory::make(kind);
  NodeFactory::set_poly(n, p);
  return NodeFactory::intern(std::move(n));
}

// Apply a chain to a single vector atom, returning (atom, sign).
std::pair<Atom, int> apply_atom(const MatrixChain& chain, Atom v) {
  if (chain.empty()) return {v, 1};
  if (v->kind() == AtomKind::Apply) {
    MatrixChain c = compose(chain, v->chain());
    if (c.empty()) return {v->args()[0], 1};
    return {raw_apply(c, v->args()[0]), 1};
  }
  return {raw_apply(chain, v), 1};
}

// Canonical potential atom: the contraction tree is re-rooted at every
// potential vertex and the least resulting atom is kept.
struct PotCanon {
  Atom best = nullptr;
  int sign = 1;

  void consider(Atom cand, int s) {
    if (best == nullptr || compare_atoms(cand, best) < 0) {
      best = cand;
      sign = s;
    }
  }

  void explore(const std::string& name, const VecPoly& base, const std::vector<Atom>& args, Atom parent, int s) {
    for (std::size_t i = 0; i < args.size(); ++i) {
      Atom arg = args[i];
      if (arg == parent) continue;
      MatrixChain chain;
      Atom g = arg;
      if (arg->kind() == AtomKind::Apply && arg->args()[0]->kind() == AtomKind::Grad) {
        chain = arg->chain();
        g = arg->args()[0];
      }
      if (g->kind() != AtomKind::Grad) continue;
      std::vector<Atom> rest;
      for (std::size_t j = 0; j < args.size(); ++j)
        if (j != i) rest.push_back(args[j]);
      Atom up = raw_grad(name, base, rest);
      auto [tchain, tsign] = transpose(chain);
      auto [newarg, asign] = apply_atom(tchain, up);
      std::vector<Atom> nargs = g->args();
      nargs.push_back(newarg);
      std::sort(nargs.begin(), nargs.end(), AtomLess{});
      int ns = s * tsign * asign;
      consider(raw_pot(g->name(), g->base(), nargs), ns);
      explore(g->name(), g->base(), nargs, newarg, ns);
    }
  }
};

std::pair<Atom, int> canonical_pot(std::string_view name, const VecPoly& base, std::vector<Atom> args) {
  std::sort(args.begin(), args.end(), AtomLess{});
  PotCanon canon;
  canon.consider(raw_pot(name, base, args), 1);
  canon.explore(std::string(name), base, args, nullptr, 1);
  return {canon.best, canon.sign};
}

// Calls fn(coefficient, atoms) for every term of the multilinear expansion.
void expand_multilinear(std::span<const VecPoly> args,
                        const std::function<void(const Poly&, const std::vector<Atom>&)>& fn) {
  std::vector<Atom> atoms(args.size());
  std::function<void(std::size_t, const Poly&)> rec = [&](std::size_t i, const Poly& coef) {
    if (i == args.size()) {
      fn(coef, atoms);
      return;
    }
    for (const auto& [a, p] : args[i].terms()) {
      atoms[i] = a;
      rec(i + 1, coef * p);
    }
  };
  rec(0, Poly(1));
}

Poly bilin_atoms(Atom a, MatrixChain chain, Atom b);

}  // namespace

// ---------------------------------------------------------------------------
// symbols

Atom param_atom(std::string_view name) {
  Node n = NodeFactory::make(AtomKind::Param);
  NodeFactory::set_name(n, name);
  return NodeFactory::intern(std::move(n));
}

Atom comp_jet_atom(int component, int order) {
  if (component < 0 || order < 0) throw SymbolicError("negative jet component or order");
  Node n = NodeFactory::make(AtomKind::CompJet);
  NodeFactory::set_index(n, component);
  NodeFactory::set_order(n, order);
  return NodeFactory::intern(std::move(n));
}

Atom jet_atom(int order) {
  if (order < 0) throw SymbolicError("negative jet order");
  Node n = NodeFactory::make(AtomKind::Jet);
  NodeFactory::set_order(n, order);
  return NodeFactory::intern(std::move(n));
}

Atom vec_symbol_atom(std::string_view name) {
  Node n = NodeFactory::make(AtomKind::VecSym);
  NodeFactory::set_name(n, name);
  return NodeFactory::intern(std::move(n));
}

Atom basis_atom(int index) {
  if (index < 0) throw SymbolicError("negative basis index");
  Node n = NodeFactory::make(AtomKind::Basis);
  NodeFactory::set_index(n, index);
  return NodeFactory::intern(std::move(n));
}

Poly param(std::string_view name) { return Poly::atom(param_atom(name)); }
Poly comp_jet(int component, int order) { return Poly::atom(comp_jet_atom(component, order)); }
VecPoly jet(int order) { return VecPoly::atom(jet_atom(order)); }
VecPoly vec_symbol(std::string_view name) { return VecPoly::atom(vec_symbol_atom(name)); }
VecPoly basis(int index) { return VecPoly::atom(basis_atom(index)); }

// ---------------------------------------------------------------------------
// matrix chains

MatrixFactor matrix(std::string_view name, Symmetry symmetry) {
  MatrixFactor f;
  f.name = std::string(name);
  f.symmetry = symmetry;
  return f;
}

std::pair<MatrixChain, int> transpose(const MatrixChain& chain) {
  MatrixChain t(chain.rbegin(), chain.rend());
  int sign = 1;
  for (auto& f : t) {
    if (f.symmetry == Symmetry::Antisymmetric) sign = -sign;
    if (f.symmetry == Symmetry::General) f.transposed = !f.transposed;
  }
  return {t, sign};
}

MatrixChain invert(const MatrixChain& chain) {
  MatrixChain t(chain.rbegin(), chain.rend());
  for (auto& f : t) f.inverse = !f.inverse;
  return t;
}

MatrixChain compose(const MatrixChain& outer, const MatrixChain& inner) {
  MatrixChain out;
  auto push = [&out](const MatrixFactor& f) {
    if (!out.empty()) {
      const MatrixFactor& top = out.back();
      if (top.name == f.name && top.symmetry == f.symmetry && top.transposed == f.transposed &&
          top.inverse != f.inverse) {
        out.pop_back();
        return;
      }
    }
    out.push_back(f);
  };
  for (const auto& f : outer) push(f);
  for (const auto& f : inner) push(f);
  return out;
}

// ---------------------------------------------------------------------------
// composite constructors

Poly potential(std::string_view name, const VecPoly& base, std::span<const VecPoly> args) {
  std::vector<Poly::Term> terms;
  expand_multilinear(args, [&](const Poly& coef, const std::vector<Atom>& atoms) {
    auto [atom, sign] = canonical_pot(name, base, atoms);
    Poly t = coef * Poly::atom(atom);
    if (sign < 0) t = -t;
    for (auto& term : t.terms()) terms.push_back(term);
  });
  return Poly::from_terms(std::move(terms));
}

VecPoly potential_gradient(std::string_view name, const VecPoly& base, std::span<const VecPoly> args) {
  std::vector<VecPoly::Term> terms;
  expand_multilinear(args, [&](const Poly& coef, const std::vector<Atom>& atoms) {
    terms.emplace_back(raw_grad(name, base, atoms), coef);
  });
  return VecPoly::from_terms(std::move(terms));
}

VecPoly apply(const MatrixChain& chain, const VecPoly& v) {
  if (chain.empty()) return v;
  std::vector<VecPoly::Term> terms;
  for (const auto& [a, p] : v.terms()) {
    auto [atom, sign] = apply_atom(chain, a);
    terms.emplace_back(atom, sign < 0 ? -p : p);
  }
  return VecPoly::from_terms(std::move(terms));
}

namespace {

Poly bilin_atoms(Atom a, MatrixChain chain, Atom b) {
  int sign = 1;
  if (b->kind() == AtomKind::Apply) {
    chain = compose(chain, b->chain());
    b = b->args()[0];
  }
  if (a->kind() == AtomKind::Apply) {
    auto [t, s] = transpose(a->chain());
    chain = compose(t, chain);
    sign *= s;
    a = a->args()[0];
  }
  if (b->kind() == AtomKind::Grad) {
    auto [t, s] = transpose(chain);
    std::vector<VecPoly> args;
    for (Atom x : b->args()) args.push_back(VecPoly::atom(x));
    args.push_back(modlag::apply(t, VecPoly::atom(a)));
    return Rational(sign * s) * potential(b->name(), b->base(), args);
  }
  if (a->kind() == AtomKind::Grad) {
    std::vector<VecPoly> args;
    for (Atom x : a->args()) args.push_back(VecPoly::atom(x));
    args.push_back(modlag::apply(chain, VecPoly::atom(b)));
    return Rational(sign) * potential(a->name(), a->base(), args);
  }
  if (chain.empty()) {
    if (a->kind() == AtomKind::Basis && b->kind() == AtomKind::Basis) return Poly(a == b ? sign : 0);
    if (a == b) return Rational(sign) * Poly::atom(raw_norm(VecPoly::atom(a)), 2);
    if (compare_atoms(b, a) < 0) std::swap(a, b);
    return Rational(sign) * Poly::atom(raw_bilin(a, chain, b));
  }
  auto [t, s] = transpose(chain);
  int c = compare_atoms(a, b);
  if (c == 0) c = compare_chain(chain, t);
  if (c == 0) {
    if (s < 0) return Poly();
    return Rational(sign) * Poly::atom(raw_bilin(a, chain, b));
  }
  if (c < 0) return Rational(sign) * Poly::atom(raw_bilin(a, chain, b));
  return Rational(sign * s) * Poly::atom(raw_bilin(b, t, a));
}

}  // namespace

Poly bilinear(const VecPoly& a, const MatrixChain& chain, const VecPoly& b) {
  Poly out;
  for (const auto& [x, p] : a.terms())
    for (const auto& [y, q] : b.terms()) out += (p * q) * bilin_atoms(x, chain, y);
  return out;
}

Poly inner(const VecPoly& a, const VecPoly& b) { return bilinear(a, {}, b); }

namespace {

// Norms of sums, of gradients and of matrix images are expanded for even
// positive exponents; only these reduce.
bool norm_expands(Atom n) {
  const VecPoly& b = n->base();
  if (b.terms().size() != 1 || !b.terms()[0].second.is_constant()) return true;
  AtomKind k = b.terms()[0].first->kind();
  return k == AtomKind::Grad || k == AtomKind::Apply;
}

bool reducible(const Factor& f) {
  if (f.atom->kind() == AtomKind::Sqrt) return f.exponent >= 2 || f.exponent <= -2;
  if (f.atom->kind() == AtomKind::Norm) return f.exponent >= 2 && norm_expands(f.atom);
  return false;
}

}  // namespace

Poly norm_pow(const VecPoly& v, int exponent) {
  if (v.is_zero()) {
    if (exponent > 0) return Poly();
    throw SymbolicError("negative power of the norm of a zero vector");
  }
  if (exponent == 0) return Poly(1);
  Rational c(1);
  VecPoly w = v;
  if (v.terms().size() == 1 && v.terms()[0].second.is_constant()) {
    Atom a = v.terms()[0].first;
    c = v.terms()[0].second.constant_term().abs().pow(exponent);
    if (a->kind() == AtomKind::Basis) return Poly(c);
    w = VecPoly::atom(a);
  } else if (w.terms()[0].second.terms()[0].second.sign() < 0) {
    w = -w;
  }
  Atom n = raw_norm(w);
  if (exponent >= 2 && norm_expands(n)) {
    Poly r = c * power(inner(w, w), exponent / 2);
    return exponent % 2 ? r * Poly::atom(n) : r;
  }
  return c * Poly::atom(n, exponent);
}

Poly inverse(const Poly& p) {
  if (p.is_zero()) throw SymbolicError("division by zero");
  if (p.is_monomial()) return p.pow(-1);
  Rational c = p.terms()[0].second;
  return c.inverse() * Poly::atom(raw_poly_atom(AtomKind::Inv, c.inverse() * p));
}

Poly power(const Poly& p, int exponent) {
  if (exponent >= 0) return p.pow(exponent);
  return inverse(p).pow(-exponent);
}

namespace {

std::optional<Rational> rational_sqrt(const Rational& c) {
  if (c.sign() < 0) return std::nullopt;
  mpz_class n(c.value().get_num()), d(c.value().get_den());
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  return Rational(mpq_class(rn, rd));
}

}  // namespace

Poly sqrt_pow(const Poly& p, int exponent) {
  if (exponent == 0) return Poly(1);
  if (exponent % 2 == 0) return power(p, exponent / 2);
  if (p.is_zero()) {
    if (exponent > 0) return Poly();
    throw SymbolicError("division by zero");
  }
  if (p.is_monomial()) {
    const auto& [m, c] = p.terms()[0];
    auto rc = rational_sqrt(c);
    bool even = std::all_of(m.factors().begin(), m.factors().end(),
                            [](const Factor& f) { return f.exponent % 2 == 0; });
    if (rc && even) {
      Monomial r;
      for (const auto& f : m.factors()) r = r * Monomial::of(f.atom, f.exponent / 2);
      return power(Poly::term(r, *rc), exponent);
    }
  }
  const int q = exponent / 2;
  Poly r = Poly::atom(raw_poly_atom(AtomKind::Sqrt, p), exponent - 2 * q);
  return q ? power(p, q) * r : r;
}

// ---------------------------------------------------------------------------
// Expr

const Poly& Expr::scalar() const {
  if (!is_scalar()) throw SymbolicError("expected a scalar expression");
  return s_;
}

const VecPoly& Expr::vector() const {
  if (!is_vector()) throw SymbolicError("expected a vector expression");
  return v_;
}

Expr Expr::operator-() const { return is_scalar() ? Expr(-s_) : Expr(-v_); }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.kind() != b.kind()) throw SymbolicError("adding a scalar and a vector");
  return a.is_scalar() ? Expr(a.s_ + b.s_) : Expr(a.v_ + b.v_);
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_scalar() && b.is_scalar()) return Expr(a.s_ * b.s_);
  if (a.is_scalar()) return Expr(a.s_ * b.v_);
  if (b.is_scalar()) return Expr(b.s_ * a.v_);
  throw SymbolicError("product of two vectors; use dot()");
}

Expr operator*(const Rational& c, const Expr& e) { return e.is_scalar() ? Expr(c * e.s_) : Expr(c * e.v_); }

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind() != b.kind()) return false;
  return a.is_scalar() ? a.s_ == b.s_ : a.v_ == b.v_;
}

std::vector<Atom> symbols_of(const Poly& p) {
  std::vector<Atom> out;
  add_symbols(out, p);
  std::sort(out.begin(), out.end(), AtomLess{});
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Atom> symbols_of(const VecPoly& v) {
  std::vector<Atom> out;
  add_symbols(out, v);
  std::sort(out.begin(), out.end(), AtomLess{});
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Atom> symbols_of(const Expr& e) { return e.is_scalar() ? symbols_of(e.scalar()) : symbols_of(e.vector()); }

bool depends_on(const Expr& e, Atom symbol) {
  auto s = symbols_of(e);
  return std::binary_search(s.begin(), s.end(), symbol, AtomLess{});
}

}  // namespace modlag

#include "modlag/series.hpp"

#include "modlag/calculus.hpp"
#include "modlag/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace modlag {

namespace {

Expr zero_of(Expr::Kind kind) { return kind == Expr::Kind::Scalar ? Expr(Poly()) : Expr(VecPoly()); }

int sat_add(int a, int b) {
  if (a >= HSeries::kExact || b >= HSeries::kExact) return HSeries::kExact;
  return std::min(a + b, HSeries::kExact);
}

}  // namespace

// ---------------------------------------------------------------------------
// HSeries

HSeries::HSeries(Expr::Kind kind, int order) : kind_(kind), order_(order) {
  if (order < 0) throw SymbolicError("negative series order");
}

HSeries HSeries::constant(const Expr& e, int order) {
  HSeries s(e.kind(), order);
  s.coeffs_.push_back(e);
  s.trim();
  return s;
}

HSeries HSeries::from_coefficients(std::vector<Expr> coeffs, int order) {
  if (coeffs.empty()) throw SymbolicError("series without coefficients");
  HSeries s(coeffs[0].kind(), order);
  for (auto& c : coeffs)
    if (c.kind() != s.kind_) throw SymbolicError("mixed scalar and vector series coefficients");
  if (static_cast<int>(coeffs.size()) > order + 1 && order < kExact) coeffs.resize(order + 1);
  s.coeffs_ = std::move(coeffs);
  s.trim();
  return s;
}

void HSeries::trim() {
  while (!coeffs_.empty() && coeffs_.back().is_zero()) coeffs_.pop_back();
}

Expr HSeries::coeff(int i) const {
  if (i < 0 || i > order_) throw SymbolicError("series coefficient beyond the truncation order");
  if (i < static_cast<int>(coeffs_.size())) return coeffs_[i];
  return zero_of(kind_);
}

int HSeries::max_jet() const {
  int mj = -1;
  for (const auto& c : coeffs_) mj = std::max(mj, c.max_jet());
  return mj;
}

HSeries HSeries::truncate(int k) const {
  if (k > order_) throw SymbolicError("cannot truncate a series above its order");
  HSeries s(kind_, k);
  s.coeffs_.assign(coeffs_.begin(), coeffs_.begin() + std::min<std::size_t>(coeffs_.size(), k + 1));
  s.trim();
  return s;
}

HSeries HSeries::times_h(int m) const {
  if (m < 0) throw SymbolicError("negative shift of a series");
  HSeries s(kind_, sat_add(order_, m));
  if (!coeffs_.empty()) {
    s.coeffs_.assign(m, zero_of(kind_));
    s.coeffs_.insert(s.coeffs_.end(), coeffs_.begin(), coeffs_.end());
  }
  return s;
}

HSeries HSeries::map(const std::function<Expr(const Expr&)>& fn) const {
  std::vector<Expr> out;
  for (int i = 0; i < size(); ++i) out.push_back(fn(coeffs_[i]));
  if (out.empty()) out.push_back(fn(zero_of(kind_)));
  return from_coefficients(std::move(out), order_);
}

HSeries HSeries::operator-() const {
  HSeries s = *this;
  for (auto& c : s.coeffs_) c = -c;
  return s;
}

HSeries operator+(const HSeries& a, const HSeries& b) {
  if (a.kind_ != b.kind_) throw SymbolicError("adding scalar and vector series");
  HSeries s(a.kind_, std::min(a.order_, b.order_));
  int n = std::min(std::max(a.size(), b.size()), s.order_ + 1);
  for (int i = 0; i < n; ++i) {
    Expr x = i < a.size() ? a.coeffs_[i] : zero_of(a.kind_);
    if (i < b.size()) x = x + b.coeffs_[i];
    s.coeffs_.push_back(x);
  }
  s.trim();
  return s;
}

HSeries operator-(const HSeries& a, const HSeries& b) { return a + (-b); }

HSeries operator*(const HSeries& a, const HSeries& b) {
  if (!a.is_scalar() && !b.is_scalar()) throw SymbolicError("product of two vector series");
  Expr::Kind kind = a.is_scalar() ? b.kind_ : a.kind_;
  HSeries s(kind, std::min(a.order_, b.order_));
  if (a.coeffs_.empty() || b.coeffs_.empty()) return s;
  int n = std::min(a.size() + b.size() - 1, s.order_ + 1);
  for (int e = 0; e < n; ++e) {
    Expr acc = zero_of(kind);
    for (int i = std::max(0, e - b.size() + 1); i <= std::min(e, a.size() - 1); ++i)
      acc = acc + a.coeffs_[i] * b.coeffs_[e - i];
    s.coeffs_.push_back(acc);
  }
  s.trim();
  return s;
}

HSeries operator*(const Expr& c, const HSeries& s) { return HSeries::constant(c) * s; }

bool operator==(const HSeries& a, const HSeries& b) {
  return a.kind_ == b.kind_ && a.order_ == b.order_ && a.coeffs_ == b.coeffs_;
}

HSeries series_add(const HSeries& a, const HSeries& b) { return a + b; }
HSeries series_mul(const HSeries& a, const HSeries& b) { return a * b; }
HSeries series_truncate(const HSeries& a, int k) { return a.truncate(k); }

// ---------------------------------------------------------------------------
// bindings

SeriesBindings& SeriesBindings::bind(Atom symbol, SeriesGenerator gen) {
  if (!symbol->is_symbol()) throw SymbolicError("series binding for a non-symbol");
  gens_.insert_or_assign(symbol, std::move(gen));
  return *this;
}

SeriesBindings& SeriesBindings::bind(Atom symbol, HSeries fixed) {
  if (symbol->is_vector() != !fixed.is_scalar()) throw SymbolicError("series binding changes the kind of a symbol");
  return bind(symbol, [s = std::move(fixed)](int) { return s; });
}

const SeriesGenerator* SeriesBindings::find(Atom symbol) const {
  auto it = gens_.find(symbol);
  return it == gens_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Laurent series evaluation

namespace {

constexpr long long kInf = 1LL << 40;

long long add_sat(long long a, long long b) {
  if (a >= kInf || b >= kInf) return kInf;
  return std::min(a + b, kInf);
}

// Coefficients for exponents val .. val + c.size() - 1, exact through prec.
template <class C>
struct LS {
  long long val = kInf;
  std::vector<C> c;
  long long prec = kInf;

  C at(long long e) const {
    if (e < val || e >= val + static_cast<long long>(c.size())) return C();
    return c[static_cast<std::size_t>(e - val)];
  }
  long long top() const { return c.empty() ? val - 1 : val + static_cast<long long>(c.size()) - 1; }

  void normalize() {
    std::size_t lead = 0;
    while (lead < c.size() && c[lead].is_zero()) ++lead;
    if (lead == c.size()) {
      c.clear();
      val = prec >= kInf ? kInf : prec + 1;
      return;
    }
    c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead));
    val += static_cast<long long>(lead);
    while (!c.empty() && c.back().is_zero()) c.pop_back();
  }
};

template <class C>
LS<C> constant_ls(C x) {
  LS<C> s;
  s.val = 0;
  s.c.push_back(std::move(x));
  s.prec = kInf;
  s.normalize();
  return s;
}

// Builds a series from a generator: coefficients for val..limit.
// Precision claimed for a result computed through `cap` whose nonzero terms
// could reach `true_top`.
long long clamp_prec(long long prec, long long cap, long long true_top) {
  if (prec >= kInf && true_top <= cap) return kInf;
  return std::min(prec, cap);
}

// Builds a series from a generator: coefficients for val..min(prec, cap).
template <class C, class F>
LS<C> build(long long val, long long prec, long long cap, long long true_top, F coeff) {
  LS<C> s;
  s.val = val;
  long long limit = std::min(prec, cap);
  s.prec = clamp_prec(prec, cap, true_top);
  for (long long e = val; e <= limit; ++e) s.c.push_back(coeff(e));
  s.normalize();
  return s;
}

template <class C>
LS<C> add(const LS<C>& a, const LS<C>& b, long long cap) {
  long long val = std::min(a.val, b.val);
  long long prec = std::min(a.prec, b.prec);
  if (val >= kInf) return a;
  return build<C>(val, prec, cap, std::max(a.top(), b.top()), [&](long long e) { return a.at(e) + b.at(e); });
}

template <class B>
LS<B> mul(const LS<Poly>& a, const LS<B>& b, long long cap) {
  long long val = add_sat(a.val, b.val);
  long long prec = std::min(add_sat(a.prec, b.val), add_sat(b.prec, a.val));
  if (val >= kInf) {
    LS<B> z;
    z.prec = prec >= kInf ? kInf : std::min(prec, cap);
    z.val = z.prec >= kInf ? kInf : z.prec + 1;
    return z;
  }
  return build<B>(val, prec, cap, add_sat(a.top(), b.top()), [&](long long e) {
    B acc;
    for (long long i = a.val; i <= a.top(); ++i) {
      long long j = e - i;
      if (j < b.val || j > b.top()) continue;
      const Poly& x = a.c[static_cast<std::size_t>(i - a.val)];
      if (x.is_zero()) continue;
      acc += x * b.c[static_cast<std::size_t>(j - b.val)];
    }
    return acc;
  });
}

template <class C>
LS<C> scale(const LS<C>& a, const Poly& k) {
  LS<C> s = a;
  for (auto& x : s.c) x = k * x;
  s.normalize();
  return s;
}

template <class C>
LS<C> shift(LS<C> a, long long m) {
  if (a.val < kInf) a.val += m;
  if (a.prec < kInf) a.prec += m;
  return a;
}

// Evaluates f over all argument tuples of a multilinear map.  Result exponent
// is the sum of the argument exponents.
template <class R, class F>
LS<R> multilinear(const std::vector<const LS<VecPoly>*>& args, long long cap, F f) {
  long long val = 0;
  for (auto* a : args) val = add_sat(val, a->val);
  long long prec = kInf;
  for (std::size_t i = 0; i < args.size(); ++i) {
    long long others = 0;
    for (std::size_t j = 0; j < args.size(); ++j)
      if (j != i) others = add_sat(others, args[j]->val);
    prec = std::min(prec, add_sat(args[i]->prec, others));
  }
  LS<R> out;
  long long true_top = 0;
  for (auto* a : args) true_top = add_sat(true_top, a->top());
  out.prec = clamp_prec(prec, cap, true_top);
  if (val >= kInf) {
    out.val = out.prec >= kInf ? kInf : out.prec + 1;
    return out;
  }
  long long limit = std::min(prec, cap);
  out.val = val;
  out.c.assign(static_cast<std::size_t>(std::max(0LL, limit - val + 1)), R());
  std::vector<const VecPoly*> picked(args.size());
  std::vector<long long> exps(args.size());
  // Remaining budget above the minimal exponents.
  auto rec = [&](auto& self, std::size_t i, long long budget) -> void {
    if (i == args.size()) {
      long long e = val + (limit - val - budget);
      out.c[static_cast<std::size_t>(e - val)] += f(picked);
      return;
    }
    const auto* a = args[i];
    for (long long k = 0; k <= budget && a->val + k <= a->top(); ++k) {
      const VecPoly& x = a->c[static_cast<std::size_t>(k)];
      if (x.is_zero()) continue;
      picked[i] = &x;
      self(self, i + 1, budget - k);
    }
  };
  if (limit >= val) rec(rec, 0, limit - val);
  out.normalize();
  return out;
}

class Evaluator {
 public:
  Evaluator(const SeriesBindings& bindings, long long cap) : b_(bindings), cap_(cap) {}

  LS<Poly> poly(const Poly& p) {
    LS<Poly> acc = constant_ls(Poly());
    Poly constant_part;
    for (const auto& [m, c] : p.terms()) {
      Monomial fixed;
      std::vector<Factor> live;
      for (const auto& f : m.factors()) {
        if (bound(f.atom))
          live.push_back(f);
        else
          fixed = fixed * Monomial::of(f.atom, f.exponent);
      }
      if (live.empty()) {
        constant_part += Poly::term(m, c);
        continue;
      }
      LS<Poly> t = constant_ls(Poly::term(fixed, c));
      for (const auto& f : live) t = mul(t, factor(f.atom, f.exponent), cap_);
      acc = add(acc, t, cap_);
    }
    return add(acc, constant_ls(constant_part), cap_);
  }

  LS<VecPoly> vec(const VecPoly& v) {
    LS<VecPoly> acc = constant_ls(VecPoly());
    VecPoly constant_part;
    for (const auto& [a, p] : v.terms()) {
      if (!bound(a)) {
        bool live = false;
        for (const auto& [m, c] : p.terms())
          for (const auto& f : m.factors()) live = live || bound(f.atom);
        if (!live) {
          constant_part += p * VecPoly::atom(a);
          continue;
        }
        acc = add(acc, mul(poly(p), constant_ls(VecPoly::atom(a)), cap_), cap_);
        continue;
      }
      acc = add(acc, mul(poly(p), vector_atom(a), cap_), cap_);
    }
    return add(acc, constant_ls(constant_part), cap_);
  }

 private:
  bool bound(Atom a) {
    auto it = bound_memo_.find(a);
    if (it != bound_memo_.end()) return it->second;
    bool r = false;
    if (a->is_symbol()) {
      r = b_.find(a) != nullptr;
    } else {
      for (const auto& [s, g] : b_.all())
        if (a->depends_on(s)) {
          r = true;
          break;
        }
    }
    bound_memo_.emplace(a, r);
    return r;
  }

  template <class C>
  LS<C> from_hseries(const HSeries& s) {
    LS<C> out;
    out.val = 0;
    long long order = s.is_exact() ? kInf : s.order();
    // Keep the leading term even above the cap; negative powers need it.
    long long reach = std::max<long long>(cap_, 0);
    long long lead = 0;
    while (lead < s.size() && lead <= order && s.coeff(static_cast<int>(lead)).is_zero()) ++lead;
    if (lead < s.size() && lead <= order) reach = std::max(reach, lead);
    out.prec = clamp_prec(order, reach, s.size() - 1);
    long long limit = std::min<long long>(order, reach);
    for (long long i = 0; i <= limit && i < s.size(); ++i) {
      if constexpr (std::is_same_v<C, Poly>)
        out.c.push_back(s.coeff(static_cast<int>(i)).scalar());
      else
        out.c.push_back(s.coeff(static_cast<int>(i)).vector());
    }
    out.normalize();
    return out;
  }

  const LS<Poly>& factor(Atom a, int e) {
    auto key = std::make_pair(a, e);
    auto it = factor_memo_.find(key);
    if (it != factor_memo_.end()) return it->second;
    LS<Poly> r = compute_factor(a, e);
    return factor_memo_.emplace(key, std::move(r)).first->second;
  }

  LS<Poly> compute_factor(Atom a, int e) {
    switch (a->kind()) {
      case AtomKind::Norm: {
        LS<VecPoly> v = vec(a->base());
        if (e > 0 && e % 2 == 0) {
          LS<Poly> sq = multilinear<Poly>({&v, &v}, cap_, [](const auto& x) { return inner(*x[0], *x[1]); });
          LS<Poly> r = sq;
          for (int i = 1; i < e / 2; ++i) r = mul(r, sq, cap_);
          return r;
        }
        if (v.val < 0) throw DerivationError("norm of a series with negative powers of h");
        VecPoly v0 = v.at(0);
        if (v0.is_zero()) throw DerivationError("norm of a vector series vanishing at h = 0");
        LS<VecPoly> d = add(v, constant_ls(-v0), cap_);
        LS<Poly> cross = multilinear<Poly>({&d}, cap_, [&](const auto& x) { return inner(v0, *x[0]); });
        LS<Poly> sq = multilinear<Poly>({&d, &d}, cap_, [](const auto& x) { return inner(*x[0], *x[1]); });
        LS<Poly> eps = scale(add(scale(cross, Poly(2)), sq, cap_), norm_pow(v0, -2));
        return scale(binomial_series(eps, Rational(e, 2)), norm_pow(v0, e));
      }
      case AtomKind::Inv:
      case AtomKind::Sqrt: {
        LS<Poly> p = poly(a->poly());
        if (p.val < 0) throw DerivationError("inverse or root of a series with negative powers of h");
        Poly p0 = p.at(0);
        if (p0.is_zero()) throw DerivationError("inverse or root of a series vanishing at h = 0");
        LS<Poly> q = scale(add(p, constant_ls(-p0), cap_), inverse(p0));
        if (a->kind() == AtomKind::Inv) return scale(binomial_series(q, Rational(-e)), power(p0, -e));
        return scale(binomial_series(q, Rational(e, 2)), sqrt_pow(p0, e));
      }
      default:
        break;
    }
    if (e == 1) return atom_series(a);
    if (e > 1) {
      LS<Poly> r = factor(a, e - 1);
      return mul(r, factor(a, 1), cap_);
    }
    // Negative power of a general scalar series.
    LS<Poly> s = factor(a, 1);
    if (s.c.empty()) throw DerivationError("negative power of a series with unknown leading term");
    Poly lead = s.c[0];
    LS<Poly> q = scale(add(shift(s, -s.val), constant_ls(-lead), cap_), inverse(lead));
    LS<Poly> r = scale(binomial_series(q, Rational(e)), power(lead, e));
    return shift(r, s.val * e);
  }

  // sum_i binom(r, i) q^i for q with positive valuation.
  LS<Poly> binomial_series(const LS<Poly>& q, const Rational& r) {
    LS<Poly> acc = constant_ls(Poly(1));
    if (q.val >= kInf) return acc;
    if (q.val <= 0) throw DerivationError("binomial series argument without positive valuation");
    LS<Poly> qi = constant_ls(Poly(1));
    for (int i = 1;; ++i) {
      if (q.val * i > cap_) {
        // A terminating binomial series leaves the omitted terms exactly zero.
        bool terminates = r.is_integer() && r.sign() >= 0 && Rational(i) > r;
        if (!terminates) acc.prec = std::min(acc.prec, q.val * i - 1);
        break;
      }
      qi = mul(qi, q, cap_);
      Rational b = binomial(r, i);
      if (!b.is_zero()) acc = add(acc, scale(qi, Poly(b)), cap_);
    }
    acc.normalize();
    return acc;
  }

  LS<Poly> atom_series(Atom a) {
    switch (a->kind()) {
      case AtomKind::Param:
      case AtomKind::CompJet: {
        const SeriesGenerator* g = b_.find(a);
        if (!g) return constant_ls(Poly::atom(a));
        HSeries s = (*g)(static_cast<int>(std::max<long long>(cap_, 0)));
        if (!s.is_scalar()) throw SymbolicError("vector series bound to a scalar symbol");
        return from_hseries<Poly>(s);
      }
      case AtomKind::Pot: {
        std::vector<LS<VecPoly>> args;
        for (Atom x : a->args()) args.push_back(vector_atom(x));
        return taylor_potential<Poly>(a, args, [&](const VecPoly& base, const std::vector<const VecPoly*>& xs) {
          std::vector<VecPoly> v;
          for (auto* x : xs) v.push_back(*x);
          return potential(a->name(), base, v);
        });
      }
      case AtomKind::Bilin: {
        LS<VecPoly> x = vector_atom(a->args()[0]);
        LS<VecPoly> y = vector_atom(a->args()[1]);
        return multilinear<Poly>({&x, &y}, cap_,
                                 [&](const auto& v) { return bilinear(*v[0], a->chain(), *v[1]); });
      }
      default:
        throw SymbolicError("unexpected atom in scalar series evaluation");
    }
  }

  const LS<VecPoly>& vector_atom(Atom a) {
    auto it = vec_memo_.find(a);
    if (it != vec_memo_.end()) return it->second;
    LS<VecPoly> r = compute_vector(a);
    return vec_memo_.emplace(a, std::move(r)).first->second;
  }

  LS<VecPoly> compute_vector(Atom a) {
    if (!bound(a)) return constant_ls(VecPoly::atom(a));
    switch (a->kind()) {
      case AtomKind::Jet:
      case AtomKind::VecSym: {
        const SeriesGenerator* g = b_.find(a);
        HSeries s = (*g)(static_cast<int>(std::max<long long>(cap_, 0)));
        if (s.is_scalar()) throw SymbolicError("scalar series bound to a vector symbol");
        return from_hseries<VecPoly>(s);
      }
      case AtomKind::Grad: {
        std::vector<LS<VecPoly>> args;
        for (Atom x : a->args()) args.push_back(vector_atom(x));
        return taylor_potential<VecPoly>(a, args, [&](const VecPoly& base, const std::vector<const VecPoly*>& xs) {
          std::vector<VecPoly> v;
          for (auto* x : xs) v.push_back(*x);
          return potential_gradient(a->name(), base, v);
        });
      }
      case AtomKind::Apply: {
        LS<VecPoly> v = vector_atom(a->args()[0]);
        for (auto& x : v.c) x = modlag::apply(a->chain(), x);
        v.normalize();
        return v;
      }
      default:
        throw SymbolicError("unexpected atom in vector series evaluation");
    }
  }

  // sum_n 1/n! U^(k+n)_{b0}(args, d, ..., d) with base series b0 + d.
  template <class R, class F>
  LS<R> taylor_potential(Atom a, const std::vector<LS<VecPoly>>& args, F f) {
    LS<VecPoly> base = vec(a->base());
    if (base.val < 0) throw DerivationError("potential evaluated at a series with negative powers of h");
    VecPoly b0 = base.at(0);
    LS<VecPoly> d = add(base, constant_ls(-b0), cap_);
    long long arg_val = 0;
    for (const auto& x : args) arg_val = add_sat(arg_val, x.val);
    LS<R> acc;
    acc.val = kInf;
    acc.prec = kInf;
    bool first = true;
    for (int n = 0;; ++n) {
      std::vector<const LS<VecPoly>*> ptrs;
      for (const auto& x : args) ptrs.push_back(&x);
      for (int i = 0; i < n; ++i) ptrs.push_back(&d);
      long long term_val = add_sat(arg_val, n == 0 ? 0 : d.val * n);
      if (n > 0 && (d.val >= kInf || term_val > cap_)) {
        if (d.val < kInf) acc.prec = std::min(acc.prec, term_val - 1);
        if (d.prec < kInf) acc.prec = std::min(acc.prec, add_sat(arg_val, d.prec));
        break;
      }
      Rational w = factorial(n).inverse();
      LS<R> t = multilinear<R>(ptrs, cap_, [&](const auto& xs) { return w * f(b0, xs); });
      acc = first ? t : add(acc, t, cap_);
      first = false;
    }
    acc.normalize();
    return acc;
  }

  const SeriesBindings& b_;
  long long cap_;
  std::unordered_map<Atom, bool> bound_memo_;
  std::map<std::pair<Atom, int>, LS<Poly>> factor_memo_;
  std::unordered_map<Atom, LS<VecPoly>> vec_memo_;
};

template <class C>
HSeries to_hseries(const LS<C>& s, int order) {
  if (s.val < 0 && s.val <= s.top())
    throw DerivationError("negative powers of h do not cancel in series expansion");
  std::vector<Expr> coeffs;
  for (int i = 0; i <= order; ++i) coeffs.emplace_back(s.at(i));
  return HSeries::from_coefficients(std::move(coeffs), order);
}

}  // namespace

HSeries eval_series(const Expr& e, const SeriesBindings& bindings, int order) {
  if (order < 0) throw SymbolicError("negative series order");
  long long cap = order;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Evaluator ev(bindings, cap);
    if (e.is_scalar()) {
      LS<Poly> s = ev.poly(e.scalar());
      if (s.prec >= order) return to_hseries(s, order);
      cap += order - s.prec;
    } else {
      LS<VecPoly> s = ev.vec(e.vector());
      if (s.prec >= order) return to_hseries(s, order);
      cap += order - s.prec;
    }
  }
  throw DerivationError("series expansion could not reach the requested order");
}

HSeries eval_series(const HSeries& s, const SeriesBindings& bindings, int order) {
  if (order > s.order()) throw DerivationError("series order exceeds the order of its input");
  HSeries acc(s.kind(), order);
  for (int i = 0; i <= order && i < s.size(); ++i) {
    Expr c = s.coeff(i);
    if (c.is_zero()) continue;
    acc = acc + eval_series(c, bindings, order - i).times_h(i).truncate(order);
  }
  return acc;
}

HSeries series_compose_inverse(const HSeries& p, Atom variable, Atom result) {
  if (p.is_scalar() || !variable->is_vector() || !result->is_vector())
    throw SymbolicError("series reversion expects vector series and symbols");
  int k = p.order();
  const VecPoly p0 = p.coeff(0).vector();
  Atom slot = vec_symbol_atom("%rev");
  Variation var;
  var.set(variable, VecPoly::atom(slot));
  if (!(derivative(p0, var) == VecPoly::atom(slot)))
    throw DerivationError("leading term of the series is not the identity in the inverted variable");
  VecPoly c0 = p0 - VecPoly::atom(variable);
  HSeries g = HSeries::constant(Expr(VecPoly::atom(result) - c0), k);
  HSeries q = HSeries::constant(Expr(VecPoly::atom(result)), k);
  for (int it = 0; it < k; ++it) {
    SeriesBindings b;
    b.bind(variable, g);
    g = g - (eval_series(p, b, k) - q);
  }
  return g;
}

}  // namespace modlag

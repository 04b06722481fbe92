#include "modlag/rational.hpp"

#include "modlag/error.hpp"

namespace modlag {

Rational::Rational(long num, long den) {
  if (den == 0) throw SymbolicError("rational with zero denominator");
  v_ = mpq_class(num, den);
  v_.canonicalize();
}

Rational::Rational(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

Rational Rational::parse(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw SymbolicError("empty rational literal");
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t decimals = s.size() - dot - 1;
    mpz_class num, den = 1;
    if (num.set_str(digits, 10) != 0) throw SymbolicError("bad decimal literal: " + s);
    for (std::size_t i = 0; i < decimals; ++i) den *= 10;
    return Rational(mpq_class(num, den));
  }
  mpq_class q;
  if (q.set_str(s, 10) != 0) throw SymbolicError("bad rational literal: " + s);
  if (q.get_den() == 0) throw SymbolicError("rational with zero denominator: " + s);
  return Rational(q);
}

Rational Rational::abs() const {
  Rational r;
  r.v_ = ::abs(v_);
  return r;
}

Rational Rational::inverse() const {
  if (is_zero()) throw SymbolicError("division by zero");
  Rational r;
  r.v_ = 1 / v_;
  return r;
}

Rational Rational::pow(int e) const {
  if (e < 0) return inverse().pow(-e);
  Rational r(1);
  mpz_pow_ui(r.v_.get_num_mpz_t(), v_.get_num_mpz_t(), static_cast<unsigned long>(e));
  mpz_pow_ui(r.v_.get_den_mpz_t(), v_.get_den_mpz_t(), static_cast<unsigned long>(e));
  return r;
}

std::string Rational::str() const { return v_.get_str(); }

std::uint64_t Rational::hash() const {
  // FNV-1a over the canonical decimal text keeps the hash platform independent.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : v_.get_str()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

Rational& Rational::operator+=(const Rational& o) {
  v_ += o.v_;
  return *this;
}
Rational& Rational::operator-=(const Rational& o) {
  v_ -= o.v_;
  return *this;
}
Rational& Rational::operator*=(const Rational& o) {
  v_ *= o.v_;
  return *this;
}
Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw SymbolicError("division by zero");
  v_ /= o.v_;
  return *this;
}
Rational Rational::operator-() const {
  Rational r;
  r.v_ = -v_;
  return r;
}

Rational factorial(int n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
  return Rational(mpq_class(f));
}

Rational binomial(const Rational& a, int k) {
  Rational r(1);
  for (int i = 0; i < k; ++i) r *= (a - Rational(i)) / Rational(i + 1);
  return r;
}

}  // namespace modlag

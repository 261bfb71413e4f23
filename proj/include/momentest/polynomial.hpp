#ifndef MOMENTEST_POLYNOMIAL_HPP
#define MOMENTEST_POLYNOMIAL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "momentest/rational.hpp"

namespace momentest {

/// Dense exponent vector over a fixed symbol table.
using Exponents = std::vector<std::uint16_t>;

inline int total_degree(const Exponents& e) {
  int d = 0;
  for (auto x : e) d += x;
  return d;
}

/// Multivariate polynomial with coefficients in `Scalar`, kept in canonical
/// form: no zero coefficients, terms ordered by exponent vector.
template <typename Scalar>
class Polynomial {
 public:
  using Terms = std::map<Exponents, Scalar>;

  Polynomial() = default;
  explicit Polynomial(std::size_t symbols) : symbols_(symbols) {}

  static Polynomial constant(std::size_t symbols, const Scalar& c) {
    Polynomial p(symbols);
    if (c != Scalar(0)) p.terms_.emplace(Exponents(symbols, 0), c);
    return p;
  }

  static Polynomial variable(std::size_t symbols, std::size_t index) {
    Polynomial p(symbols);
    Exponents e(symbols, 0);
    e[index] = 1;
    p.terms_.emplace(std::move(e), Scalar(1));
    return p;
  }

  static Polynomial monomial(const Exponents& e, const Scalar& c = Scalar(1)) {
    Polynomial p(e.size());
    if (c != Scalar(0)) p.terms_.emplace(e, c);
    return p;
  }

  std::size_t symbols() const noexcept { return symbols_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  bool depends_on(std::size_t index) const {
    for (const auto& [e, c] : terms_)
      if (e[index] != 0) return true;
    return false;
  }

  /// Coefficient of the exponent vector `e`, zero when absent.
  Scalar coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  void add_term(const Exponents& e, const Scalar& c) {
    if (c == Scalar(0)) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Scalar(0)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& rhs) {
    for (const auto& [e, c] : rhs.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& rhs) {
    for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(const Scalar& s) {
    if (s == Scalar(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= Scalar(-1); }
  friend Polynomial operator*(Polynomial a, const Scalar& s) { return a *= s; }
  friend Polynomial operator*(const Scalar& s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out(a.symbols_);
    Exponents e(a.symbols_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        out.add_term(e, ca * cb);
      }
    }
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.symbols_ == b.symbols_ && a.terms_ == b.terms_;
  }

  /// Map coefficients into another scalar type.
  template <typename Other, typename Fn>
  Polynomial<Other> cast(Fn&& convert) const {
    Polynomial<Other> out(symbols_);
    for (const auto& [e, c] : terms_) out.add_term(e, convert(c));
    return out;
  }

  /// Horner-free direct evaluation; `values` is indexed like the exponents.
  template <typename T>
  T evaluate(std::span<const T> values) const {
    T sum(0);
    for (const auto& [e, c] : terms_) {
      T term = T(c);
      for (std::size_t i = 0; i < e.size(); ++i)
        for (std::uint16_t k = 0; k < e[i]; ++k) term *= values[i];
      sum += term;
    }
    return sum;
  }

 private:
  std::size_t symbols_ = 0;
  Terms terms_;
};

template <typename Scalar>
Polynomial<Scalar> pow(const Polynomial<Scalar>& base, int exponent) {
  auto result = Polynomial<Scalar>::constant(base.symbols(), Scalar(1));
  for (int i = 0; i < exponent; ++i) result = result * base;
  return result;
}

/// Replace symbol `index` of `p` by the polynomial `replacement`.
template <typename Scalar>
Polynomial<Scalar> substitute(const Polynomial<Scalar>& p, std::size_t index,
                              const Polynomial<Scalar>& replacement) {
  std::vector<Polynomial<Scalar>> powers{
      Polynomial<Scalar>::constant(p.symbols(), Scalar(1))};
  Polynomial<Scalar> out(p.symbols());
  for (const auto& [e, c] : p.terms()) {
    const std::uint16_t k = e[index];
    if (k == 0) {
      out.add_term(e, c);
      continue;
    }
    while (powers.size() <= k) powers.push_back(powers.back() * replacement);
    Exponents rest = e;
    rest[index] = 0;
    out += Polynomial<Scalar>::monomial(rest, c) * powers[k];
  }
  return out;
}

/// Apply x^k = x for every symbol flagged in `idempotent`.
template <typename Scalar>
Polynomial<Scalar> reduce_idempotent(const Polynomial<Scalar>& p,
                                     const std::vector<bool>& idempotent) {
  Polynomial<Scalar> out(p.symbols());
  for (const auto& [e, c] : p.terms()) {
    Exponents r = e;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (idempotent[i] && r[i] > 1) r[i] = 1;
    out.add_term(r, c);
  }
  return out;
}

/// Human-readable rendering, e.g. "x + 1/2*y^2". Symbol names are supplied by
/// the caller.
std::string to_string(const Polynomial<Rational>& p, std::span<const std::string> names);

}  // namespace momentest

#endif

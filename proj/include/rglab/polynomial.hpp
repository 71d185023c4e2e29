// Sparse multivariate polynomials over an exact (Rational) or floating
// scalar; the workhorse of the Wick calculus and the forms engine.
#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rglab/common.hpp"

namespace rglab {

// Monomial: sorted (variable, exponent) pairs, exponents > 0.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<std::uint32_t, std::uint32_t>> factors)
      : f_(std::move(factors)) {
    normalize();
  }
  static Monomial var(std::uint32_t v, std::uint32_t e = 1) {
    if (e == 0) return Monomial();
    return Monomial({{v, e}});
  }

  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& factors() const { return f_; }
  bool empty() const { return f_.empty(); }

  std::uint32_t degree() const {
    std::uint32_t d = 0;
    for (auto& [v, e] : f_) d += e;
    return d;
  }

  std::uint32_t exponent(std::uint32_t v) const {
    for (auto& [vv, e] : f_)
      if (vv == v) return e;
    return 0;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r;
    size_t i = 0, j = 0;
    while (i < f_.size() || j < o.f_.size()) {
      if (j == o.f_.size() || (i < f_.size() && f_[i].first < o.f_[j].first))
        r.f_.push_back(f_[i++]);
      else if (i == f_.size() || o.f_[j].first < f_[i].first)
        r.f_.push_back(o.f_[j++]);
      else {
        r.f_.push_back({f_[i].first, f_[i].second + o.f_[j].second});
        ++i;
        ++j;
      }
    }
    return r;
  }

  // d/dx_v: returns (multiplier, reduced monomial); multiplier 0 if absent.
  std::pair<std::uint32_t, Monomial> derivative(std::uint32_t v) const {
    Monomial r = *this;
    for (auto& [vv, e] : r.f_) {
      if (vv == v) {
        std::uint32_t mult = e;
        if (--e == 0) {
          r.normalize();
        }
        return {mult, r};
      }
    }
    return {0, Monomial()};
  }

  bool operator<(const Monomial& o) const { return f_ < o.f_; }
  bool operator==(const Monomial& o) const { return f_ == o.f_; }

 private:
  void normalize() {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (auto& [v, e] : f_)
      if (e > 0) out.push_back({v, e});
    for (size_t i = 1; i < out.size(); ++i)
      if (out[i - 1].first >= out[i].first) throw std::invalid_argument("Monomial: unsorted factors");
    f_ = std::move(out);
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> f_;
};

template <class S>
class Polynomial {
 public:
  using Terms = std::map<Monomial, S>;

  Polynomial() = default;
  explicit Polynomial(const S& c) {
    if (!(c == S(0))) t_[Monomial()] = c;
  }
  static Polynomial variable(std::uint32_t v, std::uint32_t e = 1) {
    Polynomial p;
    p.t_[Monomial::var(v, e)] = S(1);
    return p;
  }
  static Polynomial term(const S& c, const Monomial& m) {
    Polynomial p;
    if (!(c == S(0))) p.t_[m] = c;
    return p;
  }

  const Terms& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }

  std::uint32_t degree() const {
    std::uint32_t d = 0;
    for (auto& [m, c] : t_) d = std::max(d, m.degree());
    return d;
  }

  S constant_term() const {
    auto it = t_.find(Monomial());
    return it == t_.end() ? S(0) : it->second;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }
  Polynomial operator+(const Polynomial& o) const {
    Polynomial r = *this;
    r += o;
    return r;
  }
  Polynomial operator-(const Polynomial& o) const {
    Polynomial r = *this;
    r -= o;
    return r;
  }
  Polynomial operator-() const {
    Polynomial r;
    for (auto& [m, c] : t_) r.t_[m] = -c;
    return r;
  }
  Polynomial operator*(const Polynomial& o) const {
    Polynomial r;
    for (auto& [m1, c1] : t_)
      for (auto& [m2, c2] : o.t_) r.add_term(m1 * m2, c1 * c2);
    return r;
  }
  Polynomial operator*(const S& s) const {
    Polynomial r;
    if (s == S(0)) return r;
    for (auto& [m, c] : t_) r.t_[m] = c * s;
    return r;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }
  Polynomial& operator*=(const S& s) { return *this = *this * s; }

  bool operator==(const Polynomial& o) const { return t_ == o.t_; }

  Polynomial derivative(std::uint32_t v) const {
    Polynomial r;
    for (auto& [m, c] : t_) {
      auto [mult, red] = m.derivative(v);
      if (mult > 0) r.add_term(red, c * S(static_cast<long>(mult)));
    }
    return r;
  }

  template <class T>
  T evaluate(const std::vector<T>& values) const {
    T acc(0);
    for (auto& [m, c] : t_) {
      T term = static_cast<T>(to_eval<T>(c));
      for (auto& [v, e] : m.factors()) {
        if (v >= values.size()) throw std::out_of_range("Polynomial::evaluate: missing variable");
        term *= pow_int<T>(values[v], e);
      }
      acc += term;
    }
    return acc;
  }

  void add_term(const Monomial& m, const S& c) {
    if (c == S(0)) return;
    auto it = t_.find(m);
    if (it == t_.end()) {
      t_[m] = c;
    } else {
      it->second += c;
      if (it->second == S(0)) t_.erase(it);
    }
  }

 private:
  template <class T>
  static T to_eval(const S& c) {
    if constexpr (std::is_same_v<T, S>)
      return c;
    else
      return static_cast<T>(to_double(c));
  }
  Terms t_;
};

template <class S>
Polynomial<S> operator*(const S& s, const Polynomial<S>& p) {
  return p * s;
}

using PolyQ = Polynomial<Rational>;
using PolyD = Polynomial<double>;

}  // namespace rglab

// Gauss rules (Golub-Welsch), adaptive Simpson, cubic splines and a few
// special-function evaluations shared by the numeric modules.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"

namespace rglab {

struct QuadRule {
  std::vector<double> x, w;
};

namespace detail {
inline QuadRule golub_welsch(const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    r.w[i] = mu0 * v0 * v0;
  }
  return r;
}
}  // namespace detail

// Nodes/weights for int f(x) e^{-x^2} dx (physicists' Hermite).
inline const QuadRule& gauss_hermite(int n) {
  static std::vector<QuadRule> cache(1025);
  if (n < 1 || n > 1024) throw std::invalid_argument("gauss_hermite: order out of range");
  if (cache[n].x.empty()) {
    std::vector<double> off(n - 1);
    for (int i = 1; i < n; ++i) off[i - 1] = std::sqrt(i / 2.0);
    cache[n] = detail::golub_welsch(off, std::sqrt(M_PI));
  }
  return cache[n];
}

// Nodes/weights for int_{-1}^{1} f(x) dx.
inline const QuadRule& gauss_legendre(int n) {
  static std::vector<QuadRule> cache(1025);
  if (n < 1 || n > 1024) throw std::invalid_argument("gauss_legendre: order out of range");
  if (cache[n].x.empty()) {
    std::vector<double> off(n - 1);
    for (int i = 1; i < n; ++i) off[i - 1] = i / std::sqrt(4.0 * i * i - 1.0);
    cache[n] = detail::golub_welsch(off, 2.0);
  }
  return cache[n];
}

inline double gl_integrate(const std::function<double(double)>& f, double a, double b, int order = 32) {
  const QuadRule& r = gauss_legendre(order);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a), s = 0.0;
  for (size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(mid + half * r.x[i]);
  return half * s;
}

// Natural cubic spline through (x_i, y_i); strictly increasing x.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 3 nodes");
    std::vector<double> h(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (h[i] <= 0.0) throw std::invalid_argument("CubicSpline: nodes not increasing");
    }
    // tridiagonal solve for second derivatives (natural BC)
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
    b[0] = b[n - 1] = 1.0;
    for (size_t i = 1; i + 1 < n; ++i) {
      a[i] = h[i - 1];
      b[i] = 2.0 * (h[i - 1] + h[i]);
      c[i] = h[i];
      r[i] = 6.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
    }
    m_.assign(n, 0.0);
    for (size_t i = 1; i < n; ++i) {
      double f = a[i] / b[i - 1];
      b[i] -= f * c[i - 1];
      r[i] -= f * r[i - 1];
    }
    m_[n - 1] = r[n - 1] / b[n - 1];
    for (size_t i = n - 1; i-- > 0;) m_[i] = (r[i] - c[i] * m_[i + 1]) / b[i];
  }

  double xmin() const { return x_.front(); }
  double xmax() const { return x_.back(); }

  double operator()(double t) const {
    size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double t) const {
    size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]) * h / 6.0;
  }

  double deriv2(double t) const {
    size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    return A * m_[i] + B * m_[i + 1];
  }

 private:
  size_t segment(double t) const {
    if (t <= x_.front()) return 0;
    if (t >= x_.back()) return x_.size() - 2;
    size_t i = std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
    return i - 1;
  }
  std::vector<double> x_, y_, m_;
};

// e^{-x} I_0(x) for x >= 0 (Abramowitz & Stegun 9.8.1 / 9.8.2).
inline double bessel_i0_scaled(double x) {
  if (x < 0.0) throw std::domain_error("bessel_i0_scaled: x < 0");
  if (x < 3.75) {
    double t = x / 3.75, t2 = t * t;
    double i0 = 1.0 + t2 * (3.5156229 + t2 * (3.0899424 + t2 * (1.2067492 +
                t2 * (0.2659732 + t2 * (0.0360768 + t2 * 0.0045813)))));
    return i0 * std::exp(-x);
  }
  double t = 3.75 / x;
  double p = 0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
             t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
             t * (-0.01647633 + t * 0.00392377)))))));
  return p / std::sqrt(x);
}

// Least squares fit of y ~ sum_k coef[k] * s^{2k}, s = x/x.back(); returns
// coefficients in the scaled variable.
inline std::vector<double> even_poly_fit(const std::vector<double>& x, const std::vector<double>& y,
                                         int nterms) {
  const int n = static_cast<int>(x.size());
  if (n < nterms) throw std::invalid_argument("even_poly_fit: too few points");
  double xm = x.back();
  Eigen::MatrixXd A(n, nterms);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    double s2 = (x[i] / xm) * (x[i] / xm), p = 1.0;
    for (int k = 0; k < nterms; ++k) {
      A(i, k) = p;
      p *= s2;
    }
    b(i) = y[i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return std::vector<double>(c.data(), c.data() + nterms);
}

}  // namespace rglab

// Curie-Weiss / O(n) mean-field model: renormalised potential,
// self-consistency, magnetisation, susceptibility and the Laplace-principle
// demonstration.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rglab/quadrature.hpp"

namespace rglab::mf {

struct State {
  long n = 1;
  double beta = 1.0;  // inverse temperature
  double h = 0.0;     // external field along the first axis

  State(long n_, double beta_, double h_) : n(n_), beta(beta_), h(h_) {
    if (n < 1 || beta <= 0.0) throw std::invalid_argument("State: need n >= 1 and beta > 0");
  }
  double beta_c() const { return static_cast<double>(n); }
};

// log of int_{S^{n-1}} e^{r cos(theta)} d(surface measure), normalised so the
// measure is a probability; reduced to the polar angle for n >= 2.
inline double log_sphere_average(double r, long n, int order = 256) {
  if (n == 1) return std::log(std::cosh(r));
  const QuadRule& q = gauss_legendre(order);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    double theta = 0.5 * M_PI * (q.x[i] + 1.0);
    double w = q.w[i] * std::pow(std::sin(theta), static_cast<double>(n - 2));
    num += w * std::exp(r * std::cos(theta));
    den += w;
  }
  return std::log(num / den);
}

// Renormalised potential V(phi); the n = 1 and n = 3 closed forms are used
// directly, other n go through the sphere quadrature.
inline double renorm_potential(double phi, const State& s) {
  double r = std::abs(s.beta * phi + s.h);
  if (s.n == 1) return 0.5 * s.beta * phi * phi - std::log(std::cosh(s.beta * phi + s.h));
  if (s.n == 3) {
    double lg = (r < 1e-8) ? std::log1p(r * r / 6.0) : std::log(std::sinh(r) / r);
    return 0.5 * s.beta * phi * phi - lg + 0.5 * s.beta;
  }
  return 0.5 * s.beta * phi * phi - log_sphere_average(r, s.n) + 0.5 * s.beta;
}

// Defining integral evaluated by quadrature, for cross-checking closed forms.
inline double renorm_potential_quadrature(double phi, const State& s, int order = 256) {
  double r = std::abs(s.beta * phi + s.h);
  if (s.n == 1) {
    double a = std::exp(-0.5 * s.beta * (phi - 1.0) * (phi - 1.0) + s.h);
    double b = std::exp(-0.5 * s.beta * (phi + 1.0) * (phi + 1.0) - s.h);
    return -std::log(0.5 * (a + b));
  }
  return 0.5 * s.beta * phi * phi + 0.5 * s.beta - log_sphere_average(r, s.n, order);
}

// phi = tanh(beta phi + h) fixed point (n = 1); returns the minimiser of V,
// selecting the h downarrow 0 positive root in the broken phase.
inline double solve_magnetisation(const State& s) {
  if (s.n != 1) throw std::invalid_argument("solve_magnetisation: scalar root-solve is n = 1 only");
  double h = s.h;
  bool flip = false;
  if (h < 0.0) {
    h = -h;
    flip = true;
  }
  auto f = [&](double x) { return std::tanh(s.beta * x + h) - x; };
  if (h == 0.0 && s.beta <= 1.0) return 0.0;
  double lo = (h > 0.0) ? 0.0 : 1e-300, hi = 1.0;
  if (h == 0.0) {
    lo = 1e-12;  // select the positive root for beta > 1
    if (f(lo) <= 0.0) return 0.0;
  }
  // bracketed bisection then Newton polish; |tanh| < 1 keeps the root in [0,1)
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    double t = std::tanh(s.beta * x + h);
    double fp = s.beta * (1.0 - t * t) - 1.0;
    if (std::abs(fp) < 1e-14) break;
    x -= (t - x) / fp;
  }
  return flip ? -x : x;
}

// chi = 1/(-beta + (1 - phi0^2)^{-1}).
inline double susceptibility(const State& s) {
  double phi0 = solve_magnetisation(s);
  double denom = -s.beta + 1.0 / (1.0 - phi0 * phi0);
  if (denom <= 0.0) throw std::domain_error("susceptibility: not defined at this (beta, h)");
  return 1.0 / denom;
}

// int g e^{-N V} / int e^{-N V} by 1-d quadrature; converges to g(phi0).
inline double laplace_ratio(const std::function<double(double)>& gobs, const State& s, double N,
                            double span = 8.0, int order = 400) {
  const QuadRule& q = gauss_legendre(order);
  // locate the minimum, then resolve the O(1/sqrt(N)) peak around it
  double vmin = 1e300, xmin = 0.0;
  for (int i = -800; i <= 800; ++i) {
    double x = span * i / 800.0;
    double v = renorm_potential(x, s);
    if (v < vmin) {
      vmin = v;
      xmin = x;
    }
  }
  double eps = 1e-4;
  double curv = (renorm_potential(xmin + eps, s) - 2.0 * vmin + renorm_potential(xmin - eps, s)) /
                (eps * eps);
  double sigma = 1.0 / std::sqrt(N * std::max(curv, 0.05));
  double a = std::max(-span, xmin - 14.0 * sigma), b = std::min(span, xmin + 14.0 * sigma);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    double x = 0.5 * (a + b) + 0.5 * (b - a) * q.x[i];
    double w = q.w[i] * std::exp(-N * (renorm_potential(x, s) - vmin));
    num += w * gobs(x);
    den += w;
  }
  return num / den;
}

}  // namespace rglab::mf

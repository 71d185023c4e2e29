// Second-order RG map for the hierarchical model: per-scale coefficients,
// the map on (u, g, nu), the rescaled (g, mu) recursion, sequence analysis,
// critical-point construction (backward sum and bisection), the derivative
// flow and susceptibility asymptotics.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"
#include "rglab/hierarchical.hpp"

namespace rglab::flow {

struct ModelParams {
  long d = 4;
  long L = 2;
  long n = 1;

  double gamma() const { return static_cast<double>(n + 2) / static_cast<double>(n + 8); }
  double beta00() const {
    return static_cast<double>(n + 8) * (1.0 - std::pow(static_cast<double>(L), -static_cast<double>(d)));
  }
};

struct CouplingState {
  double u = 0.0;
  double g = 0.0;
  double nu = 0.0;
  double w6 = 0.0;  // coefficient of tau^3, nonzero only after a c1 != 0 step
};

struct CoeffRow {
  long j = 0;
  double c = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  // unrescaled (primed)
  double eta_p = 0.0, beta_p = 0.0, xi_p = 0.0;
  double kap_g_p = 0.0, kap_nu_p = 0.0, kap_gnu_p = 0.0, kap_gg_p = 0.0, kap_nunu_p = 0.0;
  // rescaled
  double eta = 0.0, beta = 0.0, xi = 0.0;
  double kap_g = 0.0, kap_nu = 0.0, kap_gmu = 0.0, kap_gg = 0.0, kap_mumu = 0.0;
  double vartheta = 0.0;
};

inline CoeffRow coeffs(long j, double m2, const ModelParams& p) {
  CoeffRow r;
  r.j = j;
  const double n = static_cast<double>(p.n);
  r.c = hier::c_diag_d(j, m2, p.d, p.L);
  r.c2 = hier::c2_d(j, m2, p.d, p.L);
  r.c3 = hier::c3_d(j, m2, p.d, p.L);
  r.c4 = hier::c4_d(j, m2, p.d, p.L);
  r.eta_p = (n + 2) * r.c;
  r.beta_p = (n + 8) * r.c2;
  r.xi_p = 2.0 * (n + 2) * r.c3 + (n + 2) * (n + 2) * r.c * r.c2;
  r.kap_g_p = 0.25 * n * (n + 2) * r.c * r.c;
  r.kap_nu_p = 0.5 * n * r.c;
  r.kap_gnu_p = 0.5 * n * (n + 2) * r.c * r.c2;
  r.kap_gg_p = 0.25 * n * (n + 2) * (r.c4 + (n + 2) * r.c * r.c * r.c2);
  r.kap_nunu_p = 0.25 * n * r.c2;
  // rescaled entries built from overflow-safe blocks: s1 = L^{2j} c_j stays
  // bounded at d = 4 for all j, unlike L^{2j} and c_j separately
  const double M = mass_factor(m2, p.L, j);
  const double u = std::pow(static_cast<double>(p.L), -static_cast<double>(p.d));
  const double Ld4 = std::pow(static_cast<double>(p.L), -static_cast<double>((p.d - 4) * j));
  const double s1 = Ld4 * M * (1.0 - u);                                      // L^{2j} c
  const double s3 = std::pow(static_cast<double>(p.L), -static_cast<double>((2 * p.d - 8) * j)) *
                    M * M * M * (1.0 - 3.0 * u + 2.0 * u * u);                 // L^{2j} c3
  const double s4 = std::pow(static_cast<double>(p.L), -static_cast<double>((3 * p.d - 12) * j)) *
                    M * M * M * M * (1.0 - 4.0 * u + 6.0 * u * u - 3.0 * u * u * u);  // L^{4j} c4
  r.eta = (n + 2) * s1;
  r.beta = r.beta_p;
  r.xi = 2.0 * (n + 2) * s3 + (n + 2) * (n + 2) * s1 * r.c2;
  r.kap_g = 0.25 * n * (n + 2) * s1 * s1;
  r.kap_nu = 0.5 * n * s1;
  r.kap_gmu = 0.5 * n * (n + 2) * s1 * r.c2;
  r.kap_gg = 0.25 * n * (n + 2) * (s4 + (n + 2) * s1 * s1 * r.c2);
  r.kap_mumu = r.kap_nunu_p;
  r.vartheta = vartheta(j, m2, p.L);
  return r;
}

// Overflow-safe rescaled coefficients for very large j (the L^{2j} factors
// cancel against the mass suppression in c_j at d = 4).
inline double beta_j(long j, double m2, const ModelParams& p) {
  double M = mass_factor(m2, p.L, j);
  double Lp = std::pow(static_cast<double>(p.L), -static_cast<double>((p.d - 4) * j));
  return static_cast<double>(p.n + 8) * Lp * M * M *
         (1.0 - std::pow(static_cast<double>(p.L), -static_cast<double>(p.d)));
}
inline double eta_j(long j, double m2, const ModelParams& p) {
  // L^{2j} c_j = L^{-(d-4)j} M (1 - L^{-d})
  double M = mass_factor(m2, p.L, j);
  double Lp = std::pow(static_cast<double>(p.L), -static_cast<double>((p.d - 4) * j));
  return static_cast<double>(p.n + 2) * Lp * M *
         (1.0 - std::pow(static_cast<double>(p.L), -static_cast<double>(p.d)));
}
inline double xi_j(long j, double m2, const ModelParams& p) {
  double M = mass_factor(m2, p.L, j);
  double u = std::pow(static_cast<double>(p.L), -static_cast<double>(p.d));
  double n = static_cast<double>(p.n);
  // L^{2j} c3 = L^{-(2d-8)j} M^3 (1-3u+2u^2); L^{2j} c c2 = L^{-(2d-8)j} M^3 (1-u)^2
  double Lp = std::pow(static_cast<double>(p.L), -static_cast<double>((2 * p.d - 8) * j));
  double c3s = Lp * M * M * M * (1.0 - 3.0 * u + 2.0 * u * u);
  double ccs = Lp * M * M * M * (1.0 - u) * (1.0 - u);
  return 2.0 * (n + 2) * c3s + (n + 2) * (n + 2) * ccs;
}

// Unrescaled perturbative map on (u, g, nu); c1 = c_j^{(1)} (0 except for
// the final covariance, where c1 = m^{-2}).
inline CouplingState phi_pt(const CouplingState& in, const CoeffRow& r, const ModelParams& p,
                            double c1 = 0.0) {
  const double n = static_cast<double>(p.n);
  const double g = in.g, nu = in.nu;
  const double s_tau2 = 4.0 * (g * g * (n + 2) * r.c + g * nu) * c1;
  const double s_tau = (g * g * (n + 2) * (n + 2) * r.c * r.c + 2.0 * g * nu * (n + 2) * r.c + nu * nu) * c1;
  CouplingState out;
  out.g = g - r.beta_p * g * g - s_tau2;
  // gamma * beta' = (n+2) c^{(2)}
  out.nu = nu * (1.0 - (n + 2) * r.c2 * g) + r.eta_p * g - r.xi_p * g * g - s_tau;
  out.u = in.u + r.kap_g_p * g + r.kap_nu_p * nu - r.kap_gnu_p * g * nu - r.kap_gg_p * g * g -
          r.kap_nunu_p * nu * nu;
  out.w6 = -4.0 * c1 * g * g;
  return out;
}

// One rescaled step: g+ = g - beta_j g^2, mu+ = L^2(mu(1 - gamma beta_j g) + eta_j g - xi_j g^2).
inline std::pair<double, double> flow_step(double g, double mu, long j, double m2,
                                           const ModelParams& p) {
  const double b = beta_j(j, m2, p), e = eta_j(j, m2, p), x = xi_j(j, m2, p);
  const double L2 = static_cast<double>(p.L) * static_cast<double>(p.L);
  double gp = g - b * g * g;
  double mup = L2 * (mu * (1.0 - p.gamma() * b * g) + e * g - x * g * g);
  return {gp, mup};
}

inline std::vector<double> gbar_sequence(double g0, double m2, const ModelParams& p, long jmax) {
  std::vector<double> g(jmax + 1);
  g[0] = g0;
  for (long j = 0; j < jmax; ++j) g[j + 1] = g[j] - beta_j(j, m2, p) * g[j] * g[j];
  return g;
}

struct SequenceAnalysis {
  std::vector<double> A;      // A_j = sum_{i<j} beta_i
  std::vector<double> t;      // t_j = g0 / (1 + g0 A_j)
  std::vector<double> g;      // recursion iterates
  std::vector<double> Pi0j;   // prod_{k<=j} (1 - gamma beta_k g_k)
};

inline SequenceAnalysis sequences(double g0, double m2, const ModelParams& p, long jmax) {
  SequenceAnalysis s;
  s.A.resize(jmax + 1);
  s.t.resize(jmax + 1);
  s.g = gbar_sequence(g0, m2, p, jmax);
  s.Pi0j.resize(jmax + 1);
  double acc = 0.0, pi = 1.0;
  for (long j = 0; j <= jmax; ++j) {
    s.A[j] = acc;
    s.t[j] = g0 / (1.0 + g0 * acc);
    if (j < jmax) acc += beta_j(j, m2, p);
    pi *= (1.0 - p.gamma() * beta_j(j, m2, p) * s.g[j]);
    s.Pi0j[j] = pi;
  }
  return s;
}

struct Mu0Result {
  double mu0c = 0.0;
  double tail_bound = 0.0;
  long terms = 0;
};

// Perturbative stable manifold evaluated at scale j:
// mubar_j = sum_{l>=j} L^{-2(l-j)} Pi_{j,l}^{-1} (-eta_l gbar_l + xi_l gbar_l^2).
inline double mu_backward_at(long j, const std::vector<double>& g, double m2, const ModelParams& p,
                             long jmax, double* tail = nullptr) {
  const double L2inv = 1.0 / (static_cast<double>(p.L) * static_cast<double>(p.L));
  double sum = 0.0, scale = 1.0, pi = 1.0, last = 0.0;
  long l = j;
  for (; l < jmax; ++l) {
    pi *= (1.0 - p.gamma() * beta_j(l, m2, p) * g[l]);
    if (pi <= 0.0) throw std::runtime_error("mu_backward_at: non-convergent g-flow");
    double summand = scale / pi * (-eta_j(l, m2, p) * g[l] + xi_j(l, m2, p) * g[l] * g[l]);
    sum += summand;
    last = std::abs(summand);
    if (l > j + 4 && last < 1e-18 * std::max(std::abs(sum), 1e-300)) break;
    scale *= L2inv;
  }
  if (tail) *tail = last * L2inv / (1.0 - L2inv);
  return sum;
}

inline Mu0Result mu0_backward(double g0, double m2, const ModelParams& p, long jmax = 400) {
  if (g0 == 0.0) return {0.0, 0.0, 0};
  if (g0 < 0.0) throw std::invalid_argument("mu0_backward: g0 must be >= 0");
  auto g = gbar_sequence(g0, m2, p, jmax);
  Mu0Result r;
  r.mu0c = mu_backward_at(0, g, m2, p, jmax, &r.tail_bound);
  r.terms = jmax;
  return r;
}

// Bleher-Sinai bisection: shrink a mu0 bracket by the exit side of the tube
// J_j = [-c0 vartheta_j gtilde_j, +c0 vartheta_j gtilde_j].
inline Mu0Result mu0_bisection(double g0, double m2, const ModelParams& p, long jmax = 2000,
                               double c0 = -1.0) {
  if (c0 <= 0.0) c0 = 4.0 * static_cast<double>(p.n + 2);
  auto gt = gbar_sequence(g0, m2, p, jmax);

  // +1: exits upward, -1: exits downward, 0: stayed inside to jmax
  auto exit_side = [&](double mu0) -> int {
    double g = g0, mu = mu0;
    for (long j = 0; j <= jmax; ++j) {
      double tube = c0 * vartheta(j, m2, p.L) * gt[j];
      if (mu > tube) return +1;
      if (mu < -tube) return -1;
      auto [gp, mup] = flow_step(g, mu, j, m2, p);
      g = gp;
      mu = mup;
    }
    return 0;
  };

  double span = std::max(1.0, 8.0 * c0 * g0);
  double lo = -span, hi = span;
  if (exit_side(lo) >= 0 || exit_side(hi) <= 0)
    throw std::runtime_error("mu0_bisection: bracket does not straddle criticality");
  int it = 0;
  while (hi - lo > 1e-14 && it < 200) {
    double mid = 0.5 * (lo + hi);
    int s = exit_side(mid);
    if (s > 0)
      hi = mid;
    else
      lo = mid;  // exited downward or stayed inside: push up
    ++it;
  }
  return {0.5 * (lo + hi), hi - lo, it};
}

struct Trajectory {
  std::vector<double> g, mu, u;
  double m2 = 0.0;
  ModelParams params;
};

inline Trajectory run_flow(double g0, double mu0, double m2, const ModelParams& p, long jmax) {
  Trajectory t;
  t.m2 = m2;
  t.params = p;
  t.g.resize(jmax + 1);
  t.mu.resize(jmax + 1);
  t.u.resize(jmax + 1);
  t.g[0] = g0;
  t.mu[0] = mu0;
  t.u[0] = 0.0;
  for (long j = 0; j < jmax; ++j) {
    auto [gp, mup] = flow_step(t.g[j], t.mu[j], j, m2, p);
    t.g[j + 1] = gp;
    t.mu[j + 1] = mup;
    // unrescaled u-flow (the E_pt rescaling is d=4-specific; u is reported
    // in primed form for other d)
    CoeffRow r = coeffs(j, m2, p);
    CouplingState s{t.u[j], t.g[j],
                    t.mu[j] * std::pow(static_cast<double>(p.L), -2.0 * j), 0.0};
    t.u[j + 1] = phi_pt(s, r, p).u;
  }
  return t;
}

// d mu_j / d mu_0 = prod_{k<j} L^2 (1 - gamma beta_k g_k) along a g-sequence.
inline std::vector<double> dmu_dmu0(const std::vector<double>& g, double m2, const ModelParams& p) {
  std::vector<double> out(g.size());
  double prod = 1.0;
  const double L2 = static_cast<double>(p.L) * static_cast<double>(p.L);
  for (std::size_t j = 0; j < g.size(); ++j) {
    out[j] = prod;
    prod *= L2 * (1.0 - p.gamma() * beta_j(static_cast<long>(j), m2, p) * g[j]);
  }
  return out;
}

// ---- susceptibility ------------------------------------------------------

struct ChiPrediction {
  double chi_leading = 0.0;   // A eps^{-1} (log eps^{-1})^gamma with the small-g amplitude
  double chi_effective = 0.0; // 1/m^2 via the effective-mass construction
  double m2_effective = 0.0;
  double root_residual = 0.0;
};

// nu_0^c(m^2) = mubar_0(m^2); effective mass solves nu_0^c(m^2) + m^2 = nu_c + eps.
inline double nu0c(double g0, double m2, const ModelParams& p, long jmax = 400) {
  return mu0_backward(g0, m2, p, jmax).mu0c;
}

inline ChiPrediction chi_prediction(double g, double eps, const ModelParams& p) {
  if (eps <= 0.0) throw std::invalid_argument("chi_prediction: eps must be > 0");
  ChiPrediction out;
  const double gamma = p.gamma();
  const double A = std::pow((1.0 - std::pow(static_cast<double>(p.L), -static_cast<double>(p.d))) *
                                static_cast<double>(p.n + 8) * g / std::log(static_cast<double>(p.L)),
                            gamma);
  out.chi_leading = A / eps * std::pow(std::log(1.0 / eps), gamma);

  const double nuc = nu0c(g, 0.0, p);
  auto f = [&](double m2) { return nu0c(g, m2, p) + m2 - nuc - eps; };
  double lo = 1e-18, hi = 16.0;
  if (f(hi) < 0.0) throw std::runtime_error("chi_prediction: effective-mass bracket failed");
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-15; ++it) {
    double mid = std::sqrt(lo * hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  out.m2_effective = std::sqrt(lo * hi);
  out.chi_effective = 1.0 / out.m2_effective;
  out.root_residual = std::abs(f(out.m2_effective));
  return out;
}

struct OdeInvertResult {
  std::vector<double> eps, chi;
  double fitted_exponent = 0.0;
};

// Integrate d chi / d nu = -B chi^2 (log chi)^{-gamma} by quadrature of the
// inverse function t(u) = int_0^u (-log(B v))^gamma dv with u = 1/(B chi),
// then fit log(chi eps) = ghat log L + b log L / L + c / L + d, L = log(1/eps).
inline OdeInvertResult chi_ode_invert(double gamma, double B, const std::vector<double>& eps_grid) {
  OdeInvertResult out;
  out.eps = eps_grid;
  // u grid: log-spaced well past the largest eps
  const int nu = 20000;
  std::vector<double> us(nu), ts(nu);
  double ulo = 1e-16, uhi = 0.5 / B;
  for (int i = 0; i < nu; ++i)
    us[i] = ulo * std::pow(uhi / ulo, static_cast<double>(i) / (nu - 1));
  double acc = us[0] * std::pow(-std::log(B * us[0]), gamma);
  ts[0] = acc;
  for (int i = 1; i < nu; ++i) {
    double f1 = std::pow(-std::log(B * us[i - 1]), gamma);
    double f2 = std::pow(-std::log(B * us[i]), gamma);
    acc += 0.5 * (f1 + f2) * (us[i] - us[i - 1]);
    ts[i] = acc;
  }
  out.chi.resize(eps_grid.size());
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    double t = eps_grid[k];
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin() || it == ts.end())
      throw std::runtime_error("chi_ode_invert: eps outside integrated range");
    std::size_t i = it - ts.begin();
    double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    double u = us[i - 1] + w * (us[i] - us[i - 1]);
    out.chi[k] = 1.0 / (B * u);
  }
  Eigen::MatrixXd A(eps_grid.size(), 4);
  Eigen::VectorXd y(eps_grid.size());
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    double Lg = std::log(1.0 / eps_grid[k]);
    A(k, 0) = std::log(Lg);
    A(k, 1) = std::log(Lg) / Lg;
    A(k, 2) = 1.0 / Lg;
    A(k, 3) = 1.0;
    y(k) = std::log(out.chi[k] * eps_grid[k]);
  }
  out.fitted_exponent = A.colPivHouseholderQr().solve(y)(0);
  return out;
}

// ---- norms and domains ---------------------------------------------------

// ||U||_{T_0(h)} = (1/4)|g| h^4 + (1/2)|nu| h^2 + |u|.
inline double t0_norm(const CouplingState& s, double h) {
  return 0.25 * std::abs(s.g) * h * h * h * h + 0.5 * std::abs(s.nu) * h * h + std::abs(s.u);
}

// Domain D_j: 2 k0 gtilde < g < (2 k0)^{-1} gtilde, |nu| < (2k0)^{-1} gtilde L^{-(d-2)j}.
inline bool domain_check(double g, double nu, long j, double gtilde, const ModelParams& p,
                         double k0 = -1.0) {
  if (k0 <= 0.0) k0 = 1.0 / (24.0 * static_cast<double>(p.n + 2));
  if (!(2.0 * k0 * gtilde < g && g < gtilde / (2.0 * k0))) return false;
  if (nu == 0.0) return true;
  // |nu| L^{(d-2)j} < gtilde/(2 k0), compared in logs to dodge under/overflow
  double lhs = std::log(std::abs(nu)) +
               static_cast<double>((p.d - 2) * j) * std::log(static_cast<double>(p.L));
  return lhs < std::log(gtilde / (2.0 * k0));
}

}  // namespace rglab::flow

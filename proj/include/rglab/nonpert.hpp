// Exact nonperturbative hierarchical RG at the level of block functions:
// F_{j+1}(phi) = E prod_b F_j(phi + zeta_b) on a radial grid in log domain,
// with a Gauss-Hermite engine for n = 1, B = 2, a zero-sum Monte Carlo
// engine for general (n, B), coupling extraction, the final-scale
// susceptibility formula and brute-force full-lattice oracles.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"
#include "rglab/hierarchical.hpp"
#include "rglab/pertflow.hpp"
#include "rglab/quadrature.hpp"

namespace rglab::npt {

struct NptParams {
  long d = 1;
  long L = 2;
  long n = 1;
  double m2 = 0.0;
  long N = -1;  // number of scales; -1 = infinite volume

  long block_count() const { return pow_int<long>(L, d); }
};

// c_j = C_{j+1;00}(m^2), the per-site fluctuation variance at scale j -> j+1.
inline double fluct_variance(long j, const NptParams& p) {
  return hier::c_diag_d(j, p.m2, p.d, p.L);
}

// std dev of the field remaining to be integrated from scale j on
inline double sigma_remaining(long j, const NptParams& p) {
  double var = 0.0;
  long top = (p.N >= 0) ? p.N : j + 60;
  for (long k = j; k < top; ++k) var += fluct_variance(k, p);
  if (p.N >= 0) {
    if (p.m2 <= 0.0) throw std::invalid_argument("sigma_remaining: finite volume needs m^2 > 0");
    var += 1.0 / p.m2 * std::pow(static_cast<double>(p.L), -static_cast<double>(p.d * p.N));
  }
  return std::sqrt(var);
}

inline double ell_scale(long j, const NptParams& p) {
  return std::pow(static_cast<double>(p.L), -0.5 * static_cast<double>((p.d - 2) * j));
}

inline double h_scale(long j, double gtilde, const NptParams& p) {
  if (gtilde <= 1e-12) return 0.0;
  return std::pow(std::pow(static_cast<double>(p.L), static_cast<double>(p.d * j)) * gtilde, -0.25);
}

inline constexpr long kGridNodes = 1025;

// Radial block function of the constant field, log-domain storage with a
// quartic-exponential tail model beyond the last node.
class BlockFunction {
 public:
  BlockFunction() = default;
  BlockFunction(long j, std::vector<double> r, std::vector<double> lnf)
      : j_(j), r_(std::move(r)), lnf_(std::move(lnf)) {
    spline_ = CubicSpline(r_, lnf_);
    // -ln F ~ a + b r^2 + c r^4 fitted to the last 5 nodes
    Eigen::MatrixXd A(5, 3);
    Eigen::VectorXd y(5);
    std::size_t m = r_.size();
    double rmax = r_.back();
    for (int i = 0; i < 5; ++i) {
      double rr = r_[m - 5 + i] / rmax;
      A(i, 0) = 1.0;
      A(i, 1) = rr * rr;
      A(i, 2) = rr * rr * rr * rr;
      y(i) = -lnf_[m - 5 + i];
    }
    Eigen::Vector3d c = A.colPivHouseholderQr().solve(y);
    tail_a_ = c(0);
    tail_b_ = c(1) / (rmax * rmax);
    tail_c_ = c(2) / (rmax * rmax * rmax * rmax);
  }

  static std::vector<double> make_grid(double R) {
    std::vector<double> r(kGridNodes);
    for (long k = 0; k < kGridNodes; ++k) {
      double s = static_cast<double>(k) / (kGridNodes - 1);
      r[k] = R * s * s;  // quadratic clustering near the origin
    }
    return r;
  }

  long scale() const { return j_; }
  const std::vector<double>& grid() const { return r_; }
  const std::vector<double>& log_values() const { return lnf_; }
  double radius() const { return r_.back(); }

  // ln F(|x|)
  double operator()(double x) const {
    x = std::abs(x);
    if (x <= r_.back()) return spline_(x);
    return -(tail_a_ + tail_b_ * x * x + tail_c_ * x * x * x * x);
  }

  bool is_tail(double x) const { return std::abs(x) > r_.back(); }

 private:
  long j_ = 0;
  std::vector<double> r_, lnf_;
  CubicSpline spline_;
  double tail_a_ = 0.0, tail_b_ = 0.0, tail_c_ = 0.0;
};

// F_0(phi) = e^{-(g0/4) phi^4 - (nu0/2) phi^2} per site (a 0-block is one site).
inline BlockFunction initial_block(double g0, double nu0, const NptParams& p) {
  double R = 12.0 * std::max({1.0, h_scale(0, std::max(g0, 1e-12), p),
                              (p.N >= 0) ? 3.0 * sigma_remaining(0, p) : 0.0});
  auto r = BlockFunction::make_grid(R);
  std::vector<double> lnf(r.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    lnf[k] = -(0.25 * g0 * std::pow(r[k], 4) + 0.5 * nu0 * r[k] * r[k]);
  return BlockFunction(0, r, lnf);
}

struct StepReport {
  double tail_fraction = 0.0;   // largest share of quadrature mass served by the tail model
  double order_gate = 0.0;      // relative change under order doubling at phi = 0
  bool tail_warn = false;
};

// One RG step for n = 1, B = L^d = 2 by Gauss-Hermite quadrature:
// F_+(phi) = E_{zeta ~ N(0, c_j)} F(phi + zeta) F(phi - zeta).
inline BlockFunction rg_step_quadrature(const BlockFunction& f, const NptParams& p,
                                        double gtilde_next, int order = 160,
                                        StepReport* report = nullptr) {
  if (p.n != 1 || p.block_count() != 2)
    throw std::invalid_argument("rg_step_quadrature: requires n = 1 and L^d = 2");
  const long j = f.scale();
  const double c = fluct_variance(j, p);
  const double R = 12.0 * std::max({ell_scale(j + 1, p), h_scale(j + 1, gtilde_next, p),
                                    (p.N >= 0) ? 3.0 * sigma_remaining(j + 1, p) : 0.0});
  auto r = BlockFunction::make_grid(R);
  std::vector<double> lnf(r.size());

  auto value_at = [&](double phi, int ord, double* tailshare) {
    const QuadRule& q = gauss_hermite(ord);
    const double s = std::sqrt(2.0 * c);
    double mx = -1e300;
    std::vector<double> e(q.x.size());
    double tail_mass = 0.0, total_mass = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      double z = s * q.x[i];
      e[i] = f(phi + z) + f(phi - z) + std::log(q.w[i]);
      mx = std::max(mx, e[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      double w = std::exp(e[i] - mx);
      acc += w;
      total_mass += w;
      double z = s * q.x[i];
      if (f.is_tail(phi + z) || f.is_tail(phi - z)) tail_mass += w;
    }
    if (tailshare) *tailshare = tail_mass / std::max(total_mass, 1e-300);
    return mx + std::log(acc) - 0.5 * std::log(M_PI);
  };

  // the tail share is monitored on the interior half of the new grid; the
  // outer nodes legitimately continue into the fitted tail
  double worst_tail = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    double ts = 0.0;
    lnf[k] = value_at(r[k], order, &ts);
    if (r[k] <= 0.5 * R) worst_tail = std::max(worst_tail, ts);
  }
  if (report) {
    report->tail_fraction = worst_tail;
    report->tail_warn = worst_tail > 1e-8;
    report->order_gate = std::abs(value_at(0.0, 2 * order, nullptr) - lnf[0]);
  }
  return BlockFunction(j + 1, r, lnf);
}

struct McStep {
  BlockFunction f;
  std::vector<double> rel_se;  // per-node relative standard error
  bool se_flagged = false;
};

// General (n, B) engine: at each node, average prod_b F(|phi e1 + zeta_b|)
// over zero-sum exchangeable Gaussian draws (antithetic pairs).
inline McStep rg_step_mc(const BlockFunction& f, const NptParams& p, double gtilde_next,
                         std::uint64_t seed, long samples) {
  const long j = f.scale();
  const long B = p.block_count();
  const double sigma2 =
      hier::gamma_scale<double>(j + 1, p.m2, hier::Geometry(p.d, p.L, std::max<long>(p.N, j + 2))) /
      std::pow(static_cast<double>(p.L), static_cast<double>(p.d * j));
  const double sigma = std::sqrt(sigma2);
  const double R = 12.0 * std::max({ell_scale(j + 1, p), h_scale(j + 1, gtilde_next, p),
                                    (p.N >= 0) ? 3.0 * sigma_remaining(j + 1, p) : 0.0});
  auto r = BlockFunction::make_grid(R);
  std::vector<double> lnf(r.size());
  McStep out;
  out.rel_se.assign(r.size(), 0.0);

  std::vector<std::vector<double>> zeta(B, std::vector<double>(p.n));
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(j), k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double ref = B * f(r[k]);  // stabiliser: value at zeta = 0
    double acc = 0.0, acc2 = 0.0;
    for (long s = 0; s < samples; ++s) {
      for (long i = 0; i < p.n; ++i) {
        double mean = 0.0;
        for (long b = 0; b < B; ++b) {
          zeta[b][i] = gauss(rng);
          mean += zeta[b][i];
        }
        mean /= static_cast<double>(B);
        for (long b = 0; b < B; ++b) zeta[b][i] = (zeta[b][i] - mean) * sigma;
      }
      for (double sign : {1.0, -1.0}) {
        double lsum = 0.0;
        for (long b = 0; b < B; ++b) {
          double norm2 = 0.0;
          for (long i = 0; i < p.n; ++i) {
            double comp = (i == 0 ? r[k] : 0.0) + sign * zeta[b][i];
            norm2 += comp * comp;
          }
          lsum += f(std::sqrt(norm2));
        }
        double w = std::exp(lsum - ref);
        acc += 0.5 * w;
        acc2 += 0.5 * w * w;
      }
    }
    double mean = acc / samples;
    double var = std::max(acc2 / samples - mean * mean, 0.0);
    lnf[k] = ref + std::log(mean);
    out.rel_se[k] = std::sqrt(var / samples) / mean;
    if (out.rel_se[k] > 1e-3) out.se_flagged = true;
  }
  out.f = BlockFunction(j + 1, r, lnf);
  return out;
}

// Per-site couplings from the Taylor expansion of -ln F at 0, via an even
// polynomial least-squares fit over the fluctuation-scale window.
struct ExtractedCouplings {
  double u = 0.0, nu = 0.0, g = 0.0;
  long nodes_used = 0;
};

inline ExtractedCouplings extract_couplings(const BlockFunction& f, const NptParams& p) {
  const long j = f.scale();
  double W = std::max(4.0 * sigma_remaining(j, p), f.grid()[24]);
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < f.grid().size() && f.grid()[k] <= W; ++k) {
    xs.push_back(f.grid()[k]);
    ys.push_back(-f.log_values()[k]);
  }
  if (xs.size() < 15)
    throw std::runtime_error("extract_couplings: grid too coarse near zero");
  auto coef = even_poly_fit(xs, ys, 5);
  double rm = xs.back();
  double Ld = std::pow(static_cast<double>(p.L), static_cast<double>(p.d * j));
  ExtractedCouplings out;
  out.nodes_used = static_cast<long>(xs.size());
  out.u = -f.log_values()[0] / Ld;
  out.nu = 2.0 * coef[1] / (rm * rm) / Ld;
  out.g = 4.0 * coef[2] / (rm * rm * rm * rm) / Ld;
  return out;
}

// ---- final scale ----------------------------------------------------------

// Z_{N-hat}(s) = E_{zeta ~ N(0, m^{-2} L^{-dN})} F_N(s + zeta) and the
// susceptibility chi_N = 1/m^2 + Z''(0) / (m^4 L^{dN} Z(0)); Gaussian
// derivative identities (Stein) avoid numerical differentiation:
// Z''(0) = E[F (zeta^2 - v)/v^2], Z''''(0) = E[F (zeta^4 - 6 v zeta^2 + 3 v^2)/v^4].
struct FinalScaleMoments {
  double z0 = 1.0;      // Z(0) up to a common log offset
  double d2_over_z = 0.0;
  double d4_over_z = 0.0;
  double log_offset = 0.0;
};

inline FinalScaleMoments final_scale_moments(const BlockFunction& fN, const NptParams& p,
                                             int order = 400) {
  if (p.N < 0) throw std::invalid_argument("final_scale_moments: finite volume only");
  if (p.m2 <= 0.0) throw std::invalid_argument("final_scale_moments: m^2 > 0 required");
  if (p.n != 1) throw std::invalid_argument("final_scale_moments: n = 1 only");
  const double v = 1.0 / p.m2 * std::pow(static_cast<double>(p.L), -static_cast<double>(p.d * p.N));
  const QuadRule& q = gauss_hermite(order);
  const double s = std::sqrt(2.0 * v);
  double mx = -1e300;
  std::vector<double> e(q.x.size());
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    e[i] = fN(s * q.x[i]) + std::log(q.w[i]);
    mx = std::max(mx, e[i]);
  }
  double z0 = 0.0, z2 = 0.0, z4 = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    double w = std::exp(e[i] - mx);
    double zz = s * q.x[i];
    z0 += w;
    z2 += w * (zz * zz - v) / (v * v);
    z4 += w * (zz * zz * zz * zz - 6.0 * v * zz * zz + 3.0 * v * v) / (v * v * v * v);
  }
  FinalScaleMoments out;
  out.z0 = z0;
  out.d2_over_z = z2 / z0;
  out.d4_over_z = z4 / z0;
  out.log_offset = mx;
  return out;
}

inline double chi_finite_volume(const BlockFunction& fN, const NptParams& p, int order = 400) {
  auto m = final_scale_moments(fN, p, order);
  double LdN = std::pow(static_cast<double>(p.L), static_cast<double>(p.d * p.N));
  return 1.0 / p.m2 + m.d2_over_z / (p.m2 * p.m2 * LdN);
}

struct U4Result {
  double u4bar = 0.0;
  double g_ren = 0.0;
};

inline U4Result u4bar(const BlockFunction& fN, const NptParams& p, int order = 400) {
  auto m = final_scale_moments(fN, p, order);
  double LdN = std::pow(static_cast<double>(p.L), static_cast<double>(p.d * p.N));
  double m8 = std::pow(p.m2, 4.0);
  U4Result out;
  out.u4bar = (m.d4_over_z - 3.0 * m.d2_over_z * m.d2_over_z) / (m8 * LdN);
  out.g_ren = -out.u4bar * m8 / 6.0;
  return out;
}

// Progressive route: run the block recursion from F_0 to F_N.
struct ProgressiveRun {
  BlockFunction fN;
  std::vector<ExtractedCouplings> couplings;  // per scale 0..N
  std::vector<StepReport> reports;
};

inline ProgressiveRun run_progressive(double g0, double nu0, const NptParams& p, int order = 200) {
  if (p.N < 0) throw std::invalid_argument("run_progressive: finite volume only");
  ProgressiveRun out;
  BlockFunction f = initial_block(g0, nu0, p);
  out.couplings.push_back(extract_couplings(f, p));
  double ghint = std::max(g0, 1e-12);
  for (long j = 0; j < p.N; ++j) {
    StepReport rep;
    f = rg_step_quadrature(f, p, ghint, order, &rep);
    out.reports.push_back(rep);
    auto ex = extract_couplings(f, p);
    out.couplings.push_back(ex);
    ghint = std::max(ex.g, 1e-12);
  }
  out.fN = std::move(f);
  return out;
}

// Direct route: tensor Gauss-Hermite over all sites of the 4-site (or
// smaller) hierarchical box. chi_N = <S^2>/|Lambda| with S = sum_x phi_x,
// by vertex transitivity of the hierarchical group.
struct OracleResult {
  double chi_direct = 0.0;
  double chi_progressive = 0.0;
  double u4_direct = 0.0;
  double u4_progressive = 0.0;
  double order_gate = 0.0;  // relative change of chi_direct under order step-up
};

inline thread_local double oracle_last_m2_ = 0.0;
inline thread_local double oracle_last_m4_ = 0.0;

inline double oracle_chi_direct(double g0, double nu0, const NptParams& p, int order) {
  hier::Geometry geom(p.d, p.L, p.N);
  const long V = geom.volume();
  if (V > 4) throw std::invalid_argument("oracle_chi_direct: refuse more than 4 sites");
  if (p.n != 1) throw std::invalid_argument("oracle_chi_direct: n = 1 only");
  Eigen::MatrixXd A(V, V);
  for (long a = 0; a < V; ++a)
    for (long b = 0; b < V; ++b)
      A(a, b) = -hier::laplacian_entry<double>(geom.site_of_index(a), geom.site_of_index(b), geom);
  const double nu = nu0 + p.m2;

  // proposal width from the Gaussian and quartic confinement scales
  double sg = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd M = A + nu * Eigen::MatrixXd::Identity(V, V);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.eigenvalues().minCoeff() > 0.0) sg = 1.15 / std::sqrt(es.eigenvalues().minCoeff());
  double sq = (g0 > 0.0) ? std::pow(2.0 / g0, 0.25) : std::numeric_limits<double>::infinity();
  double s0 = std::min(sg, sq);
  if (!std::isfinite(s0)) throw std::invalid_argument("oracle_chi_direct: unbounded measure");

  const QuadRule& q = gauss_hermite(order);
  const int nq = static_cast<int>(q.x.size());
  // per-site single-node factor: log weight minus the local part of H
  std::vector<double> x(nq), site(nq);
  for (int i = 0; i < nq; ++i) {
    x[i] = std::sqrt(2.0) * s0 * q.x[i];
    double ph = x[i];
    site[i] = std::log(q.w[i]) + q.x[i] * q.x[i] -
              (0.5 * A(0, 0) * ph * ph + 0.25 * g0 * ph * ph * ph * ph + 0.5 * nu * ph * ph);
  }
  double num2 = 0.0, num4 = 0.0, den = 0.0;
  if (V == 4) {
    for (int i1 = 0; i1 < nq; ++i1) {
      double p1 = x[i1], t1 = site[i1];
      for (int i2 = 0; i2 < nq; ++i2) {
        double p2 = x[i2], t2 = t1 + site[i2] - A(0, 1) * p1 * p2;
        double c3a = A(0, 2) * p1 + A(1, 2) * p2;
        double c4a = A(0, 3) * p1 + A(1, 3) * p2;
        for (int i3 = 0; i3 < nq; ++i3) {
          double p3 = x[i3], t3 = t2 + site[i3] - c3a * p3;
          double c4 = c4a + A(2, 3) * p3;
          double s123 = p1 + p2 + p3;
          for (int i4 = 0; i4 < nq; ++i4) {
            double w = std::exp(t3 + site[i4] - c4 * x[i4]);
            double S = s123 + x[i4];
            double S2 = S * S;
            den += w;
            num2 += w * S2;
            num4 += w * S2 * S2;
          }
        }
      }
    }
  } else {
    std::vector<int> idx(V, 0);
    Eigen::MatrixXd off = A;
    off.diagonal().setZero();
    Eigen::VectorXd phi(V);
    while (true) {
      double lsum = 0.0;
      for (long i = 0; i < V; ++i) {
        phi(i) = x[idx[i]];
        lsum += site[idx[i]];
      }
      double w = std::exp(lsum - 0.5 * phi.dot(off * phi));
      double S = phi.sum();
      den += w;
      num2 += w * S * S;
      num4 += w * S * S * S * S;
      long i = 0;
      for (; i < V; ++i) {
        if (++idx[i] < nq) break;
        idx[i] = 0;
      }
      if (i == V) break;
    }
  }
  oracle_last_m2_ = num2 / den;
  oracle_last_m4_ = num4 / den;
  return num2 / den / static_cast<double>(V);
}

inline OracleResult oracle_chi(double g0, double nu0, const NptParams& p, int base_order = 96) {
  OracleResult out;
  double a1 = oracle_chi_direct(g0, nu0, p, base_order);
  double a2 = oracle_chi_direct(g0, nu0, p, base_order + 32);
  out.order_gate = std::abs(a2 - a1) / std::max(std::abs(a2), 1e-300);
  out.chi_direct = a2;
  const long V = pow_int<long>(p.L, p.d * p.N);
  out.u4_direct = (oracle_last_m4_ - 3.0 * oracle_last_m2_ * oracle_last_m2_) / V;

  auto run = run_progressive(g0, nu0, p);
  out.chi_progressive = chi_finite_volume(run.fN, p);
  out.u4_progressive = u4bar(run.fN, p).u4bar;
  return out;
}

// ubar_4 of the bare block function (no final convolution): the pure
// exponential-polynomial case reduces to the extracted quartic coupling,
// ubar_4 = -6 g_N / m^8 and g_ren = g_N.
inline U4Result u4bar_unconvolved(const BlockFunction& fN, const NptParams& p) {
  auto ex = extract_couplings(fN, p);
  U4Result out;
  out.g_ren = ex.g;
  out.u4bar = -6.0 * ex.g / std::pow(p.m2, 4.0);
  return out;
}

}  // namespace rglab::npt

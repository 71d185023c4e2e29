// Hierarchical block geometry on [0, L^N)^d, block projections, the
// hierarchical Laplacian, its covariance decomposition and derived
// quantities (moments, Green function, bubble, field sampling).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"

namespace rglab::hier {

using Site = std::vector<long>;

struct Geometry {
  long d = 1;   // spatial dimension, >= 1
  long L = 2;   // block side, >= 2
  long N = 1;   // number of scales, >= 1

  Geometry() = default;
  Geometry(long d_, long L_, long N_) : d(d_), L(L_), N(N_) {
    if (d < 1 || L < 2 || N < 1) throw std::invalid_argument("Geometry: need d>=1, L>=2, N>=1");
  }

  long side() const { return pow_int<long>(L, N); }
  long volume() const { return pow_int<long>(L, d * N); }

  bool valid_site(const Site& x) const {
    if (static_cast<long>(x.size()) != d) return false;
    long s = side();
    for (long c : x)
      if (c < 0 || c >= s) return false;
    return true;
  }

  // Sites indexed lexicographically; used by dense test oracles.
  Site site_of_index(long idx) const {
    Site x(d);
    long s = side();
    for (long i = d - 1; i >= 0; --i) {
      x[i] = idx % s;
      idx /= s;
    }
    return x;
  }
};

// Smallest j >= 1 with x, y in the same j-block; requires x != y.
inline long coalescence_scale(const Site& x, const Site& y, const Geometry& g) {
  if (!g.valid_site(x) || !g.valid_site(y)) throw std::invalid_argument("coalescence_scale: site out of range");
  if (x == y) throw std::invalid_argument("coalescence undefined for equal sites");
  long j = 0;
  for (long i = 0; i < g.d; ++i) {
    long a = x[i], b = y[i], ji = 0;
    while (a != b) {
      a /= g.L;
      b /= g.L;
      ++ji;
    }
    j = std::max(j, ji);
  }
  return j;
}

// True if x and y share a j-block (j = 0 means equal sites).
inline bool same_block(const Site& x, const Site& y, long j, const Geometry& g) {
  long p = pow_int<long>(g.L, j);
  for (long i = 0; i < g.d; ++i)
    if (x[i] / p != y[i] / p) return false;
  return true;
}

// Delta_{H,N;xy} by the closed form (diagonal / coalescence-scale off-diagonal).
template <class S = double>
S laplacian_entry(const Site& x, const Site& y, const Geometry& g) {
  const S Ld = pow_int<S>(S(g.L), g.d);
  const S Ld2 = pow_int<S>(S(g.L), g.d + 2);
  const S denom = S(1) - S(1) / Ld2;
  if (x == y) {
    if (!g.valid_site(x)) throw std::invalid_argument("laplacian_entry: site out of range");
    return -(S(1) - S(1) / Ld) * (S(1) - S(1) / pow_int<S>(Ld2, g.N)) / denom;
  }
  long jx = coalescence_scale(x, y, g);
  return (S(g.L) * S(g.L) - S(1)) / denom / pow_int<S>(Ld2, jx) +
         (S(1) - S(1) / Ld) / denom / pow_int<S>(Ld2, g.N);
}

// gamma_j = L^{2(j-1)} / (1 + L^{2(j-1)} m^2), exact when S is Rational.
template <class S = double>
S gamma_scale(long j, const S& m2, const Geometry& g) {
  S L2 = pow_int<S>(S(g.L), 2 * (j - 1));
  return L2 / (S(1) + L2 * m2);
}

// C_{j;xy}(m^2) for 1 <= j <= N: gamma_j (Q_{j-1} - Q_j).
template <class S = double>
S covariance_entry(long j, const Site& x, const Site& y, const S& m2, const Geometry& g) {
  if (j < 1 || j > g.N) throw std::invalid_argument("covariance_entry: scale out of range");
  if (!g.valid_site(x) || !g.valid_site(y)) throw std::invalid_argument("covariance_entry: site out of range");
  if (!same_block(x, y, j, g)) return S(0);
  S gam = gamma_scale<S>(j, m2, g);
  S qj = S(1) / pow_int<S>(S(g.L), g.d * j);
  S entry = -qj;
  if (same_block(x, y, j - 1, g)) entry += S(1) / pow_int<S>(S(g.L), g.d * (j - 1));
  return gam * entry;
}

// Final-scale covariance C_{N-hat;xy} = m^{-2} L^{-dN}.
template <class S = double>
S covariance_entry_final(const S& m2, const Geometry& g) {
  if (m2 <= S(0)) throw std::invalid_argument("final covariance needs positive mass");
  return S(1) / (m2 * pow_int<S>(S(g.L), g.d * g.N));
}

// c_j = C_{j+1;00}(m^2) = L^{-(d-2)j} (1 + m^2 L^{2j})^{-1} (1 - L^{-d}).
template <class S = double>
S c_diag(long j, const S& m2, long d, long L) {
  S Mj = S(1) / (S(1) + m2 * pow_int<S>(S(L), 2 * j));
  return pow_int<S>(S(L), -(d - 2) * j) * Mj * (S(1) - S(1) / pow_int<S>(S(L), d));
}

inline double c_diag_d(long j, double m2, long d, long L) {
  double Mj = mass_factor(m2, L, j);
  return std::pow(static_cast<double>(L), -static_cast<double>((d - 2) * j)) * Mj *
         (1.0 - std::pow(static_cast<double>(L), -static_cast<double>(d)));
}

template <class S = double>
struct MomentTable {
  long j = 0;
  S c{}, c1{}, c2{}, c3{}, c4{};
};

// Closed-form moment sums c_j^{(n)} = sum_x (C_{j+1;0x})^n, j < N.
template <class S = double>
MomentTable<S> moments(long j, const S& m2, long d, long L) {
  MomentTable<S> t;
  t.j = j;
  S u = S(1) / pow_int<S>(S(L), d);
  S Mj = S(1) / (S(1) + m2 * pow_int<S>(S(L), 2 * j));
  t.c = c_diag<S>(j, m2, d, L);
  t.c1 = S(0);
  t.c2 = pow_int<S>(S(L), -(d - 4) * j) * pow_int<S>(Mj, 2) * (S(1) - u);
  t.c3 = pow_int<S>(S(L), -(2 * d - 6) * j) * pow_int<S>(Mj, 3) * (S(1) - S(3) * u + S(2) * u * u);
  t.c4 = pow_int<S>(S(L), -(3 * d - 8) * j) * pow_int<S>(Mj, 4) *
         (S(1) - S(4) * u + S(6) * u * u - S(3) * u * u * u);
  return t;
}

// Overflow-safe double versions for large j.
inline double c2_d(long j, double m2, long d, long L) {
  double Mj = mass_factor(m2, L, j);
  return std::pow(static_cast<double>(L), -static_cast<double>((d - 4) * j)) * Mj * Mj *
         (1.0 - std::pow(static_cast<double>(L), -static_cast<double>(d)));
}
inline double c3_d(long j, double m2, long d, long L) {
  double Mj = mass_factor(m2, L, j);
  double u = std::pow(static_cast<double>(L), -static_cast<double>(d));
  return std::pow(static_cast<double>(L), -static_cast<double>((2 * d - 6) * j)) * Mj * Mj * Mj *
         (1.0 - 3.0 * u + 2.0 * u * u);
}
inline double c4_d(long j, double m2, long d, long L) {
  double Mj = mass_factor(m2, L, j);
  double u = std::pow(static_cast<double>(L), -static_cast<double>(d));
  double M2 = Mj * Mj;
  return std::pow(static_cast<double>(L), -static_cast<double>((3 * d - 8) * j)) * M2 * M2 *
         (1.0 - 4.0 * u + 6.0 * u * u - 3.0 * u * u * u);
}

// (-Delta_H + m^2)^{-1}_{00} = sum_{j>=0} c_j(m^2), infinite volume.
inline TruncatedSum green_diag(double m2, long d, long L, long jmax = 200) {
  if (d <= 2 && m2 <= 0.0) throw std::domain_error("green_diag: divergent for d <= 2 at m^2 = 0");
  TruncatedSum out;
  double prev = 0.0;
  for (long j = 0; j < jmax; ++j) {
    double term = c_diag_d(j, m2, d, L);
    out.value += term;
    out.terms = j + 1;
    prev = term;
    if (term < 1e-18 * out.value && j > 2) break;
  }
  double ratio = std::pow(static_cast<double>(L), -static_cast<double>(d - 2));
  if (m2 > 0.0) ratio = std::min(ratio, 1.0) * std::pow(static_cast<double>(L), -2.0);
  ratio = std::min(ratio, 0.999);
  out.tail_bound = prev * ratio / (1.0 - ratio);
  return out;
}

struct BubbleResult {
  TruncatedSum sum;
  double log_ratio = 0.0;  // B^H / log(1/m), reported for d = 4
};

// B^H_{m^2} = sum_{j>=0} c_j^{(2)}(m^2).
inline BubbleResult hier_bubble(double m2, long d, long L, long jmax = 200) {
  if (d <= 4 && m2 <= 0.0) throw std::domain_error("bubble diverges for d <= 4 at m^2 = 0");
  BubbleResult out;
  double prev = 0.0;
  for (long j = 0; j < jmax; ++j) {
    double term = c2_d(j, m2, d, L);
    if (!std::isfinite(term)) throw std::runtime_error("hier_bubble: non-finite term");
    out.sum.value += term;
    out.sum.terms = j + 1;
    prev = term;
    if (term < 1e-18 * out.sum.value && j > 2) break;
  }
  double ratio = std::pow(static_cast<double>(L), -std::abs(static_cast<double>(d - 4)) - 2.0);
  ratio = std::min(std::max(ratio, std::pow(static_cast<double>(L), -static_cast<double>(d))), 0.999);
  out.sum.tail_bound = prev * ratio / (1.0 - ratio);
  if (d == 4 && m2 > 0.0 && m2 < 1.0) out.log_ratio = out.sum.value / (-0.5 * std::log(m2));
  return out;
}

inline long flatten(const Site& x, const Geometry& g) {
  long idx = 0, side = g.side();
  for (long i = 0; i < g.d; ++i) idx = idx * side + x[i];
  return idx;
}

// One GFF sample phi = sum_j zeta_j + zeta_{N-hat} via per-block zero-sum
// increments (one independent Gaussian per tree edge, centred per block).
inline std::vector<double> gff_sample_tree(const Geometry& g, double m2, std::mt19937_64& rng) {
  if (m2 <= 0.0) throw std::invalid_argument("gff_sample_tree: m^2 > 0 required");
  const long V = g.volume();
  std::vector<double> phi(V, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Site x(g.d);

  for (long j = 1; j <= g.N; ++j) {
    const long pj = pow_int<long>(g.L, j);
    const long pj1 = pow_int<long>(g.L, j - 1);
    const long B = pow_int<long>(g.L, g.d);
    const double sigma = std::sqrt(gamma_scale<double>(j, m2, g) /
                                   std::pow(static_cast<double>(g.L), static_cast<double>(g.d * (j - 1))));
    // per j-block: draw L^d iid Gaussians, centre them, assign one value per child
    std::vector<double> child_value(V / pow_int<long>(pj1, g.d), 0.0);
    const long nchild_total = static_cast<long>(child_value.size());
    std::vector<double> xi(B);
    for (long start = 0; start < nchild_total; start += B) {
      double mean = 0.0;
      for (long c = 0; c < B; ++c) {
        xi[c] = gauss(rng);
        mean += xi[c];
      }
      mean /= static_cast<double>(B);
      for (long c = 0; c < B; ++c) child_value[start + c] = (xi[c] - mean) * sigma;
    }
    // child blocks enumerated so that consecutive runs of L^d children share a
    // j-block: order children by (block index at scale j, offset within block)
    for (long idx = 0; idx < V; ++idx) {
      Site s = g.site_of_index(idx);
      long block = 0, child = 0;
      long nb_side = g.side() / pj;
      for (long i = 0; i < g.d; ++i) {
        block = block * nb_side + s[i] / pj;
        child = child * g.L + (s[i] % pj) / pj1;
      }
      phi[idx] += child_value[block * B + child];
    }
  }
  double zlast = gauss(rng) * std::sqrt(covariance_entry_final<double>(m2, g));
  for (double& p : phi) p += zlast;
  return phi;
}

}  // namespace rglab::hier

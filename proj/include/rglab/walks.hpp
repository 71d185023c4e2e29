// Random-walk representations: resolvent walk sums on weighted graphs,
// continuous-time walk Feynman-Kac Monte Carlo, the Euclidean bubble
// diagram and self-avoiding walk enumeration.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <map>
#include <unordered_set>
#include <vector>

#include "rglab/common.hpp"
#include "rglab/quadrature.hpp"

namespace rglab::walks {

struct WeightedGraph {
  Eigen::MatrixXd beta;    // symmetric, nonnegative, zero diagonal
  Eigen::VectorXd v;       // killing rates (diagonal of V)

  WeightedGraph(Eigen::MatrixXd b, Eigen::VectorXd vv) : beta(std::move(b)), v(std::move(vv)) {
    long n = beta.rows();
    if (beta.cols() != n || v.size() != n) throw std::invalid_argument("WeightedGraph: shape mismatch");
    if (n > 8) throw std::invalid_argument("WeightedGraph: V <= 8");
    for (long i = 0; i < n; ++i) {
      if (beta(i, i) != 0.0) throw std::invalid_argument("WeightedGraph: nonzero diagonal");
      for (long j = 0; j < n; ++j) {
        if (beta(i, j) < 0.0 || beta(i, j) != beta(j, i))
          throw std::invalid_argument("WeightedGraph: weights must be symmetric nonnegative");
      }
    }
  }

  long size() const { return beta.rows(); }

  Eigen::VectorXd beta_bar() const { return beta.rowwise().sum(); }

  // -Delta_beta + V as a dense matrix
  Eigen::MatrixXd resolvent_matrix() const {
    long n = size();
    Eigen::MatrixXd A = -beta;
    Eigen::VectorXd bb = beta_bar();
    for (long i = 0; i < n; ++i) A(i, i) = bb(i) + v(i);
    return A;
  }
};

struct WalkSumResult {
  Eigen::MatrixXd sum;
  double tail_bound = 0.0;
  long steps = 0;
};

// (-Delta_beta + V)^{-1} as the generation-summed walk series
// sum_n (R B)^n R, R = diag(1/(beta_bar + v)); geometric tail bound.
inline WalkSumResult resolvent_walk_sum(const WeightedGraph& g, double tol = 1e-10,
                                        long max_steps = 100000) {
  long n = g.size();
  Eigen::VectorXd bb = g.beta_bar();
  for (long i = 0; i < n; ++i)
    if (bb(i) <= 0.0) throw std::invalid_argument("resolvent_walk_sum: beta_bar must be positive");
  double q = 0.0;
  for (long i = 0; i < n; ++i) q = std::max(q, bb(i) / (bb(i) + g.v(i)));
  if (q >= 1.0) throw std::domain_error("resolvent_walk_sum: spectral condition max beta_bar/(beta_bar+v) >= 1");

  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i) R(i, i) = 1.0 / (bb(i) + g.v(i));
  Eigen::MatrixXd T = R * g.beta;  // one step
  WalkSumResult out;
  out.sum = R;
  Eigen::MatrixXd term = R;
  double rmax = R.diagonal().maxCoeff();
  for (long s = 1; s <= max_steps; ++s) {
    term = T * term;
    out.sum += term;
    out.steps = s;
    double mag = term.cwiseAbs().maxCoeff();
    out.tail_bound = mag * q / (1.0 - q);
    if (out.tail_bound < tol * std::max(rmax, out.sum.cwiseAbs().maxCoeff())) break;
  }
  return out;
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

// MC estimate of int_0^infty E_x(e^{-sum_u v_u L_{T,u}} 1_{X(T)=y}) dT by
// jump-chain simulation; the local-time weight decays along the path, so
// each path is followed until its survival weight is negligible.
inline McEstimate ctrw_feynman_kac(const WeightedGraph& g, long x, long y, std::uint64_t seed,
                                   long samples) {
  long n = g.size();
  if (x < 0 || x >= n || y < 0 || y >= n) throw std::invalid_argument("ctrw_feynman_kac: bad site");
  Eigen::VectorXd bb = g.beta_bar();
  for (long i = 0; i < n; ++i) {
    if (bb(i) <= 0.0) throw std::invalid_argument("ctrw_feynman_kac: beta_bar must be positive");
    if (g.v(i) <= 0.0) throw std::invalid_argument("ctrw_feynman_kac: killing rates must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double acc = 0.0, acc2 = 0.0;
  for (long s = 0; s < samples; ++s) {
    long site = x;
    double logw = 0.0;  // log survival weight e^{-sum v_u L_u} so far
    double contrib = 0.0;
    while (logw > -34.0) {  // weight ~ 1.7e-15 cutoff
      double sigma = -std::log(1.0 - uni(rng)) / bb(site);
      // integral over the stay: int_0^sigma w0 e^{-v s} ds  at X = site
      if (site == y) contrib += std::exp(logw) * (1.0 - std::exp(-g.v(site) * sigma)) / g.v(site);
      logw -= g.v(site) * sigma;
      // jump proportional to beta(site, .)
      double r = uni(rng) * bb(site), run = 0.0;
      long next = n - 1;
      for (long j = 0; j < n; ++j) {
        run += g.beta(site, j);
        if (r <= run) {
          next = j;
          break;
        }
      }
      site = next;
    }
    acc += contrib;
    acc2 += contrib * contrib;
  }
  McEstimate out;
  out.samples = samples;
  out.value = acc / samples;
  out.std_error = std::sqrt(std::max(acc2 / samples - out.value * out.value, 0.0) / samples);
  return out;
}

struct BubbleResult {
  double value = 0.0;
  double normalised = 0.0;  // B m^{4-d} for d < 4, B / log m^{-2} for d = 4
};

// B_{m^2} = int (lambda(k) + m^2)^{-2} dk/(2pi)^d via the heat-kernel
// representation B = int_0^infty t e^{-t m^2} (e^{-2t} I_0(2t))^d dt, which a
// graded 1-d quadrature resolves at any mass.
inline BubbleResult euclid_bubble(double m2, long d, int panels_per_decade = 8, int order = 24) {
  if (d < 1 || d > 6) throw std::invalid_argument("euclid_bubble: d out of range");
  if (m2 <= 0.0 && d <= 4) throw std::domain_error("euclid_bubble: diverges for d <= 4 at m^2 = 0");
  auto integrand = [&](double t) {
    double k = bessel_i0_scaled(2.0 * t);
    return t * std::exp(-t * m2) * std::pow(k, static_cast<double>(d));
  };
  double tmax = (m2 > 0.0) ? 45.0 / m2 : 1e12;
  double acc = gl_integrate(integrand, 0.0, 1.0, 64);
  double lo = 1.0;
  while (lo < tmax) {
    double hi = std::min(lo * std::pow(10.0, 1.0 / panels_per_decade), tmax);
    acc += gl_integrate(integrand, lo, hi, order);
    lo = hi;
  }
  BubbleResult out;
  out.value = acc;
  if (d < 4)
    out.normalised = acc * std::pow(m2, 0.5 * (4.0 - d));
  else if (d == 4)
    out.normalised = acc / std::log(1.0 / m2);
  return out;
}

// Momentum-space cross-check for d <= 2: graded tensor Gauss-Legendre.
inline double euclid_bubble_momentum(double m2, long d, int order = 16) {
  if (d > 2) throw std::invalid_argument("euclid_bubble_momentum: d <= 2 only");
  std::vector<double> edges{0.0};
  double e = std::sqrt(std::max(m2, 1e-14)) * 0.5;
  while (e < M_PI) {
    edges.push_back(e);
    e *= 2.0;
  }
  edges.push_back(M_PI);
  auto sym = [&](double k) { return 4.0 * std::sin(0.5 * k) * std::sin(0.5 * k); };
  const QuadRule& q = gauss_legendre(order);
  std::vector<double> nodes, weights;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    double a = edges[p], b = edges[p + 1];
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * q.x[i]);
      weights.push_back(0.5 * (b - a) * q.w[i]);
    }
  }
  double acc = 0.0;
  if (d == 1) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double val = 1.0 / ((sym(nodes[i]) + m2) * (sym(nodes[i]) + m2));
      acc += weights[i] * val;
    }
    return acc * 2.0 / (2.0 * M_PI);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      double lam = sym(nodes[i]) + sym(nodes[j]);
      acc += weights[i] * weights[j] / ((lam + m2) * (lam + m2));
    }
  return acc * 4.0 / std::pow(2.0 * M_PI, 2.0);
}

// Weakly self-avoiding walk two-point function, walk side:
// int_0^infty E_x(e^{-g I(T)} 1_{X(T)=y}) e^{-nu T} dT with I the
// self-intersection local time, accumulated exactly from the piecewise
// constant path; the within-stay integral of e^{-g s^2 - b s} is done by
// Gauss-Legendre on the stay.
inline McEstimate wsaw_two_point_mc(const WeightedGraph& g, long x, long y, double gcoup,
                                    double nu, std::uint64_t seed, long samples) {
  if (gcoup <= 0.0) throw std::invalid_argument("wsaw_two_point_mc: g must be > 0");
  long n = g.size();
  Eigen::VectorXd bb = g.beta_bar();
  for (long i = 0; i < n; ++i)
    if (bb(i) <= 0.0) throw std::invalid_argument("wsaw_two_point_mc: beta_bar must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const QuadRule& q = gauss_legendre(24);
  double acc = 0.0, acc2 = 0.0;
  std::vector<double> ltime(n);
  for (long s = 0; s < samples; ++s) {
    long site = x;
    std::fill(ltime.begin(), ltime.end(), 0.0);
    double t0 = 0.0, isq = 0.0, contrib = 0.0;
    while (gcoup * isq + nu * t0 < 34.0) {
      double sigma = -std::log(1.0 - uni(rng)) / bb(site);
      if (site == y) {
        double b = 2.0 * gcoup * ltime[site] + nu;
        double pref = std::exp(-gcoup * isq - nu * t0);
        double integral = 0.0;
        for (std::size_t i = 0; i < q.x.size(); ++i) {
          double u = 0.5 * sigma * (q.x[i] + 1.0);
          integral += 0.5 * sigma * q.w[i] * std::exp(-gcoup * u * u - b * u);
        }
        contrib += pref * integral;
      }
      isq += 2.0 * ltime[site] * sigma + sigma * sigma;
      ltime[site] += sigma;
      t0 += sigma;
      double r = uni(rng) * bb(site), run = 0.0;
      long next = n - 1;
      for (long j = 0; j < n; ++j) {
        run += g.beta(site, j);
        if (r <= run) {
          next = j;
          break;
        }
      }
      site = next;
    }
    acc += contrib;
    acc2 += contrib * contrib;
  }
  McEstimate out;
  out.samples = samples;
  out.value = acc / samples;
  out.std_error = std::sqrt(std::max(acc2 / samples - out.value * out.value, 0.0) / samples);
  return out;
}

// ---- self-avoiding walks ---------------------------------------------------

// Exhaustive backtracking enumeration of c_1..c_nmax on Z^d; two independent
// visited-set implementations (hash set and dense bitmask grid).
inline std::vector<std::uint64_t> saw_counts_hashset(long d, int nmax) {
  if (nmax < 1 || nmax > 14) throw std::invalid_argument("saw_counts: nmax in [1,14]");
  std::vector<std::uint64_t> counts(nmax + 1, 0);
  std::vector<long> pos(d, 0);
  std::unordered_set<std::uint64_t> visited;
  auto key = [&](const std::vector<long>& x) {
    std::uint64_t k = 0;
    for (long c : x) k = k * 64 + static_cast<std::uint64_t>(c + 31);
    return k;
  };
  std::function<void(int)> rec = [&](int depth) {
    if (depth == nmax) return;
    for (long axis = 0; axis < d; ++axis)
      for (int dir : {-1, 1}) {
        pos[axis] += dir;
        std::uint64_t k = key(pos);
        if (visited.insert(k).second) {
          ++counts[depth + 1];
          rec(depth + 1);
          visited.erase(k);
        }
        pos[axis] -= dir;
      }
  };
  visited.insert(key(pos));
  rec(0);
  counts.erase(counts.begin());
  return counts;
}

// endpoint-resolved counts c_n(x) for one fixed n
inline std::map<std::vector<long>, std::uint64_t> saw_counts_by_endpoint(long d, int n) {
  if (n < 1 || n > 12) throw std::invalid_argument("saw_counts_by_endpoint: n in [1,12]");
  std::map<std::vector<long>, std::uint64_t> out;
  std::vector<long> pos(d, 0);
  std::unordered_set<std::uint64_t> visited;
  auto key = [&](const std::vector<long>& x) {
    std::uint64_t k = 0;
    for (long c : x) k = k * 64 + static_cast<std::uint64_t>(c + 31);
    return k;
  };
  std::function<void(int)> rec = [&](int depth) {
    if (depth == n) {
      ++out[pos];
      return;
    }
    for (long axis = 0; axis < d; ++axis)
      for (int dir : {-1, 1}) {
        pos[axis] += dir;
        std::uint64_t k = key(pos);
        if (visited.insert(k).second) {
          rec(depth + 1);
          visited.erase(k);
        }
        pos[axis] -= dir;
      }
  };
  visited.insert(key(pos));
  rec(0);
  return out;
}

inline std::vector<std::uint64_t> saw_counts_bitmask(long d, int nmax) {
  if (nmax < 1 || nmax > 14) throw std::invalid_argument("saw_counts: nmax in [1,14]");
  const long side = 2 * nmax + 1;
  long vol = 1;
  for (long i = 0; i < d; ++i) vol *= side;
  std::vector<std::uint8_t> visited(vol, 0);
  std::vector<long> stride(d, 1);
  for (long i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;
  long origin = 0;
  for (long i = 0; i < d; ++i) origin += nmax * stride[i];
  std::vector<std::uint64_t> counts(nmax + 1, 0);
  std::function<void(long, int)> rec = [&](long idx, int depth) {
    if (depth == nmax) return;
    for (long axis = 0; axis < d; ++axis)
      for (long step : {-stride[axis], stride[axis]}) {
        long nxt = idx + step;
        if (!visited[nxt]) {
          visited[nxt] = 1;
          ++counts[depth + 1];
          rec(nxt, depth + 1);
          visited[nxt] = 0;
        }
      }
  };
  visited[origin] = 1;
  rec(origin, 0);
  counts.erase(counts.begin());
  return counts;
}

}  // namespace rglab::walks

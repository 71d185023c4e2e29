// Gaussian measures on finite index sets: Wick calculus on polynomials,
// the heat-semigroup convolution, Wick ordering, the F_C pairing,
// cumulant/moment conversion and sampling.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"
#include "rglab/polynomial.hpp"

namespace rglab::gauss {

// Symmetric coefficient matrix for the Laplacian Delta_C; any scalar.
template <class S>
using SymMatrix = std::vector<std::vector<S>>;

template <class S>
SymMatrix<S> zero_matrix(std::size_t m) {
  return SymMatrix<S>(m, std::vector<S>(m, S(0)));
}

template <class S>
void check_symmetric(const SymMatrix<S>& c) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].size() != c.size()) throw std::invalid_argument("covariance: not square");
    for (std::size_t j = 0; j < i; ++j)
      if (!(c[i][j] == c[j][i])) throw std::invalid_argument("covariance: not symmetric");
  }
}

// (1/2) Delta_C A = (1/2) sum_{u,v} C_{uv} d_u d_v A.
template <class S>
Polynomial<S> half_laplacian(const Polynomial<S>& a, const SymMatrix<S>& c) {
  Polynomial<S> out;
  const std::size_t m = c.size();
  std::vector<Polynomial<S>> first(m);
  std::vector<bool> have(m, false);
  for (std::size_t u = 0; u < m; ++u) {
    Polynomial<S> du = a.derivative(static_cast<std::uint32_t>(u));
    if (du.is_zero()) continue;
    for (std::size_t v = 0; v < m; ++v) {
      if (c[u][v] == S(0)) continue;
      Polynomial<S> duv = du.derivative(static_cast<std::uint32_t>(v));
      if (duv.is_zero()) continue;
      out += duv * (c[u][v] / S(2));
    }
  }
  return out;
}

// E_C theta A = e^{(1/2) Delta_C} A, exact for polynomials.
template <class S>
Polynomial<S> heat_convolve(const Polynomial<S>& a, const SymMatrix<S>& c) {
  check_symmetric(c);
  Polynomial<S> out = a, term = a;
  const std::uint32_t p = (a.degree() + 1) / 2;
  for (std::uint32_t k = 1; k <= p; ++k) {
    term = half_laplacian(term, c) * (S(1) / S(static_cast<long>(k)));
    if (term.is_zero()) break;
    out += term;
  }
  return out;
}

// Wick ordering :A:_C = e^{-(1/2) Delta_C} A.
template <class S>
Polynomial<S> wick_order(const Polynomial<S>& a, const SymMatrix<S>& c) {
  SymMatrix<S> neg = c;
  for (auto& row : neg)
    for (auto& v : row) v = -v;
  return heat_convolve(a, neg);
}

template <class S>
S wick_expect(const Polynomial<S>& a, const SymMatrix<S>& c) {
  return heat_convolve(a, c).constant_term();
}

// F_C(A,B) = e^{L} (A' B'') - AB with L = sum C_{uv} d_{u'} d_{v''}; computed
// in doubled variables and evaluated back on the diagonal. Satisfies
// Cov_C(theta A, theta B) = F_C(E_C theta A, E_C theta B).
template <class S>
Polynomial<S> f_c_pairing(const Polynomial<S>& a, const Polynomial<S>& b, const SymMatrix<S>& c) {
  check_symmetric(c);
  const std::size_t m = c.size();
  auto shift = [&](const Polynomial<S>& p) {
    Polynomial<S> out;
    for (auto& [mon, coef] : p.terms()) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> f;
      for (auto& [v, e] : mon.factors()) f.push_back({v + static_cast<std::uint32_t>(m), e});
      out.add_term(Monomial(f), coef);
    }
    return out;
  };
  Polynomial<S> prod = a * shift(b);
  // apply e^{L} - 1 with L = sum_{u,v} C_{uv} d_u d_{v+m}
  auto L_apply = [&](const Polynomial<S>& p) {
    Polynomial<S> out;
    for (std::size_t u = 0; u < m; ++u) {
      Polynomial<S> du = p.derivative(static_cast<std::uint32_t>(u));
      if (du.is_zero()) continue;
      for (std::size_t v = 0; v < m; ++v) {
        if (c[u][v] == S(0)) continue;
        Polynomial<S> d2 = du.derivative(static_cast<std::uint32_t>(v + m));
        if (!d2.is_zero()) out += d2 * c[u][v];
      }
    }
    return out;
  };
  Polynomial<S> acc, term = prod;
  std::uint32_t pmax = std::min(a.degree(), b.degree());
  for (std::uint32_t k = 1; k <= pmax; ++k) {
    term = L_apply(term) * (S(1) / S(static_cast<long>(k)));
    if (term.is_zero()) break;
    acc += term;
  }
  // identify doubled variables with the originals
  Polynomial<S> out;
  for (auto& [mon, coef] : acc.terms()) {
    Monomial folded;
    for (auto& [v, e] : mon.factors())
      folded = folded * Monomial::var(v < m ? v : static_cast<std::uint32_t>(v - m), e);
    out.add_term(folded, coef);
  }
  return out;
}

// |E(F phi_x) - sum_y C_{xy} E(dF/dphi_y)|, computed symbolically.
template <class S>
S integration_by_parts_residual(const Polynomial<S>& f, const SymMatrix<S>& c, std::uint32_t x) {
  S lhs = wick_expect(f * Polynomial<S>::variable(x), c);
  S rhs(0);
  for (std::size_t y = 0; y < c.size(); ++y)
    rhs += c[x][y] * wick_expect(f.derivative(static_cast<std::uint32_t>(y)), c);
  S r = lhs - rhs;
  return r < S(0) ? -r : r;
}

// ---- cumulants ----------------------------------------------------------

inline constexpr int kPartitionOrderCap = 8;

// All set partitions of {0..n-1} via restricted growth strings.
inline std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
  if (n > kPartitionOrderCap) throw std::invalid_argument("partition enumeration cap");
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<int> rgs(n, 0);
  while (true) {
    int nb = 0;
    for (int v : rgs) nb = std::max(nb, v + 1);
    std::vector<std::vector<int>> blocks(nb);
    for (int i = 0; i < n; ++i) blocks[rgs[i]].push_back(i);
    out.push_back(blocks);
    // next restricted growth string
    int i = n - 1;
    for (; i > 0; --i) {
      int maxprefix = 0;
      for (int k = 0; k < i; ++k) maxprefix = std::max(maxprefix, rgs[k]);
      if (rgs[i] <= maxprefix) {
        ++rgs[i];
        for (int k = i + 1; k < n; ++k) rgs[k] = 0;
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

// Joint moments indexed by subsets of {0..k-1} (bitmask, nonempty) ->
// joint cumulants on the same index set, via the partition identity
// mu_I = sum over partitions pi of I of prod_{J in pi} kappa_J.
template <class S>
std::map<std::uint32_t, S> cumulants_from_moments(const std::map<std::uint32_t, S>& mu, int k) {
  if (k > kPartitionOrderCap) throw std::invalid_argument("partition enumeration cap");
  std::map<std::uint32_t, S> kappa;
  // process subsets in order of increasing popcount
  std::vector<std::uint32_t> subsets;
  for (std::uint32_t s = 1; s < (1u << k); ++s) subsets.push_back(s);
  std::sort(subsets.begin(), subsets.end(), [](std::uint32_t a, std::uint32_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  for (std::uint32_t s : subsets) {
    auto it = mu.find(s);
    if (it == mu.end()) throw std::invalid_argument("cumulants_from_moments: missing moment");
    std::vector<int> elems;
    for (int i = 0; i < k; ++i)
      if (s & (1u << i)) elems.push_back(i);
    S acc = it->second;
    for (auto& part : set_partitions(static_cast<int>(elems.size()))) {
      if (part.size() == 1) continue;  // the full block is kappa_s itself
      S prod(1);
      for (auto& blk : part) {
        std::uint32_t mask = 0;
        for (int e : blk) mask |= (1u << elems[e]);
        prod *= kappa.at(mask);
      }
      acc -= prod;
    }
    kappa[s] = acc;
  }
  return kappa;
}

template <class S>
std::map<std::uint32_t, S> moments_from_cumulants(const std::map<std::uint32_t, S>& kappa, int k) {
  if (k > kPartitionOrderCap) throw std::invalid_argument("partition enumeration cap");
  std::map<std::uint32_t, S> mu;
  for (std::uint32_t s = 1; s < (1u << k); ++s) {
    std::vector<int> elems;
    for (int i = 0; i < k; ++i)
      if (s & (1u << i)) elems.push_back(i);
    S acc(0);
    for (auto& part : set_partitions(static_cast<int>(elems.size()))) {
      S prod(1);
      for (auto& blk : part) {
        std::uint32_t mask = 0;
        for (int e : blk) mask |= (1u << elems[e]);
        prod *= kappa.at(mask);
      }
      acc += prod;
    }
    mu[s] = acc;
  }
  return mu;
}

// Univariate: moments m_1..m_k of one variable -> cumulants kappa_1..kappa_k.
template <class S>
std::vector<S> cumulants_from_moments_1d(const std::vector<S>& m) {
  int k = static_cast<int>(m.size());
  if (k > kPartitionOrderCap) throw std::invalid_argument("partition enumeration cap");
  std::vector<S> kap(k);
  std::vector<S> binom((k + 1) * (k + 1), S(0));
  auto C = [&](int a, int b) -> S& { return binom[a * (k + 1) + b]; };
  for (int a = 0; a <= k; ++a) {
    C(a, 0) = S(1);
    for (int b = 1; b <= a; ++b) C(a, b) = C(a - 1, b - 1) + (b <= a - 1 ? C(a - 1, b) : S(0));
  }
  for (int n = 1; n <= k; ++n) {
    S acc = m[n - 1];
    for (int j = 1; j < n; ++j) acc -= C(n - 1, j - 1) * kap[j - 1] * m[n - j - 1];
    kap[n - 1] = acc;
  }
  return kap;
}

template <class S>
std::vector<S> moments_from_cumulants_1d(const std::vector<S>& kap) {
  int k = static_cast<int>(kap.size());
  if (k > kPartitionOrderCap) throw std::invalid_argument("partition enumeration cap");
  std::vector<S> m(k);
  std::vector<S> binom((k + 1) * (k + 1), S(0));
  auto C = [&](int a, int b) -> S& { return binom[a * (k + 1) + b]; };
  for (int a = 0; a <= k; ++a) {
    C(a, 0) = S(1);
    for (int b = 1; b <= a; ++b) C(a, b) = C(a - 1, b - 1) + (b <= a - 1 ? C(a - 1, b) : S(0));
  }
  for (int n = 1; n <= k; ++n) {
    S acc = kap[n - 1];
    for (int j = 1; j < n; ++j) acc += C(n - 1, j - 1) * kap[j - 1] * m[n - j - 1];
    m[n - 1] = acc;
  }
  return m;
}

// ---- sampling ------------------------------------------------------------

// Dense covariance with cached eigendecomposition; PSD up to tolerance,
// kernel directions sampled as exact zeros.
class Covariance {
 public:
  explicit Covariance(Eigen::MatrixXd c) : c_(std::move(c)) {
    if (c_.rows() != c_.cols()) throw std::invalid_argument("Covariance: not square");
    if (!c_.isApprox(c_.transpose(), 1e-12)) throw std::invalid_argument("Covariance: not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c_);
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    double tol = 1e-12 * std::max(1.0, c_.diagonal().maxCoeff());
    for (long i = 0; i < evals_.size(); ++i) {
      if (evals_(i) < -tol) throw std::invalid_argument("Covariance: negative eigenvalue beyond tolerance");
      if (evals_(i) < tol) {
        evals_(i) = 0.0;
        kernel_.push_back(i);
      }
    }
  }

  long size() const { return c_.rows(); }
  const Eigen::MatrixXd& matrix() const { return c_; }
  const std::vector<long>& kernel_directions() const { return kernel_; }

  std::vector<double> sample(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(size());
    for (long i = 0; i < size(); ++i) z(i) = evals_(i) > 0.0 ? gauss(rng) * std::sqrt(evals_(i)) : 0.0;
    Eigen::VectorXd phi = evecs_ * z;
    return std::vector<double>(phi.data(), phi.data() + size());
  }

 private:
  Eigen::MatrixXd c_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  std::vector<long> kernel_;
};

inline std::vector<std::vector<double>> sample(const Covariance& c, std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(c.sample(rng));
  return out;
}

}  // namespace rglab::gauss

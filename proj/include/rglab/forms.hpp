// Grassmann differential-forms engine over a finite vertex set: boson
// coefficients are polynomials in (phi_x, phibar_x), fermion monomials are
// ordered products of (psi_x, psibar_x). Implements the wedge product, the
// supersymmetry generator Q, the Gaussian super-expectation and the walk
// representation checks built on localisation.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "rglab/common.hpp"
#include "rglab/gaussian.hpp"
#include "rglab/polynomial.hpp"

namespace rglab::forms {

// variable/generator indexing for vertex x:
//   boson:  phi_x -> 2x, phibar_x -> 2x+1   (Polynomial variables)
//   fermion: psi_x -> bit 2x, psibar_x -> bit 2x+1
inline constexpr std::uint32_t phi_var(long x) { return static_cast<std::uint32_t>(2 * x); }
inline constexpr std::uint32_t phibar_var(long x) { return static_cast<std::uint32_t>(2 * x + 1); }
inline constexpr std::uint32_t psi_bit(long x) { return 1u << (2 * x); }
inline constexpr std::uint32_t psibar_bit(long x) { return 1u << (2 * x + 1); }

// sign of wedging monomial m1 (ascending) against m2 (ascending)
inline int wedge_sign(std::uint32_t m1, std::uint32_t m2) {
  int crossings = 0;
  for (std::uint32_t b = m2; b;) {
    std::uint32_t low = b & (~b + 1);
    // generators of m1 with higher index than this one must be crossed
    std::uint32_t higher = m1 & ~(low | (low - 1));
    crossings += __builtin_popcount(higher);
    b ^= low;
  }
  return (crossings & 1) ? -1 : 1;
}

template <class S>
class FormPoly {
 public:
  using Coeff = Polynomial<S>;
  using Terms = std::map<std::uint32_t, Coeff>;

  FormPoly() = default;
  explicit FormPoly(const Coeff& zero_form) { add(0, zero_form); }
  explicit FormPoly(const S& c) { add(0, Coeff(c)); }

  static FormPoly generator(std::uint32_t bit) {
    FormPoly f;
    f.add(bit, Coeff(S(1)));
    return f;
  }
  static FormPoly boson(std::uint32_t var) { return FormPoly(Coeff::variable(var)); }

  const Terms& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }

  void add(std::uint32_t mask, const Coeff& c) {
    if (c.is_zero()) return;
    auto it = t_.find(mask);
    if (it == t_.end()) {
      t_[mask] = c;
    } else {
      it->second += c;
      if (it->second.is_zero()) t_.erase(it);
    }
  }

  FormPoly operator+(const FormPoly& o) const {
    FormPoly r = *this;
    for (auto& [m, c] : o.t_) r.add(m, c);
    return r;
  }
  FormPoly operator-(const FormPoly& o) const {
    FormPoly r = *this;
    for (auto& [m, c] : o.t_) r.add(m, -c);
    return r;
  }
  FormPoly& operator+=(const FormPoly& o) { return *this = *this + o; }
  FormPoly& operator-=(const FormPoly& o) { return *this = *this - o; }
  FormPoly operator*(const S& s) const {
    FormPoly r;
    for (auto& [m, c] : t_) r.add(m, c * s);
    return r;
  }

  // graded (wedge) product
  FormPoly operator*(const FormPoly& o) const {
    FormPoly r;
    for (auto& [m1, c1] : t_)
      for (auto& [m2, c2] : o.t_) {
        if (m1 & m2) continue;
        int sg = wedge_sign(m1, m2);
        Coeff prod = c1 * c2;
        if (sg < 0) prod = -prod;
        r.add(m1 | m2, prod);
      }
    return r;
  }
  FormPoly& operator*=(const FormPoly& o) { return *this = *this * o; }

  bool operator==(const FormPoly& o) const { return t_ == o.t_; }

 private:
  Terms t_;
};

// tau_x = phi_x phibar_x + psi_x ^ psibar_x
template <class S>
FormPoly<S> tau(long x) {
  FormPoly<S> f(Polynomial<S>::variable(phi_var(x)) * Polynomial<S>::variable(phibar_var(x)));
  f.add(psi_bit(x) | psibar_bit(x), Polynomial<S>(S(1)));
  return f;
}

// tau_{xy} = (phi_x phibar_y + psi_x psibar_y + phi_y phibar_x + psi_y psibar_x)/2
template <class S>
FormPoly<S> tau_pair(long x, long y) {
  FormPoly<S> f(Polynomial<S>::variable(phi_var(x)) * Polynomial<S>::variable(phibar_var(y)) +
                Polynomial<S>::variable(phi_var(y)) * Polynomial<S>::variable(phibar_var(x)));
  f.add(psi_bit(x) | psibar_bit(y),
        Polynomial<S>((2 * x) < (2 * y + 1) ? S(1) : S(-1)));  // store ascending
  f.add(psi_bit(y) | psibar_bit(x), Polynomial<S>((2 * y) < (2 * x + 1) ? S(1) : S(-1)));
  return f * (S(1) / S(2));
}

// supersymmetry generator: Q phi = psi, Q phibar = psibar, Q psi = -phi,
// Q psibar = phibar; anti-derivation.
template <class S>
FormPoly<S> q_operator(const FormPoly<S>& k, long nvertices) {
  FormPoly<S> out;
  for (auto& [mask, coeff] : k.terms()) {
    // boson part: (Q coeff) ^ e_mask
    for (long x = 0; x < nvertices; ++x) {
      Polynomial<S> dphi = coeff.derivative(phi_var(x));
      if (!dphi.is_zero()) {
        FormPoly<S> t;
        t.add(psi_bit(x), dphi);
        FormPoly<S> em;
        em.add(mask, Polynomial<S>(S(1)));
        out += t * em;
      }
      Polynomial<S> dphibar = coeff.derivative(phibar_var(x));
      if (!dphibar.is_zero()) {
        FormPoly<S> t;
        t.add(psibar_bit(x), dphibar);
        FormPoly<S> em;
        em.add(mask, Polynomial<S>(S(1)));
        out += t * em;
      }
    }
    // fermion part: sum over generators in the mask with alternating signs
    int pos = 0;
    for (std::uint32_t b = mask; b;) {
      std::uint32_t low = b & (~b + 1);
      long gen = __builtin_ctz(low);
      long x = gen / 2;
      bool is_psi = (gen % 2) == 0;
      Polynomial<S> qg = is_psi ? -Polynomial<S>::variable(phi_var(x))
                                : Polynomial<S>::variable(phibar_var(x));
      Polynomial<S> c = coeff * qg;
      if (pos % 2 == 1) c = -c;
      out.add(mask & ~low, c);
      ++pos;
      b ^= low;
    }
  }
  return out;
}

// ---- dense matrix helpers over an exact scalar ----------------------------

template <class S>
struct DetInverse {
  std::vector<std::vector<S>> inv;
  S det;
};

template <class S>
DetInverse<S> invert_matrix(std::vector<std::vector<S>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<S>> inv(n, std::vector<S>(n, S(0)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = S(1);
  S det(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == S(0)) ++piv;
    if (piv == n) throw std::invalid_argument("invert_matrix: singular");
    if (piv != col) {
      std::swap(a[piv], a[col]);
      std::swap(inv[piv], inv[col]);
      det = -det;
    }
    det *= a[col][col];
    S scale = S(1) / a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] *= scale;
      inv[col][j] *= scale;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == S(0)) continue;
      S f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return {inv, det};
}

// e^{-psi A psibar} = sum_n (-1)^n (psi A psibar)^n / n!
template <class S>
FormPoly<S> fermion_gaussian(const std::vector<std::vector<S>>& a) {
  const long n = static_cast<long>(a.size());
  FormPoly<S> w;
  for (long x = 0; x < n; ++x)
    for (long y = 0; y < n; ++y) {
      if (a[x][y] == S(0)) continue;
      std::uint32_t m1 = psi_bit(x), m2 = psibar_bit(y);
      int sg = wedge_sign(m1, m2);
      w.add(m1 | m2, Polynomial<S>(sg < 0 ? -a[x][y] : a[x][y]));
    }
  FormPoly<S> out(Polynomial<S>(S(1)));
  FormPoly<S> pow(Polynomial<S>(S(1)));
  S fact(1);
  for (long k = 1; k <= n; ++k) {
    pow *= w;
    fact *= S(-k);
    out += pow * (S(1) / fact);
    if (pow.is_zero()) break;
  }
  return out;
}

// Gaussian super-expectation int K e^{-S_A} for A with positive-definite
// Hermitian part (real symmetric positive definite in this real engine).
// The fermionic part is integrated by top-degree extraction against
// e^{-psi A psibar}; the boson part via the complex Wick rule with
// E[phi_x phibar_y] = C_{xy}, C = A^{-1}, i.e. gaussian::wick_expect with
// the pairing matrix of the 2-component correspondence.
template <class S>
S super_expectation_A(const FormPoly<S>& k, const std::vector<std::vector<S>>& a) {
  const long n = static_cast<long>(a.size());
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (!(a[i][j] == a[j][i]))
        throw std::invalid_argument("super_expectation: A must be symmetric in the real engine");
  auto ainv = invert_matrix(a);
  if (!(ainv.det > S(0)))
    throw std::invalid_argument("super_expectation: A must be positive definite");

  FormPoly<S> total = k * fermion_gaussian(a);
  const std::uint32_t full = (n == 16) ? 0xffffffffu : ((1u << (2 * n)) - 1u);
  Polynomial<S> top;
  for (auto& [mask, coeff] : total.terms())
    if (mask == full) top = coeff;
  if (top.is_zero()) return S(0);

  // reference order psibar_1 psi_1 ... psibar_V psi_V vs ascending storage
  if (n % 2 == 1) top = -top;

  // boson pairing matrix over variables (phi_x = 2x, phibar_x = 2x+1)
  auto pair = gauss::zero_matrix<S>(2 * n);
  for (long x = 0; x < n; ++x)
    for (long y = 0; y < n; ++y) {
      pair[phi_var(x)][phibar_var(y)] += ainv.inv[x][y];
      pair[phibar_var(y)][phi_var(x)] += ainv.inv[x][y];
    }
  // note: pair is built symmetric entry-by-entry above
  S boson = gauss::wick_expect(top, pair);
  return boson / ainv.det;
}

template <class S>
S super_expectation(const FormPoly<S>& k, const std::vector<std::vector<S>>& c) {
  return super_expectation_A(k, invert_matrix(c).inv);
}

// Super integration-by-parts residual: E(phibar_x K) - sum_y C_{xy} E(dK/dphi_y).
template <class S>
S super_ibp_residual(const FormPoly<S>& k, const std::vector<std::vector<S>>& a, long x) {
  auto c = invert_matrix(a).inv;
  const long n = static_cast<long>(a.size());
  FormPoly<S> lhs_form = FormPoly<S>::boson(phibar_var(x)) * k;
  S lhs = super_expectation_A(lhs_form, a);
  S rhs(0);
  for (long y = 0; y < n; ++y) {
    FormPoly<S> dk;
    for (auto& [mask, coeff] : k.terms()) dk.add(mask, coeff.derivative(phi_var(y)));
    rhs += c[x][y] * super_expectation_A(dk, a);
  }
  S r = lhs - rhs;
  return r < S(0) ? -r : r;
}

// ---- walk representations --------------------------------------------------

// sum over strictly self-avoiding vertex paths x -> y on the complete graph
// with weight prod C_{omega(i-1) omega(i)}.
template <class S>
S saw_path_sum(const std::vector<std::vector<S>>& c, long x, long y) {
  const long n = static_cast<long>(c.size());
  S total(0);
  std::vector<char> used(n, 0);
  std::function<void(long, S)> rec = [&](long at, S w) {
    if (at == y) {
      total += w;
      return;
    }
    for (long nxt = 0; nxt < n; ++nxt) {
      if (used[nxt] || nxt == at) continue;
      used[nxt] = 1;
      rec(nxt, w * c[at][nxt]);
      used[nxt] = 0;
    }
  };
  if (x == y) return S(1);
  used[x] = 1;
  rec(x, S(1));
  return total;
}

// forms-engine side of the strict SAW representation:
// int phibar_x phi_y prod_{z != x,y} (1 + tau_z) e^{-S_A}.
template <class S>
S saw_representation_value(const std::vector<std::vector<S>>& a, long x, long y) {
  const long n = static_cast<long>(a.size());
  FormPoly<S> k = FormPoly<S>::boson(phibar_var(x)) * FormPoly<S>::boson(phi_var(y));
  for (long z = 0; z < n; ++z) {
    if (z == x || z == y) continue;
    FormPoly<S> one(Polynomial<S>(S(1)));
    k *= (one + tau<S>(z));
  }
  return super_expectation_A(k, a);
}

// self-avoiding trails x -> y on the complete graph: distinct undirected
// edges, weight prod beta_e.
template <class S>
S trail_path_sum(const std::vector<std::vector<S>>& beta, long x, long y) {
  const long n = static_cast<long>(beta.size());
  S total(0);
  std::vector<std::vector<char>> used(n, std::vector<char>(n, 0));
  // every visit to y closes a trail (including the zero-step one at x == y)
  std::function<void(long, S)> rec = [&](long at, S w) {
    if (at == y) total += w;
    for (long nxt = 0; nxt < n; ++nxt) {
      if (nxt == at || used[at][nxt]) continue;
      if (beta[at][nxt] == S(0)) continue;
      used[at][nxt] = used[nxt][at] = 1;
      rec(nxt, w * beta[at][nxt]);
      used[at][nxt] = used[nxt][at] = 0;
    }
  };
  rec(x, S(1));
  return total;
}

// forms side of the trail representation:
// int phibar_x phi_y prod_{{u,v}} (1 + 2 beta_uv tau_uv) prod_w e^{-tau_w}
// (the last product is e^{-S_I}, i.e. A = identity).
template <class S>
S trail_representation_value(const std::vector<std::vector<S>>& beta, long x, long y) {
  const long n = static_cast<long>(beta.size());
  FormPoly<S> k = FormPoly<S>::boson(phibar_var(x)) * FormPoly<S>::boson(phi_var(y));
  FormPoly<S> one(Polynomial<S>(S(1)));
  for (long u = 0; u < n; ++u)
    for (long v = u + 1; v < n; ++v) {
      if (beta[u][v] == S(0)) continue;
      k *= (one + tau_pair<S>(u, v) * (S(2) * beta[u][v]));
    }
  auto id = gauss::zero_matrix<S>(n);
  for (long i = 0; i < n; ++i) id[i][i] = S(1);
  return super_expectation_A(k, id);
}

}  // namespace rglab::forms

#include <Eigen/Dense>

#include "rglab/quadrature.hpp"

namespace rglab::forms {

// Weakly self-avoiding walk two-point function, boson side:
// E_C(e^{-sum_z (g tau_z^2 + nu0 tau_z)} phibar_0 phi_x) with C = A^{-1},
// A = -Delta_beta + m^2 and nu0 = nu - m^2. The fermion directions expand
// exactly (tau_z^2 = b_z^2 + 2 b_z f_z with f_z^2 = 0), leaving det-minor
// weights computed by the forms engine and a smooth 2V-dimensional boson
// integral done by tensor Gauss-Hermite.
inline double wsaw_two_point_boson(const std::vector<std::vector<double>>& a_in, long x,
                                   double gcoup, double nu0, int order = 32) {
  const long n = static_cast<long>(a_in.size());
  if (n > 3) throw std::invalid_argument("wsaw_two_point_boson: quadrature route is V <= 3");
  if (gcoup <= 0.0) throw std::invalid_argument("wsaw_two_point_boson: g must be > 0");

  // fermionic det-minor weights d_T for every site subset T, via the engine
  auto ferm = fermion_gaussian(a_in);
  const std::uint32_t full = (1u << (2 * n)) - 1u;
  std::vector<double> dT(1u << n, 0.0);
  for (std::uint32_t T = 0; T < (1u << n); ++T) {
    FormPoly<double> f(Polynomial<double>(1.0));
    for (long z = 0; z < n; ++z)
      if (T & (1u << z)) {
        FormPoly<double> fz;
        fz.add(psi_bit(z) | psibar_bit(z), Polynomial<double>(1.0));
        f *= fz;
      }
    FormPoly<double> top = f * ferm;
    for (auto& [mask, coeff] : top.terms())
      if (mask == full) dT[T] = coeff.constant_term();
    if (n % 2 == 1) dT[T] = -dT[T];
  }

  // boson integral: u = L z_u, v = L z_v with L L^T = C = A^{-1}
  Eigen::MatrixXd A(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) A(i, j) = a_in[i][j];
  Eigen::MatrixXd C = A.inverse();
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("wsaw_two_point_boson: A must be positive definite");
  Eigen::MatrixXd Lc = llt.matrixL();
  double detC = C.determinant();

  const QuadRule& q = gauss_hermite(order);
  const int m = static_cast<int>(q.x.size());
  // iterate over the 2n-dimensional tensor grid
  std::vector<int> idx(2 * n, 0);
  double total = 0.0;
  Eigen::VectorXd zu(n), zv(n);
  while (true) {
    double w = 1.0;
    for (long i = 0; i < n; ++i) {
      w *= q.w[idx[i]] * q.w[idx[n + i]];
      zu(i) = q.x[idx[i]];
      zv(i) = q.x[idx[n + i]];
    }
    Eigen::VectorXd u = Lc * zu, v = Lc * zv;
    double hval = u(0) * u(x) + v(0) * v(x);  // Re(phibar_0 phi_x)
    double base = 1.0;
    for (long z = 0; z < n; ++z) {
      double b = u(z) * u(z) + v(z) * v(z);
      base *= std::exp(-gcoup * b * b - nu0 * b);
    }
    // sum over fermion subsets, multilinear in c_z = -(2 g b_z + nu0)
    double fsum = 0.0;
    for (std::uint32_t T = 0; T < (1u << n); ++T) {
      if (dT[T] == 0.0) continue;
      double prod = dT[T];
      for (long z = 0; z < n; ++z)
        if (T & (1u << z)) {
          double b = u(z) * u(z) + v(z) * v(z);
          prod *= -(2.0 * gcoup * b + nu0);
        }
      fsum += prod;
    }
    total += w * hval * base * fsum;
    int i = 0;
    for (; i < 2 * n; ++i) {
      if (++idx[i] < m) break;
      idx[i] = 0;
    }
    if (i == 2 * n) break;
  }
  // pi^{-V} * detC * total, weights normalised by pi^{-V} from GH pairs
  return total * detC / std::pow(M_PI, static_cast<double>(n));
}

}  // namespace rglab::forms

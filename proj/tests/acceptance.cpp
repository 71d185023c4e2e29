// Acceptance suite: one line per criterion, PASS/FAIL with the measured
// value against its pinned tolerance. Returns the number of failures.
// argv[1] (optional): path to the rglab CLI binary, used by the
// determinism criterion; skipped with a FAIL if absent.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rglab/forms.hpp"
#include "rglab/frd.hpp"
#include "rglab/gaussian.hpp"
#include "rglab/hierarchical.hpp"
#include "rglab/meanfield.hpp"
#include "rglab/nonpert.hpp"
#include "rglab/pertflow.hpp"
#include "rglab/walks.hpp"

using namespace rglab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Eigen::MatrixXd dense_hier_laplacian(const hier::Geometry& g) {
  long V = g.volume();
  Eigen::MatrixXd D(V, V);
  for (long a = 0; a < V; ++a)
    for (long b = 0; b < V; ++b)
      D(a, b) = hier::laplacian_entry<double>(g.site_of_index(a), g.site_of_index(b), g);
  return D;
}

// ---- criteria --------------------------------------------------------------

void criterion_1() {
  double worst = 0.0;
  bool zero_sum_exact = true;
  for (auto [d, L, N, m2] : {std::tuple<long, long, long, double>{1, 2, 8, 0.5},
                             {2, 2, 2, 1.0},
                             {4, 2, 1, 0.3}}) {
    hier::Geometry g(d, L, N);
    long V = g.volume();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Constant(V, V, hier::covariance_entry_final<double>(m2, g));
    for (long j = 1; j <= N; ++j)
      for (long a = 0; a < V; ++a)
        for (long b = 0; b < V; ++b)
          sum(a, b) +=
              hier::covariance_entry<double>(j, g.site_of_index(a), g.site_of_index(b), m2, g);
    Eigen::MatrixXd A = -dense_hier_laplacian(g) + m2 * Eigen::MatrixXd::Identity(V, V);
    worst = std::max(worst, (sum - A.inverse()).cwiseAbs().maxCoeff());
  }
  for (auto [d, L, N] : {std::tuple<long, long, long>{1, 2, 6}, {2, 2, 2}, {4, 2, 1}}) {
    hier::Geometry g(d, L, N);
    hier::Site x0(d, 0);
    for (long j = 1; j <= N; ++j) {
      Rational row(0);
      for (long i = 0; i < g.volume(); ++i)
        row += hier::covariance_entry<Rational>(j, x0, g.site_of_index(i), Rational(0), g);
      zero_sum_exact = zero_sum_exact && (row == Rational(0));
    }
  }
  report(1, worst < 1e-10 && zero_sum_exact,
         "decomposition = dense inverse (max err " + fmt(worst) + " < 1e-10), zero sums exact in rationals: " +
             (zero_sum_exact ? "yes" : "no"));
}

void criterion_2() {
  bool exact = true;
  double worst = 0.0;
  for (auto [d, L] : {std::pair<long, long>{1, 2}, {2, 2}, {4, 2}}) {
    long N = (pow_int<long>(L, 2 * d) <= 256) ? 2 : 1;
    hier::Geometry g(d, L, N);
    hier::Site x0(d, 0);
    for (long j = 0; j + 1 <= N; ++j) {
      Rational s2(0), s3(0), s4(0);
      for (long i = 0; i < g.volume(); ++i) {
        Rational v = hier::covariance_entry<Rational>(j + 1, x0, g.site_of_index(i), Rational(0), g);
        s2 += v * v;
        s3 += v * v * v;
        s4 += v * v * v * v;
      }
      auto m = hier::moments<Rational>(j, Rational(0), d, L);
      exact = exact && (s2 == m.c2) && (s3 == m.c3) && (s4 == m.c4);
    }
  }
  {
    hier::Geometry g(4, 2, 2);
    hier::Site x0(4, 0);
    double m2 = 0.1;
    long j = 1;
    double s2 = 0, s3 = 0, s4 = 0;
    for (long i = 0; i < g.volume(); ++i) {
      double v = hier::covariance_entry<double>(j + 1, x0, g.site_of_index(i), m2, g);
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
    }
    worst = std::max({std::abs(s2 - hier::c2_d(j, m2, 4, 2)), std::abs(s3 - hier::c3_d(j, m2, 4, 2)),
                      std::abs(s4 - hier::c4_d(j, m2, 4, 2))});
  }
  report(2, exact && worst < 1e-12,
         std::string("moment closed forms: rational block sums ") + (exact ? "exact" : "WRONG") +
             ", m2>0 err " + fmt(worst) + " < 1e-12");
}

void criterion_3() {
  auto b = hier::hier_bubble(1e-12, 4, 2);
  double target = (15.0 / 16.0) / std::log(2.0);
  double rel = std::abs(b.log_ratio - target) / target;
  report(3, rel < 0.03, "B^H/log(1/m) = " + fmt(b.log_ratio) + " vs " + fmt(target) +
                            " (rel dev " + fmt(rel) + " < 0.03)");
}

void criterion_4() {
  auto b2 = walks::euclid_bubble(1e-8, 2);
  double d2dev = std::abs(b2.normalised * 4.0 * M_PI - 1.0);
  auto b4 = walks::euclid_bubble(1e-8, 4);
  double d4dev = std::abs(b4.normalised * 16.0 * M_PI * M_PI - 1.0);
  // convergent slope estimator of the same constant, printed alongside
  auto b4b = walks::euclid_bubble(1e-6, 4);
  double slope = (b4.value - b4b.value) / std::log(1e2) * 16.0 * M_PI * M_PI;
  report(4, d2dev < 0.03 && d4dev < 0.03,
         "euclid bubble d=2 dev " + fmt(d2dev) + " < 0.03; d=4 pointwise dev " + fmt(d4dev) +
             " vs 0.03 (additive lattice constant ~3.79; slope estimator gives b4*16pi^2 = " +
             fmt(slope) + ")");
}

void criterion_5() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> d(-3, 3);
  bool ok = true;
  // Wick 4-point, exact
  auto c = gauss::zero_matrix<Rational>(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) c[i][j] = c[j][i] = Rational(d(rng), 2);
  PolyQ a = PolyQ::variable(0) * PolyQ::variable(1) * PolyQ::variable(2) * PolyQ::variable(3);
  ok = ok && (gauss::wick_expect(a, c) ==
              c[0][1] * c[2][3] + c[0][2] * c[1][3] + c[0][3] * c[1][2]);
  // semigroup, exact, degree <= 6, M <= 4
  auto random_psd = [&](int m) {
    std::vector<std::vector<int>> gm(m, std::vector<int>(m));
    for (auto& row : gm)
      for (auto& v : row) v = d(rng);
    auto cc = gauss::zero_matrix<Rational>(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Rational s(0);
        for (int k = 0; k < m; ++k) s += Rational(gm[k][i]) * Rational(gm[k][j]);
        cc[i][j] = s;
      }
    return cc;
  };
  for (int rep = 0; rep < 10 && ok; ++rep) {
    int m = 2 + rep % 3;
    auto c1 = random_psd(m), c2 = random_psd(m), cs = c1;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) cs[i][j] += c2[i][j];
    PolyQ p;
    for (int t = 0; t < 6; ++t) {
      PolyQ mono(Rational(d(rng)));
      int deg = static_cast<int>(rng() % 7);
      for (int k = 0; k < deg; ++k) mono *= PolyQ::variable(rng() % m);
      p += mono;
    }
    ok = ok && (gauss::heat_convolve(gauss::heat_convolve(p, c1), c2) == gauss::heat_convolve(p, cs));
  }
  // cumulant/moment round trip to order 6, exact
  std::vector<Rational> m6{Rational(1, 2), Rational(2), Rational(-1), Rational(7, 3), Rational(0),
                           Rational(9)};
  ok = ok && (gauss::moments_from_cumulants_1d(gauss::cumulants_from_moments_1d(m6)) == m6);
  report(5, ok, "Wick 4-point, semigroup (deg<=6, M<=4) and cumulant round trip exact in rationals");
}

void criterion_6() {
  const frd::BumpProfile& prof = frd::default_profile();
  double m2 = 1.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uk(-M_PI, M_PI);
  double worst_sym = 0.0;
  for (int s = 0; s < 20; ++s) {
    long d = 1 + s % 3;
    std::vector<double> k(d);
    for (long i = 0; i < d; ++i) k[i] = uk(rng);
    double acc = 0.0;
    for (long j = 1; j <= 40; ++j) acc += frd::symbol_slice(j, d, 2, m2, prof).symbol(k);
    worst_sym = std::max(worst_sym, std::abs(acc - 1.0 / (frd::lattice_symbol(k) + m2)));
  }
  // finite-range zeros on tabulated kernels
  double worst_fr = 0.0;
  for (auto [d, L, j] : {std::tuple<long, long, long>{1, 2, 3}, {2, 2, 2}}) {
    auto slice = frd::frd_slice(j, d, L, m2, prof);
    // finite propagation: w vanishes for |x|_1 > t, probed just inside the range
    for (double t : {slice.range - 0.25}) {
      for (long probe = static_cast<long>(t) + 1; probe <= static_cast<long>(t) + 2; ++probe) {
        std::vector<long> x(d, 0);
        x[0] = probe;
        worst_fr = std::max(worst_fr, std::abs(frd::w_kernel(t, x, m2, prof)));
      }
    }
  }
  // degree bound
  bool deg_ok = true;
  for (double t : {1.5, 3.7, 9.2}) {
    int nn = static_cast<int>(std::floor(t)) + 2;
    std::vector<double> xs(nn), ys(nn);
    for (int i = 0; i < nn; ++i) {
      xs[i] = 2.0 + 2.0 * std::cos(M_PI * i / (nn - 1));
      ys[i] = prof.p_t(t, xs[i]);
    }
    for (int lev = 1; lev < nn; ++lev)
      for (int i = nn - 1; i >= lev; --i) ys[i] = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - lev]);
    deg_ok = deg_ok && std::abs(ys[nn - 1]) < 1e-10;
  }
  // torus on the 4-site ring
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  for (long i = 0; i < 4; ++i) {
    A(i, i) = 2.0 + m2;
    A(i, (i + 1) % 4) -= 1.0;
    A(i, (i + 3) % 4) -= 1.0;
  }
  auto tk = frd::torus_covariance(1, 1, 4, m2, prof);
  Eigen::MatrixXd sum(4, 4);
  for (long a = 0; a < 4; ++a)
    for (long b = 0; b < 4; ++b) sum(a, b) = tk[a][b];
  double torus_err = (sum - A.inverse()).cwiseAbs().maxCoeff();
  report(6, worst_sym < 1e-6 && worst_fr < 1e-10 && deg_ok && torus_err < 1e-6,
         "frd: symbol sums err " + fmt(worst_sym) + " < 1e-6, finite-range residue " + fmt(worst_fr) +
             " < 1e-10, degree bound " + (deg_ok ? "holds" : "FAILS") + ", torus err " +
             fmt(torus_err) + " < 1e-6");
}

void criterion_7() {
  flow::ModelParams p{4, 2, 1};
  auto g = flow::gbar_sequence(0.05, 0.0, p, 10000);
  double val = g[10000] * p.beta00() * 1e4;
  report(7, val > 0.95 && val < 1.05, "g_j beta00 j at j=1e4 = " + fmt(val) + " in [0.95, 1.05]");
}

void criterion_8() {
  flow::ModelParams p{4, 2, 1};
  double worst_diff = 0.0;
  for (double g0 : {0.01, 0.05, 0.1}) {
    double mb = flow::mu0_backward(g0, 0.0, p).mu0c;
    double ms = flow::mu0_bisection(g0, 0.0, p).mu0c;
    worst_diff = std::max(worst_diff, std::abs(mb - ms));
  }
  // replay: the backward-sum sequence obeys the forward recursion and the tube
  double g0 = 0.05;
  auto g = flow::gbar_sequence(g0, 0.0, p, 1300);
  bool tube_ok = true;
  double worst_resid = 0.0;
  for (long j = 0; j < 1000; ++j) {
    double mj = flow::mu_backward_at(j, g, 0.0, p, 1300);
    double mj1 = flow::mu_backward_at(j + 1, g, 0.0, p, 1300);
    auto [gp, mup] = flow::flow_step(g[j], mj, j, 0.0, p);
    worst_resid = std::max(worst_resid,
                           std::abs(mup - mj1) / std::max({std::abs(mj1), std::abs(mj), 1e-300}));
    tube_ok = tube_ok && std::abs(mj) <= 4.0 * 3.0 * vartheta(j, 0.0, 2) * g[j];
  }
  report(8, worst_diff < 1e-8 && tube_ok && worst_resid < 1e-12,
         "dual construction |diff| " + fmt(worst_diff) + " < 1e-8; replay residual " +
             fmt(worst_resid) + " < 1e-12; tube to j=1e3: " + (tube_ok ? "inside" : "exits"));
}

void criterion_9() {
  flow::ModelParams p{4, 2, 1};
  double g0 = 1e-3;
  double ratio = flow::mu0_backward(g0, 0.0, p).mu0c / (-(p.n + 2.0) * g0 * 1.25);
  report(9, ratio > 0.9 && ratio < 1.1, "nu_c asymptote ratio = " + fmt(ratio) + " in [0.9, 1.1]");
}

void criterion_10() {
  flow::ModelParams p{4, 2, 1};
  double g0 = 0.05, m2 = 0.0;
  auto g = flow::gbar_sequence(g0, m2, p, 50);
  auto prod = flow::dmu_dmu0(g, m2, p);
  double mu0 = flow::mu0_backward(g0, m2, p).mu0c, h = 1e-7;
  auto mu_at = [&](double m0) {
    double gg = g0, mu = m0;
    for (long j = 0; j < 50; ++j) {
      auto [gp, mup] = flow::flow_step(gg, mu, j, m2, p);
      gg = gp;
      mu = mup;
    }
    return mu;
  };
  double fd = (mu_at(mu0 + h) - mu_at(mu0 - h)) / (2.0 * h);
  double rel = std::abs(fd - prod[50]) / prod[50];
  report(10, rel < 1e-5, "derivative flow: product vs finite difference rel err " + fmt(rel) + " < 1e-5");
}

void criterion_11() {
  std::vector<double> eps;
  for (double e = 1e-10; e < 2e-2; e *= std::pow(10.0, 0.25)) eps.push_back(e);
  double f1 = flow::chi_ode_invert(0.25, 1.0, eps).fitted_exponent;
  double f2 = flow::chi_ode_invert(0.40, 1.0, eps).fitted_exponent;
  // effective-mass route: chi eps / (log eps^-1)^{1/4} flat over the last
  // two decades of [1e-8, 1e-2]
  flow::ModelParams p{4, 2, 1};
  double lo = 1e300, hi = 0.0;
  for (double e = 1e-8; e < 1.1e-6; e *= std::sqrt(10.0)) {
    auto pr = flow::chi_prediction(0.05, e, p);
    double a = pr.chi_effective * e / std::pow(std::log(1.0 / e), 0.25);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  bool flat = hi / lo < 1.05;
  report(11, std::abs(f1 - 0.25) < 0.02 && std::abs(f2 - 0.40) < 0.03 && flat,
         "ode-fit exponents " + fmt(f1) + " (0.25+-0.02), " + fmt(f2) +
             " (0.40+-0.03); effective-mass amplitude ratio " + fmt(hi / lo) + " < 1.05");
}

void criterion_12() {
  struct Triple {
    double g, nu0, m2;
  };
  double worst = 0.0;
  bool ok = true;
  for (auto [g, nu0, m2] : {Triple{0.5, -0.2, 0.3}, Triple{0.0, 0.0, 0.5}, Triple{0.1, 0.05, 1.0},
                            Triple{1.0, -0.5, 0.25}, Triple{0.2, 0.0, 2.0}}) {
    npt::NptParams p{1, 2, 1, m2, 2};
    if (g == 0.0) {
      auto run = npt::run_progressive(g, nu0, p);
      double chi = npt::chi_finite_volume(run.fN, p);
      double direct = npt::oracle_chi_direct(g, nu0, p, 48);
      double exact = 1.0 / (nu0 + m2);
      double rel = std::max(std::abs(chi - exact), std::abs(direct - exact)) / exact;
      worst = std::max(worst, rel);
      ok = ok && rel < 1e-6;
      continue;
    }
    auto res = npt::oracle_chi(g, nu0, p);
    double rel = std::abs(res.chi_direct - res.chi_progressive) / std::abs(res.chi_direct);
    worst = std::max(worst, rel);
    ok = ok && rel < 1e-6;
  }
  report(12, ok, "oracle equivalence on 4-site chain: worst rel gap " + fmt(worst) + " < 1e-6 (5 triples)");
}

void criterion_13() {
  npt::NptParams p{1, 2, 1, 2.0, -1};
  std::vector<double> g0s{0.01, 0.02, 0.04}, defects;
  for (double g0 : g0s) {
    npt::BlockFunction f = npt::initial_block(g0, 0.0, p);
    double gj = g0, worst = 0.0;
    for (long j = 0; j < 10; ++j) {
      f = npt::rg_step_quadrature(f, p, gj, 160);
      auto ex = npt::extract_couplings(f, p);
      double beta_p = 9.0 * hier::c2_d(j, p.m2, 1, 2);
      worst = std::max(worst, std::abs(ex.g - (gj - beta_p * gj * gj)));
      gj = ex.g;
    }
    defects.push_back(worst);
  }
  double slope = std::log(defects[2] / defects[0]) / std::log(g0s[2] / g0s[0]);
  report(13, slope > 2.8 && slope < 3.2,
         "second-order defect log-log slope = " + fmt(slope) + " in [2.8, 3.2]");
}

void criterion_14() {
  bool exact = true;
  for (double beta : {0.3, 0.5, 0.9}) {
    double chi = mf::susceptibility(mf::State(1, beta, 0.0));
    exact = exact && std::abs(chi - 1.0 / (1.0 - beta)) < 1e-14;
  }
  double h = 1e-6;
  double r1 = mf::solve_magnetisation(mf::State(1, 1.0, h)) / std::cbrt(3.0 * h);
  double beta = 1.0 + 1e-4;
  double r2 = mf::solve_magnetisation(mf::State(1, beta, 0.0)) / std::sqrt(3.0 * (beta - 1.0));
  report(14, exact && r1 > 0.99 && r1 < 1.01 && r2 > 0.95 && r2 < 1.05,
         std::string("chi(beta,0) = 1/(1-beta) ") + (exact ? "exact" : "WRONG") +
             "; critical isotherm ratio " + fmt(r1) + " in [0.99,1.01]; spontaneous ratio " +
             fmt(r2) + " in [0.95,1.05]");
}

void criterion_15() {
  using namespace rglab::forms;
  std::mt19937_64 rng(20260809);
  std::uniform_int_distribution<int> dist(-2, 2);
  auto random_pd = [&](int n) {
    while (true) {
      std::vector<std::vector<int>> gm(n, std::vector<int>(n));
      for (auto& row : gm)
        for (auto& v : row) v = dist(rng);
      auto a = gauss::zero_matrix<Rational>(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Rational s(0);
          for (int k = 0; k < n; ++k) s += Rational(gm[k][i]) * Rational(gm[k][j]);
          a[i][j] = s;
        }
      for (int i = 0; i < n; ++i) a[i][i] += Rational(1, 4);
      try {
        if (invert_matrix(a).det > Rational(0)) return a;
      } catch (...) {
      }
    }
  };
  bool norm_ok = true;
  for (int rep = 0; rep < 20; ++rep) {
    auto a = random_pd(3);
    norm_ok = norm_ok &&
              (super_expectation_A(FormPoly<Rational>(Rational(1)), a) == Rational(1));
  }
  bool loc_ok = true;
  for (int rep = 0; rep < 8; ++rep) {
    int V = 2 + rep % 2;
    auto a = random_pd(V);
    FormPoly<Rational> f{rglab::Polynomial<Rational>(Rational(dist(rng)))};
    Rational f0 = f.terms().empty() ? Rational(0) : f.terms().begin()->second.constant_term();
    for (int t = 0; t < 3; ++t) {
      FormPoly<Rational> mono{rglab::Polynomial<Rational>(Rational(dist(rng)))};
      for (int kk = 0; kk <= rep % 3; ++kk) mono *= tau<Rational>(rng() % V);
      f += mono;
    }
    loc_ok = loc_ok && (super_expectation_A(f, a) == f0);
  }
  bool two_ok = true;
  {
    auto a = random_pd(3);
    auto c = invert_matrix(a).inv;
    FormPoly<Rational> k =
        FormPoly<Rational>::boson(phi_var(0)) * FormPoly<Rational>::boson(phibar_var(2));
    two_ok = super_expectation_A(k, a) == c[0][2];
  }
  bool rep_ok = true;
  for (int V : {3, 4}) {
    auto a = random_pd(V);
    auto c = invert_matrix(a).inv;
    rep_ok = rep_ok && (saw_representation_value(a, 0, V - 1) == saw_path_sum(c, 0, V - 1));
    auto beta = gauss::zero_matrix<Rational>(V);
    for (int i = 0; i < V; ++i)
      for (int j = i + 1; j < V; ++j) beta[i][j] = beta[j][i] = Rational(std::abs(dist(rng)), 2);
    rep_ok = rep_ok && (trail_representation_value(beta, 0, V - 1) == trail_path_sum(beta, 0, V - 1));
  }
  report(15, norm_ok && loc_ok && two_ok && rep_ok,
         std::string("susy: normalisation ") + (norm_ok ? "exact" : "FAIL") + ", localisation " +
             (loc_ok ? "exact" : "FAIL") + ", two-point " + (two_ok ? "exact" : "FAIL") +
             ", SAW/trail reps on K3/K4 " + (rep_ok ? "exact" : "FAIL"));
}

void criterion_16() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep)
    for (long n : {2L, 3L, 4L}) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
      for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) b(i, j) = b(j, i) = u(rng);
      Eigen::VectorXd v(n);
      for (long i = 0; i < n; ++i) v(i) = 0.5 + u(rng);
      walks::WeightedGraph g(b, v);
      auto ws = walks::resolvent_walk_sum(g, 1e-12);
      Eigen::MatrixXd ref = g.resolvent_matrix().inverse();
      worst = std::max(worst, (ws.sum - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
    }
  // Feynman-Kac MC
  Eigen::MatrixXd b(3, 3);
  b << 0, 1, 0.5, 1, 0, 2, 0.5, 2, 0;
  walks::WeightedGraph g3(b, Eigen::VectorXd::Constant(3, 0.8));
  Eigen::MatrixXd ref3 = g3.resolvent_matrix().inverse();
  auto fk = walks::ctrw_feynman_kac(g3, 0, 1, 31337, 200000);
  bool fk_ok = std::abs(fk.value - ref3(0, 1)) < 3.0 * fk.std_error;
  // WSAW cross-representation on the 2-site graph
  Eigen::MatrixXd b2(2, 2);
  b2 << 0, 1, 1, 0;
  walks::WeightedGraph g2(b2, Eigen::VectorXd::Constant(2, 1.0));
  std::vector<std::vector<double>> a(2, std::vector<double>(2, 0.0));
  a[0][0] = a[1][1] = 1.5;
  a[0][1] = a[1][0] = -1.0;
  double boson = forms::wsaw_two_point_boson(a, 1, 0.5, 1.0 - 0.5, 96);
  auto mc = walks::wsaw_two_point_mc(g2, 0, 1, 0.5, 1.0, 77777, 200000);
  bool ws_ok = std::abs(mc.value - boson) < 3.0 * mc.std_error;
  report(16, worst < 1e-9 && fk_ok && ws_ok,
         "resolvent walk sum rel err " + fmt(worst) + " < 1e-9; Feynman-Kac within 3 s.e. (" +
             fmt(std::abs(fk.value - ref3(0, 1)) / fk.std_error) + " s.e.); wsaw cross-rep within 3 s.e. (" +
             fmt(std::abs(mc.value - boson) / mc.std_error) + " s.e.)");
}

void criterion_17() {
  auto a = walks::saw_counts_hashset(2, 10);
  auto b = walks::saw_counts_bitmask(2, 10);
  bool agree = (a == b);
  bool first = a[0] == 4 && a[1] == 12 && a[2] == 36 && a[3] == 100;
  bool submult = true, bounds = true;
  for (std::size_t m = 1; m <= a.size(); ++m) {
    long double lower = std::pow(2.0L, static_cast<long double>(m));
    long double upper = 4.0L * std::pow(3.0L, static_cast<long double>(m - 1));
    bounds = bounds && a[m - 1] >= lower && a[m - 1] <= upper;
    for (std::size_t nn = 1; m + nn <= a.size(); ++nn)
      submult = submult && (a[m + nn - 1] <= a[m - 1] * a[nn - 1]);
  }
  report(17, agree && first && submult && bounds,
         std::string("SAW counts: enumerators ") + (agree ? "agree" : "DISAGREE") +
             ", c1..c4 = 4,12,36,100: " + (first ? "yes" : "no") + ", submultiplicative and in [d, 2d-1]^n bounds: " +
             (submult && bounds ? "yes" : "no"));
}

void criterion_18(const char* cli) {
  if (!cli) {
    report(18, false, "determinism: CLI path not supplied");
    return;
  }
  auto run_all = [&](const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<std::string> cmds{
        "hier --d 4 --L 2 --m2 0.1 --jmax 10",
        "flow --g0 0.1 --mu0 0 --m2 0 --jmax 50",
        "critical --g0 0.02 --m2 0 --d 4 --L 2 --n 1",
        "nonpert --g0 0.1 --nu0 0 --m2 0.5 --N 2 --engine mc --samples 2000 --seed 99",
        "meanfield --beta-min 0.5 --beta-max 1.4 --beta-count 7",
        "walks --d 2 --nmax 6 --m2 0.01",
        "susy-check --seed 5"};
    for (auto& c : cmds) {
      std::string cmd = std::string(cli) + " " + c + " --out " + dir.string() + " > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) return false;
    }
    return true;
  };
  // run into one directory, snapshot, rerun into the same directory, compare
  fs::path base = fs::temp_directory_path() / "rglab_acceptance_det";
  fs::remove_all(base);
  fs::path work = base / "work", snap = base / "snap";
  bool ran = run_all(work);
  long nfiles = 0;
  if (ran) {
    fs::create_directories(snap);
    for (auto& entry : fs::directory_iterator(work)) fs::copy_file(entry.path(), snap / entry.path().filename());
    fs::remove_all(work);
    ran = run_all(work);
  }
  bool identical = ran;
  if (ran) {
    for (auto& entry : fs::directory_iterator(snap)) {
      ++nfiles;
      std::ifstream f1(work / entry.path().filename(), std::ios::binary);
      std::ifstream f2(entry.path(), std::ios::binary);
      std::stringstream s1, s2;
      s1 << f1.rdbuf();
      s2 << f2.rdbuf();
      identical = identical && (s1.str() == s2.str()) && !s1.str().empty();
    }
  }
  report(18, ran && identical && nfiles > 10,
         "determinism: " + std::to_string(nfiles) + " output files byte-identical across reruns: " +
             (ran && identical ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  const char* cli = argc > 1 ? argv[1] : nullptr;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  criterion_13();
  criterion_14();
  criterion_15();
  criterion_16();
  criterion_17();
  criterion_18(cli);
  std::printf("%d of 18 criteria failed\n", failures);
  return failures;
}

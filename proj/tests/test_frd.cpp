#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "rglab/frd.hpp"

using namespace rglab;
using namespace rglab::frd;

TEST_CASE("lattice symbol") {
  CHECK(lattice_symbol({0.0, 0.0}) == 0.0);
  CHECK_THAT(lattice_symbol({M_PI, M_PI, M_PI}), Catch::Matchers::WithinRel(12.0, 1e-14));
  CHECK_THAT(lattice_symbol({M_PI / 2, M_PI / 2}), Catch::Matchers::WithinRel(4.0, 1e-14));
}

TEST_CASE("bump profiles and positivity") {
  const BumpProfile& sq = default_profile();
  CHECK(sq.positivity_ok());
  CHECK(sq.worst_pt_min() >= -1e-10);

  // the plain bump is sign-changing: the pre-check flags it
  BumpProfile pl = BumpProfile::plain();
  CHECK_FALSE(pl.positivity_ok());
  CHECK(pl.worst_pt_min() < -1e-3);
}

TEST_CASE("p_t basics") {
  const BumpProfile& prof = default_profile();
  // constant for t < 1
  double v = prof.p_t(0.5, 0.3);
  CHECK_THAT(v, Catch::Matchers::WithinRel(prof.fhat0() / (2.0 * M_PI * 0.5), 1e-13));
  CHECK_THAT(prof.p_t(0.5, 3.7), Catch::Matchers::WithinRel(v, 1e-13));

  // degree bound: the (floor(t)+1)-th divided difference on floor(t)+2
  // Chebyshev nodes vanishes
  for (double t : {1.5, 3.7, 9.2}) {
    int n = static_cast<int>(std::floor(t)) + 2;  // nodes
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = 2.0 + 2.0 * std::cos(M_PI * i / (n - 1));
      ys[i] = prof.p_t(t, xs[i]);
    }
    // divided differences in place
    for (int lev = 1; lev < n; ++lev)
      for (int i = n - 1; i >= lev; --i) ys[i] = (ys[i] - ys[i - 1]) / (xs[i] - xs[i - lev]);
    CHECK(std::abs(ys[n - 1]) < 1e-10);
  }

  // completeness at zeta = 1: int_0^T t^2 P_t dt/t -> 1 (the normalisation
  // is fixed at zeta = 1, so probe a different zeta for a real check)
  double zeta = 0.6;
  double acc = prof.fhat0() / (2.0 * M_PI);
  double lo = 1.0;
  while (lo < 2048.0) {
    double hi = std::min(2.0 * lo, 2048.0);
    acc += gl_integrate([&](double t) { return t * prof.p_t(t, zeta); }, lo, hi, 48);
    lo = hi;
  }
  CHECK_THAT(acc, Catch::Matchers::WithinAbs(1.0 / zeta, 1e-6));
}

TEST_CASE("w kernel") {
  const BumpProfile& prof = default_profile();
  // t < 1 closed form
  CHECK_THAT(w_kernel(0.7, {0}, 1.0, prof),
             Catch::Matchers::WithinRel(0.7 / 3.0 * prof.fhat0() / (2.0 * M_PI), 1e-13));
  CHECK(w_kernel(0.7, {1}, 1.0, prof) == 0.0);

  // finite propagation: w(t, x) = 0 for |x|_1 > t
  for (double t : {2.0, 3.5}) {
    CHECK(std::abs(w_kernel(t, {static_cast<long>(t) + 1}, 0.5, prof)) < 1e-10);
    CHECK(std::abs(w_kernel(t, {static_cast<long>(t) + 2}, 0.5, prof)) < 1e-12);
  }

  // grid-refinement stability: doubling the implicit grid (via d=1 t=2 vs
  // direct summation at higher K through larger xmax) is exercised by the
  // table path matching the single-site path
  auto kt = w_kernel_table(2.0, 1, 4, 1.0, prof);
  for (std::size_t s = 0; s < kt.sites.size(); ++s)
    CHECK_THAT(kt.values[s], Catch::Matchers::WithinAbs(w_kernel(2.0, kt.sites[s], 1.0, prof), 1e-12));
}

TEST_CASE("frd slices") {
  const BumpProfile& prof = default_profile();
  double m2 = 1.0;
  // at L = 2 the j = 1 slice is exactly the t < 1 part: C_1(0) = C_0(0)
  FrdSlice s1 = frd_slice(1, 2, 2, m2, prof);
  double c0 = 1.0 / (2.0 * 2 + m2) * prof.fhat0() / (2.0 * M_PI);
  CHECK_THAT(s1.at({0, 0}), Catch::Matchers::WithinRel(c0, 1e-13));
  // at L = 4 the [1, L/2] part adds a positive remainder
  FrdSlice s1w = frd_slice(1, 2, 4, m2, prof);
  CHECK(s1w.at({0, 0}) > c0);

  // finite range declared: zero outside |x|_1 >= L^j/2
  CHECK(s1.at({1, 1}) == 0.0);

  // completeness: sum_j C-hat_j(k) -> 1/(lambda + m^2), d = 2, k = (pi/2, pi/2)
  std::vector<double> k{M_PI / 2, M_PI / 2};
  double target = 1.0 / (lattice_symbol(k) + m2);
  double acc = 0.0;
  double prev = -1.0;
  for (long j = 1; j <= 40; ++j) {
    FrdSlice sj = symbol_slice(j, 2, 2, m2, prof);
    acc += sj.symbol(k);
    CHECK(acc >= prev);  // monotone from below (positivity; ties once slices vanish)
    prev = acc;
  }
  CHECK_THAT(acc, Catch::Matchers::WithinAbs(target, 1e-6));

  // d = 4 supported at symbol level
  std::vector<double> k4{0.3, -1.0, 2.2, 0.0};
  double acc4 = 0.0;
  for (long j = 1; j <= 40; ++j) acc4 += symbol_slice(j, 4, 2, m2, prof).symbol(k4);
  CHECK_THAT(acc4, Catch::Matchers::WithinAbs(1.0 / (lattice_symbol(k4) + m2), 1e-6));

  // symbol positivity on a momentum grid
  for (long j : {1L, 2L, 3L}) {
    FrdSlice sj = frd_slice(j, 1, 2, m2, prof);
    for (int i = 0; i <= 64; ++i) {
      double kk = -M_PI + 2.0 * M_PI * i / 64.0;
      CHECK(sj.symbol({kk}) >= -1e-10);
    }
  }
}

TEST_CASE("torus decomposition on the 4-site ring") {
  const BumpProfile& prof = default_profile();
  const long d = 1, L = 4, N = 1, period = 4;
  double m2 = 1.0;

  // dense torus inverse of (-Delta + m^2)
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  for (long i = 0; i < 4; ++i) {
    A(i, i) = 2.0 + m2;
    A(i, (i + 1) % 4) -= 1.0;
    A(i, (i + 3) % 4) -= 1.0;
  }
  Eigen::MatrixXd ref = A.inverse();

  // C_{N,N} aggregates all slices j >= N = 1 (momentum route for the tail)
  auto tks = torus_covariance(N, d, L, m2, prof);
  Eigen::MatrixXd sum(4, 4);
  for (long a = 0; a < 4; ++a)
    for (long b = 0; b < 4; ++b) sum(a, b) = tks[a][b];
  CHECK((sum - ref).cwiseAbs().maxCoeff() < 1e-6);

  // j < N on a larger torus: at most one z contributes, matching the Z^d kernel
  FrdSlice s2 = frd_slice(2, 1, 2, 0.5, prof);
  CHECK_THAT(torus_entry(s2, {0}, {1}, 64), Catch::Matchers::WithinRel(s2.at({1}), 1e-14));
}

TEST_CASE("scaling estimates bounded") {
  const BumpProfile& prof = default_profile();
  // alpha = 0, d = 3 massless: ratio bounded over available j
  double prev_worst = 0.0;
  for (long j : {1L, 2L}) {
    FrdSlice s = frd_slice(j, 3, 2, 0.0, prof);
    double r = scaling_check(s, {}, 0.0);
    CHECK(std::isfinite(r));
    prev_worst = std::max(prev_worst, r);
  }
  CHECK(prev_worst > 0.0);

  // d = 1 with a first difference, moderate mass, several scales
  std::vector<double> ratios;
  for (long j : {1L, 2L, 3L, 4L, 5L}) {
    FrdSlice s = frd_slice(j, 1, 2, 0.2, prof);
    ratios.push_back(scaling_check(s, {0}, 2.0));
  }
  double rmax = *std::max_element(ratios.begin(), ratios.end());
  for (double r : ratios) CHECK(r <= rmax);
  CHECK(std::isfinite(rmax));
}

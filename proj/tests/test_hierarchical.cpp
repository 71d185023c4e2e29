#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "rglab/hierarchical.hpp"

using namespace rglab;
using namespace rglab::hier;

namespace {

// Dense matrices of Q_j, P_j and Delta_H, oracles for small boxes only.
Eigen::MatrixXd dense_qj(long j, const Geometry& g) {
  long V = g.volume();
  Eigen::MatrixXd Q(V, V);
  double val = std::pow(static_cast<double>(g.L), -static_cast<double>(g.d * j));
  for (long a = 0; a < V; ++a) {
    Site xa = g.site_of_index(a);
    for (long b = 0; b < V; ++b) {
      Site xb = g.site_of_index(b);
      Q(a, b) = same_block(xa, xb, j, g) ? val : 0.0;
    }
  }
  return Q;
}

Eigen::MatrixXd dense_laplacian_spectral(const Geometry& g) {
  long V = g.volume();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(V, V);
  for (long j = 1; j <= g.N; ++j) {
    Eigen::MatrixXd P = dense_qj(j - 1, g) - dense_qj(j, g);
    D -= std::pow(static_cast<double>(g.L), -2.0 * (j - 1)) * P;
  }
  return D;
}

Eigen::MatrixXd dense_covariance(long j, double m2, const Geometry& g) {
  long V = g.volume();
  Eigen::MatrixXd C(V, V);
  for (long a = 0; a < V; ++a)
    for (long b = 0; b < V; ++b)
      C(a, b) = covariance_entry<double>(j, g.site_of_index(a), g.site_of_index(b), m2, g);
  return C;
}

}  // namespace

TEST_CASE("coalescence scale basics") {
  Geometry g2(2, 2, 3);
  CHECK(coalescence_scale({0, 0}, {1, 0}, g2) == 1);
  CHECK(coalescence_scale({0, 0}, {2, 0}, g2) == 2);
  Geometry g1(1, 2, 3);
  CHECK(coalescence_scale({0}, {7}, g1) == 3);
  CHECK_THROWS_AS(coalescence_scale({1, 1}, {1, 1}, g2), std::invalid_argument);
}

TEST_CASE("laplacian closed form") {
  Geometry g(2, 2, 1);
  CHECK(laplacian_entry<Rational>({0, 0}, {0, 0}, g) == Rational(-3, 4));

  // row sums vanish for several geometries, exactly in rationals
  for (auto [d, L, N] : {std::tuple<long, long, long>{1, 2, 3}, {2, 2, 2}, {1, 3, 2}}) {
    Geometry gg(d, L, N);
    Rational row(0);
    Site x0(gg.d, 0);
    for (long i = 0; i < gg.volume(); ++i) row += laplacian_entry<Rational>(x0, gg.site_of_index(i), gg);
    CHECK(row == Rational(0));
  }
}

TEST_CASE("laplacian matches spectral assembly") {
  Geometry g(4, 2, 2);  // 256 sites
  REQUIRE(g.volume() == 256);
  Eigen::MatrixXd D = dense_laplacian_spectral(g);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> pick(0, g.volume() - 1);
  for (int t = 0; t < 40; ++t) {
    long a = pick(rng), b = pick(rng);
    double v = laplacian_entry<double>(g.site_of_index(a), g.site_of_index(b), g);
    CHECK_THAT(v, Catch::Matchers::WithinAbs(D(a, b), 1e-13));
  }
}

TEST_CASE("covariance entries and zero sum") {
  Geometry g(4, 2, 2);
  // C_{2;xx}(0) = c_1 = 2^{-2} * 15/16
  CHECK(covariance_entry<Rational>(2, {0, 0, 0, 0}, {0, 0, 0, 0}, Rational(0), g) ==
        Rational(15, 64));
  CHECK(to_double(covariance_entry<Rational>(2, {0, 0, 0, 0}, {0, 0, 0, 0}, Rational(0), g)) ==
        Catch::Approx(0.234375));

  // distinct j-blocks -> 0
  CHECK(covariance_entry<double>(1, {0, 0, 0, 0}, {2, 0, 0, 0}, 0.0, g) == 0.0);
  CHECK(covariance_entry<double>(2, {0, 0, 0, 0}, {2, 0, 0, 0}, 0.0, g) != 0.0);

  // zero sum, exact in rationals, every scale j <= N
  for (auto [d, L, N] : {std::tuple<long, long, long>{1, 2, 4}, {2, 3, 2}, {4, 2, 2}}) {
    Geometry gg(d, L, N);
    Site x0(gg.d, 0);
    for (long j = 1; j <= gg.N; ++j) {
      Rational row(0);
      for (long i = 0; i < gg.volume(); ++i)
        row += covariance_entry<Rational>(j, x0, gg.site_of_index(i), Rational(0), gg);
      CHECK(row == Rational(0));
    }
  }

  // final covariance needs positive mass
  CHECK_THROWS_AS(covariance_entry_final<double>(0.0, g), std::invalid_argument);
  // row sum of C_{N-hat} is m^{-2}
  Geometry g1(1, 2, 3);
  double m2 = 0.37;
  CHECK_THAT(covariance_entry_final<double>(m2, g1) * g1.volume(),
             Catch::Matchers::WithinRel(1.0 / m2, 1e-14));
}

TEST_CASE("within-block covariance PSD with one zero mode") {
  Geometry g(2, 2, 3);
  double m2 = 0.2;
  for (long j = 1; j <= g.N; ++j) {
    // matrix of scale-j covariance among the L^d children values of one block
    long B = pow_int<long>(g.L, g.d);
    double sig2 = gamma_scale<double>(j, m2, g) /
                  std::pow(static_cast<double>(g.L), static_cast<double>(g.d * (j - 1)));
    Eigen::MatrixXd M(B, B);
    for (long a = 0; a < B; ++a)
      for (long b = 0; b < B; ++b) M(a, b) = sig2 * ((a == b ? 1.0 : 0.0) - 1.0 / B);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues().minCoeff() > -1e-14);
    int zeros = 0;
    for (long i = 0; i < B; ++i)
      if (std::abs(es.eigenvalues()(i)) < 1e-12) ++zeros;
    CHECK(zeros == 1);
  }
}

TEST_CASE("decomposition sums to dense inverse") {
  for (auto [d, L, N, m2] : {std::tuple<long, long, long, double>{1, 2, 8, 0.5},
                             {2, 2, 2, 1.0},
                             {4, 2, 1, 0.3},
                             {1, 2, 8, 0.02}}) {
    Geometry g(d, L, N);
    REQUIRE(g.volume() <= 256);
    long V = g.volume();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Constant(V, V, covariance_entry_final<double>(m2, g));
    for (long j = 1; j <= N; ++j) sum += dense_covariance(j, m2, g);
    Eigen::MatrixXd A = -dense_laplacian_spectral(g) + m2 * Eigen::MatrixXd::Identity(V, V);
    Eigen::MatrixXd inv = A.inverse();
    CHECK((sum - inv).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("diagonal closed form") {
  Geometry g(3, 2, 5);
  double m2 = 0.7;
  for (long j = 1; j <= g.N; ++j) {
    Site x0(g.d, 0);
    double lhs = covariance_entry<double>(j, x0, x0, m2, g);
    double rhs = c_diag_d(j - 1, m2, g.d, g.L);
    CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-13));
  }
}

TEST_CASE("moments closed forms") {
  // d=4, L=2, m2=0
  auto t = moments<Rational>(3, Rational(0), 4, 2);
  CHECK(t.c2 == Rational(15, 16));
  CHECK(t.c3 == Rational(210, 256) / pow_int<Rational>(Rational(2), 6));
  CHECK(t.c1 == Rational(0));

  // brute-force block-sum oracle, exact in rationals at m2 = 0
  for (auto [d, L] : {std::pair<long, long>{1, 2}, {2, 2}, {1, 3}, {4, 2}}) {
    long N = (d * 2 <= 4) ? 3 : 2;
    if (pow_int<long>(L, d * N) > 512) N = 2;
    Geometry g(d, L, N);
    for (long j = 0; j + 1 <= g.N; ++j) {
      Rational s1(0), s2(0), s3(0), s4(0);
      Site x0(g.d, 0);
      for (long i = 0; i < g.volume(); ++i) {
        Rational v = covariance_entry<Rational>(j + 1, x0, g.site_of_index(i), Rational(0), g);
        s1 += v;
        s2 += v * v;
        s3 += v * v * v;
        s4 += v * v * v * v;
      }
      auto m = moments<Rational>(j, Rational(0), d, L);
      CHECK(s1 == m.c1);
      CHECK(s2 == m.c2);
      CHECK(s3 == m.c3);
      CHECK(s4 == m.c4);
    }
  }

  // m2 > 0 brute force vs closed form, double precision
  {
    Geometry g(4, 2, 3);
    double m2 = 0.1;
    long j = 1;
    double s2 = 0, s3 = 0, s4 = 0;
    Site x0(g.d, 0);
    for (long i = 0; i < g.volume(); ++i) {
      double v = covariance_entry<double>(j + 1, x0, g.site_of_index(i), m2, g);
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
    }
    CHECK_THAT(s2, Catch::Matchers::WithinRel(c2_d(j, m2, 4, 2), 1e-12));
    CHECK_THAT(s3, Catch::Matchers::WithinRel(c3_d(j, m2, 4, 2), 1e-12));
    CHECK_THAT(s4, Catch::Matchers::WithinRel(c4_d(j, m2, 4, 2), 1e-12));
  }
}

TEST_CASE("green function diagonal") {
  CHECK_THAT(green_diag(0.0, 4, 2).value, Catch::Matchers::WithinRel(1.25, 1e-12));
  CHECK_THAT(green_diag(0.0, 3, 2).value, Catch::Matchers::WithinRel(1.75, 1e-12));
  CHECK_THROWS_AS(green_diag(0.0, 2, 2), std::domain_error);

  // dense oracle: (-Delta_H + 1)^{-1}_{00} on the N=3 box approximates the
  // infinite-volume sum up to the finite-volume zero-mode term
  Geometry g(4, 2, 2);
  double m2 = 1.0;
  long V = g.volume();
  Eigen::MatrixXd A = -dense_laplacian_spectral(g) + m2 * Eigen::MatrixXd::Identity(V, V);
  double dense = A.inverse()(0, 0);
  // finite volume: sum_{j<=N} c_{j-1} + m^{-2} L^{-dN}
  double fv = covariance_entry_final<double>(m2, g);
  for (long j = 1; j <= g.N; ++j) fv += c_diag_d(j - 1, m2, g.d, g.L);
  CHECK_THAT(dense, Catch::Matchers::WithinAbs(fv, 1e-12));
  // infinite-volume green_diag agrees once the truncated tail is accounted
  auto gd = green_diag(m2, 4, 2);
  CHECK(std::abs(gd.value - dense) < 0.01);
}

TEST_CASE("hierarchical bubble") {
  CHECK_THAT(hier_bubble(0.0, 5, 2).sum.value, Catch::Matchers::WithinRel(31.0 / 16.0, 1e-12));
  CHECK_THROWS_AS(hier_bubble(0.0, 4, 2), std::domain_error);
  auto b = hier_bubble(1e-12, 4, 2);
  double target = (15.0 / 16.0) / std::log(2.0);
  CHECK(std::abs(b.log_ratio - target) / target < 0.03);
  // finite for every m^2 > 0, all dimensions
  for (long d = 1; d <= 5; ++d) CHECK(std::isfinite(hier_bubble(0.05, d, 2).sum.value));
}

TEST_CASE("gff tree sampler matches covariance") {
  Geometry g(1, 2, 3);
  double m2 = 0.5;
  std::mt19937_64 rng(12345);
  const int nsamp = 100000;
  long V = g.volume();
  double var0 = 0.0, cov07 = 0.0;
  for (int s = 0; s < nsamp; ++s) {
    auto phi = gff_sample_tree(g, m2, rng);
    var0 += phi[0] * phi[0];
    cov07 += phi[0] * phi[V - 1];
  }
  var0 /= nsamp;
  cov07 /= nsamp;
  double var_exact = covariance_entry_final<double>(m2, g);
  for (long j = 1; j <= g.N; ++j) var_exact += c_diag_d(j - 1, m2, g.d, g.L);
  // 4 s.e. tolerance; Var(phi0^2) ~ 2 var^2 for Gaussian
  double se_var = std::sqrt(2.0) * var_exact / std::sqrt(static_cast<double>(nsamp));
  CHECK(std::abs(var0 - var_exact) < 4.0 * se_var);

  Site x0{0}, x7{V - 1};
  double cov_exact = covariance_entry_final<double>(m2, g);
  for (long j = 1; j <= g.N; ++j) cov_exact += covariance_entry<double>(j, x0, x7, m2, g);
  double se_cov = var_exact * 2.0 / std::sqrt(static_cast<double>(nsamp));
  CHECK(std::abs(cov07 - cov_exact) < 4.0 * se_cov);

  // variance decreasing in m^2 (monotone trend over a grid)
  double prev = 1e300;
  for (double mm : {0.25, 1.0, 4.0, 16.0}) {
    double ve = covariance_entry_final<double>(mm, g);
    for (long j = 1; j <= g.N; ++j) ve += c_diag_d(j - 1, mm, g.d, g.L);
    CHECK(ve < prev);
    prev = ve;
  }
}

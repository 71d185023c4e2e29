// rglab: command-line front end for the hierarchical |phi|^4 RG laboratory.
// Subcommands: hier, frd, flow, critical, chi, nonpert, oracle, meanfield,
// walks, susy-check. JSON config in, CSV/JSON out; flags > file > defaults.
// Exit codes: 0 success, 2 validation error, 3 numerical-gate failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "rglab/emit.hpp"
#include "rglab/forms.hpp"
#include "rglab/frd.hpp"
#include "rglab/hierarchical.hpp"
#include "rglab/meanfield.hpp"
#include "rglab/nonpert.hpp"
#include "rglab/pertflow.hpp"
#include "rglab/walks.hpp"

namespace fs = std::filesystem;
using rglab::emit::Json;

namespace {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GateFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// config file values fill options the user did not pass on the command line
void merge_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config file not readable: " + path);
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  for (auto& [key, value] : cfg.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw ValidationError("unknown config key: " + key);
    if (opt->count() > 0) continue;  // flags override file
    opt->add_result(value.is_string() ? value.get<std::string>() : value.dump());
    opt->run_callback();
  }
}

long resolve_threads(long flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RGLAB_THREADS")) {
    long v = std::atol(env);
    if (v > 0) return v;
  }
  return 1;
}

// fixed-order parallel map: results land by index, independent of scheduling
template <class F>
void parallel_for(long count, long threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  for (long t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&]() {
      long i;
      while ((i = next.fetch_add(1)) < count) body(i);
    });
  for (auto& th : pool) th.join();
}

fs::path ensure_outdir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("unwritable output directory: " + out);
  return dir;
}

// ---- subcommand bodies -----------------------------------------------------

int run_hier(long d, long L, double m2, long jmax, const std::string& out, std::uint64_t seed,
             const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::emit::CsvWriter csv(dir / "hier.csv", {"j", "c", "c2", "c3", "c4", "gamma", "vartheta"});
  for (long j = 0; j < jmax; ++j) {
    // gamma_{j+1} = L^{2j}/(1 + m^2 L^{2j}) = 1/(L^{-2j} + m^2), overflow-free
    double gamma_j = 1.0 / (std::pow(static_cast<double>(L), -2.0 * j) + m2);
    csv.write_row({static_cast<double>(j), rglab::hier::c_diag_d(j, m2, d, L),
                   rglab::hier::c2_d(j, m2, d, L), rglab::hier::c3_d(j, m2, d, L),
                   rglab::hier::c4_d(j, m2, d, L), gamma_j, rglab::vartheta(j, m2, L)});
  }
  Json res;
  if (d == 1) res["d1_extrapolation"] = true;  // d >= 2 in the book's construction
  if (d > 2 || m2 > 0.0) {
    auto g = rglab::hier::green_diag(m2, d, L);
    res["green_diag"] = g.value;
    res["green_tail_bound"] = g.tail_bound;
  }
  if (d > 4 || m2 > 0.0) {
    auto b = rglab::hier::hier_bubble(m2, d, L);
    res["bubble"] = b.sum.value;
    res["bubble_tail_bound"] = b.sum.tail_bound;
    if (d == 4) res["bubble_over_log_inv_m"] = b.log_ratio;
  }
  rglab::emit::write_summary(dir / "hier_summary.json", cfg, seed, res);
  return 0;
}

int run_frd(long d, long L, double m2, long jmax, const std::string& profile_name,
            const std::string& out, std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  if (d > 3) throw ValidationError("frd: tabulated kernels restricted to d <= 3");
  const rglab::frd::BumpProfile profile = (profile_name == "plain")
                                              ? rglab::frd::BumpProfile::plain()
                                              : rglab::frd::BumpProfile::squared();
  if (!profile.positivity_ok())
    throw GateFailure("frd: profile failed the P_t positivity check (worst relative minimum " +
                      std::to_string(profile.worst_pt_min()) + ")");
  std::vector<std::string> cols{"j"};
  for (long i = 0; i < d; ++i) cols.push_back("x" + std::to_string(i));
  cols.push_back("value");
  rglab::emit::CsvWriter csv(dir / "frd_kernels.csv", cols);
  for (long j = 1; j <= jmax; ++j) {
    if (std::pow(static_cast<double>(L), static_cast<double>(j)) / 2.0 > 48.0) break;
    auto slice = rglab::frd::frd_slice(j, d, L, m2, profile);
    for (auto& [x, v] : slice.kernel) {
      std::vector<double> row{static_cast<double>(j)};
      for (long c : x) row.push_back(static_cast<double>(c));
      row.push_back(v);
      csv.write_row(row);
    }
  }
  // symbol-sum residual report at sampled momenta
  Json residuals = Json::array();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uk(-M_PI, M_PI);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::vector<double> k(d);
    for (long i = 0; i < d; ++i) k[i] = uk(rng);
    double target = 1.0 / (rglab::frd::lattice_symbol(k) + m2);
    double acc = 0.0;
    for (long j = 1; j <= 40; ++j)
      acc += rglab::frd::symbol_slice(j, d, L, m2, profile).symbol(k);
    Json entry;
    entry["k"] = k;
    entry["residual"] = acc - target;
    residuals.push_back(entry);
    worst = std::max(worst, std::abs(acc - target));
  }
  Json res;
  res["symbol_residuals"] = residuals;
  res["worst_residual"] = worst;
  res["profile_worst_pt_min"] = profile.worst_pt_min();
  rglab::emit::write_summary(dir / "frd_summary.json", cfg, seed, res);
  if (m2 > 0.0 && worst > 1e-6) throw GateFailure("frd: symbol completeness residual above 1e-6");
  return 0;
}

int run_flow(long d, long L, long n, double g0, double mu0, double m2, long jmax,
             const std::string& out, std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::flow::ModelParams p{d, L, n};
  auto traj = rglab::flow::run_flow(g0, mu0, m2, p, jmax);
  rglab::emit::CsvWriter csv(dir / "flow.csv", {"j", "g", "mu", "u", "beta", "eta", "xi", "vartheta"});
  for (long j = 0; j <= jmax; ++j)
    csv.write_row({static_cast<double>(j), traj.g[j], traj.mu[j], traj.u[j],
                   rglab::flow::beta_j(j, m2, p), rglab::flow::eta_j(j, m2, p),
                   rglab::flow::xi_j(j, m2, p), rglab::vartheta(j, m2, L)});
  Json res;
  res["g_final"] = traj.g[jmax];
  res["mu_final"] = traj.mu[jmax];
  rglab::emit::write_summary(dir / "flow_summary.json", cfg, seed, res);
  return 0;
}

int run_critical(long d, long L, long n, double g0, double m2, long jmax, const std::string& out,
                 std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::flow::ModelParams p{d, L, n};
  auto back = rglab::flow::mu0_backward(g0, m2, p, jmax);
  auto bis = rglab::flow::mu0_bisection(g0, m2, p, std::min<long>(jmax, 2000));
  Json res;
  res["mu0c_backward"] = back.mu0c;
  res["mu0c_backward_tail_bound"] = back.tail_bound;
  res["mu0c_bisect"] = bis.mu0c;
  res["bisect_bracket_width"] = bis.tail_bound;
  res["abs_diff"] = std::abs(back.mu0c - bis.mu0c);
  rglab::emit::write_summary(dir / "critical_summary.json", cfg, seed, res);
  if (std::abs(back.mu0c - bis.mu0c) > 1e-8)
    throw GateFailure("critical: dual constructions disagree beyond 1e-8");
  return 0;
}

int run_chi(long d, long L, long n, double g0, double eps_min, double eps_max,
            long per_decade, long threads, const std::string& out, std::uint64_t seed,
            const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::flow::ModelParams p{d, L, n};
  std::vector<double> eps;
  for (double e = eps_min; e <= eps_max * (1.0 + 1e-12);
       e *= std::pow(10.0, 1.0 / per_decade))
    eps.push_back(e);
  std::vector<rglab::flow::ChiPrediction> preds(eps.size());
  parallel_for(static_cast<long>(eps.size()), threads,
               [&](long i) { preds[i] = rglab::flow::chi_prediction(g0, eps[i], p); });
  rglab::emit::CsvWriter csv(dir / "chi.csv",
                             {"eps", "m2_effective", "chi_effective", "chi_leading", "amplitude"});
  double gamma = p.gamma();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double amp = preds[i].chi_effective * eps[i] / std::pow(std::log(1.0 / eps[i]), gamma);
    csv.write_row({eps[i], preds[i].m2_effective, preds[i].chi_effective, preds[i].chi_leading, amp});
  }
  auto ode = rglab::flow::chi_ode_invert(gamma, 1.0, eps);
  Json res;
  res["gamma"] = gamma;
  res["ode_fitted_exponent"] = ode.fitted_exponent;
  res["worst_root_residual"] = [&] {
    double w = 0.0;
    for (auto& pr : preds) w = std::max(w, pr.root_residual);
    return w;
  }();
  rglab::emit::write_summary(dir / "chi_summary.json", cfg, seed, res);
  return 0;
}

int run_nonpert(double g0, double nu0, double m2, long N, const std::string& engine,
                std::uint64_t seed, long samples, const std::string& out, const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::npt::NptParams p{1, 2, 1, m2, N};
  rglab::emit::CsvWriter csv(dir / "nonpert_couplings.csv", {"j", "u", "nu", "g"});
  Json res;
  if (engine == "mc") {
    rglab::npt::BlockFunction f = rglab::npt::initial_block(g0, nu0, p);
    double ghint = std::max(g0, 1e-12);
    auto ex0 = rglab::npt::extract_couplings(f, p);
    csv.write_row({0.0, ex0.u, ex0.nu, ex0.g});
    bool flagged = false;
    for (long j = 0; j < N; ++j) {
      auto step = rglab::npt::rg_step_mc(f, p, ghint, rglab::derive_seed(seed, j), samples);
      flagged = flagged || step.se_flagged;
      f = step.f;
      auto ex = rglab::npt::extract_couplings(f, p);
      csv.write_row({static_cast<double>(j + 1), ex.u, ex.nu, ex.g});
      ghint = std::max(ex.g, 1e-12);
    }
    res["se_flagged"] = flagged;
    res["chi_N"] = rglab::npt::chi_finite_volume(f, p);
  } else if (engine == "quadrature") {
    auto run = rglab::npt::run_progressive(g0, nu0, p);
    for (std::size_t j = 0; j < run.couplings.size(); ++j)
      csv.write_row({static_cast<double>(j), run.couplings[j].u, run.couplings[j].nu,
                     run.couplings[j].g});
    res["chi_N"] = rglab::npt::chi_finite_volume(run.fN, p);
    auto u4 = rglab::npt::u4bar(run.fN, p);
    res["u4bar"] = u4.u4bar;
    res["g_ren"] = u4.g_ren;
    double worst_tail = 0.0;
    for (auto& r : run.reports) worst_tail = std::max(worst_tail, r.tail_fraction);
    res["worst_tail_fraction"] = worst_tail;
  } else {
    throw ValidationError("nonpert: engine must be quadrature or mc");
  }
  rglab::emit::write_summary(dir / "nonpert_summary.json", cfg, seed, res);
  return 0;
}

int run_oracle(long d, long L, long N, double g0, double nu0, double m2, const std::string& out,
               std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  rglab::npt::NptParams p{d, L, 1, m2, N};
  auto res = rglab::npt::oracle_chi(g0, nu0, p);
  Json j;
  j["chi_direct"] = res.chi_direct;
  j["chi_progressive"] = res.chi_progressive;
  j["rel_gap"] = std::abs(res.chi_direct - res.chi_progressive) / std::abs(res.chi_direct);
  j["order_gate"] = res.order_gate;
  j["u4_direct"] = res.u4_direct;
  j["u4_progressive"] = res.u4_progressive;
  rglab::emit::write_summary(dir / "oracle_summary.json", cfg, seed, j);
  if (j["rel_gap"].get<double>() > 1e-6)
    throw GateFailure("oracle: progressive and direct routes disagree beyond 1e-6");
  return 0;
}

int run_meanfield(long n, double beta_min, double beta_max, long beta_count, double h_min,
                  double h_max, long h_count, long threads, const std::string& out,
                  std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  if (n != 1) throw ValidationError("meanfield: the sweep solver is n = 1 only");
  std::vector<std::pair<double, double>> grid;
  for (long i = 0; i < beta_count; ++i)
    for (long k = 0; k < h_count; ++k) {
      double beta = beta_count == 1 ? beta_min
                                    : beta_min + (beta_max - beta_min) * i / (beta_count - 1);
      double h = h_count == 1 ? h_min : h_min + (h_max - h_min) * k / (h_count - 1);
      grid.push_back({beta, h});
    }
  struct Row {
    double beta, h, phi0, chi, curv;
  };
  std::vector<Row> rows(grid.size());
  parallel_for(static_cast<long>(grid.size()), threads, [&](long i) {
    auto [beta, h] = grid[i];
    rglab::mf::State st(1, beta, h);
    double phi0 = rglab::mf::solve_magnetisation(st);
    double chi = std::numeric_limits<double>::quiet_NaN();
    try {
      chi = rglab::mf::susceptibility(st);
    } catch (const std::domain_error&) {
    }
    double e = 1e-5;
    double curv = (rglab::mf::renorm_potential(phi0 + e, st) -
                   2.0 * rglab::mf::renorm_potential(phi0, st) +
                   rglab::mf::renorm_potential(phi0 - e, st)) /
                  (e * e);
    rows[i] = {beta, h, phi0, chi, curv};
  });
  rglab::emit::CsvWriter csv(dir / "meanfield.csv", {"beta", "T", "h", "phi0", "chi", "v_curvature"});
  for (auto& r : rows) csv.write_row({r.beta, 1.0 / r.beta, r.h, r.phi0, r.chi, r.curv});
  rglab::emit::write_summary(dir / "meanfield_summary.json", cfg, seed, Json::object());
  return 0;
}

int run_walks(long d, long nmax, double m2, const std::string& out, std::uint64_t seed,
              const Json& cfg) {
  auto dir = ensure_outdir(out);
  auto a = rglab::walks::saw_counts_hashset(d, static_cast<int>(nmax));
  auto b = rglab::walks::saw_counts_bitmask(d, static_cast<int>(nmax));
  if (a != b) throw GateFailure("walks: the two SAW enumerators disagree");
  rglab::emit::CsvWriter csv(dir / "saw_counts.csv", {"n", "c_n"});
  for (std::size_t i = 0; i < a.size(); ++i)
    csv.write_row({static_cast<double>(i + 1), static_cast<double>(a[i])});
  rglab::emit::CsvWriter bub(dir / "bubble.csv", {"d", "m2", "value", "normalised"});
  Json res;
  for (long dd = 1; dd <= 5; ++dd) {
    if (dd <= 4 && m2 <= 0.0) continue;
    auto r = rglab::walks::euclid_bubble(m2, dd);
    bub.write_row({static_cast<double>(dd), m2, r.value, r.normalised});
  }
  res["saw_counts_agree"] = true;
  rglab::emit::write_summary(dir / "walks_summary.json", cfg, seed, res);
  return 0;
}

int run_susy_check(const std::string& out, std::uint64_t seed, const Json& cfg) {
  auto dir = ensure_outdir(out);
  using rglab::Rational;
  using namespace rglab::forms;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(-2, 2);
  auto random_pd = [&](int n) {
    while (true) {
      std::vector<std::vector<int>> gm(n, std::vector<int>(n));
      for (auto& row : gm)
        for (auto& v : row) v = dist(rng);
      auto a = rglab::gauss::zero_matrix<Rational>(n);
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

  Json table = Json::array();
  bool ok = true;
  auto record = [&](const std::string& name, double residual, double tol) {
    Json row;
    row["check"] = name;
    row["residual"] = residual;
    row["tolerance"] = tol;
    bool pass = residual <= tol;
    row["pass"] = pass;
    ok = ok && pass;
    table.push_back(row);
    std::cout << (pass ? "PASS " : "FAIL ") << name << "  residual=" << residual << "\n";
  };

  // self-normalisation over 20 random matrices, exact in rationals
  {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      auto a = random_pd(3);
      Rational r = super_expectation_A(FormPoly<Rational>(Rational(1)), a) - Rational(1);
      worst = std::max(worst, std::abs(rglab::to_double(r)));
    }
    record("int e^{-S_A} = 1 (20 random PD matrices)", worst, 1e-12);
  }
  // two-point
  {
    auto a = random_pd(3);
    auto c = invert_matrix(a).inv;
    FormPoly<Rational> k = FormPoly<Rational>::boson(phi_var(0)) *
                           FormPoly<Rational>::boson(phibar_var(2));
    Rational r = super_expectation_A(k, a) - c[0][2];
    record("phi phibar two-point = C_xy", std::abs(rglab::to_double(r)), 0.0);
  }
  // localisation, exact
  {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      auto a = random_pd(2 + rep % 2);
      int V = 2 + rep % 2;
      FormPoly<Rational> f{rglab::Polynomial<Rational>(Rational(dist(rng)))};
      Rational f0 = f.terms().empty() ? Rational(0) : f.terms().begin()->second.constant_term();
      for (int t = 0; t < 3; ++t) {
        FormPoly<Rational> mono{rglab::Polynomial<Rational>(Rational(dist(rng)))};
        for (int kk = 0; kk <= rep % 3; ++kk) mono *= tau<Rational>(rng() % V);
        f += mono;
      }
      Rational r = super_expectation_A(f, a) - f0;
      worst = std::max(worst, std::abs(rglab::to_double(r)));
    }
    record("localisation F(tau) -> F(0)", worst, 0.0);
  }
  // strict SAW and trail representations on K3 / K4
  {
    double worst = 0.0;
    for (int V : {3, 4}) {
      auto a = random_pd(V);
      auto c = invert_matrix(a).inv;
      Rational r = saw_representation_value(a, 0, V - 1) - saw_path_sum(c, 0, V - 1);
      worst = std::max(worst, std::abs(rglab::to_double(r)));
    }
    record("strict SAW representation = path sum (K3, K4)", worst, 1e-10);
    worst = 0.0;
    for (int V : {3, 4}) {
      auto beta = rglab::gauss::zero_matrix<Rational>(V);
      for (int i = 0; i < V; ++i)
        for (int j = i + 1; j < V; ++j) beta[i][j] = beta[j][i] = Rational(std::abs(dist(rng)), 2);
      Rational r = trail_representation_value(beta, 0, V - 1) - trail_path_sum(beta, 0, V - 1);
      worst = std::max(worst, std::abs(rglab::to_double(r)));
    }
    record("trail representation = trail sum (K3, K4)", worst, 1e-10);
  }
  // super integration by parts on monomial forms
  {
    double worst = 0.0;
    for (int V : {2, 3}) {
      auto a = random_pd(V);
      FormPoly<Rational> k = FormPoly<Rational>::boson(phi_var(0)) *
                             FormPoly<Rational>::boson(phibar_var(V - 1));
      worst = std::max(worst, rglab::to_double(super_ibp_residual(k, a, 0)));
      worst = std::max(worst, rglab::to_double(super_ibp_residual(tau<Rational>(0), a, V - 1)));
    }
    record("super integration by parts", worst, 0.0);
  }
  // generator-level Q identities
  {
    using F = FormPoly<Rational>;
    long V = 2;
    F phi0 = F::boson(phi_var(0));
    F psi0 = F::generator(psi_bit(0));
    bool id1 = q_operator(q_operator(phi0, V), V) == phi0 * Rational(-1);
    bool id2 = q_operator(q_operator(psi0, V), V) == psi0 * Rational(-1);
    bool id3 = q_operator(tau_pair<Rational>(0, 1), V).is_zero();
    record("Q^2 phi = -phi, Q^2 psi = -psi, Q tau_xy = 0", (id1 && id2 && id3) ? 0.0 : 1.0, 0.0);
  }

  Json res;
  res["checks"] = table;
  res["all_pass"] = ok;
  rglab::emit::write_summary(dir / "susy_summary.json", cfg, seed, res);
  if (!ok) throw GateFailure("susy-check: residual table has failures");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rglab: hierarchical |phi|^4 renormalisation-group laboratory"};
  app.require_subcommand(1);

  std::string config_path, out = ".";
  std::uint64_t seed = 1;
  long threads = 0;

  // shared options registered per subcommand so config merging sees them
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override)");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--threads", threads, "worker threads (env RGLAB_THREADS)");
  };

  // hier
  long d = 4, L = 2, n = 1, N = 2, jmax = 30;
  double m2 = 0.0, g0 = 0.05, mu0 = 0.0, nu0 = 0.0;
  auto* hier = app.add_subcommand("hier", "hierarchical covariance/moment tables");
  add_common(hier);
  hier->add_option("--d", d);
  hier->add_option("--L", L);
  hier->add_option("--m2", m2);
  hier->add_option("--jmax", jmax);

  auto* frd = app.add_subcommand("frd", "finite-range decomposition kernels and symbols");
  std::string profile = "squared";
  long frd_jmax = 4;
  double frd_m2 = 1.0;
  long frd_d = 2, frd_L = 2;
  add_common(frd);
  frd->add_option("--d", frd_d);
  frd->add_option("--L", frd_L);
  frd->add_option("--m2", frd_m2);
  frd->add_option("--jmax", frd_jmax);
  frd->add_option("--profile", profile, "squared | plain");

  auto* flow = app.add_subcommand("flow", "perturbative coupling flow");
  add_common(flow);
  flow->add_option("--d", d);
  flow->add_option("--L", L);
  flow->add_option("--n", n);
  flow->add_option("--g0", g0);
  flow->add_option("--mu0", mu0);
  flow->add_option("--m2", m2);
  flow->add_option("--jmax", jmax);

  auto* critical = app.add_subcommand("critical", "critical point by backward sum and bisection");
  add_common(critical);
  critical->add_option("--d", d);
  critical->add_option("--L", L);
  critical->add_option("--n", n);
  critical->add_option("--g0", g0);
  critical->add_option("--m2", m2);
  critical->add_option("--jmax", jmax);

  auto* chi = app.add_subcommand("chi", "susceptibility asymptotics");
  double eps_min = 1e-8, eps_max = 1e-2;
  long per_decade = 4;
  add_common(chi);
  chi->add_option("--d", d);
  chi->add_option("--L", L);
  chi->add_option("--n", n);
  chi->add_option("--g0", g0);
  chi->add_option("--eps-min", eps_min);
  chi->add_option("--eps-max", eps_max);
  chi->add_option("--per-decade", per_decade);

  auto* nonpert = app.add_subcommand("nonpert", "nonperturbative block recursion");
  std::string engine = "quadrature";
  long samples = 20000;
  add_common(nonpert);
  nonpert->add_option("--g0", g0);
  nonpert->add_option("--nu0", nu0);
  nonpert->add_option("--m2", m2);
  nonpert->add_option("--N", N);
  nonpert->add_option("--engine", engine, "quadrature | mc");
  nonpert->add_option("--samples", samples);

  auto* oracle = app.add_subcommand("oracle", "two-route chi on tiny volumes");
  double og = 0.5, onu0 = -0.2, om2 = 0.3;
  long od = 1, oL = 2, oN = 2;
  add_common(oracle);
  oracle->add_option("--d", od);
  oracle->add_option("--L", oL);
  oracle->add_option("--N", oN);
  oracle->add_option("--g", og);
  oracle->add_option("--nu0", onu0);
  oracle->add_option("--m2", om2);

  auto* meanfield = app.add_subcommand("meanfield", "mean-field sweeps");
  double beta_min = 0.5, beta_max = 1.5, h_min = 0.0, h_max = 0.0;
  long beta_count = 11, h_count = 1;
  add_common(meanfield);
  meanfield->add_option("--n", n);
  meanfield->add_option("--beta-min", beta_min);
  meanfield->add_option("--beta-max", beta_max);
  meanfield->add_option("--beta-count", beta_count);
  meanfield->add_option("--h-min", h_min);
  meanfield->add_option("--h-max", h_max);
  meanfield->add_option("--h-count", h_count);

  auto* walks = app.add_subcommand("walks", "bubbles and SAW counts");
  long wd = 2, wnmax = 8;
  double wm2 = 1e-4;
  add_common(walks);
  walks->add_option("--d", wd);
  walks->add_option("--nmax", wnmax);
  walks->add_option("--m2", wm2);

  auto* susy = app.add_subcommand("susy-check", "supersymmetry identity suite");
  add_common(susy);

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    if (!config_path.empty()) merge_config(sub, config_path);
    threads = resolve_threads(threads);

    // resolved config echoed into every summary
    Json cfg;
    cfg["subcommand"] = sub->get_name();
    cfg["out"] = out;
    cfg["seed"] = seed;
    cfg["threads"] = threads;
    auto put = [&](const char* key, auto value) { cfg[key] = value; };
    if (sub == hier || sub == flow || sub == critical || sub == chi) {
      put("d", d);
      put("L", L);
    }
    if (sub == flow || sub == critical || sub == chi) put("n", n);
    if (sub == hier || sub == flow || sub == critical) put("m2", m2);
    if (sub == hier || sub == flow || sub == critical) put("jmax", jmax);
    if (sub == flow || sub == critical || sub == chi) put("g0", g0);
    if (sub == flow) put("mu0", mu0);
    if (sub == chi) {
      put("eps_min", eps_min);
      put("eps_max", eps_max);
      put("per_decade", per_decade);
    }
    if (sub == frd) {
      put("d", frd_d);
      put("L", frd_L);
      put("m2", frd_m2);
      put("jmax", frd_jmax);
      put("profile", profile);
    }
    if (sub == nonpert) {
      put("g0", g0);
      put("nu0", nu0);
      put("m2", m2);
      put("N", N);
      put("engine", engine);
      put("samples", samples);
    }
    if (sub == oracle) {
      put("d", od);
      put("L", oL);
      put("N", oN);
      put("g", og);
      put("nu0", onu0);
      put("m2", om2);
    }
    if (sub == meanfield) {
      put("n", n);
      put("beta_min", beta_min);
      put("beta_max", beta_max);
      put("beta_count", beta_count);
      put("h_min", h_min);
      put("h_max", h_max);
      put("h_count", h_count);
    }
    if (sub == walks) {
      put("d", wd);
      put("nmax", wnmax);
      put("m2", wm2);
    }

    if (sub == hier) return run_hier(d, L, m2, jmax, out, seed, cfg);
    if (sub == frd) return run_frd(frd_d, frd_L, frd_m2, frd_jmax, profile, out, seed, cfg);
    if (sub == flow) return run_flow(d, L, n, g0, mu0, m2, jmax, out, seed, cfg);
    if (sub == critical) return run_critical(d, L, n, g0, m2, jmax, out, seed, cfg);
    if (sub == chi)
      return run_chi(d, L, n, g0, eps_min, eps_max, per_decade, threads, out, seed, cfg);
    if (sub == nonpert) return run_nonpert(g0, nu0, m2, N, engine, seed, samples, out, cfg);
    if (sub == oracle) return run_oracle(od, oL, oN, og, onu0, om2, out, seed, cfg);
    if (sub == meanfield)
      return run_meanfield(n, beta_min, beta_max, beta_count, h_min, h_max, h_count, threads, out,
                           seed, cfg);
    if (sub == walks) return run_walks(wd, wnmax, wm2, out, seed, cfg);
    if (sub == susy) return run_susy_check(out, seed, cfg);
    throw ValidationError("unknown subcommand");
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const GateFailure& e) {
    std::cerr << "numerical gate failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical gate failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

// Acceptance suite: one [PASS]/[FAIL] line per criterion.
//
//   partrace_acceptance [--criterion NAME]... [--out-dir DIR]

#include "app/config.hpp"
#include "app/experiments.hpp"

#include "partrace/krylov.hpp"
#include "partrace/observables.hpp"
#include "partrace/oracle.hpp"
#include "partrace/probes.hpp"
#include "partrace/ptrace.hpp"
#include "partrace/random.hpp"
#include "partrace/spinsys.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace partrace;
namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

ProbeConfig gaussian(Eigen::Index m, std::uint64_t seed) {
  ProbeConfig p;
  p.m = m;
  p.seed = seed;
  return p;
}

Eigen::MatrixXd random_orthonormal(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, k, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

Eigen::MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(n, n, rng);
  return 0.5 * (g + g.transpose());
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const LinOp h = build_hamiltonian(with_field(chain_xx(8, 1.0, false), 0.3));
  const BipartiteSplit split(8, 2);
  const DenseSpectrum oracle(h, split);
  const DeflationBasis q = lowest_eigenpairs(h, 8);
  const double betas[] = {0.0, 0.1, 1.0, 10.0, 100.0};
  const ThermalResult r = estimate_thermal(h, split, q, betas, gaussian(10, 1));
  double worst_ratio = 0.0;
  bool ok = true;
  for (const PartialTraceEstimate& est : r.estimates) {
    const Eigen::MatrixXd err = (est.rho() - oracle.reduced_density(est.beta)).cwiseAbs();
    const Eigen::MatrixXd allowed = (4.0 * est.rho_std_error().array() + 1e-12).matrix();
    ok = ok && (err.array() <= allowed.array()).all();
    worst_ratio = std::max(worst_ratio, (err.array() / allowed.array()).maxCoeff());
  }
  const double frob100 = (r.estimates.back().rho() - oracle.reduced_density(100.0)).norm();
  ok = ok && frob100 <= 1e-8;
  return {ok, "max err/(4 stderr + 1e-12) " + fmt("%.3g", worst_ratio) + ", beta=100 Frobenius " +
                  fmt("%.3g", frob100)};
}

Outcome variance_bound_profile() {
  const LinOp h = build_hamiltonian(with_field(chain_xx(10, 1.0, false), 0.3));
  std::vector<double> betas{0.0};
  for (int i = 0; i <= 24; ++i) betas.push_back(std::pow(10.0, -2.0 + 4.0 * i / 24.0));
  const Eigen::Index ks[] = {0, 1, 4, 16};
  const auto rows = variance_profile(h, betas, ks);
  bool monotone = true;
  for (std::size_t b = 0; b < betas.size(); ++b) {
    for (std::size_t i = 1; i < 4; ++i) monotone = monotone && rows[b * 4 + i].log_bound < rows[b * 4 + i - 1].log_bound;
  }
  const std::size_t last = (betas.size() - 1) * 4;
  const double ratio = std::exp(rows[last].log_bound - rows[last + 3].log_bound);
  return {monotone && ratio >= 1e3,
          std::string(monotone ? "monotone in k" : "NOT monotone in k") + ", k=0/k=16 at beta=100 " +
              fmt("%.3g", ratio)};
}

Outcome quadrature_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_b(1, 4), pick_t(1, 8), pick_n(0, 2), pick_k(0, 3);
  const Eigen::Index sizes[] = {12, 40, 90};
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const Eigen::Index n = sizes[pick_n(rng)];
    const Eigen::Index b = pick_b(rng);
    const Eigen::Index t = pick_t(rng);
    const Eigen::Index k = c % 2 == 0 ? 0 : pick_k(rng) + 1;
    Eigen::MatrixXd a = random_symmetric(n, rng);
    a /= a.operatorNorm();
    const LinOp op = LinOp::from_dense(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    DeflationBasis q;
    q.q = eig.eigenvectors().leftCols(k);
    q.lambda = eig.eigenvalues().head(k);
    const Eigen::MatrixXd y = gaussian_matrix(n, b, rng);
    const Eigen::MatrixXd z = y - q.q * (q.q.transpose() * y);

    const Eigen::Index degree = 2 * t - 1;
    Eigen::VectorXd coef(degree + 1);
    for (Eigen::Index i = 0; i <= degree; ++i) coef(i) = std::normal_distribution<double>()(rng);
    const ScalarFunction p = [&](double x) {
      double s = 0.0;
      for (Eigen::Index i = degree; i >= 0; --i) s = s * x + coef(i);
      return s;
    };
    Eigen::MatrixXd pz = coef(degree) * z;
    for (Eigen::Index i = degree - 1; i >= 0; --i) pz = a * pz + coef(i) * z;
    const Eigen::MatrixXd exact = z.transpose() * pz;

    const BlockTridiagonal trid = block_lanczos_defl(op, y, q, t, true);
    const Eigen::MatrixXd quad = matfun_quadrature(trid, p);
    const double rel = (quad - exact).norm() / std::max(exact.norm(), 1e-300);
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-9, "50 cases, worst relative error " + fmt("%.3g", worst)};
}

Outcome unbiasedness() {
  const LinOp h = build_hamiltonian(with_field(chain_xx(6, 1.0, false), 0.3));
  const BipartiteSplit split(6, 2);
  const Eigen::MatrixXd thermal = dense_thermal(h, 1.0).state.value();
  std::mt19937_64 rng(77);
  const Eigen::MatrixXd indefinite = random_symmetric(64, rng);
  const Eigen::MatrixXd q_random = random_orthonormal(64, 6, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(thermal);
  const Eigen::MatrixXd q_top = eig.eigenvectors().rightCols(6);

  struct Case {
    std::string name;
    const Eigen::MatrixXd* a;
    const Eigen::MatrixXd* q;
  };
  const Case cases[] = {{"plain/thermal", &thermal, nullptr},
                        {"plain/indefinite", &indefinite, nullptr},
                        {"deflated/thermal-top6", &thermal, &q_top},
                        {"deflated/thermal-random", &thermal, &q_random},
                        {"deflated/indefinite-random", &indefinite, &q_random}};
  const int runs = 200;
  double worst = 0.0;
  for (const Case& cs : cases) {
    const LinOp op = LinOp::from_dense(*cs.a);
    const Eigen::MatrixXd truth = dense_partial_trace(*cs.a, split);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4), sum2 = Eigen::MatrixXd::Zero(4, 4);
    for (int r = 0; r < runs; ++r) {
      const ProbeConfig p = gaussian(5, 1000 + static_cast<std::uint64_t>(r));
      const Eigen::MatrixXd v = cs.q ? estimate_deflated_dense(op, *cs.q, split, p).value()
                                     : estimate_plain(op, split, p).value();
      sum += v;
      sum2 += v.cwiseProduct(v);
    }
    const Eigen::MatrixXd mean = sum / runs;
    const Eigen::MatrixXd var = (sum2 / runs - mean.cwiseProduct(mean)) * (runs / (runs - 1.0));
    const Eigen::ArrayXXd se = (var.array().max(0.0) / runs).sqrt();
    const Eigen::ArrayXXd z = (mean - truth).array().abs() / (se + 1e-12 * truth.norm());
    worst = std::max(worst, z.maxCoeff());
  }
  return {worst <= 5.0, "5 cases x 200 runs, worst |grand mean - truth| / grand stderr " + fmt("%.3g", worst)};
}

Outcome exponential_suppression() {
  const BipartiteSplit split = BipartiteSplit::from_dims(4, 32);
  const Eigen::Index n = split.d_t();
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd u = random_orthonormal(n, n, rng);
  Eigen::VectorXd sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) sigma(i) = std::pow(0.5, static_cast<double>(i));
  const LinOp op = LinOp::from_dense(u * sigma.asDiagonal() * u.transpose());
  const int runs = 300;
  std::vector<double> ks, log_std;
  for (Eigen::Index k = 0; k <= 10; ++k) {
    const Eigen::MatrixXd q = u.leftCols(k);
    std::vector<Eigen::MatrixXd> values;
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 4);
    for (int r = 0; r < runs; ++r) {
      values.push_back(estimate_deflated_dense(op, q, split, gaussian(2, 500 + static_cast<std::uint64_t>(r))).value());
      mean += values.back();
    }
    mean /= runs;
    double ss = 0.0;
    for (const auto& v : values) ss += (v - mean).squaredNorm();
    ks.push_back(static_cast<double>(k));
    log_std.push_back(0.5 * std::log(ss / (runs - 1)));
  }
  const double s = slope(ks, log_std);
  const double target = std::log(0.5);
  const bool ok = s >= 1.2 * target && s <= 0.8 * target;
  return {ok, "slope of ln stddev vs k " + fmt("%.4f", s) + " (target " + fmt("%.4f", target) + " +/- 20%)"};
}

Outcome sqrt_m_scaling() {
  app::Config c = app::parse_config(
      R"({"system": {"kind": "chain_xx", "n_sites": 8}, "n_sys_sites": 2, "h_values": [0.3],
          "betas": [1, 5], "ks": [0], "ms": [2, 5, 10, 20, 50], "runs": 100, "seed": 3})");
  app::validate(c);
  const app::VarianceStudy study = app::variance_study(c);
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_beta;
  for (const app::SpreadRow& r : study.spread) {
    by_beta[r.beta].first.push_back(std::log(static_cast<double>(r.m)));
    by_beta[r.beta].second.push_back(std::log(r.empirical_spread));
  }
  bool ok = true;
  std::string detail = "log-log slope";
  for (const auto& [beta, xy] : by_beta) {
    const double s = slope(xy.first, xy.second);
    ok = ok && std::abs(s + 0.5) <= 0.15;
    detail += " beta=" + fmt("%g", beta) + ": " + fmt("%.3f", s);
  }
  return {ok, detail};
}

Outcome cost_accounting() {
  const LinOp h = build_hamiltonian(with_field(chain_xx(8, 1.0, false), 0.3));
  const BipartiteSplit split(8, 2);
  const Eigen::Index k = 8, m = 10, d_s = split.d_s();
  const DeflationBasis q = lowest_eigenpairs(h, k);
  std::string detail;
  bool ok = true;

  h.reset_applies();
  const double betas[] = {0.5, 5.0, 50.0};
  const ThermalResult r = estimate_thermal(h, split, q, betas, gaussian(m, 4));
  const std::uint64_t counted = h.applies();
  const auto expected = static_cast<std::uint64_t>(m * r.depth * d_s);
  ok = ok && r.estimator_matvecs == expected && counted == r.pilot_matvecs + r.estimator_matvecs;
  for (const auto& est : r.estimates) ok = ok && est.matvecs == expected;
  detail += "thermal m t d_s = " + std::to_string(expected) + " reported " + std::to_string(r.estimator_matvecs) +
            " (t=" + std::to_string(r.depth) + ", counter " + std::to_string(counted) + " incl. pilot " +
            std::to_string(r.pilot_matvecs) + ")";

  const Eigen::MatrixXd a = dense_thermal(h, 1.0).state.value();
  const LinOp op = LinOp::from_dense(a);
  op.reset_applies();
  const PartialTraceEstimate d = estimate_deflated_dense(op, q.q, split, gaussian(m, 4));
  const auto expected_d = static_cast<std::uint64_t>(k + m * d_s);
  ok = ok && d.matvecs == expected_d && op.applies() == expected_d;
  detail += "; deflated k + m d_s = " + std::to_string(expected_d) + " reported " + std::to_string(d.matvecs);

  app::Config c = app::parse_config(
      R"({"system": {"kind": "chain_xx", "n_sites": 8}, "h_values": [0.3], "betas": [1, 10], "k": 8, "m": 10})");
  app::validate(c);
  const app::SolvedSystem sys = app::solve_system(c, 0.3, c.k);
  sys.h.reset_applies();
  const auto points = app::sweep_points(c, sys, app::probe_config(c, c.seed, c.m));
  const std::uint64_t sweep_counted = sys.h.applies();
  for (const auto& pt : points) {
    ok = ok && pt.matvecs_estimator == static_cast<std::uint64_t>(pt.m * pt.t * d_s) &&
         pt.matvecs_pilot + pt.matvecs_estimator == sweep_counted;
  }
  detail += "; sweep rows consistent with the apply counter";
  return {ok, detail};
}

Outcome beta_limits() {
  app::Config c = app::parse_config(
      R"({"system": {"kind": "chain_xx", "n_sites": 8}, "h_values": [0.3], "betas": [0, "inf"], "k": 8, "m": 10})");
  app::validate(c);
  const app::SolvedSystem sys = app::solve_system(c, 0.3, c.k);
  const auto points = app::sweep_points(c, sys, app::probe_config(c, c.seed, c.m));
  const double s0 = points[0].obs.entropy;
  const double err0 = std::abs(s0 - std::log(4.0));

  const Eigen::VectorXd q1 = sys.basis.q.col(0);
  const Eigen::MatrixXd direct = partial_trace_rank1(q1, sys.split);
  const double path_err = (points[1].rho - direct).cwiseAbs().maxCoeff();
  const DenseSpectrum oracle(sys.h, sys.split);
  const double oracle_err = (points[1].rho - oracle.reduced_density(std::numeric_limits<double>::infinity())).norm();
  const bool ok = err0 <= 1e-10 && path_err == 0.0 && oracle_err <= 1e-10 && points[1].matvecs_estimator == 0 &&
                  oracle.ground_degeneracy() == 1;
  return {ok, "|S(0) - ln d_s| " + fmt("%.3g", err0) + ", beta=inf vs tr_b(q1 q1^T) " + fmt("%.3g", path_err) +
                  ", vs dense ground state " + fmt("%.3g", oracle_err)};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Outcome smoke_run(const fs::path& out_dir) {
  app::Config c = app::parse_config(
      R"({"system": {"kind": "long_range_xx", "n_sites": 14, "alpha": 2}, "n_sys_sites": 2,
          "betas": {"min": 0.01, "max": 500, "count": 30, "spacing": "log"},
          "h_grid": {"min": 0, "max": 4, "count": 20}, "k": 25, "m": 5, "seed": 1})");
  c.out_dir = out_dir / "smoke";
  app::validate(c);
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream log;
  app::run_sweep(c, log);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ifstream in(c.out_dir / "sweep.csv");
  std::string line;
  std::getline(in, line);  // schema
  std::getline(in, line);
  const std::vector<std::string> header = split_csv(line);
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const std::size_t ih = col("h"), ib = col("beta"), is = col("entropy");
  std::map<double, std::vector<double>> entropy_at_beta;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    entropy_at_beta[std::stod(cells[ib])].push_back(std::stod(cells[is]));
    (void)ih;
    ++rows;
  }
  const std::vector<double>& s = entropy_at_beta.rbegin()->second;
  int flat = 0, jumps = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double d = std::abs(s[i] - s[i - 1]);
    if (d <= 1e-3) ++flat;
    if (d >= 1e-2) ++jumps;
  }
  const int pairs = static_cast<int>(s.size()) - 1;
  const bool ok = rows == 600 && seconds < 1800.0 && 2 * flat >= pairs && jumps >= 2;
  return {ok, std::to_string(rows) + " rows in " + fmt("%.1f", seconds) + " s; at beta=" +
                  fmt("%g", entropy_at_beta.rbegin()->first) + " " + std::to_string(flat) + "/" +
                  std::to_string(pairs) + " flat steps, " + std::to_string(jumps) + " jumps"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"partrace acceptance suite"};
  std::vector<std::string> only;
  std::string out_dir = "acceptance_out";
  cli.add_option("--criterion", only, "Run only the named criteria");
  cli.add_option("--out-dir", out_dir, "Directory for the smoke-run CSVs");
  CLI11_PARSE(cli, argc, argv);

  const std::vector<Criterion> criteria{
      {"oracle_equivalence", oracle_equivalence},
      {"variance_bound_profile", variance_bound_profile},
      {"quadrature_exactness", quadrature_exactness},
      {"unbiasedness", unbiasedness},
      {"exponential_suppression", exponential_suppression},
      {"sqrt_m_scaling", sqrt_m_scaling},
      {"cost_accounting", cost_accounting},
      {"beta_limits", beta_limits},
      {"smoke_n14", [&] { return smoke_run(out_dir); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

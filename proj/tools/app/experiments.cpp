#include "experiments.hpp"

#include "csv.hpp"

#include "partrace/errors.hpp"
#include "partrace/jackknife.hpp"
#include "partrace/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace partrace::app {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<std::string> sweep_columns() {
  return {"system", "n_sites", "n_sys_sites", "k", "m", "t", "seed", "distribution", "h", "beta",
          "entropy", "entropy_stderr", "ergotropy", "ergotropy_stderr", "internal_energy",
          "internal_energy_stderr", "min_eigenvalue", "clamped_mass", "spectrum_clamped", "log_scale",
          "log_trace", "asymmetry", "matvecs_eig", "matvecs_pilot", "matvecs_estimator"};
}

}  // namespace

SolvedSystem solve_system(const Config& config, double h, Eigen::Index k) {
  SolvedSystem sys{build_spec(config, h), LinOp(), BipartiteSplit(config.n_sites(), config.n_sys_sites),
                   {}, {}, 0, 0.0};
  HamiltonianOptions hopts;
  hopts.max_sites = config.max_n;
  sys.h = build_hamiltonian(sys.spec, hopts);
  sys.h_s = subsystem_hamiltonian(sys.spec, sys.split);
  EigenSolverOptions eopts;
  eopts.tol = config.eig_tol;
  const auto start = Clock::now();
  const std::uint64_t before = sys.h.applies();
  sys.basis = lowest_eigenpairs(sys.h, k, eopts);
  sys.eig_matvecs = sys.h.applies() - before;
  sys.eig_ms = ms_since(start);
  if (config.fault_injection == "corrupt_basis" && sys.basis.size() > 0) {
    if (sys.basis.size() > 1) {
      sys.basis.q.col(0) += 0.5 * sys.basis.q.col(1);
    } else {
      sys.basis.q.col(0) *= 1.5;
    }
  }
  return sys;
}

Observables observables_of(const Eigen::MatrixXd& rho, const std::vector<Eigen::MatrixXd>& replicates,
                           const Eigen::MatrixXd& h_s) {
  Observables out;
  const DensityMatrix dm(rho);
  out.entropy = von_neumann_entropy(dm);
  out.ergotropy = ergotropy(dm, h_s);
  out.energy = internal_energy(dm, h_s);
  out.min_eigenvalue = dm.min_raw_eigenvalue();
  out.clamped_mass = dm.clamped_mass();
  out.spectrum = entanglement_spectrum(dm);
  if (replicates.size() >= 2) {
    std::vector<double> s, e, u;
    for (const auto& r : replicates) {
      const DensityMatrix d(r);
      s.push_back(von_neumann_entropy(d));
      e.push_back(ergotropy(d, h_s));
      u.push_back(internal_energy(d, h_s));
    }
    out.entropy_se = jackknife_from_replicates(std::span<const double>(s));
    out.ergotropy_se = jackknife_from_replicates(std::span<const double>(e));
    out.energy_se = jackknife_from_replicates(std::span<const double>(u));
  } else if (replicates.size() == 1) {
    out.entropy_se = out.ergotropy_se = out.energy_se = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

ProbeConfig probe_config(const Config& config, std::uint64_t seed, Eigen::Index m) {
  ProbeConfig p;
  p.m = m;
  p.distribution = config.distribution;
  p.seed = seed;
  p.parallel_width = config.threads;
  return p;
}

ThermalOptions thermal_options(const Config& config) {
  ThermalOptions t;
  t.depth.rel_tol = config.rel_tol;
  t.depth.max_depth = config.max_depth;
  t.reorthogonalize = config.reorthogonalize;
  return t;
}

std::vector<SweepPoint> sweep_points(const Config& config, const SolvedSystem& sys,
                                     const ProbeConfig& probes, double* thermal_ms) {
  const std::vector<double> finite = config.finite_betas();
  ThermalResult thermal;
  const auto start = Clock::now();
  if (!finite.empty()) {
    thermal = estimate_thermal(sys.h, sys.split, sys.basis, finite, probes, thermal_options(config));
  }
  if (thermal_ms) *thermal_ms = ms_since(start);

  std::vector<SweepPoint> points;
  std::size_t next_finite = 0;
  for (double beta : config.betas) {
    SweepPoint p;
    p.h = sys.spec.field_h;
    p.beta = beta;
    p.k = sys.basis.size();
    p.seed = probes.seed;
    p.matvecs_eig = sys.eig_matvecs;
    if (std::isinf(beta)) {
      const GroundStateRho g = ground_state_rho(sys.basis, sys.split);
      p.rho = g.rho;
      p.rho_se = Eigen::MatrixXd::Zero(p.rho.rows(), p.rho.cols());
      p.log_scale = std::numeric_limits<double>::quiet_NaN();
      p.log_trace = std::numeric_limits<double>::quiet_NaN();
      p.obs = observables_of(p.rho, {}, sys.h_s);
    } else {
      const PartialTraceEstimate& est = thermal.estimates[next_finite++];
      p.rho = est.rho();
      p.rho_se = est.rho_std_error();
      p.log_scale = est.mean.log_scale;
      p.log_trace = est.mean.log_abs_trace();
      p.asymmetry = est.asymmetry;
      p.m = est.m;
      p.t = thermal.depth;
      p.matvecs_pilot = thermal.pilot_matvecs;
      p.matvecs_estimator = thermal.estimator_matvecs;
      const std::vector<Eigen::MatrixXd> loo =
          est.m >= 2 ? est.leave_one_out_rho() : std::vector<Eigen::MatrixXd>{};
      p.obs = observables_of(p.rho, loo, sys.h_s);
      if (est.m < 2) p.obs.entropy_se = p.obs.ergotropy_se = p.obs.energy_se = std::numeric_limits<double>::quiet_NaN();
    }
    points.push_back(std::move(p));
  }
  return points;
}

void run_sweep(const Config& config, std::ostream& log) {
  const auto& out = config.out_dir;
  CsvWriter sweep(out / "sweep.csv", "sweep", 1, sweep_columns());
  CsvWriter rho(out / "rho.csv", "rho", 1,
                {"h", "beta", "k", "m", "t", "seed", "i", "j", "value", "stderr", "log_scale"});
  CsvWriter spectrum(out / "spectrum.csv", "spectrum", 1, {"h", "beta", "index", "level"});
  CsvWriter timing(out / "timing.csv", "timing", 1, {"h", "eig_ms", "thermal_ms", "matvecs_total"});

  const ProbeConfig probes = probe_config(config, config.seed, config.m);
  for (double h : config.h_values) {
    const SolvedSystem sys = solve_system(config, h, config.k);
    double thermal_ms = 0.0;
    const std::vector<SweepPoint> points = sweep_points(config, sys, probes, &thermal_ms);
    for (const SweepPoint& p : points) {
      sweep.row() << config.system.kind << config.n_sites() << config.n_sys_sites << p.k << p.m << p.t
                  << p.seed << to_string(config.distribution) << p.h << p.beta << p.obs.entropy
                  << p.obs.entropy_se << p.obs.ergotropy << p.obs.ergotropy_se << p.obs.energy
                  << p.obs.energy_se << p.obs.min_eigenvalue << p.obs.clamped_mass
                  << p.obs.spectrum.clamped << p.log_scale << p.log_trace << p.asymmetry << p.matvecs_eig
                  << p.matvecs_pilot << p.matvecs_estimator;
      for (Eigen::Index i = 0; i < p.rho.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.rho.cols(); ++j) {
          rho.row() << p.h << p.beta << p.k << p.m << p.t << p.seed << i << j << p.rho(i, j) << p.rho_se(i, j)
                    << p.log_scale;
        }
      }
      for (std::size_t i = 0; i < p.obs.spectrum.levels.size(); ++i) {
        spectrum.row() << p.h << p.beta << static_cast<long>(i) << p.obs.spectrum.levels[i];
      }
    }
    timing.row() << h << sys.eig_ms << thermal_ms << static_cast<unsigned long long>(sys.h.applies());
    log << "h=" << h << ": " << points.size() << " beta points, eig " << std::fixed << std::setprecision(1)
        << sys.eig_ms << " ms, thermal " << thermal_ms << " ms" << std::defaultfloat << std::setprecision(6)
        << '\n';
  }
}

VarianceStudy variance_study(const Config& config) {
  VarianceStudy study;
  const std::vector<double> betas = config.finite_betas();
  if (betas.empty()) throw ConfigError("config /betas: the variance study needs finite betas");
  const double h = config.h_values.front();
  for (Eigen::Index k : config.ks) {
    const SolvedSystem sys = solve_system(config, h, k);
    for (Eigen::Index m : config.ms) {
      // rhos[b][r]
      std::vector<std::vector<Eigen::MatrixXd>> rhos(betas.size());
      std::vector<std::vector<double>> jk2(betas.size());
      for (int run = 0; run < config.runs; ++run) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(run);
        const ThermalResult tr =
            estimate_thermal(sys.h, sys.split, sys.basis, betas, probe_config(config, seed, m), thermal_options(config));
        for (std::size_t b = 0; b < betas.size(); ++b) {
          const PartialTraceEstimate& est = tr.estimates[b];
          Eigen::MatrixXd rho = est.rho();
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rho, Eigen::EigenvaluesOnly);
          study.runs.push_back({k, m, run, seed, betas[b], eig.eigenvalues()});
          if (m >= 2) jk2[b].push_back(est.rho_std_error().squaredNorm());
          rhos[b].push_back(std::move(rho));
        }
      }
      for (std::size_t b = 0; b < betas.size(); ++b) {
        SpreadRow row;
        row.k = k;
        row.m = m;
        row.beta = betas[b];
        row.runs = config.runs;
        const auto& rs = rhos[b];
        if (rs.size() >= 2) {
          Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(rs[0].rows(), rs[0].cols());
          for (const auto& r : rs) avg += r;
          avg /= static_cast<double>(rs.size());
          double ss = 0.0;
          for (const auto& r : rs) ss += (r - avg).squaredNorm();
          row.empirical_spread = std::sqrt(ss / static_cast<double>(rs.size() - 1));
        } else {
          row.empirical_spread = std::numeric_limits<double>::quiet_NaN();
        }
        if (!jk2[b].empty()) {
          double acc = 0.0;
          for (double v : jk2[b]) acc += v;
          row.jackknife_prediction = std::sqrt(acc / static_cast<double>(jk2[b].size()));
        } else {
          row.jackknife_prediction = std::numeric_limits<double>::quiet_NaN();
        }
        study.spread.push_back(row);
      }
    }
  }
  return study;
}

void run_variance_study(const Config& config, std::ostream& log) {
  const VarianceStudy study = variance_study(config);
  CsvWriter runs(config.out_dir / "variance_runs.csv", "variance_runs", 1,
                 {"k", "m", "run", "seed", "beta", "index", "eigenvalue"});
  for (const RunRow& r : study.runs) {
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) {
      runs.row() << r.k << r.m << r.run << r.seed << r.beta << i << r.eigenvalues(i);
    }
  }
  CsvWriter spread(config.out_dir / "variance_spread.csv", "variance_spread", 1,
                   {"k", "m", "beta", "runs", "empirical_spread", "jackknife_prediction"});
  for (const SpreadRow& s : study.spread) {
    spread.row() << s.k << s.m << s.beta << s.runs << s.empirical_spread << s.jackknife_prediction;
  }
  log << "variance study: " << study.spread.size() << " (k, m, beta) cells, " << config.runs
      << " runs each\n";
}

namespace {

// max_ij |a - b| / (4 se + floor)
double sigma_ratio(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& se) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double allowed = 4.0 * (std::isnan(se(i, j)) ? 0.0 : se(i, j)) + 1e-12;
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / allowed);
    }
  }
  return worst;
}

std::string beta_label(double beta) {
  std::ostringstream s;
  s << beta;
  return s.str();
}

}  // namespace

std::vector<CheckResult> validate_against_oracle(const Config& config, std::ostream& log) {
  if (config.n_sites() > 12) {
    throw ConfigError("config /system: validation needs n_sites <= 12 for the dense oracle");
  }
  std::vector<CheckResult> checks;
  auto add = [&](std::string name, double metric, double threshold) {
    checks.push_back({std::move(name), metric <= threshold, metric, threshold});
  };

  for (double h : config.h_values) {
    const std::string at = "h=" + beta_label(h) + " ";
    const SolvedSystem sys = solve_system(config, h, config.k);
    const DenseSpectrum oracle(sys.h, sys.split);
    const ProbeConfig probes = probe_config(config, config.seed, config.m);

    for (const SweepPoint& p : sweep_points(config, sys, probes)) {
      const Eigen::MatrixXd exact = oracle.reduced_density(p.beta);
      if (std::isinf(p.beta)) {
        if (oracle.ground_degeneracy() > sys.basis.size()) {
          log << "note: " << at << "ground space is larger than k; ground-state check skipped\n";
          continue;
        }
        add(at + "ground state rho* Frobenius", (p.rho - exact).norm(), 1e-8);
      } else if (p.m >= 2) {
        add(at + "thermal beta=" + beta_label(p.beta) + " rho* |err|/(4 stderr)", sigma_ratio(p.rho, exact, p.rho_se), 1.0);
      }
    }

    const Eigen::Index d_t = sys.split.d_t();
    if (d_t <= 1024 && !config.finite_betas().empty()) {
      const SolvedSystem full = solve_system(config, h, d_t);
      const ThermalResult tr = estimate_thermal(full.h, full.split, full.basis, config.finite_betas(),
                                                probe_config(config, config.seed, std::max<Eigen::Index>(config.m, 2)),
                                                thermal_options(config));
      double worst = 0.0;
      for (const auto& est : tr.estimates) {
        worst = std::max(worst, (est.rho() - oracle.reduced_density(est.beta)).norm());
      }
      add(at + "full deflation k=d_t rho* Frobenius", worst, 1e-10);
    }

    const std::vector<double> finite = config.finite_betas();
    if (!finite.empty() && config.m >= 2) {
      const double beta = finite[finite.size() / 2];
      const LogScaledMatrix thermal = dense_thermal(sys.h, beta).state;
      const LinOp a = LinOp::from_dense(thermal.mat);
      const Eigen::MatrixXd target = dense_partial_trace(thermal.mat, sys.split);
      const std::string tag = " on exp(-" + beta_label(beta) + " H) |err|/(4 stderr)";

      const PartialTraceEstimate plain = estimate_plain(a, sys.split, probes);
      add(at + "plain estimator" + tag, sigma_ratio(plain.value(), target, plain.std_error * std::exp(plain.mean.log_scale)), 1.0);

      if (sys.basis.size() > 0) {
        const PartialTraceEstimate defl = estimate_deflated_dense(a, sys.basis.q, sys.split, probes);
        add(at + "deflated estimator" + tag, sigma_ratio(defl.value(), target, defl.std_error * std::exp(defl.mean.log_scale)), 1.0);

        const RangeResult range = randomized_range(a, sys.basis.size(), config.seed);
        const PartialTraceEstimate gen = estimate_general_q(a, range.q, sys.split, probes);
        add(at + "general-Q estimator" + tag, sigma_ratio(gen.value(), target, gen.std_error * std::exp(gen.mean.log_scale)), 1.0);
      }
    }
  }
  return checks;
}

bool run_validate(const Config& config, std::ostream& log) {
  const std::vector<CheckResult> checks = validate_against_oracle(config, log);
  CsvWriter csv(config.out_dir / "validate.csv", "validate", 1, {"check", "passed", "metric", "threshold"});
  bool ok = true;
  for (const CheckResult& c : checks) {
    csv.row() << c.name << (c.passed ? 1 : 0) << c.metric << c.threshold;
    log << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.metric << " (limit " << c.threshold << ")\n";
    ok = ok && c.passed;
  }
  log << (ok ? "all " : "some ") << "checks " << (ok ? "passed" : "FAILED") << " (" << checks.size() << ")\n";
  return ok;
}

std::vector<double> chebyshev_nodes(double a, double b, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = n; i >= 1; --i) {
    const double x = std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * n));
    out.push_back(0.5 * (a + b) + 0.5 * (b - a) * x);
  }
  return out;
}

namespace {

struct Bisector {
  const std::function<double(double)>& f;
  double tol;
  double jump_tol;
  int max_depth;
  std::vector<double> boundaries;
  bool depth_limited = false;

  void locate(double a, double fa, double b, double fb, int depth) {
    if (std::abs(fa - fb) <= jump_tol) return;
    if (b - a <= tol) {
      boundaries.push_back(0.5 * (a + b));
      return;
    }
    if (depth >= max_depth) {
      depth_limited = true;
      boundaries.push_back(0.5 * (a + b));
      return;
    }
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    locate(a, fa, mid, fm, depth + 1);
    locate(mid, fm, b, fb, depth + 1);
  }
};

}  // namespace

BisectResult bisect_plateaus(const std::function<double(double)>& f, double a, double b, int coarse,
                             double tol, double jump_tol, int max_depth, int nodes_per_interval) {
  if (!(b > a) || coarse < 2) throw std::invalid_argument("bisect_plateaus: bad interval or grid");
  Bisector bis{f, tol, jump_tol, max_depth, {}, false};
  double prev_x = a;
  double prev_f = f(a);
  for (int i = 1; i < coarse; ++i) {
    const double x = i == coarse - 1 ? b : a + (b - a) * i / (coarse - 1);
    const double fx = f(x);
    bis.locate(prev_x, prev_f, x, fx, 0);
    prev_x = x;
    prev_f = fx;
  }
  // A degenerate point between two plateaus shows up as two jumps one
  // bracket apart; they are one boundary.
  BisectResult out;
  for (double x : bis.boundaries) {
    if (!out.boundaries.empty() && x - out.boundaries.back() <= 2.0 * tol) {
      out.boundaries.back() = 0.5 * (out.boundaries.back() + x);
    } else {
      out.boundaries.push_back(x);
    }
  }
  out.depth_limited = bis.depth_limited;
  std::vector<double> edges{a};
  edges.insert(edges.end(), out.boundaries.begin(), out.boundaries.end());
  edges.push_back(b);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    out.intervals.emplace_back(edges[i], edges[i + 1]);
    out.nodes.push_back(chebyshev_nodes(edges[i], edges[i + 1], nodes_per_interval));
  }
  return out;
}

double ground_state_entropy(const Config& config, double h) {
  const SolvedSystem sys = solve_system(config, h, std::max<Eigen::Index>(config.k, 1));
  const GroundStateRho g = ground_state_rho(sys.basis, sys.split);
  return von_neumann_entropy(DensityMatrix(g.rho));
}

BisectResult run_bisect_h(const Config& config, std::ostream& log) {
  const BisectResult res = bisect_plateaus([&](double h) { return ground_state_entropy(config, h); },
                                           config.h_min, config.h_max, config.coarse_points,
                                           config.bisect_tol, config.jump_tol, config.max_bisect_depth,
                                           config.nodes_per_interval);
  CsvWriter csv(config.out_dir / "bisect.csv", "bisect", 1, {"kind", "interval", "h"});
  for (std::size_t i = 0; i < res.boundaries.size(); ++i) {
    csv.row() << "boundary" << static_cast<long>(i) << res.boundaries[i];
  }
  for (std::size_t i = 0; i < res.nodes.size(); ++i) {
    for (double x : res.nodes[i]) csv.row() << "node" << static_cast<long>(i) << x;
  }
  log << "bisect-h: " << res.boundaries.size() << " boundaries, " << res.intervals.size() << " intervals\n";
  if (res.depth_limited) log << "warning: maximum bisection depth reached; boundaries may be coarse\n";
  return res;
}

void run_variance_profile(const Config& config, std::ostream& log) {
  if (config.n_sites() > 12) {
    throw ConfigError("config /system: variance-profile needs n_sites <= 12 for the dense oracle");
  }
  CsvWriter csv(config.out_dir / "variance_profile.csv", "variance_profile", 1,
                {"h", "beta", "k", "bound", "log_bound"});
  const std::vector<double> betas = config.finite_betas();
  for (double h : config.h_values) {
    const LinOp op = build_hamiltonian(build_spec(config, h));
    for (const VarianceProfileRow& r : variance_profile(op, betas, config.ks)) {
      csv.row() << h << r.beta << r.k << r.bound << r.log_bound;
    }
  }
  log << "variance-profile: " << config.h_values.size() * betas.size() * config.ks.size() << " rows\n";
}

}  // namespace partrace::app

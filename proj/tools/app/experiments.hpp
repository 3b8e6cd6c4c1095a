#pragma once

#include "config.hpp"

#include "partrace/krylov.hpp"
#include "partrace/observables.hpp"
#include "partrace/ptrace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace partrace::app {

/// Hamiltonian, split and deflation basis for one field value.
struct SolvedSystem {
  CouplingSpec spec;
  LinOp h;
  BipartiteSplit split;
  DeflationBasis basis;
  Eigen::MatrixXd h_s;
  std::uint64_t eig_matvecs = 0;
  double eig_ms = 0.0;
};

/// Builds H for field h and its k lowest eigenpairs. Applies the
/// configured fault injection to the basis.
SolvedSystem solve_system(const Config& config, double h, Eigen::Index k);

struct Observables {
  double entropy = 0.0, entropy_se = 0.0;
  double ergotropy = 0.0, ergotropy_se = 0.0;
  double energy = 0.0, energy_se = 0.0;
  double min_eigenvalue = 0.0;
  double clamped_mass = 0.0;
  EntanglementSpectrum spectrum;
};

/// Observables of rho with jackknife errors from leave-one-out replicates
/// (errors are zero when no replicates are given).
Observables observables_of(const Eigen::MatrixXd& rho, const std::vector<Eigen::MatrixXd>& replicates,
                           const Eigen::MatrixXd& h_s);

struct SweepPoint {
  double h = 0.0;
  double beta = 0.0;
  Eigen::MatrixXd rho;
  Eigen::MatrixXd rho_se;
  double log_scale = 0.0;
  double log_trace = 0.0;
  double asymmetry = 0.0;
  Eigen::Index k = 0, m = 0, t = 0;
  std::uint64_t seed = 0;
  std::uint64_t matvecs_eig = 0, matvecs_pilot = 0, matvecs_estimator = 0;
  Observables obs;
};

ProbeConfig probe_config(const Config& config, std::uint64_t seed, Eigen::Index m);
ThermalOptions thermal_options(const Config& config);

/// Every configured beta (including +inf) at one field value.
std::vector<SweepPoint> sweep_points(const Config& config, const SolvedSystem& sys,
                                     const ProbeConfig& probes, double* thermal_ms = nullptr);

/// Writes sweep.csv, rho.csv, spectrum.csv and timing.csv into out_dir.
void run_sweep(const Config& config, std::ostream& log);

struct SpreadRow {
  Eigen::Index k = 0, m = 0;
  double beta = 0.0;
  int runs = 0;
  /// Frobenius norm of the entrywise standard deviation of rho over runs.
  double empirical_spread = 0.0;
  /// Root mean over runs of the squared Frobenius jackknife error.
  double jackknife_prediction = 0.0;
};

struct RunRow {
  Eigen::Index k = 0, m = 0;
  int run = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;
  Eigen::VectorXd eigenvalues;  // of rho, ascending
};

struct VarianceStudy {
  std::vector<RunRow> runs;
  std::vector<SpreadRow> spread;
};

/// `runs` independent runs (seeds seed, seed+1, ...) per (k, m) cell at the
/// first h value, over the finite betas.
VarianceStudy variance_study(const Config& config);
/// Writes variance_runs.csv and variance_spread.csv.
void run_variance_study(const Config& config, std::ostream& log);

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;
  double threshold = 0.0;
};

/// Every estimator path against the dense oracle (n_sites <= 12).
std::vector<CheckResult> validate_against_oracle(const Config& config, std::ostream& log);
/// Prints the table, writes validate.csv; returns true if every check passed.
bool run_validate(const Config& config, std::ostream& log);

/// n Chebyshev nodes of the first kind mapped to [a, b], ascending.
std::vector<double> chebyshev_nodes(double a, double b, int n);

struct BisectResult {
  std::vector<double> boundaries;
  std::vector<std::pair<double, double>> intervals;
  std::vector<std::vector<double>> nodes;
  bool depth_limited = false;
};

/// Locates the jumps of a piecewise-constant f on [a, b]: a coarse scan,
/// then bisection of every coarse cell whose endpoint values differ by more
/// than jump_tol, until the bracket is below tol. Places Chebyshev nodes in
/// each plateau interval.
BisectResult bisect_plateaus(const std::function<double(double)>& f, double a, double b, int coarse,
                             double tol, double jump_tol, int max_depth, int nodes_per_interval);

/// Ground-state entropy at field h.
double ground_state_entropy(const Config& config, double h);

/// Writes bisect.csv; returns the result (depth_limited signals a warning).
BisectResult run_bisect_h(const Config& config, std::ostream& log);

/// Writes variance_profile.csv for every h, finite beta and k in ks.
void run_variance_profile(const Config& config, std::ostream& log);

}  // namespace partrace::app

#pragma once

#include "partrace/probes.hpp"
#include "partrace/spinsys.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace partrace::app {

/// Invalid configuration; the message names the offending JSON path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  std::string kind = "chain_xx";  // chain_xx | long_range_xx | kagome_strip | custom
  int n_sites = 8;
  double j = 1.0;
  bool periodic = false;
  double alpha = 1.0;  // +inf allowed
  int n_cells = 1;
  double j0 = 1.0, j1 = 1.0, j2 = 1.0;
  std::filesystem::path coupling_file;
};

struct Config {
  SystemConfig system;
  int n_sys_sites = 2;
  /// May contain +inf for the ground-state path.
  std::vector<double> betas{0.0, 1.0, 10.0};
  std::vector<double> h_values{0.0};

  Eigen::Index k = 0;
  Eigen::Index m = 10;
  std::uint64_t seed = 1;
  ProbeDistribution distribution = ProbeDistribution::kGaussian;
  double rel_tol = 1e-10;
  Eigen::Index max_depth = 512;
  double eig_tol = 1e-13;
  bool reorthogonalize = false;
  int threads = 1;
  std::filesystem::path out_dir = "out";
  int max_n = 24;

  // variance-study
  std::vector<Eigen::Index> ks{0};
  std::vector<Eigen::Index> ms{10};
  int runs = 10;

  // bisect-h
  double h_min = 0.0;
  double h_max = 1.0;
  int coarse_points = 20;
  double bisect_tol = 1e-6;
  double jump_tol = 1e-6;
  int nodes_per_interval = 5;
  int max_bisect_depth = 40;

  /// Test hook; "corrupt_basis" breaks the orthonormality of Q.
  std::string fault_injection;

  /// Number of sites of the configured system.
  int n_sites() const;
  std::vector<double> finite_betas() const;
  bool has_infinite_beta() const;
};

/// Parses JSON text. Unknown keys and wrong types throw ConfigError naming
/// the JSON path (and the line for syntax errors). Cross-field checks are
/// left to validate() so command-line overrides can be applied first.
Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// Range checks that depend on several fields (and on max_n).
void validate(const Config& config);

/// Coupling specification for field h.
CouplingSpec build_spec(const Config& config, double h);

}  // namespace partrace::app

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace partrace {

enum class ProbeDistribution {
  /// iid standard normal entries.
  kGaussian,
  /// Uniform on the sphere of radius sqrt(d_b).
  kSphere,
};

std::string to_string(ProbeDistribution d);
/// "gaussian" or "sphere"; throws std::invalid_argument otherwise.
ProbeDistribution parse_distribution(std::string_view name);

struct ProbeConfig {
  Eigen::Index m = 10;
  ProbeDistribution distribution = ProbeDistribution::kGaussian;
  std::uint64_t seed = 1;
  /// Number of worker threads; results do not depend on it.
  int parallel_width = 1;

  void validate() const;
};

/// Probe vector v of length d_b for sample `index`. Depends only on
/// (seed, index, distribution), so E[v v^T] = I and draws are reproducible.
Eigen::VectorXd draw_probe(const ProbeConfig& config, Eigen::Index d_b, Eigen::Index index);

/// Y = I_{d_s} (x) v, a (d_s d_b) x d_s block whose column i holds v in chunk i.
Eigen::MatrixXd probe_block(const Eigen::VectorXd& v, Eigen::Index d_s);

/// Y^T X for Y = I (x) v, without forming Y.
Eigen::MatrixXd probe_contract(const Eigen::VectorXd& v, const Eigen::MatrixXd& x);

}  // namespace partrace

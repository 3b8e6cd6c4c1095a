#include "partrace/probes.hpp"

#include "partrace/random.hpp"

#include <cmath>
#include <stdexcept>

namespace partrace {

std::string to_string(ProbeDistribution d) {
  return d == ProbeDistribution::kSphere ? "sphere" : "gaussian";
}

ProbeDistribution parse_distribution(std::string_view name) {
  if (name == "gaussian") return ProbeDistribution::kGaussian;
  if (name == "sphere") return ProbeDistribution::kSphere;
  throw std::invalid_argument("unknown probe distribution '" + std::string(name) +
                              "' (expected gaussian or sphere)");
}

void ProbeConfig::validate() const {
  if (m < 1) throw std::invalid_argument("ProbeConfig: m must be at least 1");
  if (parallel_width < 1) throw std::invalid_argument("ProbeConfig: parallel_width must be at least 1");
}

Eigen::VectorXd draw_probe(const ProbeConfig& config, Eigen::Index d_b, Eigen::Index index) {
  if (d_b < 1) throw std::invalid_argument("draw_probe: d_b must be positive");
  auto rng = make_stream(config.seed, static_cast<std::uint64_t>(index));
  Eigen::VectorXd v = gaussian_matrix(d_b, 1, rng);
  if (config.distribution == ProbeDistribution::kSphere) {
    double nrm = v.norm();
    while (nrm == 0.0) {
      v = gaussian_matrix(d_b, 1, rng);
      nrm = v.norm();
    }
    v *= std::sqrt(static_cast<double>(d_b)) / nrm;
  }
  return v;
}

Eigen::MatrixXd probe_block(const Eigen::VectorXd& v, Eigen::Index d_s) {
  const Eigen::Index d_b = v.size();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(d_s * d_b, d_s);
  for (Eigen::Index i = 0; i < d_s; ++i) y.block(i * d_b, i, d_b, 1) = v;
  return y;
}

Eigen::MatrixXd probe_contract(const Eigen::VectorXd& v, const Eigen::MatrixXd& x) {
  const Eigen::Index d_b = v.size();
  if (d_b == 0 || x.rows() % d_b != 0) throw std::invalid_argument("probe_contract: shape mismatch");
  const Eigen::Index d_s = x.rows() / d_b;
  Eigen::MatrixXd out(d_s, x.cols());
  for (Eigen::Index i = 0; i < d_s; ++i) out.row(i) = v.transpose() * x.middleRows(i * d_b, d_b);
  return out;
}

}  // namespace partrace

#include "partrace/jackknife.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace partrace {

std::vector<Eigen::MatrixXd> leave_one_out_means(std::span<const Eigen::MatrixXd> samples) {
  const std::size_t m = samples.size();
  if (m < 2) throw std::invalid_argument("jackknife: at least two samples are required");
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(samples[0].rows(), samples[0].cols());
  for (const auto& s : samples) {
    if (s.rows() != total.rows() || s.cols() != total.cols()) {
      throw std::invalid_argument("jackknife: samples differ in shape");
    }
    total += s;
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(m);
  for (const auto& s : samples) out.push_back((total - s) / static_cast<double>(m - 1));
  return out;
}

Eigen::MatrixXd jackknife_from_replicates(std::span<const Eigen::MatrixXd> replicates) {
  const std::size_t m = replicates.size();
  if (m == 0) throw std::invalid_argument("jackknife: no replicates");
  const Eigen::Index rows = replicates[0].rows();
  const Eigen::Index cols = replicates[0].cols();
  if (m < 2) return Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& r : replicates) avg += r;
  avg /= static_cast<double>(m);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& r : replicates) ss += (r - avg).cwiseAbs2();
  return (ss * (static_cast<double>(m - 1) / static_cast<double>(m))).cwiseSqrt();
}

double jackknife_from_replicates(std::span<const double> replicates) {
  const std::size_t m = replicates.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  double avg = 0.0;
  for (double r : replicates) avg += r;
  avg /= static_cast<double>(m);
  double ss = 0.0;
  for (double r : replicates) ss += (r - avg) * (r - avg);
  return std::sqrt(ss * (static_cast<double>(m - 1) / static_cast<double>(m)));
}

Eigen::MatrixXd jackknife_stderr(std::span<const Eigen::MatrixXd> samples) {
  const auto loo = leave_one_out_means(samples);
  return jackknife_from_replicates(std::span<const Eigen::MatrixXd>(loo));
}

double jackknife_stderr(std::span<const double> samples) {
  const std::size_t m = samples.size();
  if (m < 2) throw std::invalid_argument("jackknife: at least two samples are required");
  double total = 0.0;
  for (double s : samples) total += s;
  std::vector<double> loo;
  loo.reserve(m);
  for (double s : samples) loo.push_back((total - s) / static_cast<double>(m - 1));
  return jackknife_from_replicates(std::span<const double>(loo));
}

}  // namespace partrace

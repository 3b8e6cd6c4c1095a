#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace partrace {

/// Entrywise jackknife standard error of the sample mean:
///   stderr^2 = (m-1)/m * sum_j (mean_{-j} - mean)^2.
/// Throws std::invalid_argument for m < 2.
Eigen::MatrixXd jackknife_stderr(std::span<const Eigen::MatrixXd> samples);
double jackknife_stderr(std::span<const double> samples);

/// Leave-one-out means mean_{-j}, j = 0..m-1.
std::vector<Eigen::MatrixXd> leave_one_out_means(std::span<const Eigen::MatrixXd> samples);

/// Standard error from leave-one-out values of an arbitrary statistic,
/// sqrt((m-1)/m * sum_j (s_j - mean(s))^2). NaN for fewer than two values.
double jackknife_from_replicates(std::span<const double> replicates);
Eigen::MatrixXd jackknife_from_replicates(std::span<const Eigen::MatrixXd> replicates);

}  // namespace partrace

#include "partrace/log_scaled.hpp"

#include "partrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace partrace {

LogScaledMatrix::LogScaledMatrix(Eigen::MatrixXd m, double scale) : mat(std::move(m)), log_scale(scale) {
  if (!mat.allFinite() || !std::isfinite(log_scale)) {
    throw std::invalid_argument("LogScaledMatrix: non-finite entries or scale");
  }
  normalize();
}

void LogScaledMatrix::normalize() {
  const double nrm = mat.stableNorm();
  if (nrm == 0.0) {
    log_scale = 0.0;
    return;
  }
  int e = 0;
  std::frexp(nrm, &e);
  if (e == 0) return;
  mat = mat.unaryExpr([e](double x) { return std::ldexp(x, -e); });
  log_scale += e * std::numbers::ln2;
}

Eigen::MatrixXd LogScaledMatrix::at_scale(double target) const {
  if (mat.size() == 0) return mat;
  return mat * std::exp(log_scale - target);
}

double LogScaledMatrix::log_abs_trace() const {
  const double tr = mat.trace();
  if (tr == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(tr)) + log_scale;
}

Eigen::MatrixXd LogScaledMatrix::trace_normalized() const {
  const double tr = mat.trace();
  if (tr == 0.0 || !std::isfinite(tr)) throw DomainError("trace normalization of a traceless matrix", tr);
  return mat / tr;
}

LogScaledMatrix& LogScaledMatrix::operator+=(const LogScaledMatrix& other) {
  if (other.mat.size() == 0) return *this;
  if (mat.size() == 0) return *this = other;
  if (mat.rows() != other.mat.rows() || mat.cols() != other.mat.cols()) {
    throw std::invalid_argument("LogScaledMatrix: shape mismatch in addition");
  }
  if (other.is_zero()) return *this;
  if (is_zero()) return *this = other;
  const double common = std::max(log_scale, other.log_scale);
  mat = at_scale(common) + other.at_scale(common);
  log_scale = common;
  normalize();
  return *this;
}

LogScaledMatrix& LogScaledMatrix::operator*=(double factor) {
  if (!std::isfinite(factor)) throw std::invalid_argument("LogScaledMatrix: non-finite factor");
  mat *= factor;
  normalize();
  return *this;
}

LogScaledMatrix sum(std::span<const LogScaledMatrix> terms) {
  if (terms.empty()) throw std::invalid_argument("sum: no terms");
  double common = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    if (!t.is_zero()) common = std::max(common, t.log_scale);
  }
  if (!std::isfinite(common)) return LogScaledMatrix(Eigen::MatrixXd::Zero(terms[0].mat.rows(), terms[0].mat.cols()), 0.0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(terms[0].mat.rows(), terms[0].mat.cols());
  for (const auto& t : terms) {
    if (t.mat.rows() != acc.rows() || t.mat.cols() != acc.cols()) {
      throw std::invalid_argument("sum: shape mismatch");
    }
    if (!t.is_zero()) acc += t.at_scale(common);
  }
  return LogScaledMatrix(std::move(acc), common);
}

LogScaledMatrix mean(std::span<const LogScaledMatrix> terms) {
  LogScaledMatrix s = sum(terms);
  s.mat /= static_cast<double>(terms.size());
  s.normalize();
  return s;
}

}  // namespace partrace

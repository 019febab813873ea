#pragma once

#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Dense>

namespace pmmf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Matrices and vectors whose entries are natural logs; -inf encodes an exact zero.
using LogMatrix = Eigen::MatrixXd;
using LogVector = Eigen::VectorXd;

inline bool is_positive_log(double v) { return v > kNegInf; }

/// log(exp(a) + exp(b)) with max-shift.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

/// (a * b) evaluated entrywise in log space.
LogMatrix log_matmul(const LogMatrix& a, const LogMatrix& b);

/// Row vector times matrix, log space.
LogVector log_vecmat(const LogVector& v, const LogMatrix& m);

/// Matrix times column vector, log space.
LogVector log_matvec(const LogMatrix& m, const LogVector& v);

/// exp(v - logsumexp(v)); all -inf input yields an all-zero vector.
Eigen::VectorXd normalize_log(const LogVector& v);

LogMatrix to_log(const Eigen::MatrixXd& m);
LogVector to_log(const Eigen::VectorXd& v);

/// Entrywise exp mapping -inf to an exact 0 (Eigen's vectorized exp leaves a denormal).
Eigen::MatrixXd from_log(const LogMatrix& m);
Eigen::VectorXd from_log(const LogVector& v);

}  // namespace pmmf

#include "pmmf/log_math.hpp"

#include <algorithm>

namespace pmmf {

double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  if (std::isinf(hi)) return hi;
  double acc = 0.0;
  for (double v : values) {
    if (v != kNegInf) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  return log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

LogMatrix log_matmul(const LogMatrix& a, const LogMatrix& b) {
  LogMatrix out(a.rows(), b.cols());
  Eigen::VectorXd scratch(a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      for (Eigen::Index k = 0; k < a.cols(); ++k) scratch(k) = a(i, k) + b(k, j);
      out(i, j) = log_sum_exp(scratch);
    }
  }
  return out;
}

LogVector log_vecmat(const LogVector& v, const LogMatrix& m) {
  LogVector out(m.cols());
  Eigen::VectorXd scratch(m.rows());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index k = 0; k < m.rows(); ++k) scratch(k) = v(k) + m(k, j);
    out(j) = log_sum_exp(scratch);
  }
  return out;
}

LogVector log_matvec(const LogMatrix& m, const LogVector& v) {
  LogVector out(m.rows());
  Eigen::VectorXd scratch(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) scratch(k) = m(i, k) + v(k);
    out(i) = log_sum_exp(scratch);
  }
  return out;
}

Eigen::VectorXd normalize_log(const LogVector& v) {
  const double total = log_sum_exp(v);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  if (total == kNegInf) return out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != kNegInf) out(i) = std::exp(v(i) - total);
  }
  return out;
}

LogMatrix to_log(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

LogVector to_log(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

Eigen::MatrixXd from_log(const LogMatrix& m) {
  return m.unaryExpr([](double x) { return std::exp(x); });
}

Eigen::VectorXd from_log(const LogVector& v) {
  return v.unaryExpr([](double x) { return std::exp(x); });
}

}  // namespace pmmf

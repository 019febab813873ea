#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pmmf/errors.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

std::size_t ObsPoint::symbol() const {
  if (!is_symbol()) throw InvalidArgument("observation is a vector, not a symbol");
  return std::get<std::size_t>(value_);
}

const Eigen::VectorXd& ObsPoint::vec() const {
  if (is_symbol()) throw InvalidArgument("observation is a symbol, not a vector");
  return std::get<Eigen::VectorXd>(value_);
}

bool operator==(const ObsPoint& a, const ObsPoint& b) {
  if (a.is_symbol() != b.is_symbol()) return false;
  if (a.is_symbol()) return a.symbol() == b.symbol();
  const auto& u = a.vec();
  const auto& v = b.vec();
  return u.size() == v.size() && u == v;
}

ObsSeq symbols(std::initializer_list<std::size_t> values) {
  ObsSeq out;
  out.reserve(values.size());
  for (auto v : values) out.push_back(ObsPoint::symbol(v));
  return out;
}

ObsSeq symbols(std::span<const std::size_t> values) {
  ObsSeq out;
  out.reserve(values.size());
  for (auto v : values) out.push_back(ObsPoint::symbol(v));
  return out;
}

EmissionSpec EmissionSpec::categorical(std::vector<double> weights) {
  if (weights.empty()) throw InvalidArgument("categorical emission needs at least one weight");
  EmissionSpec e;
  e.kind_ = Kind::categorical;
  e.dimension_ = weights.size();
  e.log_weights_.resize(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    e.log_weights_[k] = weights[k] > 0.0 ? std::log(weights[k]) : kNegInf;
  }
  e.weights_ = std::move(weights);
  return e;
}

EmissionSpec EmissionSpec::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (mean.size() == 0 || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InvalidArgument("gaussian emission: mean/covariance shape mismatch");
  }
  EmissionSpec e;
  e.kind_ = Kind::gaussian;
  e.dimension_ = static_cast<std::size_t>(mean.size());
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  e.cov_ok_ = llt.info() == Eigen::Success;
  if (e.cov_ok_) {
    e.chol_ = llt.matrixL();
    const double log_det = 2.0 * e.chol_.diagonal().array().log().sum();
    e.log_norm_ = -0.5 * (static_cast<double>(e.dimension_) * std::log(2.0 * std::numbers::pi) + log_det);
  }
  e.mean_ = std::move(mean);
  e.cov_ = std::move(cov);
  return e;
}

EmissionSpec EmissionSpec::custom(LogDensityFn log_density, SupportFn support, SamplerFn sampler,
                                  std::size_t dimension) {
  EmissionSpec e;
  e.kind_ = Kind::custom;
  e.dimension_ = dimension;
  e.custom_density_ = std::move(log_density);
  e.custom_support_ = std::move(support);
  e.custom_sampler_ = std::move(sampler);
  return e;
}

double EmissionSpec::log_density(const ObsPoint& x) const {
  switch (kind_) {
    case Kind::categorical: {
      const auto s = x.symbol();
      return s < log_weights_.size() ? log_weights_[s] : kNegInf;
    }
    case Kind::gaussian: {
      if (!cov_ok_) throw InvalidArgument("gaussian emission: covariance is not positive definite");
      const auto& v = x.vec();
      if (static_cast<std::size_t>(v.size()) != dimension_) throw InvalidArgument("gaussian emission: dimension mismatch");
      const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(v - mean_);
      return log_norm_ - 0.5 * z.squaredNorm();
    }
    case Kind::custom:
      return custom_density_(x);
  }
  return kNegInf;
}

bool EmissionSpec::support_member(const ObsPoint& x) const {
  switch (kind_) {
    case Kind::categorical: {
      const auto s = x.symbol();
      return s < weights_.size() && weights_[s] > 0.0;
    }
    case Kind::gaussian:
      return true;
    case Kind::custom:
      return custom_support_(x);
  }
  return false;
}

ObsPoint EmissionSpec::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::categorical:
      return ObsPoint::symbol(rng.categorical(weights_));
    case Kind::gaussian: {
      Eigen::VectorXd z(static_cast<Eigen::Index>(dimension_));
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
      return ObsPoint::vector(mean_ + chol_ * z);
    }
    case Kind::custom:
      return custom_sampler_(rng);
  }
  return {};
}

namespace {

// Composite Simpson rule of exp(log_density) over a box, d <= 2.
double simpson_integral(const EmissionSpec& e, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        int intervals) {
  auto weight = [intervals](int k) { return (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0); };
  if (lo.size() == 1) {
    const double h = (hi(0) - lo(0)) / intervals;
    double acc = 0.0;
    Eigen::VectorXd p(1);
    for (int k = 0; k <= intervals; ++k) {
      p(0) = lo(0) + h * k;
      const double ld = e.log_density(ObsPoint::vector(p));
      if (ld > kNegInf) acc += weight(k) * std::exp(ld);
    }
    return acc * h / 3.0;
  }
  const double h0 = (hi(0) - lo(0)) / intervals;
  const double h1 = (hi(1) - lo(1)) / intervals;
  double acc = 0.0;
  Eigen::VectorXd p(2);
  for (int a = 0; a <= intervals; ++a) {
    p(0) = lo(0) + h0 * a;
    for (int b = 0; b <= intervals; ++b) {
      p(1) = lo(1) + h1 * b;
      const double ld = e.log_density(ObsPoint::vector(p));
      if (ld > kNegInf) acc += weight(a) * weight(b) * std::exp(ld);
    }
  }
  return acc * h0 * h1 / 9.0;
}

}  // namespace

ValidationReport EmissionSpec::validate(const std::string& where) const {
  ValidationReport report;
  if (kind_ == Kind::categorical) {
    double total = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (!(weights_[k] >= 0.0)) report.add(where, "negative weight at symbol " + std::to_string(k));
      total += weights_[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "weights sum to " << total;
      report.add(where, os.str());
    }
    return report;
  }
  if (kind_ == Kind::gaussian && !cov_ok_) {
    report.add(where, "covariance is not positive definite");
    return report;
  }

  // Integration box and support-consistency probes from samples.
  Rng rng(0x5eed);
  std::vector<ObsPoint> probes;
  probes.reserve(2000);
  for (int k = 0; k < 2000; ++k) probes.push_back(sample(rng));
  for (const auto& p : probes) {
    if (support_member(p) != (log_density(p) > kNegInf)) {
      report.add(where, "support predicate disagrees with log-density on a sampled point");
      break;
    }
  }
  if (dimension_ > 2) return report;  // quadrature only for d <= 2

  const auto d = static_cast<Eigen::Index>(dimension_);
  Eigen::VectorXd lo(d), hi(d);
  if (kind_ == Kind::gaussian) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double sd = std::sqrt(cov_(k, k));
      lo(k) = mean_(k) - 12.0 * sd;
      hi(k) = mean_(k) + 12.0 * sd;
    }
  } else {
    lo = probes.front().vec();
    hi = lo;
    for (const auto& p : probes) {
      lo = lo.cwiseMin(p.vec());
      hi = hi.cwiseMax(p.vec());
    }
    const Eigen::VectorXd center = 0.5 * (lo + hi);
    const Eigen::VectorXd half = 0.5 * (hi - lo);
    lo = center - 3.0 * half;
    hi = center + 3.0 * half;
  }
  const double integral = simpson_integral(*this, lo, hi, d == 1 ? 20000 : 600);
  if (std::abs(integral - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "density integrates to " << integral << " (quadrature)";
    report.add(where, os.str());
  }
  // Grid probes for support consistency.
  Eigen::VectorXd p(d);
  for (int k = 0; k <= 50; ++k) {
    p = lo + (hi - lo) * (k / 50.0);
    const ObsPoint op = ObsPoint::vector(p);
    if (support_member(op) != (log_density(op) > kNegInf)) {
      report.add(where, "support predicate disagrees with log-density on a grid point");
      break;
    }
  }
  return report;
}

}  // namespace pmmf

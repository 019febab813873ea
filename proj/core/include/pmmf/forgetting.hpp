#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmmf/certificate.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

/// Half the largest row-pair L1 distance. Throws InvalidArgument on non-stochastic input.
double dobrushin(const Eigen::MatrixXd& m);

/// Sum of absolute differences, in [0, 2] for probability vectors.
double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double tv_block(const BlockDistribution& a, const BlockDistribution& b);

struct KappaCount {
  std::vector<std::size_t> k_offsets;  // kappa_k, k = 0..r'-1
  std::vector<std::size_t> tau;        // tau_k
  std::size_t kappa_bar = 0;
  std::size_t r_prime = 1;

  std::size_t max() const;
};

/// Counts of E-blocks x_{s+k+u r' : s+k+(u+1) r'} inside xs = x_{s:t}, and the count from t backwards.
KappaCount kappa(const ForgettingCertificate& cert, ObsView xs);

/// min over k of min(2, 2 * prod of delta(U) over the E-blocks counted by kappa_k(x_{s:t})),
/// with xs = x_{s:n} and t given as an absolute time (s is xs[0]'s time).
double theoretical_envelope(const ModelKernel& model, const ForgettingCertificate& cert, ObsView xs, std::size_t s,
                            std::size_t t);

/// Least squares of log y on x over points with y > floor.
struct RateFit {
  bool ok = false;
  std::size_t n_points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_upper95 = 0.0;  // one-sided 95% upper confidence bound
  double alpha_hat = 1.0;      // exp(slope), clipped to (0, 1]
  double x_min = 0.0;
  double x_max = 0.0;
};
RateFit fit_log_rate(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-12);

struct ForgettingCurve {
  std::size_t path = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> ts;
  std::vector<double> emp_tv;          // max over the n grid (a lower bound of the sup over n)
  std::vector<double> envelope;        // 2 rho^kappa*
  std::vector<std::size_t> kappa;      // kappa*
  std::vector<double> delta_product;   // product-of-delta(U) envelope, max over the n grid
  RateFit fit;
  std::size_t violations = 0;          // emp_tv > envelope + 1e-8
  std::size_t product_violations = 0;  // emp_tv > delta_product + 1e-8
};

struct OneSidedConfig {
  std::size_t l = 1;
  std::size_t s = 3;
  std::vector<std::size_t> t_grid;                    // empty: s..t_max
  std::size_t t_max = 200;
  std::vector<std::size_t> n_offsets{0, 5, 25, 125};  // n = t + offset, plus n_max
  std::size_t n_max = 300;
  std::size_t m = 1;
  std::size_t n_paths = 100;
  std::uint64_t seed = 1;
};

struct ExperimentSummary {
  std::vector<ForgettingCurve> curves;
  RateFit pooled;
  std::size_t violations = 0;
  std::size_t product_violations = 0;
};

/// ||nu^t_{l:n;m} - nu^t_{s:n;m}|| on simulated paths. Without a certificate the envelope is 2.
ExperimentSummary one_sided_experiment(const ModelKernel& model, const ForgettingCertificate* cert,
                                       const OneSidedConfig& config);

/// ||nu^t_{s:n;m} - nu~^t_{s:n;m}|| for two initial laws; paths are drawn under `pi`.
/// Requires supp(pi) within supp(pi_tilde), else InvalidArgument.
ExperimentSummary initial_forgetting_experiment(const ModelKernel& model, const Eigen::VectorXd& pi,
                                                const Eigen::VectorXd& pi_tilde, const ForgettingCertificate* cert,
                                                OneSidedConfig config);

struct TwoSidedConfig {
  std::size_t t = 0;  // 0: n_trunc / 2
  std::size_t m = 1;
  std::vector<std::size_t> l_grid{1, 2, 4, 8, 16, 32};
  std::vector<std::size_t> s_grid{1, 2, 4, 8, 16, 32};
  std::size_t n_trunc = 200;
  std::size_t n_paths = 50;
  std::uint64_t seed = 1;
};

struct TwoSidedCell {
  std::size_t path = 0;
  std::size_t l = 0;
  std::size_t s = 0;
  double tv = 0.0;
  double left_bound = 2.0;   // 2 rho^kappa*(x_{t-l:t})
  double right_bound = 2.0;  // 2 delta(G), G = law of the block given Y_{t+s} and x_{t-l:t+s}
  double envelope() const { return std::min(2.0, left_bound + right_bound); }
};

struct TwoSidedSummary {
  std::size_t t = 0;
  std::vector<TwoSidedCell> cells;
  std::vector<double> truncation_bound;  // per path, same form at the widest window
  RateFit fit;                           // log tv against min(l, s)
  std::size_t violations = 0;
};

/// Windows [t-l : t+s] against the widest window [1 : n_trunc] on stationary-start paths.
TwoSidedSummary two_sided_experiment(const ModelKernel& model, const ForgettingCertificate* cert,
                                     const TwoSidedConfig& config);

/// Right-hand term 2 delta(G) for window [first, b] observed in `post`, block (t, m).
double two_sided_right_bound(const WindowPosterior& post, std::size_t t, std::size_t m);

}  // namespace pmmf

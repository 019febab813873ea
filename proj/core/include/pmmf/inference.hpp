#pragma once

#include <optional>
#include <vector>

#include "pmmf/certificate.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

inline constexpr std::size_t kDefaultMaxBlock = 8;

/// Law of Y_{t:t+m-1} given X_{l:n}, over Y^m in lexicographic order (first coordinate slowest).
struct BlockDistribution {
  std::size_t t = 0;
  std::size_t l = 0;
  std::size_t n = 0;
  std::size_t m = 1;
  std::size_t n_states = 0;
  Eigen::VectorXd probs;
  /// Set when n stands in for a longer (or infinite) window.
  std::optional<std::size_t> truncated_at;

  bool predictive() const { return t + m - 1 > n; }
  /// Sums out the last coordinate.
  BlockDistribution marginalize_last() const;
};

enum class RowStatus { defined, uniform_fill, lambda_fill };

/// U[x_{1:n}] or F_{k;m}[x_{s:n}]; rows index Y_s, columns Y^m.
struct ConditionalTransition {
  enum class Kind { U, F };
  Kind kind = Kind::F;
  std::size_t k = 0;
  std::size_t m = 1;
  /// Conditioning slice, 1-based positions within the supplied observations.
  std::size_t s = 1;
  std::size_t n = 1;
  Eigen::MatrixXd matrix;
  std::vector<RowStatus> rows;
  /// lambda[x_{r:n}] (U only).
  Eigen::VectorXd lambda;

  bool all_defined() const;
};

/// Forward/backward log-vectors for a window x_{l:n} starting at absolute time l.
/// alpha_t(i) = log p(x_{l:t}, y_t = i), beta_t(i) = log p(x_{t+1:n} | x_t, y_t = i).
class WindowPosterior {
 public:
  /// Throws ZeroLikelihoodError when p(x_{l:n}) = 0.
  WindowPosterior(const ModelKernel& model, ObsView xs, std::size_t first_time = 1);

  /// Backward pass only: enough for F and U, which do not involve the prior.
  /// marginal(), block() and log_likelihood() are unavailable on such an object.
  static WindowPosterior backward_only(const ModelKernel& model, ObsView xs, std::size_t first_time = 1);

  std::size_t first() const { return first_; }
  std::size_t last() const { return first_ + len_ - 1; }
  std::size_t length() const { return len_; }
  double log_likelihood() const { return log_lik_; }

  const LogVector& log_forward(std::size_t t) const { return alpha_[local(t)]; }
  const LogVector& log_backward(std::size_t t) const { return beta_[local(t)]; }

  /// nu^t_{l:n;1} for l <= t <= n.
  Eigen::VectorXd marginal(std::size_t t) const;
  /// nu^t_{l:n;m} for t >= l; t + m - 1 may exceed n.
  BlockDistribution block(std::size_t t, std::size_t m, std::size_t max_m = kDefaultMaxBlock) const;
  /// nu^s_{l:n;1} F_{t-s;m}[x_{s:n}] for an explicit split l <= s <= min(t, n).
  BlockDistribution block_via(std::size_t s, std::size_t t, std::size_t m,
                              std::size_t max_m = kDefaultMaxBlock) const;
  /// F_{k;m}[x_{s:n}] with s an absolute time inside the window.
  ConditionalTransition f_matrix(std::size_t s, std::size_t k, std::size_t m,
                                 std::size_t max_m = kDefaultMaxBlock) const;

 private:
  WindowPosterior(const ModelKernel& model, ObsView xs, std::size_t first_time, bool with_forward);
  std::size_t local(std::size_t t) const;

  const ModelKernel* model_;
  std::size_t first_;
  std::size_t len_;
  ObsPoint last_obs_;
  std::vector<LogVector> alpha_;
  std::vector<LogVector> beta_;
  std::vector<Eigen::MatrixXd> posterior_steps_;  // Q_p(i, j) = P(Y_{p+1} = j | Y_p = i, x_{p:n})
  double log_lik_ = kNegInf;
  bool has_forward_ = true;
};

struct ForwardBackward {
  std::size_t first = 1;
  std::vector<LogVector> alpha;
  std::vector<LogVector> beta;
  double log_likelihood = kNegInf;
};

/// Throws ZeroLikelihoodError (with the first vanishing time) on a zero-likelihood window.
ForwardBackward forward_backward(const ModelKernel& model, ObsView xs, std::size_t first_time = 1);

/// nu^t_{l:n;m} for the window xs = x_{l:n}.
BlockDistribution smoothing_block(const ModelKernel& model, ObsView xs, std::size_t t, std::size_t m,
                                  std::size_t first_time = 1, std::size_t max_m = kDefaultMaxBlock);

/// F_{k;m}[x_{s:n}] for xs = x_{s:n}. Only the backward pass is needed, so no prior is involved.
ConditionalTransition f_matrix(const ModelKernel& model, ObsView xs, std::size_t k, std::size_t m,
                               std::size_t max_m = kDefaultMaxBlock);

/// U[x_{1:n}] for xs = x_{1:n}, n >= r, x_{1:r} in E.
/// Throws InvalidArgument when x_{1:r} is outside E, InvalidWindowError when c(x_{r:n}) = 0.
ConditionalTransition u_matrix(const ModelKernel& model, ObsView xs, const ForgettingCertificate& cert);

/// U[x_{a:n}] read off a posterior whose window ends at n; the caller guarantees that
/// x_{a:a+r-1} is in E. Same matrix as u_matrix on the slice x_{a:n}.
ConditionalTransition u_matrix_in_window(const WindowPosterior& post, std::size_t a, const ForgettingCertificate& cert);

/// Pointwise MAP path, ties to the lowest state index.
std::vector<StateIndex> pmap_decode(const ModelKernel& model, ObsView xs);

/// argmax with ties to the lowest index.
StateIndex argmax_lowest(const Eigen::VectorXd& v);

}  // namespace pmmf

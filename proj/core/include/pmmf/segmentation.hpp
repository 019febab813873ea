#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pmmf/certificate.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

/// Pointwise MAP path with its expected number of errors given the observations.
struct SegmentationResult {
  std::vector<StateIndex> path;
  std::vector<double> confidence;  // max_j P(Y_t = j | x_{1:n})
  double expected_errors = 0.0;    // sum_t (1 - confidence_t)
  double normalized_error = 0.0;   // expected_errors / n
};

SegmentationResult expected_error(const ModelKernel& model, ObsView xs);

enum class StartMode { stationary, model_init };

struct EstimateRConfig {
  std::size_t n_total = 10000;
  std::optional<std::size_t> burn_l;  // default: from rho, see default_burn
  std::optional<std::size_t> burn_s;
  StartMode start = StartMode::stationary;
  /// Windows [1 : t + burn_s] instead of sliding ones (known start, no left truncation).
  bool left_anchor = false;
  /// Run without a certificate; no truncation bound is reported.
  bool allow_no_bound = false;
  std::size_t batches = 20;
  std::uint64_t seed = 1;
};

struct EstimateRResult {
  double r_hat = 0.0;
  double stderr_batch = 0.0;
  std::optional<double> window_bound;  // bound on the truncation bias of r_hat
  std::size_t n_total = 0;
  std::size_t n_used = 0;
  std::size_t burn_l = 0;
  std::size_t burn_s = 0;
  std::uint64_t seed = 0;
};

/// Burn-in so that 2 rho^kappa falls below 1e-6 when every block is in E.
std::size_t default_burn(const ForgettingCertificate& cert);

/// Monte Carlo estimate of the long-run per-site error of pointwise MAP segmentation.
/// Throws InvalidArgument without a certificate unless allow_no_bound is set.
EstimateRResult estimate_r(const ModelKernel& model, const ForgettingCertificate* cert, const EstimateRConfig& config);

}  // namespace pmmf

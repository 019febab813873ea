#include "pmmf/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "pmmf/errors.hpp"
#include "pmmf/forgetting.hpp"
#include "pmmf/inference.hpp"

namespace pmmf {

SegmentationResult expected_error(const ModelKernel& model, ObsView xs) {
  const WindowPosterior post(model, xs);
  SegmentationResult out;
  for (std::size_t t = post.first(); t <= post.last(); ++t) {
    const Eigen::VectorXd nu = post.marginal(t);
    const StateIndex best = argmax_lowest(nu);
    out.path.push_back(best);
    out.confidence.push_back(nu(static_cast<Eigen::Index>(best)));
    out.expected_errors += 1.0 - out.confidence.back();
  }
  out.normalized_error = out.expected_errors / static_cast<double>(xs.size());
  return out;
}

std::size_t default_burn(const ForgettingCertificate& cert) {
  if (!(cert.rho > 0.0 && cert.rho < 1.0)) return cert.r_prime();
  const double blocks = std::ceil(std::log(1e-6 / 2.0) / std::log(cert.rho));
  return static_cast<std::size_t>(blocks) * cert.r_prime();
}

EstimateRResult estimate_r(const ModelKernel& model, const ForgettingCertificate* cert, const EstimateRConfig& config) {
  if (cert == nullptr && !config.allow_no_bound) {
    throw InvalidArgument("no forgetting certificate: window truncation is unjustified (use the no-bound mode)");
  }
  if (config.batches < 2) throw InvalidArgument("need at least two batches");
  EstimateRResult out;
  out.n_total = config.n_total;
  out.seed = config.seed;
  const std::size_t fallback = 50;
  out.burn_l = config.burn_l.value_or(cert != nullptr ? default_burn(*cert) : fallback);
  out.burn_s = config.burn_s.value_or(cert != nullptr ? default_burn(*cert) : fallback);

  ModelPtr run;
  const ModelKernel* sampler = &model;
  if (config.start == StartMode::stationary) {
    run = model.with_stationary_start();
    sampler = run.get();
  }
  const Trajectory traj = sample_trajectory(*sampler, config.n_total, config.seed);
  const ObsView xs(traj.xs);

  const std::size_t t_lo = config.left_anchor ? 1 : out.burn_l + 1;
  if (config.n_total < out.burn_s + t_lo + config.batches) {
    throw InvalidArgument("n_total too small for the burn-in and batch count");
  }
  const std::size_t t_hi = config.n_total - out.burn_s;

  std::vector<double> losses;
  double bound_sum = 0.0;
  for (std::size_t t = t_lo; t <= t_hi; ++t) {
    const std::size_t a = config.left_anchor ? 1 : t - out.burn_l;
    const std::size_t b = t + out.burn_s;
    const WindowPosterior post(*sampler, xs.subspan(a - 1, b - a + 1), a);
    const Eigen::VectorXd nu = post.marginal(t);
    losses.push_back(1.0 - nu.maxCoeff());
    if (cert != nullptr) {
      const KappaCount kc = t - a >= cert->r_prime() ? kappa(*cert, xs.subspan(a - 1, t - a + 1)) : KappaCount{};
      const double left = a == 1 ? 0.0 : 2.0 * std::pow(cert->rho, static_cast<double>(kc.max()));
      const double env = left + two_sided_right_bound(post, t, 1);
      // |max nu - max nu'| <= ||nu - nu'|| / 2, and the loss difference is at most 1.
      bound_sum += std::min(1.0, env / 2.0);
    }
  }
  out.n_used = losses.size();
  double total = 0.0;
  for (double v : losses) total += v;
  out.r_hat = total / static_cast<double>(losses.size());
  if (cert != nullptr) out.window_bound = bound_sum / static_cast<double>(losses.size());

  const std::size_t per = losses.size() / config.batches;
  std::vector<double> means;
  for (std::size_t bidx = 0; bidx < config.batches; ++bidx) {
    double sum = 0.0;
    for (std::size_t i = bidx * per; i < (bidx + 1) * per; ++i) sum += losses[i];
    means.push_back(sum / static_cast<double>(per));
  }
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  var /= static_cast<double>(means.size() - 1);
  out.stderr_batch = std::sqrt(var / static_cast<double>(means.size()));
  return out;
}

}  // namespace pmmf

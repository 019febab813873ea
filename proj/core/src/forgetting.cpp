#include "pmmf/forgetting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

#include "pmmf/errors.hpp"
#include "pmmf/parallel.hpp"
#include "pmmf/rng.hpp"

namespace pmmf {

namespace {

constexpr double kViolationTol = 1e-8;

// in_e[a] for absolute times a = 1..|xs| - r + 1 (index 0 unused).
std::vector<char> e_flags(const ForgettingCertificate& cert, ObsView xs, std::size_t first_time) {
  std::vector<char> flags(first_time + xs.size() + 1, 0);
  if (xs.size() < cert.r) return flags;
  for (std::size_t p = 0; p + cert.r <= xs.size(); ++p) flags[first_time + p] = cert.in_E(xs.subspan(p, cert.r)) ? 1 : 0;
  return flags;
}

KappaCount kappa_from_flags(const std::vector<char>& flags, std::size_t r, std::size_t s, std::size_t t) {
  KappaCount out;
  out.r_prime = r - 1;
  const auto rp = out.r_prime;
  if (t < s || t - s < rp) throw InvalidArgument("kappa: window shorter than r");
  for (std::size_t k = 0; k < rp; ++k) {
    const std::size_t tau = (t - s - k) / rp;
    std::size_t count = 0;
    for (std::size_t u = 0; u < tau; ++u) count += flags[s + k + u * rp] != 0 ? 1 : 0;
    out.tau.push_back(tau);
    out.k_offsets.push_back(count);
  }
  // Blocks ending at t, t - r', ...: the offset k with k = (t - s) mod r'.
  out.kappa_bar = out.k_offsets[(t - s) % rp];
  return out;
}

double kappa_envelope(const ForgettingCertificate* cert, const std::vector<char>& flags, std::size_t s,
                      std::size_t t, std::size_t* kappa_out) {
  if (cert == nullptr || t < s || t - s < cert->r_prime()) {
    if (kappa_out != nullptr) *kappa_out = 0;
    return 2.0;
  }
  const auto kc = kappa_from_flags(flags, cert->r, s, t);
  if (kappa_out != nullptr) *kappa_out = kc.max();
  return 2.0 * std::pow(cert->rho, static_cast<double>(kc.max()));
}

// delta(U[x_{a:n}]) for a window posterior ending at n, memoized by a.
class DeltaCache {
 public:
  DeltaCache(const WindowPosterior& post, const ForgettingCertificate& cert) : post_(post), cert_(cert) {}

  double at(std::size_t a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    const double d = dobrushin(u_matrix_in_window(post_, a, cert_).matrix);
    cache_.emplace(a, d);
    return d;
  }

  double product_envelope(const std::vector<char>& flags, std::size_t s, std::size_t t) {
    const auto rp = cert_.r_prime();
    if (t < s || t - s < rp) return 2.0;
    double best = 2.0;
    for (std::size_t k = 0; k < rp; ++k) {
      const std::size_t tau = (t - s - k) / rp;
      double prod = 2.0;
      for (std::size_t u = 0; u < tau && prod > 0.0; ++u) {
        const std::size_t a = s + k + u * rp;
        if (flags[a] != 0) prod *= at(a);
      }
      best = std::min(best, prod);
    }
    return best;
  }

 private:
  const WindowPosterior& post_;
  const ForgettingCertificate& cert_;
  std::unordered_map<std::size_t, double> cache_;
};

ObsView slice(const ObsSeq& xs, std::size_t from, std::size_t to) {
  return ObsView(xs).subspan(from - 1, to - from + 1);
}

using PosteriorFactory = std::function<WindowPosterior(const ObsSeq&, std::size_t n)>;

// Shared driver for the one-sided experiments: curve = max_n ||post_a - post_b|| at t.
// post_b is the window [env_s : n] used for the product envelope.
ExperimentSummary run_curves(const ModelKernel& sampler, const PosteriorFactory& post_a,
                             const PosteriorFactory& post_b, std::size_t env_s, std::size_t min_t,
                             const ForgettingCertificate* cert, const OneSidedConfig& cfg) {
  if (cfg.m < 1) throw InvalidArgument("block length m must be >= 1");
  if (cfg.n_max < min_t) throw InvalidArgument("n_max must be at least the window start");
  std::vector<std::size_t> ts;
  if (cfg.t_grid.empty()) {
    for (std::size_t t = min_t; t <= std::min(cfg.t_max, cfg.n_max); ++t) ts.push_back(t);
  } else {
    for (auto t : cfg.t_grid) {
      if (t >= min_t && t <= cfg.n_max) ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  }
  if (ts.empty()) throw InvalidArgument("no admissible t in the grid");

  ExperimentSummary summary;
  summary.curves.resize(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t path) {
    ForgettingCurve curve;
    curve.path = path;
    curve.seed = split_seed(cfg.seed, path);
    const Trajectory traj = sample_trajectory(sampler, cfg.n_max, curve.seed);
    const std::vector<char> flags = cert != nullptr ? e_flags(*cert, traj.xs, 1) : std::vector<char>{};

    std::map<std::size_t, std::vector<std::size_t>> by_n;  // n -> indices into ts
    for (std::size_t i = 0; i < ts.size(); ++i) {
      std::set<std::size_t> ns{cfg.n_max};
      for (auto off : cfg.n_offsets) ns.insert(std::min(ts[i] + off, cfg.n_max));
      for (auto n : ns) by_n[n].push_back(i);
    }

    curve.ts = ts;
    curve.emp_tv.assign(ts.size(), 0.0);
    curve.delta_product.assign(ts.size(), 0.0);
    curve.envelope.assign(ts.size(), 2.0);
    curve.kappa.assign(ts.size(), 0);
    for (const auto& [n, idx] : by_n) {
      const WindowPosterior a = post_a(traj.xs, n);
      const WindowPosterior b = post_b(traj.xs, n);
      std::optional<DeltaCache> deltas;
      if (cert != nullptr) deltas.emplace(b, *cert);
      for (auto i : idx) {
        const std::size_t t = ts[i];
        curve.emp_tv[i] = std::max(curve.emp_tv[i], tv_block(a.block(t, cfg.m), b.block(t, cfg.m)));
        const double pe = deltas ? deltas->product_envelope(flags, env_s, std::min(t, n)) : 2.0;
        curve.delta_product[i] = std::max(curve.delta_product[i], pe);
      }
    }

    std::vector<double> xs_fit;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      curve.envelope[i] = kappa_envelope(cert, flags, env_s, ts[i], &curve.kappa[i]);
      if (curve.emp_tv[i] > curve.envelope[i] + kViolationTol) ++curve.violations;
      if (curve.emp_tv[i] > curve.delta_product[i] + kViolationTol) ++curve.product_violations;
      xs_fit.push_back(static_cast<double>(ts[i]));
    }
    curve.fit = fit_log_rate(xs_fit, curve.emp_tv);
    summary.curves[path] = std::move(curve);
  });

  std::vector<double> px;
  std::vector<double> py;
  for (const auto& c : summary.curves) {
    summary.violations += c.violations;
    summary.product_violations += c.product_violations;
    for (std::size_t i = 0; i < c.ts.size(); ++i) {
      px.push_back(static_cast<double>(c.ts[i]));
      py.push_back(c.emp_tv[i]);
    }
  }
  summary.pooled = fit_log_rate(px, py);
  return summary;
}

}  // namespace

double dobrushin(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < -1e-12).any() || std::abs(m.row(i).sum() - 1.0) > 1e-10) {
      throw InvalidArgument("dobrushin: row " + std::to_string(i) + " is not a probability vector");
    }
  }
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.rows(); ++j) best = std::max(best, 0.5 * (m.row(i) - m.row(j)).cwiseAbs().sum());
  }
  return best;
}

double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw InvalidArgument("tv_distance: size mismatch");
  return (a - b).cwiseAbs().sum();
}

double tv_block(const BlockDistribution& a, const BlockDistribution& b) {
  if (a.m != b.m || a.n_states != b.n_states || a.t != b.t) throw InvalidArgument("tv_block: blocks differ in shape");
  return tv_distance(a.probs, b.probs);
}

std::size_t KappaCount::max() const {
  return k_offsets.empty() ? 0 : *std::max_element(k_offsets.begin(), k_offsets.end());
}

KappaCount kappa(const ForgettingCertificate& cert, ObsView xs) {
  if (cert.r < 2) throw InvalidArgument("kappa: r must be >= 2");
  if (xs.empty()) throw InvalidArgument("kappa: window shorter than r");
  return kappa_from_flags(e_flags(cert, xs, 1), cert.r, 1, xs.size());
}

double theoretical_envelope(const ModelKernel& model, const ForgettingCertificate& cert, ObsView xs, std::size_t s,
                            std::size_t t) {
  if (xs.empty() || t < s || t > s + xs.size() - 1) throw InvalidArgument("theoretical_envelope: t outside x_{s:n}");
  const WindowPosterior post = WindowPosterior::backward_only(model, xs, s);
  DeltaCache deltas(post, cert);
  return deltas.product_envelope(e_flags(cert, xs, s), s, t);
}

RateFit fit_log_rate(const std::vector<double>& x, const std::vector<double>& y, double floor) {
  if (x.size() != y.size()) throw InvalidArgument("fit_log_rate: size mismatch");
  std::vector<double> fx;
  std::vector<double> fy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > floor && std::isfinite(y[i])) {
      fx.push_back(x[i]);
      fy.push_back(std::log(y[i]));
    }
  }
  RateFit fit;
  fit.n_points = fx.size();
  if (fx.size() < 3) return fit;
  const auto n = static_cast<double>(fx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    mx += fx[i];
    my += fy[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    sxx += (fx[i] - mx) * (fx[i] - mx);
    sxy += (fx[i] - mx) * (fy[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.x_min = *std::min_element(fx.begin(), fx.end());
  fit.x_max = *std::max_element(fx.begin(), fx.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    const double e = fy[i] - fit.intercept - fit.slope * fx[i];
    sse += e * e;
  }
  fit.slope_stderr = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.slope_upper95 = fit.slope + boost::math::quantile(dist, 0.95) * fit.slope_stderr;
  fit.alpha_hat = std::min(1.0, std::exp(fit.slope));
  fit.ok = true;
  return fit;
}

ExperimentSummary one_sided_experiment(const ModelKernel& model, const ForgettingCertificate* cert,
                                       const OneSidedConfig& config) {
  if (config.l < 1 || config.l > config.s) throw InvalidArgument("one-sided windows need 1 <= l <= s");
  const auto l = config.l;
  const auto s = config.s;
  PosteriorFactory pa = [&model, l](const ObsSeq& xs, std::size_t n) {
    return WindowPosterior(model, slice(xs, l, n), l);
  };
  PosteriorFactory pb = [&model, s](const ObsSeq& xs, std::size_t n) {
    return WindowPosterior(model, slice(xs, s, n), s);
  };
  return run_curves(model, pa, pb, s, s, cert, config);
}

ExperimentSummary initial_forgetting_experiment(const ModelKernel& model, const Eigen::VectorXd& pi,
                                                const Eigen::VectorXd& pi_tilde, const ForgettingCertificate* cert,
                                                OneSidedConfig config) {
  if (pi.size() != pi_tilde.size()) throw InvalidArgument("initial laws differ in size");
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi(i) > 0.0 && pi_tilde(i) <= 0.0) {
      throw InvalidArgument("supp(pi) must lie within supp(pi_tilde)");
    }
  }
  const auto ma = model.with_initial_law(pi);
  const auto mb = model.with_initial_law(pi_tilde);
  const auto s = config.s;
  PosteriorFactory pa = [ma, s](const ObsSeq& xs, std::size_t n) {
    return WindowPosterior(*ma, slice(xs, s, n), s);
  };
  PosteriorFactory pb = [mb, s](const ObsSeq& xs, std::size_t n) {
    return WindowPosterior(*mb, slice(xs, s, n), s);
  };
  return run_curves(*ma, pa, pb, s, s, cert, config);
}

double two_sided_right_bound(const WindowPosterior& post, std::size_t t, std::size_t m) {
  const std::size_t b = post.last();
  if (b + 1 < t + m) return 2.0;
  const std::size_t end = t + m - 1;
  const BlockDistribution nu = post.block(t, m);
  const ConditionalTransition f = post.f_matrix(end, b - end, 1);
  const auto ny = static_cast<Eigen::Index>(nu.n_states);
  const Eigen::Index nv = nu.probs.size();
  // joint(v, u) = P(Y_{t:t+m-1} = v, Y_b = u | x_{t-l:b}); G(u, .) = joint(., u) / P(Y_b = u | ...).
  Eigen::MatrixXd joint(nv, ny);
  for (Eigen::Index v = 0; v < nv; ++v) joint.row(v) = nu.probs(v) * f.matrix.row(v % ny);
  std::vector<Eigen::VectorXd> rows;
  for (Eigen::Index u = 0; u < ny; ++u) {
    const double w = joint.col(u).sum();
    if (w > 0.0) rows.push_back(joint.col(u) / w);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) best = std::max(best, 0.5 * (rows[i] - rows[j]).cwiseAbs().sum());
  }
  return 2.0 * best;
}

TwoSidedSummary two_sided_experiment(const ModelKernel& model, const ForgettingCertificate* cert,
                                     const TwoSidedConfig& config) {
  std::shared_ptr<const ModelKernel> stationary;
  try {
    stationary = model.with_stationary_start();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("two-sided experiment needs a stationary start: ") + e.what());
  }
  const std::size_t big_n = config.n_trunc;
  const std::size_t t = config.t == 0 ? big_n / 2 : config.t;
  if (t < 1 || t > big_n) throw InvalidArgument("t must lie inside [1, n_trunc]");

  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (auto l : config.l_grid) {
    for (auto s : config.s_grid) {
      if (l < t && t + s <= big_n) grid.emplace_back(l, s);
    }
  }
  if (grid.empty()) throw InvalidArgument("no (l, s) pair fits inside [1, n_trunc]");

  TwoSidedSummary summary;
  summary.t = t;
  summary.truncation_bound.assign(config.n_paths, 2.0);
  std::vector<std::vector<TwoSidedCell>> per_path(config.n_paths);
  parallel_for(config.n_paths, [&](std::size_t path) {
    const Trajectory traj = sample_trajectory(*stationary, big_n, split_seed(config.seed, path));
    const std::vector<char> flags = cert != nullptr ? e_flags(*cert, traj.xs, 1) : std::vector<char>{};
    const WindowPosterior ref(*stationary, traj.xs, 1);
    const BlockDistribution ref_block = ref.block(t, config.m);
    summary.truncation_bound[path] =
        std::min(2.0, kappa_envelope(cert, flags, 1, t, nullptr) + two_sided_right_bound(ref, t, config.m));
    for (const auto& [l, s] : grid) {
      const WindowPosterior post(*stationary, slice(traj.xs, t - l, t + s), t - l);
      TwoSidedCell cell;
      cell.path = path;
      cell.l = l;
      cell.s = s;
      cell.tv = tv_block(post.block(t, config.m), ref_block);
      cell.left_bound = kappa_envelope(cert, flags, t - l, t, nullptr);
      cell.right_bound = two_sided_right_bound(post, t, config.m);
      per_path[path].push_back(cell);
    }
  });

  std::vector<double> x;
  std::vector<double> y;
  for (auto& cells : per_path) {
    for (auto& c : cells) {
      if (c.tv > c.envelope() + kViolationTol) ++summary.violations;
      x.push_back(static_cast<double>(std::min(c.l, c.s)));
      y.push_back(c.tv);
      summary.cells.push_back(c);
    }
  }
  summary.fit = fit_log_rate(x, y);
  return summary;
}

}  // namespace pmmf

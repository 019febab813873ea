#include "pmmf/inference.hpp"

#include <cmath>
#include <functional>

#include "pmmf/errors.hpp"

namespace pmmf {

namespace {

std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t out = 1;
  while (e-- > 0) out *= base;
  return out;
}

void check_block_length(std::size_t m, std::size_t max_m) {
  if (m < 1) throw InvalidArgument("block length m must be >= 1");
  if (m > max_m) throw InvalidArgument("block length m exceeds the configured limit " + std::to_string(max_m));
}

}  // namespace

BlockDistribution BlockDistribution::marginalize_last() const {
  if (m < 2) throw InvalidArgument("cannot marginalize a block of length 1");
  BlockDistribution out = *this;
  out.m = m - 1;
  const auto ny = static_cast<Eigen::Index>(n_states);
  out.probs = Eigen::VectorXd::Zero(probs.size() / ny);
  for (Eigen::Index v = 0; v < probs.size(); ++v) out.probs(v / ny) += probs(v);
  return out;
}

bool ConditionalTransition::all_defined() const {
  for (auto s : rows) {
    if (s != RowStatus::defined) return false;
  }
  return true;
}

StateIndex argmax_lowest(const Eigen::VectorXd& v) {
  StateIndex best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<StateIndex>(i);
  }
  return best;
}

// ---------------------------------------------------------------- WindowPosterior

WindowPosterior::WindowPosterior(const ModelKernel& model, ObsView xs, std::size_t first_time)
    : WindowPosterior(model, xs, first_time, true) {}

WindowPosterior WindowPosterior::backward_only(const ModelKernel& model, ObsView xs, std::size_t first_time) {
  return WindowPosterior(model, xs, first_time, false);
}

WindowPosterior::WindowPosterior(const ModelKernel& model, ObsView xs, std::size_t first_time, bool with_forward)
    : model_(&model), first_(first_time), len_(xs.size()), has_forward_(with_forward) {
  if (xs.empty()) throw InvalidArgument("empty observation window");
  if (first_time < 1) throw InvalidArgument("time indices start at 1");
  last_obs_ = xs.back();
  const auto ny = static_cast<Eigen::Index>(model.n_states());

  std::vector<LogMatrix> steps;
  steps.reserve(len_ > 0 ? len_ - 1 : 0);
  for (std::size_t p = 0; p + 1 < len_; ++p) steps.push_back(model.log_step_matrix(xs[p], xs[p + 1]));

  beta_.assign(len_, LogVector::Zero(ny));
  for (std::size_t p = len_ - 1; p-- > 0;) beta_[p] = log_matvec(steps[p], beta_[p + 1]);

  posterior_steps_.resize(steps.size());
  for (std::size_t p = 0; p < steps.size(); ++p) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ny, ny);
    for (Eigen::Index i = 0; i < ny; ++i) {
      if (beta_[p](i) == kNegInf) continue;
      for (Eigen::Index j = 0; j < ny; ++j) {
        const double v = steps[p](i, j) + beta_[p + 1](j);
        if (v > kNegInf) q(i, j) = std::exp(v - beta_[p](i));
      }
    }
    posterior_steps_[p] = std::move(q);
  }

  if (!with_forward) return;
  alpha_.resize(len_);
  alpha_[0] = model.log_prior(first_, xs[0]);
  if (log_sum_exp(alpha_[0]) == kNegInf) {
    throw ZeroLikelihoodError(first_, "zero likelihood at time " + std::to_string(first_));
  }
  for (std::size_t p = 1; p < len_; ++p) {
    alpha_[p] = log_vecmat(alpha_[p - 1], steps[p - 1]);
    if (log_sum_exp(alpha_[p]) == kNegInf) {
      throw ZeroLikelihoodError(first_ + p, "zero likelihood at time " + std::to_string(first_ + p));
    }
  }
  log_lik_ = log_sum_exp(alpha_.back());
}

std::size_t WindowPosterior::local(std::size_t t) const {
  if (t < first_ || t > last()) throw InvalidArgument("time " + std::to_string(t) + " outside the window");
  return t - first_;
}

Eigen::VectorXd WindowPosterior::marginal(std::size_t t) const {
  if (!has_forward_) throw InvalidArgument("marginal() needs the forward pass");
  const auto p = local(t);
  return normalize_log(LogVector(alpha_[p] + beta_[p]));
}

ConditionalTransition WindowPosterior::f_matrix(std::size_t s, std::size_t k, std::size_t m, std::size_t max_m) const {
  check_block_length(m, max_m);
  const auto p0 = local(s);
  const auto ny = model_->n_states();
  const auto nyi = static_cast<Eigen::Index>(ny);

  // Conditional chain of Y given Y_s and x_{s:n}: posterior steps inside the window,
  // then the model's own dynamics (possibly on an augmented space) beyond n.
  std::optional<FutureChain> future;
  auto transition = [&](std::size_t p) -> const Eigen::MatrixXd& {
    if (p + 1 < len_) return posterior_steps_[p];
    if (!future) future = model_->future_chain(last_obs_);
    return p + 1 == len_ ? future->entry : future->step;
  };
  auto projection = [&](std::size_t p, Eigen::Index col) -> StateIndex {
    if (p < len_) return static_cast<StateIndex>(col);
    if (!future) future = model_->future_chain(last_obs_);
    return future->projection[static_cast<std::size_t>(col)];
  };

  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(nyi, nyi);
  std::size_t p = p0;
  for (std::size_t step = 0; step < k; ++step, ++p) w = w * transition(p);

  const auto ncols = ipow(ny, m);
  ConditionalTransition out;
  out.kind = ConditionalTransition::Kind::F;
  out.k = k;
  out.m = m;
  out.s = p0 + 1;
  out.n = len_;
  out.matrix = Eigen::MatrixXd::Zero(nyi, static_cast<Eigen::Index>(ncols));

  // Depth-first over v in Y^m; columns not projecting to v_d are masked out.
  std::function<void(const Eigen::MatrixXd&, std::size_t, std::size_t, std::size_t)> dfs =
      [&](const Eigen::MatrixXd& cur, std::size_t time, std::size_t depth, std::size_t index) {
        for (std::size_t y = 0; y < ny; ++y) {
          Eigen::MatrixXd masked = cur;
          bool any = false;
          for (Eigen::Index c = 0; c < cur.cols(); ++c) {
            if (projection(time, c) != y) {
              masked.col(c).setZero();
            } else {
              any = true;
            }
          }
          const std::size_t idx = index * ny + y;
          if (depth + 1 == m) {
            if (any) out.matrix.col(static_cast<Eigen::Index>(idx)) = masked.rowwise().sum();
          } else if (any && masked.cwiseAbs().maxCoeff() > 0.0) {
            dfs(masked * transition(time), time + 1, depth + 1, idx);
          }
        }
      };
  dfs(w, p, 0, 0);

  out.rows.assign(ny, RowStatus::defined);
  for (std::size_t u = 0; u < ny; ++u) {
    if (beta_[p0](static_cast<Eigen::Index>(u)) > kNegInf) continue;
    out.rows[u] = RowStatus::uniform_fill;
    auto row = out.matrix.row(static_cast<Eigen::Index>(u));
    if (k == 0) {
      // Y_s = u is given, so the fill keeps v_1 = u.
      const auto block = ipow(ny, m - 1);
      row.setZero();
      row.segment(static_cast<Eigen::Index>(u * block), static_cast<Eigen::Index>(block))
          .setConstant(1.0 / static_cast<double>(block));
    } else {
      row.setConstant(1.0 / static_cast<double>(ncols));
    }
  }
  return out;
}

BlockDistribution WindowPosterior::block_via(std::size_t s, std::size_t t, std::size_t m, std::size_t max_m) const {
  if (!has_forward_) throw InvalidArgument("block() needs the forward pass");
  if (s < first_ || s > t || s > last()) throw InvalidArgument("split point must satisfy l <= s <= min(t, n)");
  const ConditionalTransition f = f_matrix(s, t - s, m, max_m);
  BlockDistribution out;
  out.t = t;
  out.l = first_;
  out.n = last();
  out.m = m;
  out.n_states = model_->n_states();
  const Eigen::RowVectorXd nu = marginal(s).transpose();
  out.probs = (nu * f.matrix).transpose();
  return out;
}

BlockDistribution WindowPosterior::block(std::size_t t, std::size_t m, std::size_t max_m) const {
  if (t < first_) throw InvalidArgument("t must be >= l");
  return block_via(std::min(t, last()), t, m, max_m);
}

// ---------------------------------------------------------------- free functions

ForwardBackward forward_backward(const ModelKernel& model, ObsView xs, std::size_t first_time) {
  const WindowPosterior post(model, xs, first_time);
  ForwardBackward fb;
  fb.first = first_time;
  fb.log_likelihood = post.log_likelihood();
  for (std::size_t t = post.first(); t <= post.last(); ++t) {
    fb.alpha.push_back(post.log_forward(t));
    fb.beta.push_back(post.log_backward(t));
  }
  return fb;
}

BlockDistribution smoothing_block(const ModelKernel& model, ObsView xs, std::size_t t, std::size_t m,
                                  std::size_t first_time, std::size_t max_m) {
  return WindowPosterior(model, xs, first_time).block(t, m, max_m);
}

ConditionalTransition f_matrix(const ModelKernel& model, ObsView xs, std::size_t k, std::size_t m,
                               std::size_t max_m) {
  return WindowPosterior::backward_only(model, xs).f_matrix(1, k, m, max_m);
}

ConditionalTransition u_matrix_in_window(const WindowPosterior& post, std::size_t a, const ForgettingCertificate& cert) {
  const auto r = cert.r;
  if (r < 2 || a + r - 1 > post.last()) throw InvalidArgument("u_matrix: window shorter than r");
  ConditionalTransition u = post.f_matrix(a, r - 1, 1, 1);
  u.kind = ConditionalTransition::Kind::U;

  const LogVector& beta_r = post.log_backward(a + r - 1);
  const auto ny = beta_r.size();
  LogVector masked = LogVector::Constant(ny, kNegInf);
  for (Eigen::Index j = 0; j < ny; ++j) {
    if (cert.y_plus.in_proj2(static_cast<StateIndex>(j))) masked(j) = beta_r(j);
  }
  if (log_sum_exp(masked) == kNegInf) throw InvalidWindowError("u_matrix: c(x_{r:n}) = 0");
  u.lambda = normalize_log(masked);
  for (Eigen::Index i = 0; i < ny; ++i) {
    if (u.rows[static_cast<std::size_t>(i)] == RowStatus::defined) continue;
    u.rows[static_cast<std::size_t>(i)] = RowStatus::lambda_fill;
    u.matrix.row(i) = u.lambda.transpose();
  }
  return u;
}

ConditionalTransition u_matrix(const ModelKernel& model, ObsView xs, const ForgettingCertificate& cert) {
  if (cert.r < 2 || xs.size() < cert.r) throw InvalidArgument("u_matrix: window shorter than r");
  if (!cert.in_E(xs.first(cert.r))) throw InvalidArgument("u_matrix: x_{1:r} is not in E");
  return u_matrix_in_window(WindowPosterior::backward_only(model, xs), 1, cert);
}

std::vector<StateIndex> pmap_decode(const ModelKernel& model, ObsView xs) {
  const WindowPosterior post(model, xs);
  std::vector<StateIndex> path;
  path.reserve(xs.size());
  for (std::size_t t = post.first(); t <= post.last(); ++t) path.push_back(argmax_lowest(post.marginal(t)));
  return path;
}

}  // namespace pmmf

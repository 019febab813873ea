#include "pmmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmmf/errors.hpp"

namespace pmmf {

namespace {

void check_stochastic(const Eigen::MatrixXd& m, const std::string& name, ValidationReport& report) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < 0.0).any()) report.add(name + " row " + std::to_string(i), "negative entry");
    const double s = m.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "row sums to " << s;
      report.add(name + " row " + std::to_string(i), os.str());
    }
  }
}

void check_probability(const Eigen::VectorXd& v, const std::string& name, ValidationReport& report) {
  if ((v.array() < 0.0).any()) report.add(name, "negative entry");
  const double s = v.sum();
  if (std::abs(s - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "sums to " << s;
    report.add(name, os.str());
  }
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

std::vector<std::vector<bool>> reachability(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (m(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && !reach[s][v]) {
          reach[s][v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  return reach;
}

}  // namespace

std::vector<bool> recurrent_class(const Eigen::MatrixXd& stochastic) {
  const auto reach = reachability(stochastic);
  const auto n = reach.size();
  std::vector<bool> closed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) ok = !reach[i][j] || reach[j][i];
    closed[i] = ok;
  }
  std::size_t first = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!closed[i]) continue;
    if (first == n) {
      first = i;
    } else if (!reach[first][i]) {
      throw NotIrreducibleError("chain has more than one closed communicating class");
    }
  }
  if (first == n) throw NotIrreducibleError("chain has no closed class");
  return closed;
}

Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& stochastic) {
  const auto mask = recurrent_class(stochastic);
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k + 1, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) a(r, c) = stochastic(idx[c], idx[r]) - (r == c ? 1.0 : 0.0);
  }
  a.row(k).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k + 1);
  b(k) = 1.0;
  Eigen::VectorXd sub = a.colPivHouseholderQr().solve(b);
  sub = sub.cwiseMax(0.0);
  sub /= sub.sum();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(stochastic.rows());
  for (Eigen::Index r = 0; r < k; ++r) pi(idx[r]) = sub(r);
  return pi;
}

Eigen::VectorXd propagate_law(const Eigen::VectorXd& law, const Eigen::MatrixXd& stochastic, std::size_t power) {
  Eigen::RowVectorXd out = law.transpose();
  Eigen::MatrixXd base = stochastic;
  while (power > 0) {
    if (power & 1U) out = out * base;
    power >>= 1U;
    if (power > 0) base = base * base;
  }
  return out.transpose();
}

LogMatrix ModelKernel::log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const {
  const auto n = static_cast<Eigen::Index>(n_states());
  LogMatrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) = log_q(x, static_cast<StateIndex>(i), x_next, static_cast<StateIndex>(j));
    }
  }
  return k;
}

// ---------------------------------------------------------------- FinitePMM

FinitePMM::FinitePMM(std::size_t n_obs, std::size_t n_states, Eigen::MatrixXd trans, Eigen::VectorXd init)
    : n_obs_(n_obs), n_states_(n_states), trans_(std::move(trans)), init_(std::move(init)) {
  if (n_states_ < 2) throw InvalidArgument("FinitePMM: need at least two hidden states");
  if (n_obs_ < 1) throw InvalidArgument("FinitePMM: empty observation alphabet");
  const auto nz = static_cast<Eigen::Index>(n_obs_ * n_states_);
  require_square(trans_, nz, "FinitePMM transition");
  if (init_.size() != nz) throw InvalidArgument("FinitePMM init: shape mismatch");
  log_trans_ = to_log(trans_);
  log_init_ = to_log(init_);
  // States that can occur at some time: reachable from the initial support.
  const auto reach = reachability(trans_);
  recurrent_.assign(static_cast<std::size_t>(nz), false);
  for (Eigen::Index z = 0; z < nz; ++z) {
    if (init_(z) <= 0.0) continue;
    for (Eigen::Index w = 0; w < nz; ++w) {
      if (reach[static_cast<std::size_t>(z)][static_cast<std::size_t>(w)]) recurrent_[static_cast<std::size_t>(w)] = true;
    }
  }
}

double FinitePMM::log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const {
  const auto a = x.symbol();
  const auto b = x_next.symbol();
  if (a >= n_obs_ || b >= n_obs_ || i >= n_states_ || j >= n_states_) return kNegInf;
  return log_trans_(static_cast<Eigen::Index>(pair_index(a, i)), static_cast<Eigen::Index>(pair_index(b, j)));
}

double FinitePMM::init_log_density(const ObsPoint& x, StateIndex i) const {
  const auto a = x.symbol();
  if (a >= n_obs_ || i >= n_states_) return kNegInf;
  return log_init_(static_cast<Eigen::Index>(pair_index(a, i)));
}

LogMatrix FinitePMM::log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const {
  const auto a = x.symbol();
  const auto b = x_next.symbol();
  const auto n = static_cast<Eigen::Index>(n_states_);
  if (a >= n_obs_ || b >= n_obs_) return LogMatrix::Constant(n, n, kNegInf);
  return log_trans_.block(static_cast<Eigen::Index>(a * n_states_), static_cast<Eigen::Index>(b * n_states_), n, n);
}

LogVector FinitePMM::log_prior(std::size_t time, const ObsPoint& x) const {
  const auto a = x.symbol();
  const auto n = static_cast<Eigen::Index>(n_states_);
  if (a >= n_obs_) return LogVector::Constant(n, kNegInf);
  const Eigen::VectorXd law = time <= 1 ? init_ : propagate_law(init_, trans_, time - 1);
  return to_log(Eigen::VectorXd(law.segment(static_cast<Eigen::Index>(a * n_states_), n)));
}

bool FinitePMM::compatible(const ObsPoint& x, StateIndex i) const {
  const auto a = x.symbol();
  return a < n_obs_ && i < n_states_ && recurrent_[pair_index(a, i)];
}

std::pair<ObsPoint, StateIndex> FinitePMM::sample_initial(Rng& rng) const {
  const auto z = rng.categorical(std::span<const double>(init_.data(), static_cast<std::size_t>(init_.size())));
  return {ObsPoint::symbol(z / n_states_), z % n_states_};
}

std::pair<ObsPoint, StateIndex> FinitePMM::sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const {
  const Eigen::RowVectorXd row = trans_.row(static_cast<Eigen::Index>(pair_index(x.symbol(), i)));
  const auto z = rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  return {ObsPoint::symbol(z / n_states_), z % n_states_};
}

FutureChain FinitePMM::future_chain(const ObsPoint& last) const {
  FutureChain fc;
  const auto n = static_cast<Eigen::Index>(n_states_);
  fc.entry = trans_.block(static_cast<Eigen::Index>(last.symbol() * n_states_), 0, n, trans_.cols());
  fc.step = trans_;
  fc.projection.resize(static_cast<std::size_t>(trans_.rows()));
  for (std::size_t z = 0; z < fc.projection.size(); ++z) fc.projection[z] = z % n_states_;
  return fc;
}

ValidationReport FinitePMM::validate() const {
  ValidationReport report;
  check_stochastic(trans_, "trans", report);
  check_probability(init_, "init", report);
  return report;
}

Eigen::VectorXd FinitePMM::stationary_law() const { return stationary_vector(trans_); }

ModelPtr FinitePMM::with_initial_law(const Eigen::VectorXd& law) const {
  return std::make_shared<FinitePMM>(n_obs_, n_states_, trans_, law);
}

ModelPtr FinitePMM::with_stationary_start() const { return with_initial_law(stationary_law()); }

// ---------------------------------------------------------------- HiddenMarkovModel

HiddenMarkovModel::HiddenMarkovModel(Eigen::MatrixXd trans, Eigen::VectorXd init, std::vector<EmissionSpec> emissions)
    : trans_(std::move(trans)), init_(std::move(init)), emissions_(std::move(emissions)) {
  const auto n = trans_.rows();
  if (n < 2) throw InvalidArgument("HMM: need at least two hidden states");
  require_square(trans_, n, "HMM transition");
  if (init_.size() != n) throw InvalidArgument("HMM init: shape mismatch");
  if (static_cast<Eigen::Index>(emissions_.size()) != n) throw InvalidArgument("HMM: one emission per state required");
  const bool finite = emissions_.front().is_finite();
  std::size_t size = 0;
  for (const auto& e : emissions_) {
    if (e.is_finite() != finite) throw InvalidArgument("HMM: mixed finite and continuous emissions");
    if (!finite && size != 0 && e.dimension() != size) throw InvalidArgument("HMM: emission dimensions differ");
    size = std::max(size, e.dimension());
  }
  space_ = {finite ? ObsSpace::Kind::finite : ObsSpace::Kind::euclidean, size};
  log_trans_ = to_log(trans_);
}

LogVector HiddenMarkovModel::log_emissions(const ObsPoint& x) const {
  LogVector out(static_cast<Eigen::Index>(emissions_.size()));
  for (std::size_t j = 0; j < emissions_.size(); ++j) out(static_cast<Eigen::Index>(j)) = emissions_[j].log_density(x);
  return out;
}

double HiddenMarkovModel::log_q(const ObsPoint&, StateIndex i, const ObsPoint& x_next, StateIndex j) const {
  const double lp = log_trans_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  if (lp == kNegInf) return kNegInf;
  return lp + emissions_[j].log_density(x_next);
}

double HiddenMarkovModel::init_log_density(const ObsPoint& x, StateIndex i) const {
  if (init_(static_cast<Eigen::Index>(i)) <= 0.0) return kNegInf;
  return std::log(init_(static_cast<Eigen::Index>(i))) + emissions_[i].log_density(x);
}

LogMatrix HiddenMarkovModel::log_step_matrix(const ObsPoint&, const ObsPoint& x_next) const {
  const LogVector le = log_emissions(x_next);
  LogMatrix k = log_trans_;
  for (Eigen::Index j = 0; j < k.cols(); ++j) k.col(j).array() += le(j);
  return k;
}

LogVector HiddenMarkovModel::log_prior(std::size_t time, const ObsPoint& x) const {
  const Eigen::VectorXd law = time <= 1 ? init_ : propagate_law(init_, trans_, time - 1);
  LogVector out = to_log(law);
  const LogVector le = log_emissions(x);
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = out(i) == kNegInf ? kNegInf : out(i) + le(i);
  return out;
}

bool HiddenMarkovModel::compatible(const ObsPoint& x, StateIndex i) const { return emissions_[i].support_member(x); }

std::pair<ObsPoint, StateIndex> HiddenMarkovModel::sample_initial(Rng& rng) const {
  const auto i = rng.categorical(std::span<const double>(init_.data(), static_cast<std::size_t>(init_.size())));
  return {emissions_[i].sample(rng), i};
}

std::pair<ObsPoint, StateIndex> HiddenMarkovModel::sample_step(const ObsPoint&, StateIndex i, Rng& rng) const {
  const Eigen::RowVectorXd row = trans_.row(static_cast<Eigen::Index>(i));
  const auto j = rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  return {emissions_[j].sample(rng), j};
}

FutureChain HiddenMarkovModel::future_chain(const ObsPoint&) const {
  FutureChain fc{trans_, trans_, {}};
  fc.projection.resize(n_states());
  for (std::size_t i = 0; i < fc.projection.size(); ++i) fc.projection[i] = i;
  return fc;
}

ValidationReport HiddenMarkovModel::validate() const {
  ValidationReport report;
  check_stochastic(trans_, "trans", report);
  check_probability(init_, "init", report);
  for (std::size_t j = 0; j < emissions_.size(); ++j) report.append(emissions_[j].validate("emission " + std::to_string(j)));
  return report;
}

Eigen::VectorXd HiddenMarkovModel::stationary_law() const { return stationary_vector(trans_); }

ModelPtr HiddenMarkovModel::with_initial_law(const Eigen::VectorXd& law) const {
  return std::make_shared<HiddenMarkovModel>(trans_, law, emissions_);
}

ModelPtr HiddenMarkovModel::with_stationary_start() const { return with_initial_law(stationary_law()); }

// ---------------------------------------------------------------- LinearSwitchingModel

LinearSwitchingModel::LinearSwitchingModel(Eigen::MatrixXd trans, Eigen::VectorXd init,
                                           std::vector<Eigen::MatrixXd> dynamics, std::vector<EmissionSpec> noise,
                                           std::optional<InitialObs> init_obs)
    : trans_(std::move(trans)), init_(std::move(init)), dynamics_(std::move(dynamics)), noise_(std::move(noise)) {
  const auto n = trans_.rows();
  if (n < 2) throw InvalidArgument("LMSM: need at least two hidden states");
  require_square(trans_, n, "LMSM transition");
  if (init_.size() != n) throw InvalidArgument("LMSM init: shape mismatch");
  if (static_cast<Eigen::Index>(dynamics_.size()) != n || static_cast<Eigen::Index>(noise_.size()) != n) {
    throw InvalidArgument("LMSM: one dynamics matrix and one noise law per state required");
  }
  dim_ = static_cast<std::size_t>(dynamics_.front().rows());
  for (std::size_t j = 0; j < noise_.size(); ++j) {
    require_square(dynamics_[j], static_cast<Eigen::Index>(dim_), "LMSM dynamics");
    if (noise_[j].is_finite() || noise_[j].dimension() != dim_) throw InvalidArgument("LMSM: noise dimension mismatch");
  }
  if (init_obs) {
    init_obs_ = std::move(*init_obs);
  }
  if (!init_obs_.density && init_obs_.point.size() == 0) init_obs_.point = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  log_trans_ = to_log(trans_);
}

double LinearSwitchingModel::log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const {
  const double lp = log_trans_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  if (lp == kNegInf) return kNegInf;
  return lp + noise_[j].log_density(ObsPoint::vector(x_next.vec() - dynamics_[j] * x.vec()));
}

double LinearSwitchingModel::init_log_density(const ObsPoint& x, StateIndex i) const {
  if (init_(static_cast<Eigen::Index>(i)) <= 0.0) return kNegInf;
  const double ly = std::log(init_(static_cast<Eigen::Index>(i)));
  if (init_obs_.density) return ly + init_obs_.density->log_density(x);
  // Point mass: density with respect to the atom.
  return (x.vec() - init_obs_.point).lpNorm<Eigen::Infinity>() <= 1e-12 ? ly : kNegInf;
}

LogMatrix LinearSwitchingModel::log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const {
  LogMatrix k = log_trans_;
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    const double h = noise_[static_cast<std::size_t>(j)].log_density(
        ObsPoint::vector(x_next.vec() - dynamics_[static_cast<std::size_t>(j)] * x.vec()));
    k.col(j).array() += h;
  }
  return k;
}

LogVector LinearSwitchingModel::log_prior(std::size_t time, const ObsPoint& x) const {
  const auto n = static_cast<Eigen::Index>(n_states());
  if (time <= 1) {
    LogVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = init_log_density(x, static_cast<StateIndex>(i));
    return out;
  }
  return to_log(propagate_law(init_, trans_, time - 1));
}

bool LinearSwitchingModel::compatible(const ObsPoint&, StateIndex) const { return true; }

std::pair<ObsPoint, StateIndex> LinearSwitchingModel::sample_initial(Rng& rng) const {
  const auto i = rng.categorical(std::span<const double>(init_.data(), static_cast<std::size_t>(init_.size())));
  if (init_obs_.density) return {init_obs_.density->sample(rng), i};
  return {ObsPoint::vector(init_obs_.point), i};
}

std::pair<ObsPoint, StateIndex> LinearSwitchingModel::sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const {
  const Eigen::RowVectorXd row = trans_.row(static_cast<Eigen::Index>(i));
  const auto j = rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
  const ObsPoint xi = noise_[j].sample(rng);
  return {ObsPoint::vector(dynamics_[j] * x.vec() + xi.vec()), j};
}

FutureChain LinearSwitchingModel::future_chain(const ObsPoint&) const {
  FutureChain fc{trans_, trans_, {}};
  fc.projection.resize(n_states());
  for (std::size_t i = 0; i < fc.projection.size(); ++i) fc.projection[i] = i;
  return fc;
}

ValidationReport LinearSwitchingModel::validate() const {
  ValidationReport report;
  check_stochastic(trans_, "trans", report);
  check_probability(init_, "init", report);
  for (std::size_t j = 0; j < noise_.size(); ++j) report.append(noise_[j].validate("noise " + std::to_string(j)));
  if (init_obs_.density) report.append(init_obs_.density->validate("init_x"));
  return report;
}

Eigen::VectorXd LinearSwitchingModel::stationary_law() const { return stationary_vector(trans_); }

ModelPtr LinearSwitchingModel::with_initial_law(const Eigen::VectorXd& law) const {
  return std::make_shared<LinearSwitchingModel>(trans_, law, dynamics_, noise_, init_obs_);
}

ModelPtr LinearSwitchingModel::with_stationary_start() const {
  throw InvalidArgument("LMSM: the stationary law of X has no closed form; no stationary start available");
}

double LinearSwitchingModel::max_dynamics_norm() const {
  double best = 0.0;
  for (const auto& f : dynamics_) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f);
    best = std::max(best, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
  }
  return best;
}

// ---------------------------------------------------------------- operations

ValidationReport validate_model(const ModelKernel& model) { return model.validate(); }

Trajectory sample_trajectory(const ModelKernel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_trajectory: n must be >= 1");
  Rng rng(seed);
  Trajectory traj;
  traj.seed = seed;
  traj.xs.reserve(n);
  traj.ys.reserve(n);
  auto [x, y] = model.sample_initial(rng);
  traj.xs.push_back(x);
  traj.ys.push_back(y);
  for (std::size_t k = 1; k < n; ++k) {
    auto [xn, yn] = model.sample_step(traj.xs.back(), traj.ys.back(), rng);
    traj.xs.push_back(std::move(xn));
    traj.ys.push_back(yn);
  }
  return traj;
}

double joint_log_density(const ModelKernel& model, ObsView xs, std::span<const StateIndex> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("joint_log_density: length mismatch");
  if (xs.empty()) throw InvalidArgument("joint_log_density: empty sequence");
  double total = model.init_log_density(xs[0], ys[0]);
  for (std::size_t k = 1; k < xs.size() && total > kNegInf; ++k) {
    total += model.log_q(xs[k - 1], ys[k - 1], xs[k], ys[k]);
  }
  return total;
}

LogMatrix block_transition_log_matrix(const ModelKernel& model, ObsView xs) {
  if (xs.size() < 2) throw InvalidArgument("block transition density needs n >= 2");
  LogMatrix acc = model.log_step_matrix(xs[0], xs[1]);
  for (std::size_t k = 2; k < xs.size(); ++k) acc = log_matmul(acc, model.log_step_matrix(xs[k - 1], xs[k]));
  return acc;
}

double block_transition_density(const ModelKernel& model, ObsView xs, StateIndex i, StateIndex j) {
  return block_transition_log_matrix(model, xs)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

Eigen::VectorXd stationary_distribution(const ModelKernel& model) { return model.stationary_law(); }

Eigen::MatrixXd finite_joint_transition(const ModelKernel& model) {
  const auto space = model.obs_space();
  if (!space.finite()) throw InvalidArgument("finite_joint_transition: observation space is not finite");
  const auto ny = model.n_states();
  const auto nz = static_cast<Eigen::Index>(space.size * ny);
  Eigen::MatrixXd m(nz, nz);
  for (std::size_t a = 0; a < space.size; ++a) {
    for (std::size_t b = 0; b < space.size; ++b) {
      const LogMatrix k = model.log_step_matrix(ObsPoint::symbol(a), ObsPoint::symbol(b));
      m.block(static_cast<Eigen::Index>(a * ny), static_cast<Eigen::Index>(b * ny), static_cast<Eigen::Index>(ny),
              static_cast<Eigen::Index>(ny)) = from_log(k);
    }
  }
  return m;
}

}  // namespace pmmf

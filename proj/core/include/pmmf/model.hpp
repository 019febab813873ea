#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pmmf/log_math.hpp"
#include "pmmf/rng.hpp"

namespace pmmf {

using StateIndex = std::size_t;

/// One observation: a symbol of a finite alphabet or a point of R^d.
class ObsPoint {
 public:
  ObsPoint() : value_(std::size_t{0}) {}
  static ObsPoint symbol(std::size_t s) { return ObsPoint(s); }
  static ObsPoint vector(Eigen::VectorXd v) { return ObsPoint(std::move(v)); }

  bool is_symbol() const { return std::holds_alternative<std::size_t>(value_); }
  std::size_t symbol() const;
  const Eigen::VectorXd& vec() const;

  friend bool operator==(const ObsPoint& a, const ObsPoint& b);

 private:
  explicit ObsPoint(std::size_t s) : value_(s) {}
  explicit ObsPoint(Eigen::VectorXd v) : value_(std::move(v)) {}
  std::variant<std::size_t, Eigen::VectorXd> value_;
};

using ObsSeq = std::vector<ObsPoint>;
using ObsView = std::span<const ObsPoint>;

ObsSeq symbols(std::initializer_list<std::size_t> values);
ObsSeq symbols(std::span<const std::size_t> values);

struct ObsSpace {
  enum class Kind { finite, euclidean };
  Kind kind = Kind::finite;
  /// Alphabet size |X| for finite spaces, dimension d for euclidean ones.
  std::size_t size = 0;
  bool finite() const { return kind == Kind::finite; }
};

struct ValidationIssue {
  std::string where;
  std::string what;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  void add(std::string where, std::string what) { issues.push_back({std::move(where), std::move(what)}); }
  void append(const ValidationReport& other) {
    issues.insert(issues.end(), other.issues.begin(), other.issues.end());
  }
};

/// Emission (or noise) law given as log-density, exact support predicate and sampler.
class EmissionSpec {
 public:
  enum class Kind { categorical, gaussian, custom };
  using LogDensityFn = std::function<double(const ObsPoint&)>;
  using SupportFn = std::function<bool(const ObsPoint&)>;
  using SamplerFn = std::function<ObsPoint(Rng&)>;

  static EmissionSpec categorical(std::vector<double> weights);
  static EmissionSpec gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  static EmissionSpec custom(LogDensityFn log_density, SupportFn support, SamplerFn sampler,
                             std::size_t dimension);

  Kind kind() const { return kind_; }
  double log_density(const ObsPoint& x) const;
  /// Membership in G = {x : f(x) > 0}.
  bool support_member(const ObsPoint& x) const;
  ObsPoint sample(Rng& rng) const;

  const std::vector<double>& weights() const { return weights_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  /// Alphabet size for categorical laws, d otherwise.
  std::size_t dimension() const { return dimension_; }
  bool is_finite() const { return kind_ == Kind::categorical; }
  /// True when the support is all of R^d (Gaussian).
  bool full_support() const { return kind_ == Kind::gaussian; }

  /// Normalization and support/density consistency checks.
  ValidationReport validate(const std::string& where) const;

 private:
  EmissionSpec() = default;
  Kind kind_ = Kind::categorical;
  std::size_t dimension_ = 0;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
  bool cov_ok_ = true;
  LogDensityFn custom_density_;
  SupportFn custom_support_;
  SamplerFn custom_sampler_;
};

/// Law of the hidden component after the last observation. Beyond the window the
/// chain may need more than Y to stay Markov (finite PMMs carry X along), so it runs
/// on an augmented space with a projection back to Y.
struct FutureChain {
  Eigen::MatrixXd entry;                ///< |Y| x A: from Y_n (given x_n) to the augmented state at n+1
  Eigen::MatrixXd step;                 ///< A x A
  std::vector<StateIndex> projection;   ///< augmented state -> Y
};

enum class ModelKind { finite_pmm, hmm, lmsm };

/// Transition kernel density q(x', j | x, i) of a pairwise Markov chain Z = (X, Y).
/// Implementations are immutable after construction.
class ModelKernel {
 public:
  virtual ~ModelKernel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t n_states() const = 0;
  virtual ObsSpace obs_space() const = 0;

  virtual double log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const = 0;
  virtual double init_log_density(const ObsPoint& x, StateIndex i) const = 0;

  /// K(i, j) = log q(x_next, j | x, i).
  virtual LogMatrix log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const;

  /// Log density of Z_time at (x, .), time >= 1.
  virtual LogVector log_prior(std::size_t time, const ObsPoint& x) const = 0;
  /// False when log_prior(time, .) is a dominating surrogate instead of the true marginal.
  virtual bool prior_is_exact(std::size_t time) const { (void)time; return true; }

  /// Whether (x, i) can occur at all; used for the x_1-compatible restriction of Y+.
  virtual bool compatible(const ObsPoint& x, StateIndex i) const = 0;

  virtual std::pair<ObsPoint, StateIndex> sample_initial(Rng& rng) const = 0;
  virtual std::pair<ObsPoint, StateIndex> sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const = 0;

  virtual FutureChain future_chain(const ObsPoint& last) const = 0;

  virtual ValidationReport validate() const = 0;

  /// Stationary law: over X x Y for finite PMMs, over Y otherwise.
  virtual Eigen::VectorXd stationary_law() const = 0;
  /// Representable initial law (same shape as stationary_law()).
  virtual Eigen::VectorXd initial_law() const = 0;
  virtual std::shared_ptr<const ModelKernel> with_initial_law(const Eigen::VectorXd& law) const = 0;
  /// Same kernel started from its stationary law. Throws when not representable.
  virtual std::shared_ptr<const ModelKernel> with_stationary_start() const = 0;
};

using ModelPtr = std::shared_ptr<const ModelKernel>;

/// PMM on a finite alphabet; the pair z = (x, i) is indexed as x * |Y| + i.
class FinitePMM final : public ModelKernel {
 public:
  FinitePMM(std::size_t n_obs, std::size_t n_states, Eigen::MatrixXd trans, Eigen::VectorXd init);

  ModelKind kind() const override { return ModelKind::finite_pmm; }
  std::size_t n_states() const override { return n_states_; }
  std::size_t n_obs() const { return n_obs_; }
  ObsSpace obs_space() const override { return {ObsSpace::Kind::finite, n_obs_}; }
  std::size_t pair_index(std::size_t x, StateIndex i) const { return x * n_states_ + i; }

  const Eigen::MatrixXd& trans() const { return trans_; }
  const Eigen::VectorXd& init() const { return init_; }

  double log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const override;
  double init_log_density(const ObsPoint& x, StateIndex i) const override;
  LogMatrix log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const override;
  LogVector log_prior(std::size_t time, const ObsPoint& x) const override;
  bool compatible(const ObsPoint& x, StateIndex i) const override;
  std::pair<ObsPoint, StateIndex> sample_initial(Rng& rng) const override;
  std::pair<ObsPoint, StateIndex> sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const override;
  FutureChain future_chain(const ObsPoint& last) const override;
  ValidationReport validate() const override;
  Eigen::VectorXd stationary_law() const override;
  Eigen::VectorXd initial_law() const override { return init_; }
  ModelPtr with_initial_law(const Eigen::VectorXd& law) const override;
  ModelPtr with_stationary_start() const override;

 private:
  std::size_t n_obs_;
  std::size_t n_states_;
  Eigen::MatrixXd trans_;
  Eigen::VectorXd init_;
  LogMatrix log_trans_;
  LogVector log_init_;
  std::vector<bool> recurrent_;
};

/// q(x', j | x, i) = p_ij f_j(x').
class HiddenMarkovModel final : public ModelKernel {
 public:
  HiddenMarkovModel(Eigen::MatrixXd trans, Eigen::VectorXd init, std::vector<EmissionSpec> emissions);

  ModelKind kind() const override { return ModelKind::hmm; }
  std::size_t n_states() const override { return static_cast<std::size_t>(trans_.rows()); }
  ObsSpace obs_space() const override { return space_; }

  const Eigen::MatrixXd& trans() const { return trans_; }
  const Eigen::VectorXd& init() const { return init_; }
  const std::vector<EmissionSpec>& emissions() const { return emissions_; }

  double log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const override;
  double init_log_density(const ObsPoint& x, StateIndex i) const override;
  LogMatrix log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const override;
  LogVector log_prior(std::size_t time, const ObsPoint& x) const override;
  bool compatible(const ObsPoint& x, StateIndex i) const override;
  std::pair<ObsPoint, StateIndex> sample_initial(Rng& rng) const override;
  std::pair<ObsPoint, StateIndex> sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const override;
  FutureChain future_chain(const ObsPoint& last) const override;
  ValidationReport validate() const override;
  Eigen::VectorXd stationary_law() const override;
  Eigen::VectorXd initial_law() const override { return init_; }
  ModelPtr with_initial_law(const Eigen::VectorXd& law) const override;
  ModelPtr with_stationary_start() const override;

  LogVector log_emissions(const ObsPoint& x) const;

 private:
  Eigen::MatrixXd trans_;
  Eigen::VectorXd init_;
  std::vector<EmissionSpec> emissions_;
  LogMatrix log_trans_;
  ObsSpace space_;
};

/// X_k = F(Y_k) X_{k-1} + xi_k(Y_k), so q(x', j | x, i) = p_ij h_j(x' - F(j) x).
class LinearSwitchingModel final : public ModelKernel {
 public:
  /// Law of X_1: a point mass (default: the origin) or a density.
  struct InitialObs {
    Eigen::VectorXd point;
    std::optional<EmissionSpec> density;
  };

  LinearSwitchingModel(Eigen::MatrixXd trans, Eigen::VectorXd init, std::vector<Eigen::MatrixXd> dynamics,
                       std::vector<EmissionSpec> noise, std::optional<InitialObs> init_obs = std::nullopt);

  ModelKind kind() const override { return ModelKind::lmsm; }
  std::size_t n_states() const override { return static_cast<std::size_t>(trans_.rows()); }
  ObsSpace obs_space() const override { return {ObsSpace::Kind::euclidean, dim_}; }
  std::size_t dimension() const { return dim_; }

  const Eigen::MatrixXd& trans() const { return trans_; }
  const Eigen::VectorXd& init() const { return init_; }
  const std::vector<Eigen::MatrixXd>& dynamics() const { return dynamics_; }
  const std::vector<EmissionSpec>& noise() const { return noise_; }
  const InitialObs& initial_obs() const { return init_obs_; }

  double log_q(const ObsPoint& x, StateIndex i, const ObsPoint& x_next, StateIndex j) const override;
  double init_log_density(const ObsPoint& x, StateIndex i) const override;
  LogMatrix log_step_matrix(const ObsPoint& x, const ObsPoint& x_next) const override;
  /// For time > 1 the X-marginal has no closed form; the state marginal is paired
  /// with a flat observation density, which dominates the true prior.
  LogVector log_prior(std::size_t time, const ObsPoint& x) const override;
  bool prior_is_exact(std::size_t time) const override { return time == 1; }
  bool compatible(const ObsPoint& x, StateIndex i) const override;
  std::pair<ObsPoint, StateIndex> sample_initial(Rng& rng) const override;
  std::pair<ObsPoint, StateIndex> sample_step(const ObsPoint& x, StateIndex i, Rng& rng) const override;
  FutureChain future_chain(const ObsPoint& last) const override;
  ValidationReport validate() const override;
  Eigen::VectorXd stationary_law() const override;
  Eigen::VectorXd initial_law() const override { return init_; }
  ModelPtr with_initial_law(const Eigen::VectorXd& law) const override;
  ModelPtr with_stationary_start() const override;

  double max_dynamics_norm() const;

 private:
  Eigen::MatrixXd trans_;
  Eigen::VectorXd init_;
  std::vector<Eigen::MatrixXd> dynamics_;
  std::vector<EmissionSpec> noise_;
  InitialObs init_obs_;
  LogMatrix log_trans_;
  std::size_t dim_;
};

struct Trajectory {
  ObsSeq xs;
  std::vector<StateIndex> ys;
  std::uint64_t seed = 0;
};

ValidationReport validate_model(const ModelKernel& model);

/// Draws (x_1, y_1) from the initial law and then n-1 kernel steps.
Trajectory sample_trajectory(const ModelKernel& model, std::size_t n, std::uint64_t seed);

/// log p(x_1, y_1) + sum_k log q(z_k | z_{k-1}).
double joint_log_density(const ModelKernel& model, ObsView xs, std::span<const StateIndex> ys);

/// Matrix of log p_ij(x_{1:n}) = log sum_{y_{2:n}: y_n = j} p(x_{2:n}, y_{2:n} | x_1, y_1 = i).
LogMatrix block_transition_log_matrix(const ModelKernel& model, ObsView xs);
double block_transition_density(const ModelKernel& model, ObsView xs, StateIndex i, StateIndex j);

/// Stationary law of the model (see ModelKernel::stationary_law).
Eigen::VectorXd stationary_distribution(const ModelKernel& model);

/// Membership mask of the unique closed communicating class of a stochastic matrix.
/// Throws NotIrreducibleError when there is more than one closed class.
std::vector<bool> recurrent_class(const Eigen::MatrixXd& stochastic);

/// Stationary vector of a stochastic matrix with a unique closed class.
Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& stochastic);

/// Transition matrix of Z over X x Y (index x * |Y| + i) for a finite-alphabet model.
Eigen::MatrixXd finite_joint_transition(const ModelKernel& model);

/// Row vector `law` times `stochastic`^power by repeated squaring.
Eigen::VectorXd propagate_law(const Eigen::VectorXd& law, const Eigen::MatrixXd& stochastic, std::size_t power);

}  // namespace pmmf

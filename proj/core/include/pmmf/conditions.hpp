#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmmf/certificate.hpp"
#include "pmmf/model.hpp"

namespace pmmf {

/// Exact support of p_ij(x_{1:r}). With `restrict_rows`, rows i with (x_1, i) impossible are dropped.
YPlusSet enumerate_y_plus(const ModelKernel& model, ObsView xs, bool restrict_rows = false);

struct PrimitivityResult {
  bool primitive = false;
  std::optional<std::size_t> exponent;
};

/// Smallest R with M^R > 0, searched up to the Wielandt bound (n-1)^2 + 1.
PrimitivityResult check_primitive(const Eigen::MatrixXd& m);

// ---------------------------------------------------------------- finite enumeration

struct BlockFailure {
  std::size_t r = 0;
  std::size_t n_blocks = 0;
  std::size_t n_empty = 0;
  std::size_t n_non_product = 0;
  std::size_t n_a2_fail = 0;
  ObsSeq witness;
  YPlusSet witness_y_plus;             // exact support
  YPlusSet witness_restricted_y_plus;  // rows compatible with x_1 only
  std::string reason;
};

struct A1Result {
  std::optional<ForgettingCertificate> certificate;
  std::vector<BlockFailure> failures;  // one per r that failed
  bool ok() const { return certificate.has_value(); }
};

/// Scans r = 2..r_max over all of X^r. Throws NotIrreducibleError when Z has several closed classes.
A1Result check_a1_a2_finite(const ModelKernel& model, std::size_t r_max = 8);

// ---------------------------------------------------------------- clusters (HMM)

/// Support cell G_C = {x : f_i(x) > 0 exactly for i in C}.
struct Cell {
  std::vector<StateIndex> states;
  std::vector<std::size_t> symbols;  // finite alphabets: every member of the cell
  ObsPoint witness;
};

struct Cluster {
  Cell cell;
  bool passing = false;
  std::optional<std::size_t> exponent;  // primitivity exponent R of P_C
};

struct ClusterReport {
  std::vector<Cluster> clusters;
  bool undetermined = false;
  std::string note;

  bool every_state_covered(std::size_t n_states) const;
  /// Passing cluster with the smallest R (ties: first found).
  const Cluster* best_passing() const;
};

/// Emission supports of the states in a cell; witness points are needed for custom laws.
ClusterReport find_clusters(const HiddenMarkovModel& model, const ObsSeq& witnesses = {});

/// Certificate from the cluster construction: r = R + 2, Y+ = Y_C x C.
/// Throws InvalidArgument when C does not pass.
ForgettingCertificate certificate_from_cluster(const HiddenMarkovModel& model, const Cluster& cluster,
                                               std::size_t n_samples = 10000, std::uint64_t seed = 1);

struct PositiveRowResult {
  bool positive_row = false;
  std::optional<StateIndex> row;
  std::vector<std::vector<StateIndex>> cell_sequence;  // C_1, ..., one per block coordinate after x_1
  std::optional<ForgettingCertificate> certificate;
  std::string note;
};

/// True iff some row of P is strictly positive; then builds E cell by cell until every
/// row of Y+_(1) connects to that state. Throws NotIrreducibleError when P is reducible.
PositiveRowResult check_positive_row(const HiddenMarkovModel& model, const ClusterReport& clusters,
                                     std::size_t n_samples = 10000, std::uint64_t seed = 1);

// ---------------------------------------------------------------- extra condition, LMSM

struct SopotResult {
  bool ok = false;
  double lambda = 0.0;
  std::size_t n_checked = 0;
  ObsSeq witness;  // member of E attaining the minimum (or a zero)
  std::string reason;
};

/// inf over E of min_{(i,j) in Y+_(1) x Y+_(2)} p_il(x_{1:t}) p_lj(x_{t:r}) / p_ij(x_{1:r}).
/// Explicit E is scanned fully; otherwise n_samples members are drawn.
SopotResult check_sopot(const ModelKernel& model, const ForgettingCertificate& cert, std::size_t t, StateIndex l,
                        std::size_t n_samples = 10000, std::uint64_t seed = 1);

struct LmsmResult {
  std::optional<ForgettingCertificate> certificate;
  std::vector<StateIndex> cluster;  // C
  double epsilon0 = 0.0;
  std::string reason;
};

/// Condition (i) checked on a grid of B(0, epsilon); condition (ii) recorded as an assumption.
LmsmResult check_lmsm(const LinearSwitchingModel& model, double epsilon, std::size_t n_samples = 10000,
                      std::uint64_t seed = 1);

/// Picks the applicable route for the model class; nullopt with a reason when none succeeds.
struct AutoCertificate {
  std::optional<ForgettingCertificate> certificate;
  std::string reason;
};
AutoCertificate auto_certificate(const ModelKernel& model, std::size_t r_max = 8, double epsilon = 1.0);

/// Worst-case |log p_ij| bound check of a certificate on a block: true iff Y+(x) equals
/// cert.y_plus and 1/n0 <= p_ij(x) <= n0 on it.
bool certificate_holds_on(const ModelKernel& model, const ForgettingCertificate& cert, ObsView block);

}  // namespace pmmf

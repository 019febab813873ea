#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmmf/model.hpp"

namespace pmmf {

/// Support {(i, j) : p_ij(x_{1:r}) > 0} of a block transition matrix.
struct YPlusSet {
  std::size_t r = 0;
  std::vector<std::pair<StateIndex, StateIndex>> pairs;  // sorted
  std::vector<StateIndex> proj1;                         // sorted
  std::vector<StateIndex> proj2;                         // sorted

  static YPlusSet from_pairs(std::size_t r, std::vector<std::pair<StateIndex, StateIndex>> pairs);
  static YPlusSet product(std::size_t r, const std::vector<StateIndex>& rows, const std::vector<StateIndex>& cols);

  bool empty() const { return pairs.empty(); }
  bool is_product() const { return pairs.size() == proj1.size() * proj2.size(); }
  bool contains(StateIndex i, StateIndex j) const;
  bool in_proj1(StateIndex i) const;
  bool in_proj2(StateIndex j) const;
  /// Same pair set (r is not compared).
  bool same_pairs(const YPlusSet& other) const { return pairs == other.pairs; }
  std::string to_string() const;
};

enum class Provenance { enumerated, cluster_lemma, lmsm_lemma, user_asserted };

const char* provenance_name(Provenance p);

/// A verified (r, E, Y+, n0, rho) tuple. Predicates built by the checkers refer to the
/// model they were built from, which must outlive the certificate.
struct ForgettingCertificate {
  std::size_t r = 0;
  YPlusSet y_plus;
  double n0 = 1.0;
  double rho = 0.0;
  Provenance provenance = Provenance::enumerated;
  /// Membership of a length-r observation block in E.
  std::function<bool(ObsView)> contains;
  /// Explicit E, when it is finite and small enough to list.
  std::optional<std::vector<ObsSeq>> members;
  /// Draws a member of E; empty when E cannot be sampled.
  std::function<ObsSeq(Rng&)> sample_member;
  std::vector<std::string> assumptions;
  std::string description;

  bool in_E(ObsView block) const { return block.size() == r && contains && contains(block); }
  std::size_t r_prime() const { return r - 1; }
};

inline double rho_from_n0(double n0) { return 1.0 - 1.0 / (n0 * n0); }

}  // namespace pmmf

#include "pmmf/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "pmmf/errors.hpp"

namespace pmmf {

namespace {

constexpr std::size_t kEnumerationBudget = 4'000'000;
constexpr std::size_t kExplicitMembers = 200'000;

std::vector<StateIndex> support_set(const HiddenMarkovModel& model, const ObsPoint& x) {
  std::vector<StateIndex> s;
  for (std::size_t i = 0; i < model.n_states(); ++i) {
    if (model.emissions()[i].support_member(x)) s.push_back(i);
  }
  return s;
}

// p_ij(x_{1:r}) in linear space; exact zeros where the log version is -inf.
Eigen::MatrixXd block_linear(const ModelKernel& model, ObsView xs) {
  Eigen::MatrixXd acc = from_log(model.log_step_matrix(xs[0], xs[1]));
  for (std::size_t k = 2; k < xs.size(); ++k) acc = acc * from_log(model.log_step_matrix(xs[k - 1], xs[k]));
  return acc;
}

// max over Y+ of max(p, 1/p)
double n0_on(const Eigen::MatrixXd& p, const YPlusSet& y) {
  double worst = 1.0;
  for (const auto& [i, j] : y.pairs) {
    const double v = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    worst = std::max({worst, v, 1.0 / v});
  }
  return worst;
}

bool within_n0(const Eigen::MatrixXd& p, const YPlusSet& y, double n0) {
  for (const auto& [i, j] : y.pairs) {
    const double v = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (!(v >= (1.0 / n0) * (1.0 - 1e-12) && v <= n0 * (1.0 + 1e-12))) return false;
  }
  return true;
}

ObsSeq decode_index(std::size_t index, std::size_t nx, std::size_t r) {
  ObsSeq xs(r);
  for (std::size_t k = r; k-- > 0;) {
    xs[k] = ObsPoint::symbol(index % nx);
    index /= nx;
  }
  return xs;
}

std::vector<std::size_t> symbol_vector(ObsView xs) {
  std::vector<std::size_t> v;
  v.reserve(xs.size());
  for (const auto& x : xs) v.push_back(x.symbol());
  return v;
}

std::string join_states(const std::vector<StateIndex>& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k];
  os << '}';
  return os.str();
}

std::string seq_string(ObsView xs) {
  std::ostringstream os;
  for (const auto& x : xs) {
    if (x.is_symbol()) {
      os << x.symbol();
    } else {
      os << '[' << x.vec().transpose() << ']';
    }
  }
  return os.str();
}

std::vector<StateIndex> states_feeding(const Eigen::MatrixXd& p, const std::vector<StateIndex>& c) {
  std::vector<StateIndex> out;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (auto j : c) {
      if (p(i, static_cast<Eigen::Index>(j)) > 0.0) {
        out.push_back(static_cast<StateIndex>(i));
        break;
      }
    }
  }
  return out;
}

Eigen::MatrixXd sub_matrix(const Eigen::MatrixXd& p, const std::vector<StateIndex>& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = p(static_cast<Eigen::Index>(c[a]), static_cast<Eigen::Index>(c[b]));
  }
  return out;
}

ObsPoint uniform_in_ball(Rng& rng, std::size_t d, double radius) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  double norm = 0.0;
  while (norm == 0.0) {
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.normal();
    norm = v.norm();
  }
  const double rad = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  return ObsPoint::vector(v * (rad / norm));
}

// Draws a point of the cell by rejection from the emissions of its states.
ObsPoint sample_cell(const HiddenMarkovModel& model, const Cell& cell, Rng& rng) {
  if (!cell.symbols.empty()) return ObsPoint::symbol(cell.symbols[static_cast<std::size_t>(rng.uniform() * cell.symbols.size())]);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto i = cell.states[static_cast<std::size_t>(rng.uniform() * cell.states.size())];
    ObsPoint x = model.emissions()[i].sample(rng);
    if (support_set(model, x) == cell.states) return x;
  }
  return cell.witness;
}

struct FirstCoordinate {
  std::function<bool(const ObsPoint&)> member;
  std::vector<std::size_t> symbols;  // finite alphabets
  std::function<ObsPoint(Rng&)> sample;
  ObsPoint witness;
};

// E = first x cell_1 x ... x cell_{r-1} for an HMM; Y+ is constant on E because positivity of
// f_j(x) on a cell depends only on the cell.
ForgettingCertificate certificate_from_cells(const HiddenMarkovModel& model, const FirstCoordinate& first,
                                             const std::vector<Cell>& cells, Provenance provenance,
                                             std::string description, std::size_t n_samples, std::uint64_t seed) {
  const std::size_t r = cells.size() + 1;
  ObsSeq rep{first.witness};
  for (const auto& c : cells) rep.push_back(c.witness);
  const YPlusSet y = enumerate_y_plus(model, rep);
  if (y.empty() || !y.is_product()) throw Error("cell construction did not produce a product Y+: " + y.to_string());

  auto cert = std::make_shared<ForgettingCertificate>();
  cert->r = r;
  cert->y_plus = y;
  cert->provenance = provenance;
  cert->description = std::move(description);

  const bool finite = model.obs_space().finite();
  std::size_t count = 1;
  if (finite) {
    for (const auto& c : cells) count *= c.symbols.size();
  }

  auto structural = [cells, first, &model](ObsView xs) {
    if (!first.member(xs[0])) return false;
    for (std::size_t k = 1; k < xs.size(); ++k) {
      if (support_set(model, xs[k]) != cells[k - 1].states) return false;
    }
    return true;
  };

  if (finite && count <= kExplicitMembers) {
    // The HMM kernel ignores x_1, so the scan runs over x_{2:r} with a fixed x_1.
    double n0 = 1.0;
    ObsSeq xs = rep;
    std::vector<std::size_t> pos(cells.size(), 0);
    while (true) {
      for (std::size_t k = 0; k < cells.size(); ++k) xs[k + 1] = ObsPoint::symbol(cells[k].symbols[pos[k]]);
      n0 = std::max(n0, n0_on(block_linear(model, xs), y));
      std::size_t k = cells.size();
      while (k > 0 && ++pos[k - 1] == cells[k - 1].symbols.size()) pos[--k] = 0;
      if (k == 0) break;
    }
    cert->n0 = n0;
    cert->contains = [structural, r](ObsView xs) { return xs.size() == r && structural(xs); };
    if (count * first.symbols.size() <= kExplicitMembers) {
      std::vector<ObsSeq> members;
      std::vector<std::size_t> p(r, 0);
      while (true) {
        ObsSeq m(r);
        m[0] = ObsPoint::symbol(first.symbols[p[0]]);
        for (std::size_t k = 1; k < r; ++k) m[k] = ObsPoint::symbol(cells[k - 1].symbols[p[k]]);
        members.push_back(std::move(m));
        std::size_t k = r;
        while (k > 0) {
          const std::size_t lim = k == 1 ? first.symbols.size() : cells[k - 2].symbols.size();
          if (++p[k - 1] < lim) break;
          p[--k] = 0;
        }
        if (k == 0) break;
      }
      cert->members = std::move(members);
    }
  } else {
    Rng rng(seed);
    double n0 = 1.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      ObsSeq xs{first.sample(rng)};
      for (const auto& c : cells) xs.push_back(sample_cell(model, c, rng));
      if (!structural(xs)) continue;
      n0 = std::max(n0, n0_on(block_linear(model, xs), y));
    }
    // Sampled envelope, inflated; E is shrunk to where the bound holds.
    cert->n0 = 2.0 * n0;
    const double bound = cert->n0;
    cert->contains = [structural, r, y, bound, &model](ObsView xs) {
      return xs.size() == r && structural(xs) && within_n0(block_linear(model, xs), y, bound);
    };
    cert->assumptions.push_back("n0 is a sampled envelope inflated by 2; E is restricted to blocks within that bound");
  }
  cert->rho = rho_from_n0(cert->n0);
  cert->sample_member = [cells, first, &model](Rng& rng) {
    ObsSeq xs{first.sample(rng)};
    for (const auto& c : cells) xs.push_back(sample_cell(model, c, rng));
    return xs;
  };
  return *cert;
}

}  // namespace

YPlusSet enumerate_y_plus(const ModelKernel& model, ObsView xs, bool restrict_rows) {
  if (xs.size() < 2) throw InvalidArgument("enumerate_y_plus: r must be >= 2");
  const LogMatrix l = block_transition_log_matrix(model, xs);
  std::vector<std::pair<StateIndex, StateIndex>> pairs;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (restrict_rows && !model.compatible(xs[0], static_cast<StateIndex>(i))) continue;
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      if (l(i, j) > kNegInf) pairs.emplace_back(static_cast<StateIndex>(i), static_cast<StateIndex>(j));
    }
  }
  return YPlusSet::from_pairs(xs.size(), std::move(pairs));
}

PrimitivityResult check_primitive(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return {};
  const auto n = static_cast<std::size_t>(m.rows());
  const Eigen::MatrixXd b = (m.array() > 0.0).cast<double>().matrix();
  Eigen::MatrixXd p = b;
  const std::size_t bound = (n - 1) * (n - 1) + 1;
  for (std::size_t k = 1; k <= bound; ++k) {
    if ((p.array() > 0.0).all()) return {true, k};
    p = ((p * b).array() > 0.0).cast<double>().matrix();
  }
  return {};
}

bool certificate_holds_on(const ModelKernel& model, const ForgettingCertificate& cert, ObsView block) {
  if (block.size() != cert.r) return false;
  if (!enumerate_y_plus(model, block).same_pairs(cert.y_plus)) return false;
  return within_n0(block_linear(model, block), cert.y_plus, cert.n0);
}

// ---------------------------------------------------------------- enumeration

A1Result check_a1_a2_finite(const ModelKernel& model, std::size_t r_max) {
  const auto space = model.obs_space();
  if (!space.finite()) throw InvalidArgument("check_a1_a2_finite: observation space is not finite");
  const auto nx = space.size;
  const auto ny = model.n_states();
  const std::vector<bool> closed = recurrent_class(finite_joint_transition(model));

  A1Result result;
  for (std::size_t r = 2; r <= r_max; ++r) {
    BlockFailure fail;
    fail.r = r;
    std::size_t total = 1;
    for (std::size_t k = 0; k < r; ++k) total *= nx;
    if (total > kEnumerationBudget) {
      fail.reason = "enumeration budget exceeded (|X|^r too large)";
      result.failures.push_back(std::move(fail));
      break;
    }
    fail.n_blocks = total;

    struct Group {
      std::vector<std::size_t> members;
      double n0 = 1.0;
      YPlusSet y;
    };
    std::map<std::vector<std::pair<StateIndex, StateIndex>>, Group> groups;
    std::optional<std::size_t> empty_witness, non_product_witness;
    for (std::size_t idx = 0; idx < total; ++idx) {
      const ObsSeq xs = decode_index(idx, nx, r);
      const YPlusSet y = enumerate_y_plus(model, xs);
      if (y.empty()) {
        ++fail.n_empty;
        if (!empty_witness) empty_witness = idx;
        continue;
      }
      if (!y.is_product()) {
        ++fail.n_non_product;
        if (!non_product_witness) non_product_witness = idx;
        continue;
      }
      auto& g = groups[y.pairs];
      g.y = y;
      g.members.push_back(idx);
      g.n0 = std::max(g.n0, n0_on(block_linear(model, xs), y));
    }

    const Group* best = nullptr;
    std::optional<std::size_t> a2_witness;
    for (const auto& [pairs, g] : groups) {
      bool a2 = false;
      for (auto idx : g.members) {
        const auto x1 = decode_index(idx, nx, r)[0].symbol();
        for (auto i : g.y.proj1) a2 = a2 || closed[x1 * ny + i];
        if (a2) break;
      }
      if (!a2) {
        fail.n_a2_fail += g.members.size();
        if (!a2_witness) a2_witness = g.members.front();
        continue;
      }
      if (!best || g.members.size() > best->members.size() ||
          (g.members.size() == best->members.size() && g.members.front() < best->members.front())) {
        best = &g;
      }
    }

    if (best) {
      auto members = std::make_shared<std::set<std::vector<std::size_t>>>();
      std::vector<ObsSeq> listed;
      for (auto idx : best->members) {
        listed.push_back(decode_index(idx, nx, r));
        members->insert(symbol_vector(listed.back()));
      }
      ForgettingCertificate cert;
      cert.r = r;
      cert.y_plus = best->y;
      cert.n0 = best->n0;
      cert.rho = rho_from_n0(cert.n0);
      cert.provenance = Provenance::enumerated;
      cert.contains = [members, r](ObsView xs) {
        if (xs.size() != r) return false;
        for (const auto& x : xs) {
          if (!x.is_symbol()) return false;
        }
        return members->count(symbol_vector(xs)) > 0;
      };
      auto shared = std::make_shared<std::vector<ObsSeq>>(listed);
      cert.sample_member = [shared](Rng& rng) {
        return (*shared)[static_cast<std::size_t>(rng.uniform() * shared->size())];
      };
      cert.members = std::move(listed);
      cert.assumptions.push_back("A2 via the unique closed class of Z (finite state space)");
      std::ostringstream os;
      os << "exhaustive scan of X^" << r << ": " << best->members.size() << " blocks share Y+ = " << best->y.to_string();
      cert.description = os.str();
      result.certificate = std::move(cert);
      return result;
    }

    const auto witness = non_product_witness ? non_product_witness : (empty_witness ? empty_witness : a2_witness);
    if (witness) {
      fail.witness = decode_index(*witness, nx, r);
      fail.witness_y_plus = enumerate_y_plus(model, fail.witness);
      fail.witness_restricted_y_plus = enumerate_y_plus(model, fail.witness, true);
    }
    std::ostringstream os;
    os << "no block set with a common nonempty product Y+ satisfying A2 (" << fail.n_empty << " empty, "
       << fail.n_non_product << " non-product, " << fail.n_a2_fail << " failing A2 of " << total << ")";
    fail.reason = os.str();
    result.failures.push_back(std::move(fail));
  }
  return result;
}

// ---------------------------------------------------------------- clusters

bool ClusterReport::every_state_covered(std::size_t n_states) const {
  std::vector<bool> seen(n_states, false);
  for (const auto& c : clusters) {
    for (auto i : c.cell.states) seen[i] = true;
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

const Cluster* ClusterReport::best_passing() const {
  const Cluster* best = nullptr;
  for (const auto& c : clusters) {
    if (c.passing && (!best || *c.exponent < *best->exponent)) best = &c;
  }
  return best;
}

ClusterReport find_clusters(const HiddenMarkovModel& model, const ObsSeq& witnesses) {
  ClusterReport report;
  std::vector<Cell> cells;
  auto add = [&cells](std::vector<StateIndex> states, const ObsPoint& x) {
    if (states.empty()) return;
    for (auto& c : cells) {
      if (c.states == states) {
        if (x.is_symbol()) c.symbols.push_back(x.symbol());
        return;
      }
    }
    Cell c;
    c.states = std::move(states);
    c.witness = x;
    if (x.is_symbol()) c.symbols.push_back(x.symbol());
    cells.push_back(std::move(c));
  };

  const auto space = model.obs_space();
  if (space.finite()) {
    for (std::size_t x = 0; x < space.size; ++x) add(support_set(model, ObsPoint::symbol(x)), ObsPoint::symbol(x));
  } else {
    const auto& em = model.emissions();
    const bool all_full = std::all_of(em.begin(), em.end(), [](const EmissionSpec& e) { return e.full_support(); });
    if (all_full) {
      std::vector<StateIndex> all(model.n_states());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      add(all, ObsPoint::vector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size))));
      report.note = "all emission densities are positive everywhere: one cluster";
    } else if (witnesses.empty()) {
      report.undetermined = true;
      report.note = "continuous supports without witness points; cells undetermined";
      return report;
    } else {
      for (const auto& w : witnesses) add(support_set(model, w), w);
      report.note = "cells taken from user witness points; their measure-positivity is the user's responsibility";
    }
  }

  for (auto& c : cells) {
    Cluster cl;
    const auto prim = check_primitive(sub_matrix(model.trans(), c.states));
    cl.passing = prim.primitive;
    cl.exponent = prim.exponent;
    cl.cell = std::move(c);
    report.clusters.push_back(std::move(cl));
  }
  return report;
}

ForgettingCertificate certificate_from_cluster(const HiddenMarkovModel& model, const Cluster& cluster,
                                               std::size_t n_samples, std::uint64_t seed) {
  if (!cluster.passing || !cluster.exponent) {
    throw InvalidArgument("cluster " + join_states(cluster.cell.states) + " does not have a primitive P_C");
  }
  const std::size_t big_r = *cluster.exponent;
  const auto feeding = states_feeding(model.trans(), cluster.cell.states);

  FirstCoordinate first;
  first.member = [&model, feeding](const ObsPoint& x) {
    return std::any_of(feeding.begin(), feeding.end(), [&](StateIndex i) { return model.emissions()[i].support_member(x); });
  };
  if (model.obs_space().finite()) {
    for (std::size_t x = 0; x < model.obs_space().size; ++x) {
      if (first.member(ObsPoint::symbol(x))) first.symbols.push_back(x);
    }
    first.witness = ObsPoint::symbol(first.symbols.front());
  } else {
    Rng rng(seed);
    first.witness = model.emissions()[feeding.front()].sample(rng);
  }
  first.sample = [&model, feeding, symbols = first.symbols](Rng& rng) {
    if (!symbols.empty()) return ObsPoint::symbol(symbols[static_cast<std::size_t>(rng.uniform() * symbols.size())]);
    return model.emissions()[feeding[static_cast<std::size_t>(rng.uniform() * feeding.size())]].sample(rng);
  };

  std::vector<Cell> cells(big_r + 1, cluster.cell);
  std::ostringstream os;
  os << "cluster C = " << join_states(cluster.cell.states) << ", R = " << big_r << ", Y_C = " << join_states(feeding);
  auto cert = certificate_from_cells(model, first, cells, Provenance::cluster_lemma, os.str(), n_samples, seed);
  const auto expected = YPlusSet::product(cert.r, feeding, cluster.cell.states);
  if (!cert.y_plus.same_pairs(expected)) throw Error("cluster construction: Y+ differs from Y_C x C");
  cert.assumptions.push_back("A2 from irreducibility of the hidden chain");
  return cert;
}

PositiveRowResult check_positive_row(const HiddenMarkovModel& model, const ClusterReport& clusters,
                                     std::size_t n_samples, std::uint64_t seed) {
  const auto& p = model.trans();
  const auto ny = model.n_states();
  const auto mask = recurrent_class(p);
  if (!std::all_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw NotIrreducibleError("transition matrix is not irreducible");
  }
  PositiveRowResult out;
  for (std::size_t i = 0; i < ny && !out.row; ++i) {
    if ((p.row(static_cast<Eigen::Index>(i)).array() > 0.0).all()) out.row = i;
  }
  out.positive_row = out.row.has_value();
  if (!out.positive_row) {
    out.note = "no row of P is strictly positive";
    return out;
  }
  if (clusters.undetermined || !clusters.every_state_covered(ny)) {
    out.note = "cluster cells unavailable; no certificate constructed";
    return out;
  }
  const StateIndex star = *out.row;
  auto cluster_of = [&clusters](StateIndex s) -> const Cell& {
    for (const auto& c : clusters.clusters) {
      if (std::binary_search(c.cell.states.begin(), c.cell.states.end(), s)) return c.cell;
    }
    throw Error("state without a cluster");
  };
  auto path_to_star = [&](StateIndex from) {
    std::vector<std::optional<StateIndex>> parent(ny);
    std::deque<StateIndex> queue{from};
    parent[from] = from;
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      if (u == star) break;
      for (std::size_t v = 0; v < ny; ++v) {
        if (p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && !parent[v]) {
          parent[v] = u;
          queue.push_back(v);
        }
      }
    }
    std::vector<StateIndex> path{star};
    while (path.back() != from) path.push_back(*parent[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
  };

  std::vector<Cell> cells{cluster_of(star)};
  FirstCoordinate first;
  first.member = [](const ObsPoint&) { return true; };
  if (model.obs_space().finite()) {
    for (std::size_t x = 0; x < model.obs_space().size; ++x) first.symbols.push_back(x);
    first.witness = ObsPoint::symbol(0);
  } else {
    first.witness = cells.front().witness;
  }
  first.sample = [&model, symbols = first.symbols](Rng& rng) {
    if (!symbols.empty()) return ObsPoint::symbol(symbols[static_cast<std::size_t>(rng.uniform() * symbols.size())]);
    return model.emissions()[static_cast<std::size_t>(rng.uniform() * model.n_states())].sample(rng);
  };

  for (std::size_t iter = 0; iter < 4 * ny + 4; ++iter) {
    ObsSeq rep{first.witness};
    for (const auto& c : cells) rep.push_back(c.witness);
    const LogMatrix l = block_transition_log_matrix(model, rep);
    const YPlusSet y = enumerate_y_plus(model, rep);
    std::optional<StateIndex> target;
    for (auto j : y.proj2) {
      if (j == star || target) continue;
      for (auto i : y.proj1) {
        if (l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(star)) == kNegInf &&
            l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > kNegInf) {
          target = j;
          break;
        }
      }
    }
    if (!target) break;
    const auto path = path_to_star(*target);
    for (std::size_t k = 1; k < path.size(); ++k) cells.push_back(cluster_of(path[k]));
  }
  cells.push_back(cluster_of(star));

  for (const auto& c : cells) out.cell_sequence.push_back(c.states);
  std::ostringstream os;
  os << "positive row " << star << ", " << cells.size() << " cells after x_1";
  out.certificate = certificate_from_cells(model, first, cells, Provenance::cluster_lemma, os.str(), n_samples, seed);
  out.certificate->assumptions.push_back("A2 from irreducibility of the hidden chain");
  out.note = os.str();
  return out;
}

// ---------------------------------------------------------------- extra condition

SopotResult check_sopot(const ModelKernel& model, const ForgettingCertificate& cert, std::size_t t, StateIndex l,
                        std::size_t n_samples, std::uint64_t seed) {
  if (t < 2 || t + 1 > cert.r) throw InvalidArgument("check_sopot: need 2 <= t <= r-1");
  if (l >= model.n_states()) throw InvalidArgument("check_sopot: state out of range");
  SopotResult res;
  res.lambda = std::numeric_limits<double>::infinity();

  auto visit = [&](const ObsSeq& xs) {
    const ObsView v(xs);
    const LogMatrix a = block_transition_log_matrix(model, v.first(t));
    const LogMatrix b = block_transition_log_matrix(model, v.subspan(t - 1));
    const LogMatrix c = block_transition_log_matrix(model, v);
    ++res.n_checked;
    for (auto i : cert.y_plus.proj1) {
      for (auto j : cert.y_plus.proj2) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const auto ll = static_cast<Eigen::Index>(l);
        const double num = a(ii, ll) + b(ll, jj);
        const double ratio = num == kNegInf ? 0.0 : std::exp(num - c(ii, jj));
        if (ratio < res.lambda) {
          res.lambda = ratio;
          res.witness = xs;
        }
      }
    }
  };

  if (cert.members) {
    for (const auto& xs : *cert.members) visit(xs);
  } else if (cert.sample_member) {
    Rng rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
      const ObsSeq xs = cert.sample_member(rng);
      if (cert.in_E(xs)) visit(xs);
    }
  } else {
    res.reason = "E can be neither listed nor sampled";
    res.lambda = 0.0;
    return res;
  }
  if (res.n_checked == 0) {
    res.reason = "no member of E was examined";
    res.lambda = 0.0;
    return res;
  }
  res.ok = res.lambda > 0.0;
  if (!res.ok) res.reason = "ratio vanishes at " + seq_string(res.witness);
  return res;
}

LmsmResult check_lmsm(const LinearSwitchingModel& model, double epsilon, std::size_t n_samples, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw InvalidArgument("check_lmsm: epsilon must be positive");
  LmsmResult res;
  const auto d = model.dimension();
  const auto ny = model.n_states();
  auto support = [&model, ny](const Eigen::VectorXd& x) {
    std::vector<StateIndex> s;
    for (std::size_t i = 0; i < ny; ++i) {
      if (model.noise()[i].support_member(ObsPoint::vector(x))) s.push_back(i);
    }
    return s;
  };
  res.cluster = support(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)));
  if (res.cluster.empty()) {
    res.reason = "no noise density is positive at 0";
    return res;
  }

  // Grid (or random, d > 2) probes of the open ball B(0, epsilon).
  std::vector<Eigen::VectorXd> probes;
  if (d == 1) {
    for (int k = 1; k < 400; ++k) probes.push_back(Eigen::VectorXd::Constant(1, -epsilon + 2.0 * epsilon * k / 400.0));
  } else if (d == 2) {
    for (int a = 0; a <= 80; ++a) {
      for (int b = 0; b <= 80; ++b) {
        Eigen::Vector2d v(-epsilon + 2.0 * epsilon * a / 80.0, -epsilon + 2.0 * epsilon * b / 80.0);
        if (v.norm() < epsilon) probes.emplace_back(v);
      }
    }
  } else {
    Rng rng(seed ^ 0x9e37U);
    for (int k = 0; k < 4000; ++k) probes.push_back(uniform_in_ball(rng, d, epsilon).vec());
  }
  for (const auto& x : probes) {
    if (support(x) != res.cluster) {
      std::ostringstream os;
      os << "support pattern at x = [" << x.transpose() << "] differs from C = " << join_states(res.cluster);
      res.reason = os.str();
      return res;
    }
  }
  const auto prim = check_primitive(sub_matrix(model.trans(), res.cluster));
  if (!prim.primitive) {
    res.reason = "P_C is not primitive for C = " + join_states(res.cluster);
    return res;
  }
  const std::size_t big_r = *prim.exponent;
  const std::size_t r = big_r + 2;
  res.epsilon0 = epsilon / (1.0 + model.max_dynamics_norm());
  const double eps0 = res.epsilon0;
  const auto feeding = states_feeding(model.trans(), res.cluster);
  const auto y = YPlusSet::product(r, feeding, res.cluster);

  const ObsSeq zero(r, ObsPoint::vector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))));
  if (!enumerate_y_plus(model, zero).same_pairs(y)) throw Error("check_lmsm: Y+ at the origin differs from Y_C x C");

  auto sampler = [eps0, d, r](Rng& rng) {
    ObsSeq xs;
    for (std::size_t k = 0; k < r; ++k) xs.push_back(uniform_in_ball(rng, d, eps0));
    return xs;
  };
  Rng rng(seed);
  double n0 = 1.0;
  for (std::size_t s = 0; s < n_samples; ++s) n0 = std::max(n0, n0_on(block_linear(model, sampler(rng)), y));

  ForgettingCertificate cert;
  cert.r = r;
  cert.y_plus = y;
  cert.n0 = 2.0 * n0;
  cert.rho = rho_from_n0(cert.n0);
  cert.provenance = Provenance::lmsm_lemma;
  const double bound = cert.n0;
  cert.contains = [&model, eps0, r, y, bound](ObsView xs) {
    if (xs.size() != r) return false;
    for (const auto& x : xs) {
      if (!(x.vec().norm() < eps0)) return false;
    }
    return within_n0(block_linear(model, xs), y, bound);
  };
  cert.sample_member = sampler;
  cert.assumptions.push_back("condition (ii): (0, i0) in supp(psi) for some i0 in Y_C [user_asserted]");
  cert.assumptions.push_back("n0 is a sampled envelope inflated by 2; E is restricted to blocks within that bound");
  std::ostringstream os;
  os << "ball product B(0, " << eps0 << ")^" << r << ", C = " << join_states(res.cluster) << ", R = " << big_r;
  cert.description = os.str();
  res.certificate = std::move(cert);
  return res;
}

AutoCertificate auto_certificate(const ModelKernel& model, std::size_t r_max, double epsilon) {
  AutoCertificate out;
  switch (model.kind()) {
    case ModelKind::finite_pmm: {
      auto res = check_a1_a2_finite(model, r_max);
      out.certificate = std::move(res.certificate);
      if (!out.certificate) out.reason = "A1/A2 fails for every r <= " + std::to_string(r_max);
      return out;
    }
    case ModelKind::hmm: {
      const auto& hmm = dynamic_cast<const HiddenMarkovModel&>(model);
      const auto clusters = find_clusters(hmm);
      if (const auto* c = clusters.best_passing()) {
        out.certificate = certificate_from_cluster(hmm, *c);
        return out;
      }
      if (model.obs_space().finite()) {
        auto res = check_a1_a2_finite(model, r_max);
        out.certificate = std::move(res.certificate);
        if (out.certificate) return out;
      }
      out.reason = "no passing cluster" + std::string(model.obs_space().finite() ? " and enumeration failed" : "");
      return out;
    }
    case ModelKind::lmsm: {
      auto res = check_lmsm(dynamic_cast<const LinearSwitchingModel&>(model), epsilon);
      out.certificate = std::move(res.certificate);
      out.reason = res.reason;
      return out;
    }
  }
  return out;
}

}  // namespace pmmf

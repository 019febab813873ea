// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "pmmf/conditions.hpp"
#include "pmmf/errors.hpp"
#include "pmmf/forgetting.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/io.hpp"
#include "pmmf/segmentation.hpp"
#include "random_models.hpp"

using namespace pmmf;
using testing_support::symbols_of;

namespace {

ModelPtr data_model(const std::string& name) { return load_model(std::string(PMMF_DATA_DIR) + "/models/" + name); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

// Every block law of length 1 and 2 inside the window x_{l:n}, from one path enumeration.
// out[len - 1][t - l] = P(Y_{t:t+len-1} | X_{l:n}).
std::vector<std::vector<Eigen::VectorXd>> oracle_blocks(const oracle::Model& m, const std::vector<std::size_t>& window,
                                                        std::size_t l) {
  const std::size_t n = l + window.size() - 1;
  const std::size_t ny = m.n_states;
  std::vector<std::vector<Eigen::VectorXd>> out(2);
  for (std::size_t len = 1; len <= 2; ++len) {
    const auto size = static_cast<Eigen::Index>(len == 1 ? ny : ny * ny);
    for (std::size_t t = l; t + len - 1 <= n; ++t) out[len - 1].push_back(Eigen::VectorXd::Zero(size));
  }
  oracle::for_each_tuple(m.n_obs, l - 1, [&](const std::vector<std::size_t>& prefix) {
    std::vector<std::size_t> xs = prefix;
    xs.insert(xs.end(), window.begin(), window.end());
    oracle::for_each_tuple(ny, n, [&](const std::vector<std::size_t>& ys) {
      const double p = oracle::joint(m, xs, ys);
      if (p == 0.0) return;
      for (std::size_t t = l; t <= n; ++t) {
        out[0][t - l](static_cast<Eigen::Index>(ys[t - 1])) += p;
        if (t < n) out[1][t - l](static_cast<Eigen::Index>(ys[t - 1] * ny + ys[t])) += p;
      }
    });
  });
  for (auto& per_len : out) {
    for (auto& v : per_len) {
      if (v.sum() > 0.0) v /= v.sum();
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. Smoothing blocks against exhaustive path sums.
void oracle_equivalence(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240);
  double worst = 0.0;
  std::size_t n_blocks = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t ny = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
    const std::size_t nx = 2 + static_cast<std::size_t>(rng.uniform() * 2.0);
    const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform() * 8.0);
    const auto rm = rep % 2 == 0 ? testing_support::random_hmm(rng, ny, nx, 0.3)
                                 : testing_support::random_pmm(rng, ny, nx, 0.3);
    const Trajectory tr = sample_trajectory(*rm.model, n, split_seed(7, static_cast<std::uint64_t>(rep)));
    const auto xs = symbols_of(tr.xs);
    for (std::size_t l = 1; l <= 2; ++l) {
      const std::vector<std::size_t> window(xs.begin() + static_cast<long>(l - 1), xs.end());
      const auto want = oracle_blocks(rm.oracle, window, l);
      const WindowPosterior post(*rm.model, ObsView(tr.xs).subspan(l - 1), l);
      for (std::size_t len = 1; len <= 2; ++len) {
        for (std::size_t t = l; t + len - 1 <= n; ++t) {
          const double d = (post.block(t, len).probs - want[len - 1][t - l]).cwiseAbs().maxCoeff();
          worst = std::max(worst, d);
          ++n_blocks;
        }
      }
    }
  }
  const double secs = seconds_since(start);
  o.require(worst <= 1e-9, "max deviation above 1e-9");
  o.require(secs < 30.0, "runtime above 30 s");
  o.detail << n_blocks << " blocks, max deviation " << worst << ", " << secs << " s";
}

// 2. Block densities of the four-state model at x = (1,1,2), i.e. symbols (0,0,1).
void fourstate_densities(Outcome& o) {
  const auto model = data_model("fourstate.json");
  const ObsSeq x = symbols({0, 0, 1});
  const auto density = [&](StateIndex i, StateIndex j) { return std::exp(block_transition_density(*model, x, i, j)); };
  o.require(std::abs(density(0, 2) - 0.125) <= 1e-15, "p_13 != 1/8");
  std::size_t nonzero = 0;
  for (StateIndex i = 0; i < 4; ++i) {
    for (StateIndex j = 0; j < 4; ++j) {
      const double p = density(i, j);
      const bool expect_positive = j >= 2;
      o.require(expect_positive ? std::abs(p - 0.125) < 1e-15 : p == 0.0, "zero pattern differs");
      nonzero += p > 0.0 ? 1 : 0;
    }
  }
  const YPlusSet y = enumerate_y_plus(*model, x);
  o.require(y.same_pairs(YPlusSet::product(3, {0, 1, 2, 3}, {2, 3})), "Y+ is not Y x {3,4}");
  o.detail << "p_13 = " << density(0, 2) << ", " << nonzero << " positive entries, Y+ = "
           << y.to_string();
}

// 3. A1 fails on mod-4 for every r <= 6; the four-state model passes with r = 3, n0 = 8.
void a1_failure(Outcome& o) {
  const A1Result mod4 = check_a1_a2_finite(*data_model("mod4.json"), 6);
  o.require(!mod4.ok(), "mod-4 certified");
  o.require(mod4.failures.size() == 5, "expected one failure for each r = 2..6");
  for (const auto& f : mod4.failures) {
    o.require(f.witness_restricted_y_plus.pairs.size() == 2, "restricted witness is not a two-pair set");
    o.require(!f.witness_restricted_y_plus.is_product(), "restricted witness is a product");
    o.require(!f.witness_y_plus.is_product(), "exact witness is a product");
  }
  const A1Result four = check_a1_a2_finite(*data_model("fourstate.json"), 6);
  o.require(four.ok(), "four-state model not certified");
  if (four.ok()) {
    const auto& c = *four.certificate;
    o.require(c.r == 3, "r != 3");
    o.require(std::abs(c.n0 - 8.0) < 1e-12, "n0 != 8");
    o.require(std::abs(c.rho - 63.0 / 64.0) < 1e-12, "rho != 63/64");
    o.detail << "mod-4 fails r = 2..6 (witness " << mod4.failures.front().witness_restricted_y_plus.to_string()
             << "); four-state r = " << c.r << ", n0 = " << c.n0 << ", rho = " << c.rho;
  }
}

// 4. U(i, j) >= lambda(j) / n0^2 on sampled windows starting with an E-block.
void doeblin(Outcome& o) {
  const auto model = data_model("cluster_hmm.json");
  const ForgettingCertificate cert = *auto_certificate(*model).certificate;
  const double eps = 1.0 / (cert.n0 * cert.n0);
  std::size_t windows = 0;
  std::size_t violations = 0;
  double worst = kNegInf;
  for (std::uint64_t seed = 0; windows < 1000; ++seed) {
    const Trajectory tr = sample_trajectory(*model, 400, split_seed(11, seed));
    const ObsView xs(tr.xs);
    for (std::size_t a = 0; a + cert.r <= xs.size() && windows < 1000; a += 7) {
      if (!cert.in_E(xs.subspan(a, cert.r))) continue;
      const std::size_t len = std::min(xs.size() - a, cert.r + (a * 13 + seed) % 40);
      const ConditionalTransition u = u_matrix(*model, xs.subspan(a, len), cert);
      for (Eigen::Index i = 0; i < u.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < u.matrix.cols(); ++j) {
          const double slack = u.matrix(i, j) - eps * u.lambda(j);
          worst = std::max(worst, -slack);
          violations += slack < -1e-12 ? 1 : 0;
        }
      }
      ++windows;
    }
  }
  o.require(violations == 0, "Doeblin inequality violated");
  o.detail << windows << " windows, " << violations << " violations, largest deficit " << worst << ", n0 = " << cert.n0;
}

// 5. Empirical one-sided TV under the 2 rho^kappa* envelope.
void one_sided(Outcome& o) {
  const auto model = data_model("cluster_hmm.json");
  const ForgettingCertificate cert = *auto_certificate(*model).certificate;
  for (std::size_t m : {1u, 2u}) {
    const auto start = std::chrono::steady_clock::now();
    OneSidedConfig cfg;
    cfg.n_paths = 100;
    cfg.n_max = 300;
    cfg.t_max = 200;
    cfg.m = m;
    const ExperimentSummary s = one_sided_experiment(*model, &cert, cfg);
    const double secs = seconds_since(start);
    o.require(s.violations == 0, "envelope violated");
    o.require(s.pooled.ok && s.pooled.alpha_hat <= 0.999, "alpha_hat above 0.999");
    o.require(s.pooled.ok && s.pooled.slope_upper95 < 0.0, "log-slope not negative at 95%");
    o.require(secs < 120.0, "runtime above 2 min");
    o.detail << "m=" << m << ": violations " << s.violations << ", alpha_hat " << s.pooled.alpha_hat
             << ", slope upper95 " << s.pooled.slope_upper95 << ", " << secs << " s; ";
  }
}

// 6. Mod-4 never forgets the start: TV stays above the exhaustive floor.
void non_forgetting(Outcome& o) {
  Eigen::MatrixXd p(4, 4);
  p << 0.5, 0.5, 0, 0, 0, 0.5, 0.5, 0, 0, 0, 0.5, 0.5, 0.5, 0, 0, 0.5;
  Eigen::MatrixXd emis(4, 2);
  emis << 0, 1, 1, 0, 0, 1, 1, 0;
  const oracle::Model om = oracle::hmm(p, Eigen::Vector4d(0.5, 0.5, 0, 0), emis);
  // The hidden path is a deterministic function of x_{1:n} and the phase at time 3, so the
  // TV between the windows [1:n] and [3:n] is constant in t and n; short windows give the floor.
  double floor = 2.0;
  for (std::size_t n = 3; n <= 8; ++n) {
    oracle::for_each_tuple(2, n, [&](const std::vector<std::size_t>& xs) {
      const auto full = oracle_blocks(om, xs, 1);
      if (full[0][0].sum() == 0.0) return;
      const auto late = oracle_blocks(om, std::vector<std::size_t>(xs.begin() + 2, xs.end()), 3);
      for (std::size_t t = 3; t <= n; ++t) floor = std::min(floor, (full[0][t - 1] - late[0][t - 3]).cwiseAbs().sum());
    });
  }
  o.require(floor > 0.0, "oracle floor is zero");

  OneSidedConfig cfg;
  cfg.l = 1;
  cfg.s = 3;
  cfg.t_max = 100;
  cfg.n_max = 100;
  cfg.n_paths = 20;
  const ExperimentSummary s = one_sided_experiment(*data_model("mod4.json"), nullptr, cfg);
  double lowest = 2.0;
  for (const auto& c : s.curves) {
    for (double v : c.emp_tv) lowest = std::min(lowest, v);
  }
  o.require(lowest >= floor - 1e-9, "TV dips below the floor");
  o.require(s.pooled.slope >= -1e-3, "decay trend");
  o.detail << "floor " << floor << ", lowest TV " << lowest << ", slope " << s.pooled.slope;
}

// 7. Decoding of the worked mod-4 example.
void decoding(Outcome& o) {
  const auto model = data_model("mod4.json");
  const ObsSeq xs = symbols({0, 1, 1, 1, 0, 0, 1, 0});
  const SegmentationResult r = expected_error(*model, xs);
  std::string path;
  for (StateIndex y : pmap_decode(*model, xs)) path += std::to_string(y);
  o.require(path == "12223301", "path differs");
  o.require(r.normalized_error == 0.0, "normalized error is not 0");
  o.detail << "path " << path << ", normalized error " << r.normalized_error;
}

// 8. Two-sided windows approach the widest window.
void two_sided(Outcome& o) {
  const auto model = data_model("cluster_hmm.json");
  const ForgettingCertificate cert = *auto_certificate(*model).certificate;
  const TwoSidedSummary s = two_sided_experiment(*model, &cert, TwoSidedConfig{});
  double first = 0.0;
  double last = 0.0;
  std::size_t n_first = 0;
  std::size_t n_last = 0;
  for (const auto& c : s.cells) {
    const std::size_t k = std::min(c.l, c.s);
    if (k == 1) first += c.tv, ++n_first;
    if (k == 32) last += c.tv, ++n_last;
  }
  first /= static_cast<double>(std::max<std::size_t>(n_first, 1));
  last /= static_cast<double>(std::max<std::size_t>(n_last, 1));
  o.require(s.fit.ok && s.fit.slope < 0.0, "fitted exponent not negative");
  o.require(s.violations == 0, "envelope violated");
  o.require(last < first, "mean TV not decreasing");
  o.detail << "slope " << s.fit.slope << ", violations " << s.violations << ", mean TV " << first << " -> " << last;
}

// 9. Segmentation constant.
void estimate_r_sanity(Outcome& o) {
  const auto uniform = data_model("uniform3.json");
  const ForgettingCertificate ucert = *auto_certificate(*uniform).certificate;
  EstimateRConfig cfg;
  const EstimateRResult u = estimate_r(*uniform, &ucert, cfg);
  o.require(std::abs(u.r_hat - 2.0 / 3.0) <= 0.01, "uniform R not 2/3");

  EstimateRConfig anchored;
  anchored.left_anchor = true;
  anchored.start = StartMode::model_init;
  anchored.allow_no_bound = true;
  anchored.burn_s = 10;
  const EstimateRResult z = estimate_r(*data_model("mod4.json"), nullptr, anchored);
  o.require(z.r_hat == 0.0, "mod-4 R not exactly 0");

  const auto cluster = data_model("cluster_hmm.json");
  const ForgettingCertificate ccert = *auto_certificate(*cluster).certificate;
  bool agree = true;
  for (const auto& [model, cert, burn] : {std::tuple{uniform, &ucert, std::optional<std::size_t>{}},
                                          std::tuple{cluster, &ccert, std::optional<std::size_t>{30}}}) {
    EstimateRConfig a;
    a.burn_l = burn;
    a.burn_s = burn;
    a.seed = 101;
    EstimateRConfig b = a;
    b.seed = 202;
    const EstimateRResult ra = estimate_r(*model, cert, a);
    const EstimateRResult rb = estimate_r(*model, cert, b);
    const double se = std::hypot(ra.stderr_batch, rb.stderr_batch);
    agree = agree && std::abs(ra.r_hat - rb.r_hat) <= 3.0 * se + 1e-12;
    o.detail << "replicates " << ra.r_hat << " / " << rb.r_hat << " (se " << se << "); ";
  }
  o.require(agree, "replicates disagree");
  o.detail << "uniform R " << u.r_hat << ", mod-4 R " << z.r_hat;
}

// 10. Dobrushin coefficient properties.
void dobrushin_properties(Outcome& o) {
  Rng rng(4242);
  std::size_t bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);
    const Eigen::MatrixXd a = testing_support::random_stochastic(rng, n, n, 0.3);
    const Eigen::MatrixXd b = testing_support::random_stochastic(rng, n, n, 0.3);
    const Eigen::VectorXd x = testing_support::random_law(rng, n, 0.3);
    const Eigen::VectorXd y = testing_support::random_law(rng, n, 0.3);
    bad += dobrushin(a * b) > dobrushin(a) * dobrushin(b) + 1e-12 ? 1 : 0;
    const Eigen::VectorXd xa = (x.transpose() * a).transpose();
    const Eigen::VectorXd ya = (y.transpose() * a).transpose();
    bad += tv_distance(xa, ya) > dobrushin(a) * tv_distance(x, y) + 1e-12 ? 1 : 0;
    const Eigen::MatrixXd equal = x.transpose().replicate(static_cast<Eigen::Index>(n), 1);
    bad += dobrushin(equal) > 1e-12 ? 1 : 0;
    bad += std::abs(dobrushin(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))) - 1.0) >
                   1e-12
               ? 1
               : 0;
  }
  o.require(bad == 0, "property violated");
  o.detail << "10000 draws, " << bad << " violations";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"four-state block densities", fourstate_densities},
      {"A1 failure and four-state certificate", a1_failure},
      {"Doeblin inequality", doeblin},
      {"one-sided envelope domination", one_sided},
      {"mod-4 non-forgetting", non_forgetting},
      {"PMAP decoding", decoding},
      {"two-sided decay", two_sided},
      {"R estimation", estimate_r_sanity},
      {"Dobrushin properties", dobrushin_properties},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

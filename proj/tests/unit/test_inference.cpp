#include <doctest.h>

#include "oracle.hpp"
#include "pmmf/conditions.hpp"
#include "pmmf/errors.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/io.hpp"
#include "random_models.hpp"

using namespace pmmf;
using testing_support::random_hmm;
using testing_support::random_pmm;
using testing_support::symbols_of;

namespace {

ModelPtr data_model(const std::string& name) { return load_model(std::string(PMMF_DATA_DIR) + "/models/" + name); }

double max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("smoothing blocks match the brute-force oracle") {
  Rng rng(2024);
  for (int rep = 0; rep < 12; ++rep) {
    const auto rm = rep % 2 == 0 ? random_hmm(rng, 3, 3, 0.25) : random_pmm(rng, 3, 2, 0.25);
    const std::size_t n = 7;
    const Trajectory tr = sample_trajectory(*rm.model, n, static_cast<std::uint64_t>(rep));
    const auto xs = symbols_of(tr.xs);
    for (std::size_t l = 1; l <= 2; ++l) {
      const std::vector<std::size_t> window(xs.begin() + static_cast<long>(l - 1), xs.end());
      const WindowPosterior post(*rm.model, std::span(tr.xs).subspan(l - 1), l);
      for (std::size_t m = 1; m <= 2; ++m) {
        for (std::size_t t = l; t + m - 1 <= n; ++t) {
          const Eigen::VectorXd want = oracle::smoothing_block(rm.oracle, window, l, t, m);
          CHECK(max_diff(post.block(t, m).probs, want) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("forward-backward likelihood equals the path sum") {
  Rng rng(3);
  const auto rm = random_hmm(rng, 3, 2, 0.2);
  const Trajectory tr = sample_trajectory(*rm.model, 6, 1);
  double total = 0.0;
  oracle::for_each_tuple(3, 6, [&](const std::vector<std::size_t>& ys) {
    total += oracle::joint(rm.oracle, symbols_of(tr.xs), ys);
  });
  const ForwardBackward fb = forward_backward(*rm.model, tr.xs);
  CHECK(fb.log_likelihood == doctest::Approx(std::log(total)).epsilon(1e-12));
  CHECK(fb.alpha.size() == 6);
}

TEST_CASE("single observation gives the prior restricted to the emission support") {
  const auto model = data_model("mod4.json");
  const WindowPosterior post(*model, symbols({1}));
  const Eigen::VectorXd nu = post.marginal(1);
  CHECK(nu(0) == doctest::Approx(1.0));
  CHECK(nu.sum() == doctest::Approx(1.0));
}

TEST_CASE("zero-likelihood windows report the first vanishing time") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
  std::vector<EmissionSpec> em{EmissionSpec::categorical({1.0, 0.0}), EmissionSpec::categorical({0.0, 1.0})};
  const HiddenMarkovModel frozen(p, Eigen::VectorXd::Constant(2, 0.5), em);
  try {
    WindowPosterior(frozen, symbols({0, 0, 1, 1}));
    FAIL("expected a zero-likelihood error");
  } catch (const ZeroLikelihoodError& e) {
    CHECK(e.time() == 3);
  }
}

TEST_CASE("mod-4 decoding example is fully determined") {
  const auto model = data_model("mod4.json");
  const ObsSeq xs = symbols({0, 1, 1, 1, 0, 0, 1, 0});
  const auto path = pmap_decode(*model, xs);
  CHECK(path == std::vector<StateIndex>{1, 2, 2, 2, 3, 3, 0, 1});
  const WindowPosterior post(*model, xs);
  for (std::size_t t = 1; t <= 8; ++t) CHECK(post.marginal(t).maxCoeff() == 1.0);
  for (std::size_t k = 0; k <= 4; ++k) {
    const ConditionalTransition f = f_matrix(*model, xs, k, 1);
    for (std::size_t u = 0; u < 4; ++u) {
      if (f.rows[u] != RowStatus::defined) continue;
      CHECK(f.matrix.row(static_cast<Eigen::Index>(u)).maxCoeff() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("pmap_decode matches the oracle argmax and breaks ties low") {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    const auto rm = random_hmm(rng, 3, 2, 0.2);
    const Trajectory tr = sample_trajectory(*rm.model, 8, static_cast<std::uint64_t>(rep));
    const auto xs = symbols_of(tr.xs);
    const auto path = pmap_decode(*rm.model, tr.xs);
    for (std::size_t t = 1; t <= 8; ++t) {
      const Eigen::VectorXd want = oracle::smoothing_block(rm.oracle, xs, 1, t, 1);
      CHECK(want(static_cast<Eigen::Index>(path[t - 1])) >= want.maxCoeff() - 1e-12);
    }
  }
  Eigen::VectorXd tie(3);
  tie << 0.4, 0.4, 0.2;
  CHECK(argmax_lowest(tie) == 0);
}

TEST_CASE("F matrices: identity, block form, product law and decomposition") {
  Rng rng(31);
  for (int rep = 0; rep < 8; ++rep) {
    const auto rm = rep % 2 == 0 ? random_hmm(rng, 3, 2, 0.3) : random_pmm(rng, 2, 2, 0.3);
    const std::size_t ny = rm.model->n_states();
    const std::size_t n = 9;
    const Trajectory tr = sample_trajectory(*rm.model, n, static_cast<std::uint64_t>(rep + 7));
    const ObsView xs(tr.xs);

    const ConditionalTransition f0 = f_matrix(*rm.model, xs, 0, 1);
    for (std::size_t u = 0; u < ny; ++u) {
      CHECK(f0.matrix(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u)) == doctest::Approx(1.0));
    }
    const ConditionalTransition f02 = f_matrix(*rm.model, xs, 0, 2);
    for (std::size_t u = 0; u < ny; ++u) {
      for (std::size_t v = 0; v < ny * ny; ++v) {
        if (v / ny != u) CHECK(f02.matrix(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) == 0.0);
      }
    }

    // Product law on rows with positive likelihood.
    for (std::size_t k1 = 1; k1 <= 3; ++k1) {
      for (std::size_t k2 = 1; k2 <= 3; ++k2) {
        const auto whole = f_matrix(*rm.model, xs, k1 + k2, 1);
        const auto a = f_matrix(*rm.model, xs, k1, 1);
        const auto b = f_matrix(*rm.model, xs.subspan(k1), k2, 1);
        const Eigen::MatrixXd prod = a.matrix * b.matrix;
        for (std::size_t u = 0; u < ny; ++u) {
          if (whole.rows[u] != RowStatus::defined) continue;
          CHECK(max_diff(whole.matrix.row(static_cast<Eigen::Index>(u)), prod.row(static_cast<Eigen::Index>(u))) <
                1e-10);
        }
      }
    }

    // Every split s gives the same block, including predictive ones.
    const WindowPosterior post(*rm.model, xs);
    for (std::size_t m = 1; m <= 2; ++m) {
      for (std::size_t t = 1; t <= n + 2; ++t) {
        const BlockDistribution ref = post.block(t, m);
        CHECK(ref.probs.sum() == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t s = 1; s <= std::min(t, n); ++s) CHECK(max_diff(post.block_via(s, t, m).probs, ref.probs) < 1e-10);
        if (m == 2) CHECK(max_diff(ref.marginalize_last().probs, post.block(t, 1).probs) < 1e-10);
      }
    }

    // Rows of F are stochastic.
    const auto f = f_matrix(*rm.model, xs, 2, 2);
    for (Eigen::Index u = 0; u < f.matrix.rows(); ++u) CHECK(f.matrix.row(u).sum() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("predictive blocks follow the unconditional dynamics") {
  Rng rng(8);
  const auto rm = random_pmm(rng, 2, 2, 0.0);
  const auto& pmm = dynamic_cast<const FinitePMM&>(*rm.model);
  const Trajectory tr = sample_trajectory(pmm, 4, 5);
  const WindowPosterior post(pmm, tr.xs);
  // P(Y_6 | x_{1:4}) = filter over (x_4, y_4) pushed two steps through the pair chain.
  const Eigen::VectorXd filt = post.marginal(4);
  Eigen::VectorXd pair = Eigen::VectorXd::Zero(4);
  for (std::size_t i = 0; i < 2; ++i) pair(static_cast<Eigen::Index>(pmm.pair_index(tr.xs[3].symbol(), i))) = filt(static_cast<Eigen::Index>(i));
  const Eigen::VectorXd pushed = propagate_law(pair, pmm.trans(), 2);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(2);
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t i = 0; i < 2; ++i) want(static_cast<Eigen::Index>(i)) += pushed(static_cast<Eigen::Index>(pmm.pair_index(x, i)));
  }
  const BlockDistribution b = post.block(6, 1);
  CHECK(b.predictive());
  CHECK(max_diff(b.probs, want) < 1e-12);
}

TEST_CASE("uninformative emissions leave the unconditional law") {
  const auto model = load_model(std::string(PMMF_DATA_DIR) + "/models/uniform3.json");
  const ObsSeq xs(10, ObsPoint::symbol(0));
  const WindowPosterior post(*model, xs);
  for (std::size_t t = 1; t <= 10; ++t) CHECK(max_diff(post.marginal(t), Eigen::VectorXd::Constant(3, 1.0 / 3.0)) < 1e-12);
}

TEST_CASE("U matrix on the four-state example") {
  const auto model = data_model("fourstate.json");
  const A1Result a1 = check_a1_a2_finite(*model, 4);
  REQUIRE(a1.ok());
  const ForgettingCertificate& cert = *a1.certificate;
  const ObsSeq block = symbols({0, 0, 1});

  // n = r: every row is defined and equals the uniform law on Y+_(2), which is also lambda.
  const ConditionalTransition u = u_matrix(*model, block, cert);
  CHECK(u.lambda.isApprox(Eigen::Vector4d(0.0, 0.0, 0.5, 0.5)));
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(u.rows[static_cast<std::size_t>(i)] == RowStatus::defined);
    CHECK(u.matrix(i, 0) == 0.0);
    CHECK(u.matrix(i, 1) == 0.0);
    CHECK(u.matrix(i, 2) == doctest::Approx(0.5));
    CHECK(u.matrix(i, 3) == doctest::Approx(0.5));
  }

  // Longer windows: Doeblin lower bound and agreement with F on defined rows.
  Rng rng(4);
  const auto& hmm = dynamic_cast<const HiddenMarkovModel&>(*model);
  for (int rep = 0; rep < 50; ++rep) {
    ObsSeq xs = block;
    const Trajectory tail = sample_trajectory(*hmm.with_initial_law(Eigen::Vector4d(0, 0, 0.5, 0.5)), 1 + rep % 6,
                                              static_cast<std::uint64_t>(rep));
    xs.insert(xs.end(), tail.xs.begin() + 1, tail.xs.end());
    const ConditionalTransition uu = u_matrix(*model, xs, cert);
    const ConditionalTransition ff = f_matrix(*model, xs, cert.r - 1, 1);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) CHECK(uu.matrix(i, j) >= uu.lambda(j) / (cert.n0 * cert.n0) - 1e-12);
      if (uu.rows[static_cast<std::size_t>(i)] == RowStatus::defined) CHECK(max_diff(uu.matrix.row(i), ff.matrix.row(i)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(u_matrix(*model, symbols({0, 1, 1}), cert), InvalidArgument);
}

TEST_CASE("block length is capped") {
  const auto model = data_model("cluster_hmm.json");
  const WindowPosterior post(*model, symbols({0, 1, 2}));
  CHECK_THROWS_AS(post.block(1, 9), InvalidArgument);
  CHECK_THROWS_AS(post.block(1, 0), InvalidArgument);
  CHECK_NOTHROW(post.block(1, 3, 3));
}

#include <doctest.h>

#include "oracle.hpp"
#include "pmmf/conditions.hpp"
#include "pmmf/errors.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/io.hpp"
#include "pmmf/segmentation.hpp"
#include "random_models.hpp"

using namespace pmmf;

namespace {

ModelPtr data_model(const std::string& name) { return load_model(std::string(PMMF_DATA_DIR) + "/models/" + name); }

}  // namespace

TEST_CASE("mod-4 window is segmented without error") {
  const auto model = data_model("mod4.json");
  const SegmentationResult r = expected_error(*model, symbols({0, 1, 1, 1, 0, 0, 1, 0}));
  CHECK(r.path == std::vector<StateIndex>{1, 2, 2, 2, 3, 3, 0, 1});
  CHECK(r.normalized_error == 0.0);
  CHECK(r.expected_errors == 0.0);
}

TEST_CASE("uninformative emissions give 1 - 1/|Y|") {
  const auto model = data_model("uniform3.json");
  const SegmentationResult r = expected_error(*model, ObsSeq(12, ObsPoint::symbol(0)));
  CHECK(r.normalized_error == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  for (double c : r.confidence) CHECK(c == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("expected error is the minimum expected loss over all paths") {
  Rng rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto rm = testing_support::random_hmm(rng, 3, 2, 0.25);
    const Trajectory tr = sample_trajectory(*rm.model, 7, static_cast<std::uint64_t>(rep));
    const SegmentationResult r = expected_error(*rm.model, tr.xs);
    CHECK(r.expected_errors == doctest::Approx(oracle::min_expected_loss(rm.oracle, testing_support::symbols_of(tr.xs))).epsilon(1e-10));
    CHECK(r.path == pmap_decode(*rm.model, tr.xs));
    CHECK(r.normalized_error <= 1.0 - 1.0 / 3.0 + 1e-12);
    for (double c : r.confidence) CHECK(c >= 1.0 / 3.0 - 1e-12);
  }
}

TEST_CASE("estimate_r on the uninformative chain") {
  const auto model = data_model("uniform3.json");
  const ForgettingCertificate cert = *auto_certificate(*model).certificate;
  EstimateRConfig cfg;
  cfg.n_total = 800;
  cfg.burn_l = 10;
  cfg.burn_s = 10;
  const EstimateRResult r = estimate_r(*model, &cert, cfg);
  CHECK(r.r_hat == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  REQUIRE(r.window_bound.has_value());
  CHECK(*r.window_bound >= 0.0);
  CHECK(*r.window_bound <= 1.0);
  CHECK(r.n_used == 800 - 20);
}

TEST_CASE("estimate_r needs a certificate unless told otherwise") {
  const auto model = data_model("mod4.json");
  EstimateRConfig cfg;
  cfg.n_total = 300;
  CHECK_THROWS_AS(estimate_r(*model, nullptr, cfg), InvalidArgument);
  cfg.allow_no_bound = true;
  cfg.left_anchor = true;
  cfg.start = StartMode::model_init;
  cfg.burn_s = 5;
  const EstimateRResult r = estimate_r(*model, nullptr, cfg);
  CHECK(r.r_hat == 0.0);
  CHECK_FALSE(r.window_bound.has_value());
}

TEST_CASE("estimate_r is stable under longer burn-in") {
  const auto model = data_model("cluster_hmm.json");
  const ForgettingCertificate cert = *auto_certificate(*model).certificate;
  EstimateRConfig cfg;
  cfg.n_total = 1500;
  cfg.burn_l = 12;
  cfg.burn_s = 12;
  const EstimateRResult a = estimate_r(*model, &cert, cfg);
  cfg.burn_l = 12 + cert.r_prime();
  cfg.burn_s = 12 + cert.r_prime();
  const EstimateRResult b = estimate_r(*model, &cert, cfg);
  CHECK(std::abs(a.r_hat - b.r_hat) <= *a.window_bound + 3.0 * a.stderr_batch + 1e-12);
  CHECK(default_burn(cert) % cert.r_prime() == 0);
}

#include <benchmark/benchmark.h>

#include "pmmf/conditions.hpp"
#include "pmmf/forgetting.hpp"
#include "pmmf/inference.hpp"
#include "pmmf/io.hpp"
#include "pmmf/segmentation.hpp"

namespace {

pmmf::ModelPtr cluster_model() {
  static const pmmf::ModelPtr m = pmmf::load_model(std::string(PMMF_DATA_DIR) + "/models/cluster_hmm.json");
  return m;
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto model = cluster_model();
  const auto tr = pmmf::sample_trajectory(*model, static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pmmf::forward_backward(*model, tr.xs).log_likelihood);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ForwardBackward)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);

void BM_FMatrix(benchmark::State& state) {
  const auto model = cluster_model();
  const auto tr = pmmf::sample_trajectory(*model, 200, 1);
  const pmmf::WindowPosterior post(*model, tr.xs);
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(post.f_matrix(50, 20, m).matrix.sum());
}
BENCHMARK(BM_FMatrix)->DenseRange(1, 3);

void BM_Segmentation(benchmark::State& state) {
  const auto model = cluster_model();
  const auto tr = pmmf::sample_trajectory(*model, 4096, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pmmf::expected_error(*model, tr.xs).expected_errors);
}
BENCHMARK(BM_Segmentation);

void BM_OneSidedPath(benchmark::State& state) {
  const auto model = cluster_model();
  const pmmf::ForgettingCertificate cert = *pmmf::auto_certificate(*model).certificate;
  pmmf::OneSidedConfig cfg;
  cfg.n_paths = 1;
  cfg.t_max = 100;
  cfg.n_max = 150;
  for (auto _ : state) benchmark::DoNotOptimize(one_sided_experiment(*model, &cert, cfg).violations);
}
BENCHMARK(BM_OneSidedPath)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

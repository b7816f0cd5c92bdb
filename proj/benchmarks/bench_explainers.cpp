#include <benchmark/benchmark.h>

#include "ipr/explain/explainers.hpp"
#include "ipr/zoo/architectures.hpp"
#include "ipr/zoo/dataset.hpp"

namespace {

void BM_Explain(benchmark::State& state) {
  const auto id = ipr::default_explainers()[static_cast<std::size_t>(state.range(0))];
  const ipr::Model m = ipr::build_architecture("toy-seq-3", 11);
  const ipr::Tensor x = ipr::generate_synthetic_dataset(1, 16, 2, 5).images[0].tensor;
  const ipr::ExplainerConfig config;
  const ipr::ExplainTarget target{0, "img-0000", "original"};
  for (auto _ : state) benchmark::DoNotOptimize(ipr::explain(id, m, x, target, config));
  state.SetLabel(ipr::to_string(id));
}
BENCHMARK(BM_Explain)->DenseRange(0, 6)->Unit(benchmark::kMicrosecond);

}  // namespace

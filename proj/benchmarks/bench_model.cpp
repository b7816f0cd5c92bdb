#include <benchmark/benchmark.h>

#include "ipr/nn/model.hpp"
#include "ipr/zoo/architectures.hpp"
#include "ipr/zoo/dataset.hpp"

namespace {

const ipr::Tensor& sample_image() {
  static const ipr::Tensor x = ipr::generate_synthetic_dataset(1, 16, 2, 5).images[0].tensor;
  return x;
}

void BM_Forward(benchmark::State& state) {
  const std::string arch = ipr::known_architectures()[static_cast<std::size_t>(state.range(0))];
  const ipr::Model m = ipr::build_architecture(arch, 11);
  for (auto _ : state) benchmark::DoNotOptimize(ipr::forward(m, sample_image()));
  state.SetLabel(arch);
}
BENCHMARK(BM_Forward)->DenseRange(0, 2);

void BM_InputGradient(benchmark::State& state) {
  const std::string arch = ipr::known_architectures()[static_cast<std::size_t>(state.range(0))];
  const ipr::Model m = ipr::build_architecture(arch, 11);
  for (auto _ : state) benchmark::DoNotOptimize(ipr::grad_wrt_input(m, sample_image(), 0));
  state.SetLabel(arch);
}
BENCHMARK(BM_InputGradient)->DenseRange(0, 2);

void BM_RandomizeLayer(benchmark::State& state) {
  const ipr::Model m = ipr::build_architecture("toy-res-4", 11);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ipr::randomize_layer(m, "conv3", ++seed));
}
BENCHMARK(BM_RandomizeLayer);

}  // namespace

#include <benchmark/benchmark.h>

#include "ipr/metrics/ssim.hpp"
#include "ipr/rng.hpp"

namespace {

ipr::Tensor noise(std::size_t side, std::uint64_t seed) {
  ipr::Rng rng(seed);
  ipr::Tensor t({1, side, side});
  for (double& v : t.values()) v = rng.uniform(0.0, 1.0);
  return t;
}

void BM_Ssim(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const ipr::Tensor a = noise(side, 1), b = noise(side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ipr::ssim(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_Ssim)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

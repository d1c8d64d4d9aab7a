#include <benchmark/benchmark.h>

#include "anosovlab/cocycle.hpp"
#include "anosovlab/measures.hpp"
#include "anosovlab/rng.hpp"

using namespace anosovlab;

namespace {

const SystemSpec kSpecs[] = {SystemSpec::cat(), SystemSpec::borel_smale(),
                             SystemSpec::borel_smale_perturbed(0.01), SystemSpec::sl3()};

void BM_Flow(benchmark::State& st) {
  const System s(kSpecs[st.range(0)]);
  const Point x = s.base_point();
  for (auto _ : st) benchmark::DoNotOptimize(s.flow(x, 1.0).coords.data());
  st.SetLabel(std::string(kind_name(s.kind())));
}
BENCHMARK(BM_Flow)->DenseRange(0, 3);

void BM_TangentFlow(benchmark::State& st) {
  const System s(kSpecs[st.range(0)]);
  const Point x = s.base_point();
  for (auto _ : st) benchmark::DoNotOptimize(s.tangent_flow(x, 1.0).data());
  st.SetLabel(std::string(kind_name(s.kind())));
}
BENCHMARK(BM_TangentFlow)->DenseRange(0, 3);

void BM_Lyapunov(benchmark::State& st) {
  const System s(SystemSpec::borel_smale_perturbed(0.01));
  const Point x = s.base_point();
  for (auto _ : st) benchmark::DoNotOptimize(lyapunov_spectrum(s, x, static_cast<double>(st.range(0))));
}
BENCHMARK(BM_Lyapunov)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Wasserstein(benchmark::State& st) {
  Rng rng(1);
  const auto draw = [&] {
    std::vector<std::pair<double, double>> v(static_cast<std::size_t>(st.range(0)));
    for (auto& p : v) p = {rng.normal(), rng.uniform(0.1, 1.0)};
    return EmpiricalMeasure::from_samples(std::move(v));
  };
  const EmpiricalMeasure a = draw(), b = draw();
  for (auto _ : st) benchmark::DoNotOptimize(wasserstein_1d(a, b));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Wasserstein)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity();

void BM_Birkhoff(benchmark::State& st) {
  const System s(SystemSpec::cat());
  const auto tests = trigonometric_tests();
  const Point x = s.base_point();
  for (auto _ : st) benchmark::DoNotOptimize(birkhoff_equidistribution(s, x, tests, 1000.0, 0.05));
}
BENCHMARK(BM_Birkhoff)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <map>

#include "dcm/io.hpp"

using namespace dcm;

namespace {

const SphericalCap& cap(int n) {
  static std::map<int, SphericalCap> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, generate_spherical_cap(n, 1.0, 1)).first;
  return it->second;
}

void BM_CapGeneration(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(generate_spherical_cap(static_cast<int>(st.range(0)), 1.0, 1));
}
BENCHMARK(BM_CapGeneration)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_CurvatureJacobian(benchmark::State& st) {
  auto s = make_state(cap(static_cast<int>(st.range(0))).metric, false);
  for (auto _ : st) benchmark::DoNotOptimize(curvature_jacobian(s));
}
BENCHMARK(BM_CurvatureJacobian)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);

// Doubling, deformation and cut to a triangle.
void BM_DeformTriangle(benchmark::State& st) {
  const auto& c = cap(static_cast<int>(st.range(0)));
  ObjMesh in{c.metric, c.pos, c.triangles};
  PipelineConfig cfg;
  cfg.preset = PresetKind::DiskToTriangle;
  cfg.flatten = false;
  for (auto _ : st) benchmark::DoNotOptimize(run_pipeline(cfg, in));
}
BENCHMARK(BM_DeformTriangle)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_FullPipeline(benchmark::State& st) {
  const auto& c = cap(static_cast<int>(st.range(0)));
  ObjMesh in{c.metric, c.pos, c.triangles};
  PipelineConfig cfg;
  cfg.preset = PresetKind::DiskToTriangle;
  for (auto _ : st) benchmark::DoNotOptimize(run_pipeline(cfg, in));
}
BENCHMARK(BM_FullPipeline)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

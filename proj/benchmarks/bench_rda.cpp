#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "rda/dgcore.hpp"
#include "rda/mesh.hpp"
#include "rda/patch.hpp"
#include "rda/problems.hpp"
#include "rda/recon.hpp"
#include "rda/solve.hpp"

namespace {

rda::Box square() { return {rda::Point(-1, -1, 0), rda::Point(1, 1, 0)}; }

int threshold(int m) { return *rda::default_threshold(m, 2, rda::ElementKind::triangular); }

void BM_BuildPatches(benchmark::State& state) {
  const auto mesh = rda::gen_tri_mesh(square(), static_cast<int>(state.range(0)));
  const int m = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(rda::build_patches(mesh, threshold(m)));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.num_elements()));
}
BENCHMARK(BM_BuildPatches)->Args({40, 1})->Args({40, 4})->Args({80, 2})->Unit(benchmark::kMillisecond);

void BM_BuildOperator(benchmark::State& state) {
  const auto mesh = rda::gen_tri_mesh(square(), static_cast<int>(state.range(0)));
  const int m = static_cast<int>(state.range(1));
  const auto patches = rda::build_patches(mesh, threshold(m));
  for (auto _ : state) benchmark::DoNotOptimize(rda::build_operator(mesh, patches, m));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.num_elements()));
}
BENCHMARK(BM_BuildOperator)->Args({40, 1})->Args({40, 2})->Args({40, 3})->Args({40, 4})->Unit(benchmark::kMillisecond);

void BM_AssembleRda(benchmark::State& state) {
  const auto mesh = rda::gen_tri_mesh(square(), static_cast<int>(state.range(0)));
  const int m = static_cast<int>(state.range(1));
  const auto R = rda::build_operator(mesh, rda::build_patches(mesh, threshold(m)), m);
  const rda::BrokenSpace space(mesh, m);
  const auto prob = rda::make_problem("example1");
  for (auto _ : state) benchmark::DoNotOptimize(rda::assemble_rda(space, R, prob));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.num_elements()));
}
BENCHMARK(BM_AssembleRda)->Args({40, 1})->Args({40, 2})->Args({40, 3})->Args({40, 4})->Unit(benchmark::kMillisecond);

void BM_VCycle(benchmark::State& state) {
  const int levels = static_cast<int>(state.range(0));
  const rda::MGHierarchy h = rda::build_mg(rda::nested_structured_meshes(2, square(), 10, levels));
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> r(h.fine_size());
  for (auto& x : r) x = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(h.vcycle(r));
  state.SetItemsProcessed(state.iterations() * h.fine_size());
}
BENCHMARK(BM_VCycle)->Arg(2)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_GmresMultigrid(benchmark::State& state) {
  const int levels = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto meshes = rda::nested_structured_meshes(2, square(), 10, levels);
  const auto& mesh = meshes.back();
  const auto R = rda::build_operator(mesh, rda::build_patches(mesh, threshold(m)), m);
  const auto sys = rda::assemble_rda(rda::BrokenSpace(mesh, m), R, rda::make_problem("example4"));
  const rda::MultigridPreconditioner M(std::make_shared<rda::MGHierarchy>(rda::build_mg(meshes)));
  int iterations = 0;
  for (auto _ : state) {
    auto res = rda::gmres(sys.A, {sys.b.data(), static_cast<std::size_t>(sys.b.size())}, M);
    iterations = res.stats.iterations;
    benchmark::DoNotOptimize(res.x);
  }
  state.counters["gmres_its"] = iterations;
}
BENCHMARK(BM_GmresMultigrid)->Args({2, 1})->Args({3, 1})->Args({4, 1})->Args({3, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

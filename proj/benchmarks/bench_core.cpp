// Hot-path timings: constitutive kernels, cell assembly/factorization, full
// cell steps with and without sensitivities, and the blend lookup.
#include <benchmark/benchmark.h>

#include "csahom/csa.hpp"
#include "csahom/linear_solver.hpp"
#include "csahom/material.hpp"
#include "csahom/micro.hpp"

using namespace csahom;

namespace {

MicroParams two_phase_params() {
  MicroParams p;
  p.materials[1] = MaterialParams{5.7e9, 1.35e9};
  p.materials[2] = MaterialParams{43.21e9, 28.46e9};
  return p;
}

std::string data_file(const char* rel) { return std::string(CSAHOM_DATA_DIR "/") + rel; }

MicroState solved_state(const char* mesh_rel) {
  const Mesh mesh = load_mesh(data_file(mesh_rel));
  MicroState st = make_micro_state(match_periodic(mesh), two_phase_params());
  solve_correctors(st);
  return st;
}

Mat2 bench_map() {
  Mat2 g;
  g << 0.004, 0.0015, 0.001, -0.003;
  return g;
}

}  // namespace

static void BM_tangent_moduli(benchmark::State& state) {
  const MaterialParams m{5.7e9, 1.35e9};
  Mat2 f;
  f << 1.03, 0.01, -0.005, 0.98;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tangent_A({f}, m));
  }
}
BENCHMARK(BM_tangent_moduli);

static void BM_rate_kernel(benchmark::State& state) {
  const MaterialParams m{5.7e9, 1.35e9};
  Mat2 f, g;
  f << 1.03, 0.01, -0.005, 0.98;
  g << 0.2, -0.1, 0.05, 0.15;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dtau_A({f}, m, {g}));
  }
}
BENCHMARK(BM_rate_kernel);

static void BM_cell_assemble(benchmark::State& state) {
  MicroState st = solved_state("micro/cell_500.txt");
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_tangent(st));
  }
}
BENCHMARK(BM_cell_assemble);

static void BM_cell_factorize(benchmark::State& state) {
  MicroState st = solved_state("micro/cell_500.txt");
  const SparseMat k = assemble_tangent(st);
  for (auto _ : state) {
    DirectSolver solver;
    solver.factorize(k);
    benchmark::DoNotOptimize(solver);
  }
}
BENCHMARK(BM_cell_factorize);

static void BM_micro_step(benchmark::State& state) {
  MicroState st = solved_state("micro/cell_500.txt");
  const Mat2 g = bench_map();
  const Mat2 ginv = (Mat2::Identity() + g).inverse() - Mat2::Identity();
  for (auto _ : state) {
    benchmark::DoNotOptimize(micro_step(st, g, false));
    benchmark::DoNotOptimize(micro_step(st, ginv, false));
  }
  state.SetItemsProcessed(2 * state.iterations());
}
BENCHMARK(BM_micro_step)->Unit(benchmark::kMillisecond);

static void BM_micro_step_with_sensitivities(benchmark::State& state) {
  MicroState st = solved_state("micro/cell_500.txt");
  const Mat2 g = bench_map();
  const Mat2 ginv = (Mat2::Identity() + g).inverse() - Mat2::Identity();
  for (auto _ : state) {
    benchmark::DoNotOptimize(micro_step(st, g, true));
    benchmark::DoNotOptimize(micro_step(st, ginv, true));
  }
  state.SetItemsProcessed(2 * state.iterations());
}
BENCHMARK(BM_micro_step_with_sensitivities)->Unit(benchmark::kMillisecond);

static void BM_blend_lookup(benchmark::State& state) {
  const Mesh mesh = load_mesh(data_file("micro/cell_tiny.txt"));
  CsaParams cp;
  cp.rho = 0.004;
  cp.seed = 42;
  CentroidRegistry reg(match_periodic(mesh), two_phase_params(), cp);
  reg.cover({Vec3(0.003, 0.0, 0.0), Vec3(-0.002, 0.003, 0.001), Vec3(0.001, -0.003, 0.002)}, 1,
            nullptr);
  const Vec3 q(0.0015, -0.001, 0.001);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.blend(q));
  }
}
BENCHMARK(BM_blend_lookup);

BENCHMARK_MAIN();

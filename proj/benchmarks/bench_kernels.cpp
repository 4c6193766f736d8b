#include <benchmark/benchmark.h>

#include <random>

#include "microfrac/assembly.hpp"
#include "microfrac/driver_io.hpp"
#include "microfrac/local_pf.hpp"
#include "microfrac/solver.hpp"

using namespace microfrac;

namespace {

struct Fixture {
  CaseConfig config;
  Mesh mesh;
  Assembler assembler;
  State state;
  std::vector<double> d_hat;

  Fixture(CaseKind kind, double h, Formulation mode)
      : config(case_preset(kind)),
        mesh([&] {
          config.mesh.params.h = h;
          config.mesh.params.refine_width = 0.0;
          return build_mesh(config);
        }()),
        assembler(mesh, config.material_setup(), mode),
        state(State::zero(mesh)) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3), d(0.0, 0.5);
    for (auto& v : state.u) v = u(rng);
    for (auto& v : state.d) v = d(rng);
    d_hat.assign(state.d.data(), state.d.data() + state.d.size());
  }
};

void BM_LocalSolve(benchmark::State& s) {
  const CaseConfig c = case_preset(s.range(0) == 0 ? CaseKind::SENT : CaseKind::LPanel);
  const MaterialSetup m = c.material_setup();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> psi(0.0, s.range(0) == 0 ? 50.0 : 5e-4), d(0.0, 1.0);
  std::vector<std::pair<double, double>> inputs(1024);
  for (auto& [a, b] : inputs) a = psi(rng), b = d(rng);
  std::size_t i = 0;
  for (auto _ : s) {
    const auto& [a, b] = inputs[i++ & 1023];
    benchmark::DoNotOptimize(solve_local(a, b, 0.0, m.fracture, m.alpha));
  }
  s.SetLabel(s.range(0) == 0 ? "AT2" : "quasi-brittle");
}
BENCHMARK(BM_LocalSolve)->Arg(0)->Arg(1);

void BM_ElementBlocks(benchmark::State& s) {
  const Fixture f(CaseKind::SENT, 0.05, s.range(0) == 4 ? Formulation::Problem4 : Formulation::Problem5);
  Index e = 0;
  for (auto _ : s) {
    benchmark::DoNotOptimize(f.assembler.element_blocks(e, f.state, f.d_hat));
    e = (e + 1) % f.mesh.element_count();
  }
}
BENCHMARK(BM_ElementBlocks)->Arg(4)->Arg(5);

void BM_Assemble(benchmark::State& s) {
  Fixture f(CaseKind::SENT, 1.0 / static_cast<double>(s.range(0)), Formulation::Problem5);
  f.assembler.set_threads(static_cast<int>(s.range(1)));
  for (auto _ : s) benchmark::DoNotOptimize(f.assembler.assemble(f.state, f.d_hat));
  s.counters["elements"] = static_cast<double>(f.mesh.element_count());
}
BENCHMARK(BM_Assemble)->Args({50, 1})->Args({50, 4})->Args({100, 1})->Args({100, 4})->Unit(benchmark::kMillisecond);

void BM_LinearSolve(benchmark::State& s) {
  const Fixture f(CaseKind::SENT, 1.0 / static_cast<double>(s.range(0)), Formulation::Problem5);
  const AssembledSystem sys = f.assembler.assemble(f.state, f.d_hat);
  const auto bcs = apply_case_bcs(f.config.boundary, f.assembler, 1e-4);
  const ConstrainedSystem c = apply_dirichlet(sys, bcs, true);
  const auto kind = s.range(1) == 0 ? LinearSolverKind::Direct : LinearSolverKind::IterativeGMRES;
  for (auto _ : s) benchmark::DoNotOptimize(linear_solve(c.K, c.rhs, kind));
  s.SetLabel(std::string(to_string(kind)));
  s.counters["dofs"] = static_cast<double>(c.rhs.size());
}
BENCHMARK(BM_LinearSolve)->Args({50, 0})->Args({50, 1})->Args({100, 0})->Args({100, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

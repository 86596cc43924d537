/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Timing harnesses for the blur, projection, guiding and wall solvers
 *
 ******************************************************************************/
#include <benchmark/benchmark.h>

#include <pdfluids/blur.hpp>
#include <pdfluids/guiding.hpp>
#include <pdfluids/pressure.hpp>
#include <pdfluids/scenes.hpp>
#include <pdfluids/separating_bc.hpp>

using namespace pdfluids;

namespace {

SceneState circular(int n)
{
  SceneSpec s = preset(SceneKind::Circular);
  s.dims = {n, n, 1, 1.0 / n};
  return build_scene(s);
}

//! Guiding instance: rotation target, counter-rotating current.
GuidingConfig instance(const SceneState& st, double w, double r)
{
  const GuidingSetup setup{w, w, r, r};
  return make_guiding_config(st, setup, rotation_target(st.flags, 2.0),
                             rotation_target(st.flags, -1.0));
}

void BM_Blur(benchmark::State& state)
{
  const int n = static_cast<int>(state.range(0));
  const SceneState st = circular(n);
  const GuidingConfig cfg = instance(st, 1.0, 2.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(blur_obstacle_aware(cfg.target, cfg.radius, st.flags));
  state.SetComplexityN(n * n);
}
BENCHMARK(BM_Blur)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state)
{
  const int n = static_cast<int>(state.range(0));
  const SceneState st = circular(n);
  const VelocityField u = rotation_target(st.flags, 2.0, 0.5);
  const BcTable bc(st.flags.dims);
  int iters = 0;
  for (auto _ : state) {
    const Projection p = project(u, st.flags, bc, 1e-6);
    iters = p.cg_iterations;
    benchmark::DoNotOptimize(p.velocity.data.data());
  }
  state.counters["cg_iters"] = iters;
}
BENCHMARK(BM_Project)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_Guide(benchmark::State& state)
{
  const int n = static_cast<int>(state.range(0));
  const auto method = static_cast<GuidingMethod>(state.range(1));
  const SceneState st = circular(n);
  const GuidingConfig cfg = instance(st, 4.0, 2.0);
  const BcTable bc(st.flags.dims);
  GuideOptions opts;
  opts.method = method;
  opts.direct_tol = 1e-5;
  ConvergenceLog log;
  for (auto _ : state) {
    log = ConvergenceLog{};
    benchmark::DoNotOptimize(guide_step(cfg, st.flags, bc, opts, log).data.data());
  }
  state.counters["iterations"] = log.iterations();
  state.counters["cg_iters"] = log.total_cg_iterations();
}
BENCHMARK(BM_Guide)
    ->ArgNames({"n", "method"})
    ->ArgsProduct({{32, 64}, {static_cast<int>(GuidingMethod::Pd), static_cast<int>(GuidingMethod::Admm),
                              static_cast<int>(GuidingMethod::Iop)}})
    ->Unit(benchmark::kMillisecond);

void BM_DirectLeastSquares(benchmark::State& state)
{
  const int n = static_cast<int>(state.range(0));
  const SceneState st = circular(n);
  const GuidingProblem problem(instance(st, 4.0, 2.0), st.flags);
  int iters = 0;
  for (auto _ : state) {
    const DirectSolveResult r = direct_least_squares(problem, 1e-5);
    iters = r.iterations;
    benchmark::DoNotOptimize(r.velocity.data.data());
  }
  state.counters["cg_iters"] = iters;
}
BENCHMARK(BM_DirectLeastSquares)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

//! Dam-break state a few frames in, so walls see both inflow and outflow.
struct DamFixture {
  SceneState st;
  VelocityField u;
  DamFixture()
  {
    SceneSpec s = preset(SceneKind::Dam);
    st = build_scene(s);
    LiquidStepOptions o;
    for (int f = 0; f < 5; ++f)
      liquid_step(st, o);
    u = st.velocity;
    for_each_face(u, [&](int axis, int, int, int, std::size_t idx) {
      if (axis == 1)
        u.data[idx] -= s.gravity * s.dt;
    });
  }
};

void BM_Walls(benchmark::State& state)
{
  static const DamFixture dam;
  const int mode = static_cast<int>(state.range(0));
  SeparatingOptions o;
  int cg = 0;
  for (auto _ : state) {
    SeparatingResult r;
    if (mode == 0)
      r = solve_regular(dam.u, dam.st.flags, o.cg);
    else if (mode == 1)
      r = solve_separating_standard(dam.u, dam.st.flags, o);
    else
      r = solve_separating_accelerated(dam.u, dam.st.flags, o);
    cg = r.cg_iterations;
    benchmark::DoNotOptimize(r.velocity.data.data());
  }
  state.counters["cg_iters"] = cg;
  state.SetLabel(mode == 0 ? "regular" : mode == 1 ? "separating-standard" : "separating-accelerated");
}
BENCHMARK(BM_Walls)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

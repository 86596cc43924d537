/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Acceptance suite: one PASS/FAIL line per criterion
 *
 ******************************************************************************/
#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <pdfluids/blur.hpp>
#include <pdfluids/guiding.hpp>
#include <pdfluids/io.hpp>
#include <pdfluids/operators.hpp>
#include <pdfluids/pressure.hpp>
#include <pdfluids/prox.hpp>
#include <pdfluids/scenes.hpp>
#include <pdfluids/separating_bc.hpp>

#include "oracles/dense.hpp"

using namespace pdfluids;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

class Timer {
 public:
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

VelocityField random_field(const CellFlags& flags, std::uint64_t seed, double scale = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  VelocityField v(flags.dims);
  for_each_face(v, [&](int, int, int, int, std::size_t idx) { v.data[idx] = u(rng); });
  return v;
}

//! Random field with zero on every face touching SOLID or the domain border.
VelocityField random_interior_field(const CellFlags& flags, std::uint64_t seed)
{
  VelocityField v = random_field(flags, seed);
  zero_solid_faces(v, flags);
  for_each_face(v, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    if (!flags.dims.contains_cell(fc.lo[0], fc.lo[1], fc.lo[2]) ||
        !flags.dims.contains_cell(fc.hi[0], fc.hi[1], fc.hi[2]))
      v.data[idx] = 0.0;
  });
  return v;
}

double max_abs(const ScalarField& s)
{
  double m = 0.0;
  for (double v : s.values)
    m = std::max(m, std::abs(v));
  return m;
}

SceneSpec small_smoke(SceneKind kind, int n)
{
  SceneSpec s = preset(kind);
  s.dims = {n, n, 1, 1.0 / n};
  return s;
}

//! 16x16 circular-target guiding instance used by the oracle comparisons.
GuidingConfig circular_instance(const SceneState& st)
{
  GuidingSetup setup;
  setup.weight_left = 2.0;
  setup.weight_right = 1.0;
  setup.radius_left = 1.0;
  setup.radius_right = 1.0;
  const VelocityField target = rotation_target(st.flags, 2.0);
  VelocityField current = random_interior_field(st.flags, 7);
  current *= 0.5;
  return make_guiding_config(st, setup, target, current);
}

// ---------------------------------------------------------------------------

Outcome projection_correctness()
{
  Timer timer;
  // Grid units (h = 1): the CG tolerance is relative and divergence scales with 1/h.
  const GridDims d{64, 64, 1, 1.0};
  const CellFlags flags = CellFlags::box(d);
  const BcTable bc = BcTable::all_neumann(d);
  const VelocityField u = random_interior_field(flags, 1);
  const Projection p1 = project(u, flags, bc, 1e-5);
  const Projection p2 = project(p1.velocity, flags, bc, 1e-5);
  const double div = max_abs(divergence(p1.velocity, flags));
  const double idem = relative_l2(p2.velocity, p1.velocity);
  const double t = timer.seconds();
  return {div <= 1e-4 && idem <= 2e-5 && t < 1.0,
          "max|div|=" + fmt(div) + " idempotence=" + fmt(idem) + " time=" + fmt(t) + "s"};
}

Outcome oracle_equivalence()
{
  Timer timer;
  const SceneState st = build_scene(small_smoke(SceneKind::Circular, 16));
  const GuidingConfig cfg = circular_instance(st);

  const oracle::Quadratic q = oracle::guiding_quadratic(cfg, st.flags);
  const Eigen::VectorXd ref =
      oracle::constrained_minimizer(q, st.flags, oracle::Walls::Neumann, cfg.current);

  GuideOptions opt;
  opt.method = GuidingMethod::Pd;
  opt.exact_prox = true;
  opt.params.pd.eps_abs = opt.params.pd.eps_rel = 1e-7;
  opt.params.pd.max_iters = 20000;
  opt.cg = {1e-2, 1e-10, 20000};
  ConvergenceLog log;
  const VelocityField z = guide_step(cfg, st.flags, BcTable::all_neumann(st.flags.dims), opt, log);
  const Eigen::VectorXd zv = oracle::to_vector(z);
  const double rel = (zv - ref).norm() / ref.norm();
  const double t = timer.seconds();
  return {rel <= 1e-3 && log.converged && t < 10.0,
          "relL2=" + fmt(rel) + " pd_iters=" + std::to_string(log.iterations()) +
              " time=" + fmt(t) + "s"};
}

Outcome cross_method_fixed_point()
{
  const SceneState st = build_scene(small_smoke(SceneKind::Circular, 16));
  const GuidingConfig cfg = circular_instance(st);
  const BcTable bc = BcTable::all_neumann(st.flags.dims);

  // Converged agreement under the default parameter formulas.
  GuideOptions opt;
  opt.exact_prox = true;
  opt.params.pd.max_iters = opt.params.admm.max_iters = 5000;
  ConvergenceLog lp, la;
  opt.method = GuidingMethod::Pd;
  const VelocityField zp = guide_step(cfg, st.flags, bc, opt, lp);
  opt.method = GuidingMethod::Admm;
  const VelocityField za = guide_step(cfg, st.flags, bc, opt, la);
  const double tol = std::max(lp.records.back().epsilon, la.records.back().epsilon);
  const double gap = norm(zp - za);
  const bool agree = lp.converged && la.converged && gap <= 3.0 * tol;

  // Iterate-by-iterate equality with unit parameters.
  auto problem = std::make_shared<const GuidingProblem>(cfg, st.flags);
  const ProxOperator prox = exact_prox(problem);
  const Projector proj = make_projector(st.flags, bc, 20000);
  const CgConfig exact_cg{1e-13, 1e-13, 20000};
  PdParams pd;
  pd.tau = pd.sigma = pd.theta = 1.0;
  pd.max_iters = 5;
  pd.eps_abs = pd.eps_rel = 1e-300;
  AdmmParams admm;
  admm.rho = 1.0;
  admm.max_iters = 5;
  admm.eps_abs = admm.eps_rel = 1e-300;
  double worst = 0.0;
  for (int steps = 1; steps <= 5; ++steps) {
    pd.max_iters = admm.max_iters = steps;
    ConvergenceLog a, b;
    const VelocityField zpd = pd_solve(prox, proj, pd, exact_cg, cfg.current, a, {});
    const VelocityField zad = admm_solve(prox, proj, admm, exact_cg, cfg.current, b, {});
    worst = std::max(worst, relative_l2(zpd, zad));
  }
  return {agree && worst <= 1e-10, "|z_pd - z_admm|=" + fmt(gap) + " (3 eps=" + fmt(3 * tol) +
                                       ") unit-parameter iterate gap=" + fmt(worst)};
}

Outcome smw_validity()
{
  const SceneState st = build_scene(small_smoke(SceneKind::Circular, 8));
  GuidingSetup setup;  // W = 1, r = 1
  const GuidingConfig cfg = make_guiding_config(st, setup, rotation_target(st.flags, 1.0),
                                                random_interior_field(st.flags, 3));
  const GuidingProblem problem(cfg, st.flags);
  const oracle::Quadratic q = oracle::guiding_quadratic(cfg, st.flags);
  const VelocityField v = random_interior_field(st.flags, 4);
  const Eigen::VectorXd vv = oracle::to_vector(v);

  auto error_at = [&](double sigma) {
    const Eigen::VectorXd exact = oracle::prox(q, sigma, vv);
    const Eigen::VectorXd approx = oracle::to_vector(problem.prox_smw(problem.precompute(sigma), v));
    return (approx - exact).norm() / exact.norm();
  };
  const double sigma = default_guiding_params(cfg.mean_weight(st.flags)).pd.sigma;
  const double e0 = error_at(sigma);
  std::string detail = "sigma=" + fmt(sigma) + " err=" + fmt(e0) + " sweep:";
  bool monotone = true;
  double prev = INFINITY;
  for (double s : {1.0, 4.0, 16.0, 64.0}) {
    const double e = error_at(s);
    detail += " " + fmt(e);
    monotone = monotone && e < prev;
    prev = e;
  }
  return {e0 <= 0.10 && monotone, detail};
}

Outcome iop_failure()
{
  // Source-like target that no divergence-free field can follow, with strongly
  // varying weights and a wide blur.
  const SceneState st = build_scene(small_smoke(SceneKind::Circular, 32));
  const CellFlags& flags = st.flags;
  const GridDims& d = flags.dims;
  const std::vector<char> mask = guiding_face_mask(flags);
  VelocityField target(d);
  for_each_face(target, [&](int axis, int i, int j, int k, std::size_t idx) {
    if (!mask[idx])
      return;
    const Vec3 p = face_position(d, axis, i, j, k);
    target.data[idx] = 2.0 * (p[axis] - 0.5);
  });
  GuidingSetup setup;
  setup.weight_left = 8.0;
  setup.weight_right = 0.5;
  setup.radius_left = 0.5;
  setup.radius_right = 3.0;
  const GuidingConfig cfg = make_guiding_config(st, setup, target, rotation_target(flags, 1.0));
  const GuidingProblem problem(cfg, flags);
  const BcTable bc = BcTable::all_neumann(d);

  GuideOptions opt;
  opt.exact_prox = true;
  opt.params.pd.eps_abs = opt.params.pd.eps_rel = 1e-5;
  opt.params.pd.max_iters = 5000;
  opt.iop.eps_abs = opt.iop.eps_rel = 1e-5;
  opt.iop.max_iters = 5000;
  ConvergenceLog lp, li;
  opt.method = GuidingMethod::Pd;
  const VelocityField zp = guide_step(cfg, flags, bc, opt, lp);
  opt.method = GuidingMethod::Iop;
  const VelocityField zi = guide_step(cfg, flags, bc, opt, li);

  const double fp = problem.objective(zp);
  const double fi = problem.objective(zi);
  // Divergence in grid units (flux sum per cell) against the projection bound 10 eps_CG.
  const double div_p = max_abs(divergence(zp, flags)) * d.h;
  const double div_i = max_abs(divergence(zi, flags)) * d.h;
  const double div_tol = 10.0 * opt.cg.eps_final;
  const double gap = (fi - fp) / fp;
  return {lp.converged && li.converged && gap >= 0.05 && div_p <= div_tol && div_i <= div_tol,
          "f_pd=" + fmt(fp) + " f_iop=" + fmt(fi) + " gap=" + fmt(100 * gap) + "% max|div| pd=" +
              fmt(div_p) + " iop=" + fmt(div_i)};
}

Outcome convergence_trend()
{
  Timer timer;
  const int frames = 20;
  std::vector<double> ratio;
  std::string detail;
  double pd8 = 0, ad8 = 0, pd16 = 0, ad16 = 0;
  for (double w : {2.0, 4.0, 8.0, 16.0}) {
    SceneState st = build_scene(preset(SceneKind::Circular));
    SmokeStepOptions opt;
    opt.guided = true;
    opt.guiding.weight_left = w;
    opt.guiding.weight_right = 1.0;
    opt.guiding.radius_left = opt.guiding.radius_right = 1.0;
    opt.guide.method = GuidingMethod::Pd;
    opt.shadow = GuidingMethod::Admm;
    // Outer stop as tight as the final projection accuracy, so iteration counts are
    // not set by the CG accuracy schedule.
    opt.guide.params.pd.eps_abs = opt.guide.params.pd.eps_rel = opt.guide.cg.eps_final;
    opt.guide.params.admm.eps_abs = opt.guide.params.admm.eps_rel = opt.guide.cg.eps_final;
    opt.guide.params.pd.max_iters = opt.guide.params.admm.max_iters = 5000;
    double pd_sum = 0, admm_sum = 0;
    for (int f = 0; f < frames; ++f) {
      const StepStats s = smoke_step(st, opt);
      pd_sum += s.log.iterations();
      admm_sum += s.shadow_log ? s.shadow_log->iterations() : 0;
    }
    const double pd = pd_sum / frames;
    const double admm = admm_sum / frames;
    ratio.push_back(pd / admm);
    detail += " W=" + fmt(w) + ":" + fmt(pd) + "/" + fmt(admm);
    if (w == 8.0) {
      pd8 = pd;
      ad8 = admm;
    }
    if (w == 16.0) {
      pd16 = pd;
      ad16 = admm;
    }
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < ratio.size(); ++i)
    decreasing = decreasing && ratio[i] < ratio[i - 1];
  const double t = timer.seconds();
  return {pd8 < ad8 && pd16 < ad16 && decreasing && t < 300.0,
          "mean pd/admm iterations" + detail + " time=" + fmt(t) + "s"};
}

Outcome hydrostatic_rest()
{
  std::string detail;
  bool pass = true;
  for (BcMode mode : {BcMode::SeparatingStandard, BcMode::SeparatingAccelerated}) {
    SceneState st = build_scene(preset(SceneKind::Hydrostatic));
    LiquidStepOptions opt;
    opt.mode = mode;
    double vmax = 0.0;
    std::size_t separating = 0;
    for (int f = 0; f < 50; ++f) {
      const StepStats s = liquid_step(st, opt);
      vmax = std::max(vmax, s.max_velocity);
      separating = std::max(separating, s.separating_wall_faces);
    }
    pass = pass && vmax <= 1e-3 && separating == 0;
    detail += " " + to_string(mode) + ": max|u|=" + fmt(vmax) +
              " separating_faces=" + std::to_string(separating);
  }
  return {pass, detail.substr(1)};
}

int ceiling_frames(BcMode mode, int frames)
{
  SceneState st = build_scene(preset(SceneKind::Dam));
  LiquidStepOptions opt;
  opt.mode = mode;
  int n = 0;
  for (int f = 0; f < frames; ++f)
    n += liquid_step(st, opt).ceiling_contact ? 1 : 0;
  return n;
}

Outcome dam_contrast()
{
  Timer timer;
  const int regular = ceiling_frames(BcMode::Regular, 150);
  std::string detail = "ceiling frames regular=" + std::to_string(regular);
  bool pass = regular > 0;
  for (BcMode mode : {BcMode::SeparatingStandard, BcMode::SeparatingAccelerated}) {
    const int sep = ceiling_frames(mode, 150);
    const double reduction = regular > 0 ? 1.0 - double(sep) / regular : 0.0;
    pass = pass && reduction >= 0.9;
    detail += " " + to_string(mode) + "=" + std::to_string(sep) + " (reduction " + fmt(100 * reduction) + "%)";
  }
  const double t = timer.seconds();
  return {pass && t < 300.0, detail + " time=" + fmt(t) + "s"};
}

Outcome accelerated_vs_standard()
{
  SceneState st = build_scene(preset(SceneKind::Dam));
  LiquidStepOptions opt;
  opt.mode = BcMode::SeparatingAccelerated;
  opt.shadow = BcMode::SeparatingStandard;
  int cheaper = 0;
  double diff = 0.0;
  const int frames = 150;
  for (int f = 0; f < frames; ++f) {
    const StepStats s = liquid_step(st, opt);
    cheaper += s.cg_iterations <= s.shadow_cg_iterations ? 1 : 0;
    diff += s.shadow_difference;
  }
  const double frac = double(cheaper) / frames;
  const double mean_diff = diff / frames;
  return {frac >= 0.9 && mean_diff <= 0.05,
          "accelerated cheaper on " + fmt(100 * frac) + "% of frames, mean relL2=" + fmt(mean_diff)};
}

Outcome non_separating_validation()
{
  SceneState st = build_scene(preset(SceneKind::Dam));
  LiquidStepOptions warm;
  warm.mode = BcMode::Regular;
  for (int f = 0; f < 20; ++f)
    liquid_step(st, warm);
  VelocityField u = st.velocity;
  for (double& v : u.component(1))
    v -= st.spec.dt * st.spec.gravity;

  SeparatingOptions opt;
  opt.lock_all = true;
  opt.pd.eps_abs = opt.pd.eps_rel = 1e-6;
  opt.pd.max_iters = 5000;
  const SeparatingResult locked = solve_separating_standard(u, st.flags, opt);
  const SeparatingResult regular = solve_regular(u, st.flags, opt.cg);

  // Compare where the liquid velocity is defined: faces touching FLUID.
  double num = 0.0, den = 0.0;
  for_each_face(u, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    if (!st.flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]) &&
        !st.flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]))
      return;
    const double dv = locked.velocity.data[idx] - regular.velocity.data[idx];
    num += dv * dv;
    den += regular.velocity.data[idx] * regular.velocity.data[idx];
  });
  const double rel = std::sqrt(num / den);
  return {locked.converged && rel <= 1e-3,
          "relL2=" + fmt(rel) + " pd_iters=" + std::to_string(locked.log.iterations())};
}

Outcome property_suites()
{
  std::string detail;
  bool pass = true;

  // blur adjointness
  const SceneState st = build_scene(small_smoke(SceneKind::Circular, 24));
  ScalarField radius(st.flags.dims);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.0, 2.5);
  for (std::size_t c = 0; c < radius.values.size(); ++c)
    radius.values[c] = st.flags.tags[c] == CellType::Solid ? 0.0 : ur(rng);
  const VelocityField x = random_field(st.flags, 12);
  const VelocityField y = random_field(st.flags, 13);
  const double lhs = dot(blur_obstacle_aware(x, radius, st.flags), y);
  const double rhs = dot(x, blur_obstacle_aware(y, radius, st.flags, true));
  const double adj = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
  pass = pass && adj <= 1e-10;
  detail += "adjoint=" + fmt(adj);

  // prox optimality
  GuidingSetup setup;
  setup.weight_left = 3.0;
  setup.radius_left = 2.0;
  const GuidingConfig cfg = make_guiding_config(st, setup, rotation_target(st.flags, 1.0),
                                                random_interior_field(st.flags, 14));
  const GuidingProblem problem(cfg, st.flags);
  const VelocityField v = random_interior_field(st.flags, 15);
  const double sigma = 2.5;
  const VelocityField px = problem.prox_exact(sigma, v);
  VelocityField res = problem.gradient(px);
  res.add_scaled(px - v, sigma);
  VelocityField rhs_vec = v;
  rhs_vec *= sigma;
  rhs_vec -= problem.linear_term();
  const double opt_res = norm(res) / norm(rhs_vec);
  pass = pass && opt_res <= 1e-8;
  detail += " prox_residual=" + fmt(opt_res);

  // finite-difference gradient
  const VelocityField x0 = random_interior_field(st.flags, 16);
  const VelocityField dir = random_interior_field(st.flags, 17);
  const double step = 1e-4;
  VelocityField xp = x0, xm = x0;
  xp.add_scaled(dir, step);
  xm.add_scaled(dir, -step);
  const double fd = (problem.objective(xp) - problem.objective(xm)) / (2 * step);
  const double an = dot(problem.gradient(x0), dir);
  const double grad_err = std::abs(fd - an) / std::abs(an);
  pass = pass && grad_err <= 1e-5;
  detail += " gradient=" + fmt(grad_err);

  // Moreau identity on a dense quadratic: y = prox of the conjugate at v satisfies
  // y = grad f((v - y) / sigma).
  {
    const SceneState small = build_scene(small_smoke(SceneKind::Circular, 8));
    const GuidingConfig c8 = make_guiding_config(small, setup, rotation_target(small.flags, 1.0),
                                                 random_interior_field(small.flags, 18));
    const oracle::Quadratic q = oracle::guiding_quadratic(c8, small.flags);
    auto p8 = std::make_shared<const GuidingProblem>(c8, small.flags);
    const ProxOperator prox = exact_prox(p8, 1e-14);
    const VelocityField w = random_interior_field(small.flags, 19);
    const double s = 3.0;
    const Eigen::VectorXd wv = oracle::to_vector(w);
    const Eigen::VectorXd yv = oracle::to_vector(moreau_transform(prox, s, w));
    const Eigen::VectorXd grad = q.A * ((wv - yv) / s) + q.b;
    const double mor = (yv - grad).norm() / yv.norm();
    pass = pass && mor <= 1e-10;
    detail += " moreau=" + fmt(mor);
  }

  // GridFile round trip
  {
    const VelocityField g = random_field(st.flags, 20);
    const std::string bytes = encode_grid(g);
    const GridData back = decode_grid(bytes);
    const bool same = std::holds_alternative<VelocityField>(back) &&
                      std::get<VelocityField>(back) == g &&
                      encode_grid(std::get<VelocityField>(back)) == bytes;
    pass = pass && same;
    detail += same ? " gridfile=bit-exact" : " gridfile=MISMATCH";
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"pdfluids acceptance suite"};
  std::vector<int> only;
  app.add_option("-c,--criterion", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "projection correctness", projection_correctness},
      {2, "guiding oracle equivalence", oracle_equivalence},
      {3, "cross-method fixed point", cross_method_fixed_point},
      {4, "fast prox validity", smw_validity},
      {5, "iterated projection failure", iop_failure},
      {6, "convergence trend", convergence_trend},
      {7, "hydrostatic rest", hydrostatic_rest},
      {8, "dam ceiling contrast", dam_contrast},
      {9, "accelerated vs standard walls", accelerated_vs_standard},
      {10, "non-separating validation", non_separating_validation},
      {11, "property suites", property_suites},
  };

  int failures = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end())
      continue;
    Outcome o;
    try {
      o = c.run();
    }
    catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

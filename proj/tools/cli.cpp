/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Command-line front end
 *
 ******************************************************************************/
#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdfluids/io.hpp"
#include "pdfluids/operators.hpp"
#include "pdfluids/scenes.hpp"

namespace pdfluids {

namespace fs = std::filesystem;

namespace {

//! Flags shared by every subcommand; unset optionals leave the config untouched.
struct Overrides {
  std::string config_path;
  std::optional<std::string> scene;
  std::optional<int> frames;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<double> w_left;
  std::optional<double> w_right;
  std::optional<double> r_left;
  std::optional<double> r_right;
  std::optional<std::string> bc;
  std::optional<int> resolution;

  void attach(CLI::App* cmd)
  {
    cmd->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--scene", scene, "scene name");
    cmd->add_option("--frames", frames, "number of time steps");
    cmd->add_option("-o,--output", output, "output directory");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--method", method, "projection | pd | admm | iop | direct");
    cmd->add_option("--w-left", w_left, "guiding weight on the left half");
    cmd->add_option("--w-right", w_right, "guiding weight on the right half");
    cmd->add_option("--r-left", r_left, "blur radius on the left half (cells)");
    cmd->add_option("--r-right", r_right, "blur radius on the right half (cells)");
    cmd->add_option("--bc", bc, "regular | separating-standard | separating-accelerated");
    cmd->add_option("--resolution", resolution, "cells along x (y scales with the preset)");
  }

  RunConfig build(std::optional<SceneKind> default_scene) const
  {
    RunConfig cfg;
    if (!config_path.empty())
      cfg = load_run_config(config_path);
    else if (default_scene)
      cfg.scene = preset(*default_scene);
    if (scene) {
      const SceneKind kind = parse_scene_kind(*scene);
      if (kind != cfg.scene.kind) {
        const SceneSpec old = cfg.scene;
        cfg.scene = preset(kind);
        cfg.scene.seed = old.seed;
      }
    }
    if (resolution) {
      GridDims& d = cfg.scene.dims;
      const double aspect = static_cast<double>(d.ny) / d.nx;
      const double aspect_z = static_cast<double>(d.nz) / d.nx;
      d.h = d.h * d.nx / *resolution;
      d.nx = *resolution;
      d.ny = std::max(4, static_cast<int>(std::lround(aspect * *resolution)));
      if (!d.is_2d())
        d.nz = std::max(4, static_cast<int>(std::lround(aspect_z * *resolution)));
    }
    if (frames)
      cfg.frames = *frames;
    if (output)
      cfg.output_dir = *output;
    if (seed)
      cfg.scene.seed = *seed;
    if (method)
      cfg.method = parse_solver_method(*method);
    if (w_left)
      cfg.guiding.weight_left = *w_left;
    if (w_right)
      cfg.guiding.weight_right = *w_right;
    if (r_left)
      cfg.guiding.radius_left = *r_left;
    if (r_right)
      cfg.guiding.radius_right = *r_right;
    if (bc)
      cfg.bc_mode = parse_bc_mode(*bc);
    return cfg;
  }
};

std::string frame_name(const char* stem, int frame, const char* ext)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, frame, ext);
  return buf;
}

//! Per-frame statistics table written next to the frame outputs.
class StatsTable {
 public:
  explicit StatsTable(std::string header) : text_(std::move(header) + "\n") {}

  template <class... T>
  void row(const T&... values)
  {
    std::ostringstream line;
    line << std::setprecision(17);
    bool first = true;
    ((line << (first ? "" : ",") << values, first = false), ...);
    text_ += line.str() + "\n";
  }
  void save(const fs::path& path) const { write_file_atomic(path, text_); }

 private:
  std::string text_;
};

double mean(const std::vector<double>& v)
{
  if (v.empty())
    return 0.0;
  double s = 0.0;
  for (double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

void prepare_output(const RunConfig& cfg)
{
  fs::create_directories(cfg.output_dir);
  write_file_atomic(fs::path(cfg.output_dir) / "config.json", serialize_run_config(cfg));
}

SmokeStepOptions smoke_options(const RunConfig& cfg, bool guided)
{
  SmokeStepOptions o;
  o.guided = guided;
  o.guiding = cfg.guiding;
  o.guide = cfg.guide_options();
  o.cg = cfg.cg;
  return o;
}

//! Runs a smoke scene; optional per-frame targets replace the scene's own.
int run_smoke(const RunConfig& cfg,
              bool guided,
              const std::vector<VelocityField>* targets = nullptr)
{
  prepare_output(cfg);
  SceneState state = build_scene(cfg.scene);
  const SmokeStepOptions opts = smoke_options(cfg, guided);
  const fs::path out(cfg.output_dir);
  StatsTable table("frame,iterations,cg_iters,converged,max_divergence,objective");
  int failures = 0;
  std::vector<double> iterations;
  for (int f = 1; f <= cfg.frames; ++f) {
    if (targets)
      state.target = (*targets)[std::min<std::size_t>(f - 1, targets->size() - 1)];
    const StepStats st = smoke_step(state, opts);
    failures += st.converged ? 0 : 1;
    iterations.push_back(st.log.iterations());
    const double obj = st.log.records.empty() ? 0.0 : st.log.records.back().objective;
    table.row(f, st.log.iterations(), st.cg_iterations, st.converged ? 1 : 0, st.max_divergence,
              std::isnan(obj) ? 0.0 : obj);
    if (f % cfg.output_every == 0) {
      render_pgm(state.density, out / frame_name("density", f, "pgm"));
      write_grid(out / frame_name("velocity", f, "pdfg"), state.velocity);
      write_grid(out / frame_name("density", f, "pdfg"), state.density);
      if (guided)
        write_convergence_csv(st.log, out / frame_name("convergence", f, "csv"));
    }
  }
  table.save(out / "frames.csv");
  std::cout << "scene=" << to_string(cfg.scene.kind) << " frames=" << cfg.frames
            << " mean_iterations=" << mean(iterations) << " non_converged=" << failures << "\n";
  return failures > 0 ? kExitNotConverged : kExitOk;
}

//! Runs a liquid scene with the configured wall treatment.
int run_liquid(const RunConfig& cfg, std::optional<BcMode> shadow)
{
  prepare_output(cfg);
  SceneState state = build_scene(cfg.scene);
  LiquidStepOptions opts;
  opts.mode = cfg.bc_mode;
  opts.separating = cfg.separating_options();
  opts.shadow = shadow;
  const fs::path out(cfg.output_dir);
  StatsTable table(
      "frame,ceiling_contact,cg_iters,converged,max_velocity,separating_wall_faces,shadow_cg_iters,"
      "shadow_difference");
  int ceiling_frames = 0;
  int failures = 0;
  std::vector<double> cg_iters;
  for (int f = 1; f <= cfg.frames; ++f) {
    const StepStats st = liquid_step(state, opts);
    ceiling_frames += st.ceiling_contact ? 1 : 0;
    failures += st.converged ? 0 : 1;
    cg_iters.push_back(st.cg_iterations);
    table.row(f, st.ceiling_contact ? 1 : 0, st.cg_iterations, st.converged ? 1 : 0, st.max_velocity,
              st.separating_wall_faces, st.shadow_cg_iterations, st.shadow_difference);
    if (f % cfg.output_every == 0) {
      render_pgm(state.flags, out / frame_name("flags", f, "pgm"));
      write_grid(out / frame_name("velocity", f, "pdfg"), state.velocity);
    }
  }
  table.save(out / "frames.csv");
  write_file_atomic(out / "ceiling.txt", "ceiling_frames=" + std::to_string(ceiling_frames) + "\n");
  std::cout << "scene=" << to_string(cfg.scene.kind) << " bc=" << to_string(cfg.bc_mode)
            << " frames=" << cfg.frames << " ceiling_frames=" << ceiling_frames
            << " mean_cg_iters=" << mean(cg_iters) << " non_converged=" << failures << "\n";
  return failures > 0 ? kExitNotConverged : kExitOk;
}

int cmd_simulate(const Overrides& ov)
{
  const RunConfig cfg = ov.build(std::nullopt);
  if (is_liquid(cfg.scene.kind))
    return run_liquid(cfg, std::nullopt);
  return run_smoke(cfg, cfg.method != SolverMethod::Projection);
}

int cmd_guide(const Overrides& ov)
{
  RunConfig cfg = ov.build(SceneKind::Circular);
  if (is_liquid(cfg.scene.kind))
    throw InvalidArgument("guide runs smoke scenes only");
  if (cfg.method == SolverMethod::Projection)
    cfg.method = SolverMethod::Pd;
  return run_smoke(cfg, true);
}

int cmd_upres(const Overrides& ov, const std::string& input, int factor)
{
  if (factor < 1)
    throw InvalidArgument("upsampling factor must be at least 1");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input))
    if (entry.path().extension() == ".pdfg" && entry.path().filename().string().rfind("velocity_", 0) == 0)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw InvalidArgument("no velocity_*.pdfg files in '" + input + "'");

  std::vector<VelocityField> targets;
  for (const auto& p : files)
    targets.push_back(upsample(read_velocity_grid(p), factor));

  RunConfig cfg = ov.build(SceneKind::Plume);
  if (is_liquid(cfg.scene.kind))
    throw InvalidArgument("upres runs smoke scenes only");
  cfg.scene.dims = targets.front().dims;
  if (cfg.method == SolverMethod::Projection)
    cfg.method = SolverMethod::Pd;
  if (!ov.frames)
    cfg.frames = static_cast<int>(targets.size());
  cfg.validate();
  return run_smoke(cfg, true, &targets);
}

int cmd_compare(const Overrides& ov)
{
  RunConfig cfg = ov.build(SceneKind::Circular);
  if (is_liquid(cfg.scene.kind))
    throw InvalidArgument("compare-methods runs guided smoke scenes");
  prepare_output(cfg);
  SceneState state = build_scene(cfg.scene);
  SmokeStepOptions opts = smoke_options(cfg, true);
  opts.guide.method = GuidingMethod::Pd;
  opts.shadow = GuidingMethod::Admm;
  const fs::path out(cfg.output_dir);
  StatsTable pd("frame,iterations,cg_iters,converged");
  StatsTable admm("frame,iterations,cg_iters,converged,difference_to_pd");
  std::vector<double> pd_it;
  std::vector<double> admm_it;
  int failures = 0;
  for (int f = 1; f <= cfg.frames; ++f) {
    const StepStats st = smoke_step(state, opts);
    const ConvergenceLog& other = *st.shadow_log;
    pd_it.push_back(st.log.iterations());
    admm_it.push_back(other.iterations());
    failures += (st.converged && other.converged) ? 0 : 1;
    pd.row(f, st.log.iterations(), st.cg_iterations, st.converged ? 1 : 0);
    admm.row(f, other.iterations(), st.shadow_cg_iterations, other.converged ? 1 : 0,
             st.shadow_difference);
    if (f % cfg.output_every == 0) {
      write_convergence_csv(st.log, out / frame_name("pd", f, "csv"));
      write_convergence_csv(other, out / frame_name("admm", f, "csv"));
    }
  }
  pd.save(out / "pd_iterations.csv");
  admm.save(out / "admm_iterations.csv");
  std::ostringstream summary;
  summary << "method,mean_iterations\n"
          << "pd," << mean(pd_it) << "\n"
          << "admm," << mean(admm_it) << "\n";
  write_file_atomic(out / "summary.csv", summary.str());
  std::cout << "W=(" << cfg.guiding.weight_left << "," << cfg.guiding.weight_right
            << ") mean_iterations pd=" << mean(pd_it) << " admm=" << mean(admm_it) << "\n";
  return failures > 0 ? kExitNotConverged : kExitOk;
}

int cmd_dam(const Overrides& ov, const std::optional<std::string>& shadow)
{
  RunConfig cfg = ov.build(SceneKind::Dam);
  if (!is_liquid(cfg.scene.kind))
    throw InvalidArgument("dam runs liquid scenes only");
  if (!ov.frames && ov.config_path.empty())
    cfg.frames = 150;
  std::optional<BcMode> sh;
  if (shadow)
    sh = parse_bc_mode(*shadow);
  return run_liquid(cfg, sh);
}

}  // namespace

int cli_main(int argc, char** argv)
{
  CLI::App app{"pdfluids: proximal fluid solvers for guiding and separating boundaries"};
  app.require_subcommand(1);

  Overrides simulate_ov, guide_ov, upres_ov, compare_ov, dam_ov;
  auto* simulate = app.add_subcommand("simulate", "run a scene from a configuration");
  simulate_ov.attach(simulate);
  auto* guide = app.add_subcommand("guide", "run a guided smoke simulation");
  guide_ov.attach(guide);
  auto* upres = app.add_subcommand("upres", "guide a fine simulation with an upsampled coarse one");
  upres_ov.attach(upres);
  std::string upres_input;
  int upres_factor = 2;
  upres->add_option("-i,--input", upres_input, "directory with coarse velocity_*.pdfg frames")
      ->required()
      ->check(CLI::ExistingDirectory);
  upres->add_option("--factor", upres_factor, "integer refinement factor");
  auto* compare = app.add_subcommand("compare-methods", "PD vs. ADMM on identical guided steps");
  compare_ov.attach(compare);
  auto* dam = app.add_subcommand("dam", "breaking-dam liquid with a selectable wall treatment");
  dam_ov.attach(dam);
  std::optional<std::string> dam_shadow;
  dam->add_option("--shadow", dam_shadow, "also solve each step with this wall treatment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (*simulate)
      return cmd_simulate(simulate_ov);
    if (*guide)
      return cmd_guide(guide_ov);
    if (*upres)
      return cmd_upres(upres_ov, upres_input, upres_factor);
    if (*compare)
      return cmd_compare(compare_ov);
    if (*dam)
      return cmd_dam(dam_ov, dam_shadow);
  } catch (const InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << " (residual " << e.residual()
              << " after " << e.iterations() << " iterations)\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace pdfluids

/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Scene builders and time stepping
 *
 ******************************************************************************/
#include "pdfluids/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pdfluids/operators.hpp"
#include "pdfluids/pressure.hpp"

namespace pdfluids {

namespace {

struct KindName {
  SceneKind kind;
  const char* name;
};
constexpr KindName kKindNames[] = {
    {SceneKind::Circular, "circular"}, {SceneKind::Star, "star"},
    {SceneKind::Plume, "plume"},       {SceneKind::Tornado, "tornado"},
    {SceneKind::Dam, "dam"},           {SceneKind::Hydrostatic, "hydrostatic"},
    {SceneKind::ObstacleBox, "obstacle-box"},
};

struct ModeName {
  BcMode mode;
  const char* name;
};
constexpr ModeName kModeNames[] = {
    {BcMode::Regular, "regular"},
    {BcMode::SeparatingStandard, "separating-standard"},
    {BcMode::SeparatingAccelerated, "separating-accelerated"},
};

}  // namespace

std::string to_string(SceneKind kind)
{
  for (const auto& kn : kKindNames)
    if (kn.kind == kind)
      return kn.name;
  throw InvalidArgument("unknown scene kind");
}

SceneKind parse_scene_kind(const std::string& name)
{
  for (const auto& kn : kKindNames)
    if (name == kn.name)
      return kn.kind;
  throw InvalidArgument("unknown scene '" + name + "'");
}

bool is_liquid(SceneKind kind)
{
  return kind == SceneKind::Dam || kind == SceneKind::Hydrostatic;
}

std::string to_string(BcMode mode)
{
  for (const auto& mn : kModeNames)
    if (mn.mode == mode)
      return mn.name;
  throw InvalidArgument("unknown boundary mode");
}

BcMode parse_bc_mode(const std::string& name)
{
  for (const auto& mn : kModeNames)
    if (name == mn.name)
      return mn.mode;
  throw InvalidArgument("unknown boundary mode '" + name + "'");
}

void SceneSpec::validate() const
{
  dims.validate();
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw InvalidArgument("dt must be positive");
  if (kind == SceneKind::Tornado && dims.is_2d())
    throw InvalidArgument("the tornado scene is three-dimensional (nz >= 4)");
  if (!(fill_width > 0.0 && fill_width <= 1.0) || !(fill_height > 0.0 && fill_height <= 1.0))
    throw InvalidArgument("fill fractions must lie in (0, 1]");
  if (!(flip_ratio >= 0.0 && flip_ratio <= 1.0))
    throw InvalidArgument("FLIP ratio must lie in [0, 1]");
  if (!(max_cfl > 0.0))
    throw InvalidArgument("CFL limit must be positive");
  if (particles_per_cell < 0)
    throw InvalidArgument("particles per cell must be non-negative");
  if (!(emitter_radius >= 0.0 && emitter_radius < 0.5))
    throw InvalidArgument("emitter radius must lie in [0, 0.5)");
  if (star_lobes < 0 || !std::isfinite(star_amplitude))
    throw InvalidArgument("invalid star target parameters");
  if (!std::isfinite(gravity) || !std::isfinite(buoyancy) || !std::isfinite(angular_speed) ||
      !std::isfinite(upward_speed))
    throw InvalidArgument("scene parameters must be finite");
}

int SceneSpec::particles_per_cell_or_default() const
{
  if (particles_per_cell > 0)
    return particles_per_cell;
  return dims.is_2d() ? 4 : 8;
}

SceneSpec preset(SceneKind kind)
{
  SceneSpec s;
  s.kind = kind;
  switch (kind) {
    case SceneKind::Circular:
    case SceneKind::Star:
    case SceneKind::Plume:
    case SceneKind::ObstacleBox:
      s.dims = {64, 64, 1, 1.0 / 64.0};
      s.dt = 0.02;
      break;
    case SceneKind::Tornado:
      s.dims = {40, 60, 40, 1.0 / 40.0};
      s.dt = 0.02;
      s.angular_speed = 2.0;
      s.upward_speed = 0.2;
      break;
    case SceneKind::Dam:
      s.dims = {100, 70, 1, 1.0 / 70.0};
      s.dt = 0.01;
      s.fill_width = 0.3;
      s.fill_height = 0.9;
      break;
    case SceneKind::Hydrostatic:
      s.dims = {32, 32, 1, 1.0 / 32.0};
      s.dt = 0.01;
      s.fill_width = 1.0;
      s.fill_height = 0.5;
      break;
  }
  return s;
}

VelocityField rotation_target(const CellFlags& flags, double omega, double amplitude, int lobes)
{
  const GridDims& d = flags.dims;
  const auto e = d.extent();
  const double cx = 0.5 * e[0] * d.h;
  const double cy = 0.5 * e[1] * d.h;
  const std::vector<char> mask = guiding_face_mask(flags);
  VelocityField out(d);
  for_each_face(out, [&](int axis, int i, int j, int k, std::size_t idx) {
    if (!mask[idx] || axis == 2)
      return;
    const Vec3 p = face_position(d, axis, i, j, k);
    const double rx = p[0] - cx;
    const double ry = p[1] - cy;
    double s = omega;
    if (lobes > 0 && amplitude != 0.0)
      s *= 1.0 + amplitude * std::cos(lobes * std::atan2(ry, rx));
    out.data[idx] = axis == 0 ? -s * ry : s * rx;
  });
  return out;
}

namespace {

// Rotation about the vertical (y) axis through the domain center plus an updraft.
VelocityField tornado_target(const CellFlags& flags, double omega, double upward)
{
  const GridDims& d = flags.dims;
  const auto e = d.extent();
  const double cx = 0.5 * e[0] * d.h;
  const double cz = 0.5 * e[2] * d.h;
  const std::vector<char> mask = guiding_face_mask(flags);
  VelocityField out(d);
  for_each_face(out, [&](int axis, int i, int j, int k, std::size_t idx) {
    if (!mask[idx])
      return;
    const Vec3 p = face_position(d, axis, i, j, k);
    if (axis == 0)
      out.data[idx] = -omega * (p[2] - cz);
    else if (axis == 1)
      out.data[idx] = upward;
    else
      out.data[idx] = omega * (p[0] - cx);
  });
  return out;
}

bool in_emitter(const SceneSpec& spec, int i, int j, int k)
{
  const GridDims& d = spec.dims;
  const auto e = d.extent();
  const Vec3 p = cell_position(d, i, j, k);
  const double width = e[0] * d.h;
  const double r = spec.emitter_radius * width;
  const double dx = p[0] - 0.5 * width;
  const double dy = p[1] - (d.h + 1.5 * r);
  const double dz = d.is_2d() ? 0.0 : p[2] - 0.5 * e[2] * d.h;
  return dx * dx + dy * dy + dz * dz <= r * r;
}

void apply_emitter(SceneState& state)
{
  const GridDims& d = state.spec.dims;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        if (state.flags.is_fluid(i, j, k) && in_emitter(state.spec, i, j, k))
          state.density.at(i, j, k) = 1.0;
}

void seed_particles(SceneState& state, int i0, int i1, int j0, int j1, int k0, int k1)
{
  const GridDims& d = state.spec.dims;
  const int ppc = state.spec.particles_per_cell_or_default();
  std::mt19937_64 rng(state.spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Stratified jitter: ppc samples spread over a sub-lattice of the cell.
  const int dim = d.dimension();
  const int per_axis = std::max(1, static_cast<int>(std::ceil(std::pow(ppc, 1.0 / dim) - 1e-9)));
  for (int k = k0; k < k1; ++k)
    for (int j = j0; j < j1; ++j)
      for (int i = i0; i < i1; ++i) {
        if (state.solids.is_solid(i, j, k))
          continue;
        for (int s = 0; s < ppc; ++s) {
          const int si = s % per_axis;
          const int sj = (s / per_axis) % per_axis;
          const int sk = s / (per_axis * per_axis);
          Particle p;
          p.position[0] = (i + (si + unit(rng)) / per_axis) * d.h;
          p.position[1] = (j + (sj + unit(rng)) / per_axis) * d.h;
          p.position[2] = d.is_2d() ? 0.5 * d.h : (k + ((sk % per_axis) + unit(rng)) / per_axis) * d.h;
          state.particles.push_back(p);
        }
      }
}

std::array<int, 3> cell_of(const GridDims& d, const Vec3& p)
{
  const auto e = d.extent();
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(static_cast<int>(std::floor(p[a] / d.h)), 0, e[a] - 1);
  return c;
}

}  // namespace

SceneState build_scene(const SceneSpec& spec)
{
  spec.validate();
  const GridDims& d = spec.dims;
  SceneState st;
  st.spec = spec;
  st.solids = CellFlags::box(d);
  for (auto& t : st.solids.tags)
    if (t != CellType::Solid)
      t = CellType::Empty;
  st.velocity = VelocityField(d);
  st.density = ScalarField(d);

  if (spec.kind == SceneKind::ObstacleBox) {
    const auto e = d.extent();
    for (int k = 0; k < d.nz; ++k)
      for (int j = static_cast<int>(0.45 * e[1]); j < static_cast<int>(0.55 * e[1]); ++j)
        for (int i = static_cast<int>(0.4 * e[0]); i < static_cast<int>(0.6 * e[0]); ++i)
          st.solids.set(i, j, k, CellType::Solid);
  }

  if (is_liquid(spec.kind)) {
    const int wi = std::max(1, static_cast<int>(std::lround(spec.fill_width * (d.nx - 2))));
    const int hj = std::max(1, static_cast<int>(std::lround(spec.fill_height * (d.ny - 2))));
    const int k0 = d.is_2d() ? 0 : 1;
    const int k1 = d.is_2d() ? 1 : d.nz - 1;
    seed_particles(st, 1, 1 + wi, 1, 1 + hj, k0, k1);
    st.flags = flags_from_particles(st.solids, st.particles);
    st.bc_state = BcState(st.flags);
    return st;
  }

  st.flags = st.solids;
  for (auto& t : st.flags.tags)
    if (t != CellType::Solid)
      t = CellType::Fluid;
  switch (spec.kind) {
    case SceneKind::Circular:
      st.target = rotation_target(st.flags, spec.angular_speed);
      break;
    case SceneKind::Star:
      st.target = rotation_target(st.flags, spec.angular_speed, spec.star_amplitude, spec.star_lobes);
      break;
    case SceneKind::Tornado:
      st.target = tornado_target(st.flags, spec.angular_speed, spec.upward_speed);
      break;
    default:
      break;
  }
  apply_emitter(st);
  return st;
}

ScalarField split_field(const CellFlags& flags, double left, double right, bool zero_solid)
{
  const GridDims& d = flags.dims;
  ScalarField out(d);
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        double v = 2 * i < d.nx ? left : right;
        if (zero_solid && flags.at(i, j, k) == CellType::Solid)
          v = 0.0;
        out.at(i, j, k) = v;
      }
  return out;
}

void GuidingSetup::validate() const
{
  if (!(weight_left > 0.0 && weight_right > 0.0) || !std::isfinite(weight_left) ||
      !std::isfinite(weight_right))
    throw InvalidArgument("guiding weights must be finite and positive");
  if (!(radius_left >= 0.0 && radius_right >= 0.0) || !std::isfinite(radius_left) ||
      !std::isfinite(radius_right))
    throw InvalidArgument("blur radii must be finite and non-negative");
}

GuidingConfig make_guiding_config(const SceneState& state,
                                  const GuidingSetup& setup,
                                  const VelocityField& target,
                                  const VelocityField& current)
{
  setup.validate();
  GuidingConfig cfg;
  cfg.weights = split_field(state.flags, setup.weight_left, setup.weight_right, false);
  cfg.radius = split_field(state.flags, setup.radius_left, setup.radius_right, true);
  cfg.target = target;
  cfg.current = current;
  return cfg;
}

namespace {

double max_cell_divergence(const VelocityField& u, const CellFlags& flags)
{
  const ScalarField div = divergence(u, flags);
  double m = 0.0;
  for (double v : div.values)
    m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

StepStats smoke_step(SceneState& state, const SmokeStepOptions& options)
{
  if (is_liquid(state.spec.kind))
    throw InvalidArgument("smoke_step needs a smoke scene");
  const SceneSpec& spec = state.spec;
  const GridDims& d = spec.dims;
  const double dt = spec.dt;

  // Boussinesq buoyancy on y-faces from the face-averaged density.
  VelocityField u = state.velocity;
  if (spec.buoyancy != 0.0) {
    const auto e = d.face_extent(1);
    for (int k = 0; k < e[2]; ++k)
      for (int j = 1; j < e[1] - 1; ++j)
        for (int i = 0; i < e[0]; ++i)
          u.at(1, i, j, k) +=
              dt * spec.buoyancy * 0.5 * (state.density.at(i, j - 1, k) + state.density.at(i, j, k));
  }
  state.density = advect_semi_lagrangian(state.density, u, state.flags, dt);
  u = advect_semi_lagrangian(u, u, state.flags, dt);
  for (auto& v : state.density.values)
    v = std::max(v, 0.0);
  apply_emitter(state);
  zero_solid_faces(u, state.flags);

  StepStats stats;
  const BcTable walls = BcTable::all_neumann(d);
  auto solve = [&](bool guided, GuidingMethod method, ConvergenceLog& log) {
    if (!guided) {
      Projection p = project(u, state.flags, walls, options.cg.eps_final, options.cg.max_cg_iters);
      log.method = "projection";
      log.clear();
      ConvergenceRecord rec;
      rec.iter = 1;
      rec.residual = p.cg_residual;
      rec.eps_cg = options.cg.eps_final;
      rec.cg_iters = p.cg_iterations;
      log.records.push_back(rec);
      log.converged = true;
      return std::move(p.velocity);
    }
    if (!state.target)
      throw InvalidArgument("scene '" + to_string(spec.kind) + "' has no guiding target");
    GuideOptions go = options.guide;
    go.method = method;
    go.cg = options.cg;
    const GuidingConfig cfg = make_guiding_config(state, options.guiding, *state.target, u);
    return guide_step(cfg, state.flags, walls, go, log);
  };

  VelocityField result = solve(options.guided, options.guide.method, stats.log);
  if (options.shadow) {
    ConvergenceLog shadow_log;
    const VelocityField other = solve(true, *options.shadow, shadow_log);
    stats.shadow_cg_iterations = shadow_log.total_cg_iterations();
    stats.shadow_difference = relative_l2(other, result);
    stats.shadow_log = std::move(shadow_log);
  }
  stats.cg_iterations = stats.log.total_cg_iterations();
  stats.converged = stats.log.converged;
  stats.max_divergence = max_cell_divergence(result, state.flags);
  stats.max_velocity = max_abs(result);

  state.velocity = std::move(result);
  state.frame += 1;
  state.time += dt;
  return stats;
}

CellFlags flags_from_particles(const CellFlags& solids, const std::vector<Particle>& particles)
{
  CellFlags f = solids;
  for (auto& t : f.tags)
    if (t != CellType::Solid)
      t = CellType::Empty;
  for (const auto& p : particles) {
    const auto c = cell_of(f.dims, p.position);
    if (f.at(c[0], c[1], c[2]) != CellType::Solid)
      f.set(c[0], c[1], c[2], CellType::Fluid);
  }
  return f;
}

bool touches_ceiling(const CellFlags& flags)
{
  const GridDims& d = flags.dims;
  const int j = d.ny - 2;
  for (int k = 0; k < d.nz; ++k)
    for (int i = 0; i < d.nx; ++i)
      if (flags.is_fluid(i, j, k) && flags.is_solid(i, j + 1, k))
        return true;
  return false;
}

double angular_momentum(const VelocityField& vel, const CellFlags& flags)
{
  const GridDims& d = flags.dims;
  const auto e = d.extent();
  const double cx = 0.5 * e[0] * d.h;
  const double cy = 0.5 * e[1] * d.h;
  double l = 0.0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        if (!flags.is_fluid(i, j, k))
          continue;
        const Vec3 p = cell_position(d, i, j, k);
        const double ux = 0.5 * (vel.at(0, i, j, k) + vel.at(0, i + 1, j, k));
        const double uy = 0.5 * (vel.at(1, i, j, k) + vel.at(1, i, j + 1, k));
        l += (p[0] - cx) * uy - (p[1] - cy) * ux;
      }
  return l;
}

void extrapolate_velocity(VelocityField& vel, std::vector<char>& known, int layers)
{
  const GridDims& d = vel.dims;
  for (int layer = 0; layer < layers; ++layer) {
    std::vector<char> next = known;
    for (int axis = 0; axis < vel.active_axes(); ++axis) {
      const auto e = d.face_extent(axis);
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = 0; i < e[0]; ++i) {
            const std::size_t idx = vel.index(axis, i, j, k);
            if (known[idx])
              continue;
            double s = 0.0;
            int n = 0;
            const int nb[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
            for (const auto& o : nb) {
              const int ii = i + o[0], jj = j + o[1], kk = k + o[2];
              if (ii < 0 || jj < 0 || kk < 0 || ii >= e[0] || jj >= e[1] || kk >= e[2])
                continue;
              const std::size_t nidx = vel.index(axis, ii, jj, kk);
              if (known[nidx]) {
                s += vel.data[nidx];
                ++n;
              }
            }
            if (n > 0) {
              vel.data[idx] = s / n;
              next[idx] = 1;
            }
          }
    }
    known = std::move(next);
  }
}

namespace {

// Trilinear particle-to-grid transfer; returns the faces that received weight.
std::vector<char> particles_to_grid(const std::vector<Particle>& particles, VelocityField& u)
{
  const GridDims& d = u.dims;
  std::vector<double> wsum(u.data.size(), 0.0);
  std::fill(u.data.begin(), u.data.end(), 0.0);
  for (const auto& p : particles) {
    for (int axis = 0; axis < u.active_axes(); ++axis) {
      const auto e = d.face_extent(axis);
      double g[3];
      int base[3];
      double t[3];
      for (int a = 0; a < 3; ++a) {
        g[a] = p.position[a] / d.h - (a == axis ? 0.0 : 0.5);
        base[a] = static_cast<int>(std::floor(g[a]));
        t[a] = g[a] - base[a];
      }
      const int corners = d.is_2d() ? 4 : 8;
      for (int c = 0; c < corners; ++c) {
        const int ii = base[0] + (c & 1);
        const int jj = base[1] + ((c >> 1) & 1);
        const int kk = d.is_2d() ? 0 : base[2] + ((c >> 2) & 1);
        if (ii < 0 || jj < 0 || kk < 0 || ii >= e[0] || jj >= e[1] || kk >= e[2])
          continue;
        double w = ((c & 1) ? t[0] : 1.0 - t[0]) * (((c >> 1) & 1) ? t[1] : 1.0 - t[1]);
        if (!d.is_2d())
          w *= ((c >> 2) & 1) ? t[2] : 1.0 - t[2];
        if (w <= 0.0)
          continue;
        const std::size_t idx = u.index(axis, ii, jj, kk);
        u.data[idx] += w * p.velocity[axis];
        wsum[idx] += w;
      }
    }
  }
  std::vector<char> known(u.data.size(), 0);
  for (std::size_t n = 0; n < u.data.size(); ++n)
    if (wsum[n] > 0.0) {
      u.data[n] /= wsum[n];
      known[n] = 1;
    }
  return known;
}

// Faces carrying a solved velocity: touching FLUID and not a SOLID-SOLID/SOLID-EMPTY face.
// Faces touching SOLID without FLUID are walls at rest.
std::vector<char> solved_faces(VelocityField& u, const CellFlags& flags)
{
  std::vector<char> known(u.data.size(), 0);
  for_each_face(u, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    const bool fluid = flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]) ||
                       flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]);
    const bool solid = flags.is_solid(fc.lo[0], fc.lo[1], fc.lo[2]) ||
                       flags.is_solid(fc.hi[0], fc.hi[1], fc.hi[2]);
    const bool inside = flags.dims.contains_cell(fc.lo[0], fc.lo[1], fc.lo[2]) &&
                        flags.dims.contains_cell(fc.hi[0], fc.hi[1], fc.hi[2]);
    if (fluid) {
      known[idx] = 1;
    } else if (solid || !inside) {
      u.data[idx] = 0.0;
      known[idx] = 1;
    }
  });
  return known;
}

// relative_l2 restricted to faces touching FLUID
double fluid_relative_l2(const VelocityField& a, const VelocityField& b, const CellFlags& flags)
{
  double num = 0.0;
  double den = 0.0;
  for_each_face(b, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    if (!flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]) && !flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]))
      return;
    const double d = a.data[idx] - b.data[idx];
    num += d * d;
    den += b.data[idx] * b.data[idx];
  });
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

SeparatingResult solve_liquid(const VelocityField& u,
                              const CellFlags& flags,
                              BcMode mode,
                              const SeparatingOptions& options,
                              const BcState* previous)
{
  switch (mode) {
    case BcMode::Regular:
      return solve_regular(u, flags, options.cg);
    case BcMode::SeparatingStandard:
      return solve_separating_standard(u, flags, options, previous);
    case BcMode::SeparatingAccelerated:
      return solve_separating_accelerated(u, flags, options);
  }
  throw InvalidArgument("unknown boundary mode");
}

}  // namespace

StepStats liquid_step(SceneState& state, const LiquidStepOptions& options)
{
  if (!is_liquid(state.spec.kind))
    throw InvalidArgument("liquid_step needs a liquid scene");
  const SceneSpec& spec = state.spec;
  const GridDims& d = spec.dims;
  const double dt = spec.dt;
  const double vmax = spec.max_cfl * d.h / dt;

  // particle-to-grid and fluid flags
  VelocityField u(d);
  std::vector<char> known = particles_to_grid(state.particles, u);
  state.flags = flags_from_particles(state.solids, state.particles);
  extrapolate_velocity(u, known, 2);
  const VelocityField u_old = u;

  // body force and CFL clamp
  for (double& v : u.component(1))
    v -= dt * spec.gravity;
  for (double& v : u.data)
    v = std::clamp(v, -vmax, vmax);

  StepStats stats;
  const BcState* previous = &state.bc_state;
  SeparatingResult res = solve_liquid(u, state.flags, options.mode, options.separating, previous);
  if (options.shadow) {
    const SeparatingResult other =
        solve_liquid(u, state.flags, *options.shadow, options.separating, previous);
    stats.shadow_cg_iterations = other.cg_iterations;
    stats.shadow_difference = fluid_relative_l2(other.velocity, res.velocity, state.flags);
    stats.shadow_log = other.log;
  }
  stats.log = res.log;
  stats.cg_iterations = res.cg_iterations;
  stats.converged = res.converged;
  stats.max_divergence = max_cell_divergence(res.velocity, state.flags);
  stats.wetted_wall_faces = res.state.faces.size();
  if (options.mode != BcMode::Regular)
    stats.separating_wall_faces = res.state.faces.size() - res.state.non_separating_count();
  state.bc_state = std::move(res.state);

  VelocityField u_new = std::move(res.velocity);
  std::vector<char> solved = solved_faces(u_new, state.flags);
  for (std::size_t n = 0; n < u_new.data.size(); ++n)
    if (solved[n])
      stats.max_velocity = std::max(stats.max_velocity, std::abs(u_new.data[n]));
  extrapolate_velocity(u_new, solved, 2);
  for (double& v : u_new.data)
    v = std::clamp(v, -vmax, vmax);

  // grid-to-particle (PIC/FLIP blend) and advection
  const VelocityField delta = u_new - u_old;
  const double flip = spec.flip_ratio;
  for (auto& p : state.particles) {
    const Vec3 du = sample_velocity(delta, p.position);
    const Vec3 pic = sample_velocity(u_new, p.position);
    for (int a = 0; a < 3; ++a)
      p.velocity[a] = flip * (p.velocity[a] + du[a]) + (1.0 - flip) * pic[a];
    if (d.is_2d())
      p.velocity[2] = 0.0;

    const Vec3 v0 = sample_velocity(u_new, p.position);
    const double speed = std::sqrt(v0[0] * v0[0] + v0[1] * v0[1] + v0[2] * v0[2]);
    const int substeps = std::max(1, static_cast<int>(std::ceil(speed * dt / d.h)));
    const double h = dt / substeps;
    for (int s = 0; s < substeps; ++s) {
      const Vec3 start = p.position;
      const Vec3 va = sample_velocity(u_new, start);
      Vec3 mid;
      for (int a = 0; a < 3; ++a)
        mid[a] = start[a] + 0.5 * h * va[a];
      const Vec3 vb = sample_velocity(u_new, mid);
      Vec3 end;
      const auto ext = d.extent();
      for (int a = 0; a < 3; ++a)
        end[a] = std::clamp(start[a] + h * vb[a], 0.0, ext[a] * d.h);
      if (d.is_2d())
        end[2] = start[2];
      const auto c = cell_of(d, end);
      if (state.solids.at(c[0], c[1], c[2]) == CellType::Solid)
        break;  // stay at the last valid position
      p.position = end;
    }
  }

  state.velocity = std::move(u_new);
  state.frame += 1;
  state.time += dt;
  stats.ceiling_contact = touches_ceiling(state.flags);
  return stats;
}

}  // namespace pdfluids

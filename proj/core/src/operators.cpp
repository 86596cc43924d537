/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Discrete differential, interpolation, advection and resampling operators
 *
 ******************************************************************************/
#include "pdfluids/operators.hpp"

#include <algorithm>
#include <cmath>

#include "pdfluids/parallel.hpp"

namespace pdfluids {

BcTable::BcTable(const GridDims& d, FaceBc solid_default)
    : dims_(d), tags_(VelocityField(d).data.size(), solid_default)
{
}

FaceKind face_kind(const CellFlags& flags, const BcTable& bc, int axis, int i, int j, int k,
                   std::size_t face_index)
{
  const auto fc = face_cells(axis, i, j, k);
  const bool lo_fluid = flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]);
  const bool hi_fluid = flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]);
  if (lo_fluid && hi_fluid)
    return FaceKind::Interior;
  if (!lo_fluid && !hi_fluid)
    return FaceKind::Inactive;
  const auto& other = lo_fluid ? fc.hi : fc.lo;
  if (!flags.dims.contains_cell(other[0], other[1], other[2]))
    return FaceKind::Neumann;
  if (flags.at(other[0], other[1], other[2]) == CellType::Empty)
    return FaceKind::Dirichlet;
  return bc.solid(face_index) == FaceBc::Dirichlet ? FaceKind::Dirichlet : FaceKind::Neumann;
}

std::vector<FaceKind> face_kinds(const CellFlags& flags, const BcTable& bc)
{
  require_same_dims(flags.dims, bc.dims(), "face_kinds");
  VelocityField layout(flags.dims);
  std::vector<FaceKind> kinds(layout.data.size(), FaceKind::Inactive);
  for_each_face(layout, [&](int axis, int i, int j, int k, std::size_t idx) {
    kinds[idx] = face_kind(flags, bc, axis, i, j, k, idx);
  });
  return kinds;
}

ScalarField divergence(const VelocityField& vel, const CellFlags& flags)
{
  require_same_dims(vel.dims, flags.dims, "divergence");
  const GridDims& d = vel.dims;
  ScalarField div(d);
  const double inv_h = 1.0 / d.h;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        if (flags.at(i, j, k) != CellType::Fluid)
          continue;
        double s = vel.at(0, i + 1, j, k) - vel.at(0, i, j, k) + vel.at(1, i, j + 1, k) -
                   vel.at(1, i, j, k);
        if (!d.is_2d())
          s += vel.at(2, i, j, k + 1) - vel.at(2, i, j, k);
        div.at(i, j, k) = s * inv_h;
      }
  return div;
}

VelocityField subtract_gradient(const VelocityField& vel,
                                const ScalarField& p,
                                const CellFlags& flags,
                                const BcTable& bc)
{
  require_same_dims(vel.dims, p.dims, "subtract_gradient");
  require_same_dims(vel.dims, flags.dims, "subtract_gradient");
  require_same_dims(vel.dims, bc.dims(), "subtract_gradient");
  VelocityField out = vel;
  const double inv_h = 1.0 / vel.dims.h;
  for_each_face(vel, [&](int axis, int i, int j, int k, std::size_t idx) {
    const FaceKind kind = face_kind(flags, bc, axis, i, j, k, idx);
    if (kind != FaceKind::Interior && kind != FaceKind::Dirichlet)
      return;
    const auto fc = face_cells(axis, i, j, k);
    const double p_lo =
        flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]) ? p.at(fc.lo[0], fc.lo[1], fc.lo[2]) : 0.0;
    const double p_hi =
        flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]) ? p.at(fc.hi[0], fc.hi[1], fc.hi[2]) : 0.0;
    out.data[idx] -= (p_hi - p_lo) * inv_h;
  });
  return out;
}

namespace {

// Multilinear interpolation on a node lattice of extent e whose node n sits at
// grid coordinate n.
template <class Get>
double interpolate(const std::array<int, 3>& e, const Vec3& g, Get&& get)
{
  int i0[3];
  int i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(g[a], 0.0, static_cast<double>(e[a] - 1));
    i0[a] = std::min(static_cast<int>(std::floor(c)), e[a] - 1);
    i1[a] = std::min(i0[a] + 1, e[a] - 1);
    t[a] = c - i0[a];
  }
  double s = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int ii = (c & 1) ? i1[0] : i0[0];
    const int jj = (c & 2) ? i1[1] : i0[1];
    const int kk = (c & 4) ? i1[2] : i0[2];
    const double w = ((c & 1) ? t[0] : 1.0 - t[0]) * ((c & 2) ? t[1] : 1.0 - t[1]) *
                     ((c & 4) ? t[2] : 1.0 - t[2]);
    if (w != 0.0)
      s += w * get(ii, jj, kk);
  }
  return s;
}

std::array<int, 3> containing_cell(const GridDims& d, const Vec3& p)
{
  std::array<int, 3> c{};
  const auto e = d.extent();
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(static_cast<int>(std::floor(p[a] / d.h)), 0, e[a] - 1);
  return c;
}

Vec3 clamp_to_domain(const GridDims& d, Vec3 p)
{
  const auto e = d.extent();
  for (int a = 0; a < 3; ++a)
    p[a] = std::clamp(p[a], 0.0, e[a] * d.h);
  if (d.is_2d())
    p[2] = 0.5 * d.h;
  return p;
}

}  // namespace

double sample_component(const VelocityField& vel, int axis, const Vec3& point)
{
  const GridDims& d = vel.dims;
  if (d.is_2d() && axis == 2)
    return 0.0;
  Vec3 g;
  for (int a = 0; a < 3; ++a)
    g[a] = point[a] / d.h - (a == axis ? 0.0 : 0.5);
  const auto e = d.face_extent(axis);
  const auto comp = vel.component(axis);
  return interpolate(e, g, [&](int i, int j, int k) {
    return comp[static_cast<std::size_t>(i) +
                static_cast<std::size_t>(e[0]) * (static_cast<std::size_t>(j) +
                                                  static_cast<std::size_t>(e[1]) * k)];
  });
}

Vec3 sample_velocity(const VelocityField& vel, const Vec3& point)
{
  return {sample_component(vel, 0, point), sample_component(vel, 1, point),
          sample_component(vel, 2, point)};
}

double sample_scalar(const ScalarField& field, const Vec3& point, const CellFlags* flags)
{
  const GridDims& d = field.dims;
  Vec3 g;
  for (int a = 0; a < 3; ++a)
    g[a] = point[a] / d.h - 0.5;
  if (!flags)
    return interpolate(d.extent(), g, [&](int i, int j, int k) { return field.at(i, j, k); });

  const auto e = d.extent();
  int i0[3];
  int i1[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double c = std::clamp(g[a], 0.0, static_cast<double>(e[a] - 1));
    i0[a] = std::min(static_cast<int>(std::floor(c)), e[a] - 1);
    i1[a] = std::min(i0[a] + 1, e[a] - 1);
    t[a] = c - i0[a];
  }
  double s = 0.0;
  double wsum = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int ii = (c & 1) ? i1[0] : i0[0];
    const int jj = (c & 2) ? i1[1] : i0[1];
    const int kk = (c & 4) ? i1[2] : i0[2];
    const double w = ((c & 1) ? t[0] : 1.0 - t[0]) * ((c & 2) ? t[1] : 1.0 - t[1]) *
                     ((c & 4) ? t[2] : 1.0 - t[2]);
    if (w == 0.0 || flags->at(ii, jj, kk) == CellType::Solid)
      continue;
    s += w * field.at(ii, jj, kk);
    wsum += w;
  }
  return wsum > 0.0 ? s / wsum : 0.0;
}

Vec3 backtrace(const VelocityField& vel, const CellFlags& flags, const Vec3& start, double dt)
{
  const GridDims& d = vel.dims;
  const Vec3 u0 = sample_velocity(vel, start);
  Vec3 mid;
  for (int a = 0; a < 3; ++a)
    mid[a] = start[a] - 0.5 * dt * u0[a];
  mid = clamp_to_domain(d, mid);
  const Vec3 u1 = sample_velocity(vel, mid);
  Vec3 end;
  for (int a = 0; a < 3; ++a)
    end[a] = start[a] - dt * u1[a];
  end = clamp_to_domain(d, end);

  auto solid_at = [&](const Vec3& p) {
    const auto c = containing_cell(d, p);
    return flags.at(c[0], c[1], c[2]) == CellType::Solid;
  };
  if (!solid_at(end))
    return end;

  // March from the start towards the end point and stop at the last non-solid sample.
  double len = 0.0;
  for (int a = 0; a < 3; ++a)
    len += (end[a] - start[a]) * (end[a] - start[a]);
  len = std::sqrt(len);
  const int steps = std::max(1, static_cast<int>(std::ceil(4.0 * len / d.h)));
  Vec3 last = start;
  for (int s = 1; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    Vec3 p;
    for (int a = 0; a < 3; ++a)
      p[a] = start[a] + t * (end[a] - start[a]);
    if (solid_at(p))
      break;
    last = p;
  }
  return last;
}

ScalarField advect_semi_lagrangian(const ScalarField& field,
                                   const VelocityField& vel,
                                   const CellFlags& flags,
                                   double dt)
{
  require_same_dims(field.dims, vel.dims, "advect");
  require_same_dims(field.dims, flags.dims, "advect");
  if (!(dt > 0.0))
    throw InvalidArgument("advection needs dt > 0");
  const GridDims& d = field.dims;
  ScalarField out = field;
  parallel_for(0, d.cell_count(), [&](std::size_t c) {
    const int i = static_cast<int>(c % d.nx);
    const int j = static_cast<int>((c / d.nx) % d.ny);
    const int k = static_cast<int>(c / (static_cast<std::size_t>(d.nx) * d.ny));
    if (flags.at(i, j, k) == CellType::Solid)
      return;
    const Vec3 src = backtrace(vel, flags, cell_position(d, i, j, k), dt);
    out.values[c] = sample_scalar(field, src, &flags);
  });
  return out;
}

VelocityField advect_semi_lagrangian(const VelocityField& field,
                                     const VelocityField& vel,
                                     const CellFlags& flags,
                                     double dt)
{
  require_same_dims(field.dims, vel.dims, "advect");
  require_same_dims(field.dims, flags.dims, "advect");
  if (!(dt > 0.0))
    throw InvalidArgument("advection needs dt > 0");
  const GridDims& d = field.dims;
  VelocityField out = field;
  for (int axis = 0; axis < field.active_axes(); ++axis) {
    const auto e = d.face_extent(axis);
    const std::size_t count = d.face_count(axis);
    parallel_for(0, count, [&](std::size_t n) {
      const int i = static_cast<int>(n % e[0]);
      const int j = static_cast<int>((n / e[0]) % e[1]);
      const int k = static_cast<int>(n / (static_cast<std::size_t>(e[0]) * e[1]));
      const auto fc = face_cells(axis, i, j, k);
      if (!d.contains_cell(fc.lo[0], fc.lo[1], fc.lo[2]) ||
          !d.contains_cell(fc.hi[0], fc.hi[1], fc.hi[2]))
        return;
      if (flags.is_solid(fc.lo[0], fc.lo[1], fc.lo[2]) ||
          flags.is_solid(fc.hi[0], fc.hi[1], fc.hi[2]))
        return;
      const Vec3 src = backtrace(vel, flags, face_position(d, axis, i, j, k), dt);
      out.data[field.offset(axis) + n] = sample_component(field, axis, src);
    });
  }
  return out;
}

VelocityField upsample(const VelocityField& vel, int factor)
{
  if (factor < 1)
    throw InvalidArgument("upsample factor must be >= 1");
  if (factor == 1)
    return vel;
  GridDims fine = vel.dims;
  fine.nx *= factor;
  fine.ny *= factor;
  if (!fine.is_2d())
    fine.nz *= factor;
  fine.h = vel.dims.h / factor;
  VelocityField out(fine);
  for_each_face(out, [&](int axis, int i, int j, int k, std::size_t idx) {
    out.data[idx] = sample_component(vel, axis, face_position(fine, axis, i, j, k));
  });
  return out;
}

}  // namespace pdfluids

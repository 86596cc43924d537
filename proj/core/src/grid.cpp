/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Cartesian staggered (MAC) grid containers
 *
 ******************************************************************************/
#include "pdfluids/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pdfluids {

void GridDims::validate() const
{
  if (nx < 4 || ny < 4)
    throw InvalidArgument("grid needs at least 4 cells along x and y, got " +
                          std::to_string(nx) + "x" + std::to_string(ny));
  if (nz < 1)
    throw InvalidArgument("nz must be positive");
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidArgument("cell width h must be positive");
}

void require_same_dims(const GridDims& a, const GridDims& b, const char* what)
{
  if (!(a == b))
    throw DimensionMismatch(std::string(what) + ": grid dimensions differ");
}

ScalarField::ScalarField(const GridDims& d, double fill) : dims(d), values(d.cell_count(), fill) {}

VelocityField::VelocityField(const GridDims& d, double fill) : dims(d)
{
  offsets_[0] = 0;
  for (int a = 0; a < 3; ++a)
    offsets_[a + 1] = offsets_[a] + d.face_count(a);
  data.assign(offsets_[3], fill);
}

std::size_t VelocityField::dof_count() const
{
  return offsets_[active_axes()];
}

VelocityField& VelocityField::operator+=(const VelocityField& o)
{
  require_same_dims(dims, o.dims, "velocity +=");
  for (std::size_t n = 0; n < data.size(); ++n)
    data[n] += o.data[n];
  return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& o)
{
  require_same_dims(dims, o.dims, "velocity -=");
  for (std::size_t n = 0; n < data.size(); ++n)
    data[n] -= o.data[n];
  return *this;
}

VelocityField& VelocityField::operator*=(double s)
{
  for (auto& v : data)
    v *= s;
  return *this;
}

VelocityField& VelocityField::add_scaled(const VelocityField& o, double s)
{
  require_same_dims(dims, o.dims, "velocity add_scaled");
  for (std::size_t n = 0; n < data.size(); ++n)
    data[n] += s * o.data[n];
  return *this;
}

VelocityField operator+(VelocityField a, const VelocityField& b)
{
  a += b;
  return a;
}

VelocityField operator-(VelocityField a, const VelocityField& b)
{
  a -= b;
  return a;
}

VelocityField operator*(double s, VelocityField a)
{
  a *= s;
  return a;
}

double dot(const VelocityField& a, const VelocityField& b)
{
  require_same_dims(a.dims, b.dims, "velocity dot");
  double s = 0.0;
  for (std::size_t n = 0; n < a.data.size(); ++n)
    s += a.data[n] * b.data[n];
  return s;
}

double norm(const VelocityField& a)
{
  return std::sqrt(dot(a, a));
}

double max_abs(const VelocityField& a)
{
  double m = 0.0;
  for (double v : a.data)
    m = std::max(m, std::abs(v));
  return m;
}

double relative_l2(const VelocityField& a, const VelocityField& b)
{
  return norm(a - b) / std::max(norm(b), 1e-300);
}

CellFlags::CellFlags(const GridDims& d, CellType fill) : dims(d), tags(d.cell_count(), fill) {}

CellFlags CellFlags::box(const GridDims& d)
{
  CellFlags f(d, CellType::Fluid);
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        bool ring = i == 0 || j == 0 || i == d.nx - 1 || j == d.ny - 1;
        if (!d.is_2d())
          ring = ring || k == 0 || k == d.nz - 1;
        if (ring)
          f.set(i, j, k, CellType::Solid);
      }
  return f;
}

std::size_t CellFlags::count(CellType t) const
{
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), t));
}

Vec3 face_position(const GridDims& d, int axis, int i, int j, int k)
{
  Vec3 p = cell_position(d, i, j, k);
  p[axis] -= 0.5 * d.h;
  return p;
}

Vec3 cell_position(const GridDims& d, int i, int j, int k)
{
  return {(i + 0.5) * d.h, (j + 0.5) * d.h, (k + 0.5) * d.h};
}

}  // namespace pdfluids

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
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pdfluids/error.hpp"

namespace pdfluids {

using Vec3 = std::array<double, 3>;

//! Uniform cell-centered grid extents. nz == 1 selects 2D.
struct GridDims {
  int nx = 0;
  int ny = 0;
  int nz = 1;
  double h = 1.0;

  bool is_2d() const { return nz == 1; }
  int dimension() const { return is_2d() ? 2 : 3; }
  std::array<int, 3> extent() const { return {nx, ny, nz}; }
  std::size_t cell_count() const
  {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }

  //! Extent of the face array for velocity component `axis` (one extra sample along it).
  std::array<int, 3> face_extent(int axis) const
  {
    auto e = extent();
    e[axis] += 1;
    return e;
  }
  std::size_t face_count(int axis) const
  {
    const auto e = face_extent(axis);
    return static_cast<std::size_t>(e[0]) * e[1] * e[2];
  }

  std::size_t cell_index(int i, int j, int k) const
  {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(nx) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
  }
  bool contains_cell(int i, int j, int k) const
  {
    return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz;
  }

  //! Throws InvalidArgument unless nx, ny >= 4, nz >= 1 and h > 0.
  void validate() const;

  bool operator==(const GridDims& o) const = default;
};

void require_same_dims(const GridDims& a, const GridDims& b, const char* what);

//! Cell-centered scalar values, x-fastest.
struct ScalarField {
  GridDims dims;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridDims& d, double fill = 0.0);

  double& at(int i, int j, int k = 0) { return values[dims.cell_index(i, j, k)]; }
  double at(int i, int j, int k = 0) const { return values[dims.cell_index(i, j, k)]; }

  bool operator==(const ScalarField&) const = default;
};

//! Face-centered velocity. All three component arrays share one contiguous buffer
//! (x-faces, then y-faces, then z-faces); in 2D the z block exists but is inert.
class VelocityField {
 public:
  GridDims dims;
  std::vector<double> data;

  VelocityField() = default;
  explicit VelocityField(const GridDims& d, double fill = 0.0);

  std::size_t offset(int axis) const { return offsets_[axis]; }
  std::span<double> component(int axis)
  {
    return {data.data() + offsets_[axis], dims.face_count(axis)};
  }
  std::span<const double> component(int axis) const
  {
    return {data.data() + offsets_[axis], dims.face_count(axis)};
  }

  //! Index into `data` of face (i,j,k) of component `axis`.
  std::size_t index(int axis, int i, int j, int k) const
  {
    const auto e = dims.face_extent(axis);
    return offsets_[axis] + static_cast<std::size_t>(i) +
           static_cast<std::size_t>(e[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(e[1]) * k);
  }
  double& at(int axis, int i, int j, int k = 0) { return data[index(axis, i, j, k)]; }
  double at(int axis, int i, int j, int k = 0) const { return data[index(axis, i, j, k)]; }

  //! Velocity components that carry degrees of freedom (2 in 2D, 3 in 3D).
  int active_axes() const { return dims.dimension(); }
  //! Number of degrees of freedom in the active components.
  std::size_t dof_count() const;

  VelocityField& operator+=(const VelocityField& o);
  VelocityField& operator-=(const VelocityField& o);
  VelocityField& operator*=(double s);
  //! this += s * o
  VelocityField& add_scaled(const VelocityField& o, double s);

  bool operator==(const VelocityField& o) const { return dims == o.dims && data == o.data; }

 private:
  std::array<std::size_t, 4> offsets_{};
};

VelocityField operator+(VelocityField a, const VelocityField& b);
VelocityField operator-(VelocityField a, const VelocityField& b);
VelocityField operator*(double s, VelocityField a);

double dot(const VelocityField& a, const VelocityField& b);
double norm(const VelocityField& a);
double max_abs(const VelocityField& a);
//! ||a - b|| / max(||b||, tiny)
double relative_l2(const VelocityField& a, const VelocityField& b);

enum class CellType : std::uint8_t { Fluid = 0, Solid = 1, Empty = 2 };

struct CellFlags {
  GridDims dims;
  std::vector<CellType> tags;

  CellFlags() = default;
  explicit CellFlags(const GridDims& d, CellType fill = CellType::Fluid);

  //! Fluid interior with a one-cell SOLID ring on every domain side.
  static CellFlags box(const GridDims& d);

  CellType at(int i, int j, int k = 0) const { return tags[dims.cell_index(i, j, k)]; }
  void set(int i, int j, int k, CellType t) { tags[dims.cell_index(i, j, k)] = t; }
  //! Tag of cell (i,j,k), or `outside` when it lies beyond the domain.
  CellType at_or(int i, int j, int k, CellType outside) const
  {
    return dims.contains_cell(i, j, k) ? at(i, j, k) : outside;
  }
  bool is_fluid(int i, int j, int k) const
  {
    return dims.contains_cell(i, j, k) && at(i, j, k) == CellType::Fluid;
  }
  bool is_solid(int i, int j, int k) const
  {
    return dims.contains_cell(i, j, k) && at(i, j, k) == CellType::Solid;
  }
  std::size_t count(CellType t) const;

  bool operator==(const CellFlags&) const = default;
};

//! The two cells a face separates: `lo` = (i,j,k) - e_axis, `hi` = (i,j,k).
struct FaceCells {
  std::array<int, 3> lo;
  std::array<int, 3> hi;
};
inline FaceCells face_cells(int axis, int i, int j, int k)
{
  FaceCells fc{{i, j, k}, {i, j, k}};
  fc.lo[axis] -= 1;
  return fc;
}

//! Calls fn(axis, i, j, k, index) for every face of the active components.
template <class Fn>
void for_each_face(const VelocityField& vel, Fn&& fn)
{
  for (int axis = 0; axis < vel.active_axes(); ++axis) {
    const auto e = vel.dims.face_extent(axis);
    std::size_t idx = vel.offset(axis);
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i, ++idx)
          fn(axis, i, j, k, idx);
  }
}

//! Physical position of a face center.
Vec3 face_position(const GridDims& d, int axis, int i, int j, int k);
//! Physical position of a cell center.
Vec3 cell_position(const GridDims& d, int i, int j, int k);

}  // namespace pdfluids

/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Small fixtures shared by the unit tests
 *
 ******************************************************************************/
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <pdfluids/grid.hpp>
#include <pdfluids/separating_bc.hpp>

namespace pdfluids::test {

//! U(-scale, scale) on every face of the active components.
inline VelocityField random_field(const GridDims& d, std::uint64_t seed, double scale = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  VelocityField v(d);
  for_each_face(v, [&](int, int, int, int, std::size_t idx) { v.data[idx] = u(rng); });
  return v;
}

//! Random field that vanishes on faces touching SOLID or the domain border.
inline VelocityField random_interior_field(const CellFlags& flags, std::uint64_t seed)
{
  VelocityField v = random_field(flags.dims, seed);
  zero_solid_faces(v, flags);
  for_each_face(v, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    if (!flags.dims.contains_cell(fc.lo[0], fc.lo[1], fc.lo[2]) ||
        !flags.dims.contains_cell(fc.hi[0], fc.hi[1], fc.hi[2]))
      v.data[idx] = 0.0;
  });
  return v;
}

inline ScalarField random_scalar(const GridDims& d, std::uint64_t seed, double scale = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  ScalarField s(d);
  for (double& x : s.values)
    x = u(rng);
  return s;
}

inline double max_abs(const ScalarField& s)
{
  double m = 0.0;
  for (double x : s.values)
    m = std::max(m, std::abs(x));
  return m;
}

//! Divergence-free vortex from the stream function psi = sin(pi x) sin(pi y) on the unit
//! square: u = d(psi)/dy, v = -d(psi)/dx, evaluated by differencing psi at face corners.
inline VelocityField vortex_field(const GridDims& d)
{
  constexpr double pi = 3.14159265358979323846;
  auto psi = [&](int i, int j) {
    return std::sin(pi * i * d.h / (d.nx * d.h)) * std::sin(pi * j * d.h / (d.ny * d.h));
  };
  VelocityField v(d);
  for_each_face(v, [&](int axis, int i, int j, int, std::size_t idx) {
    if (axis == 0)
      v.data[idx] = (psi(i, j + 1) - psi(i, j)) / d.h;
    else
      v.data[idx] = -(psi(i + 1, j) - psi(i, j)) / d.h;
  });
  return v;
}

}  // namespace pdfluids::test

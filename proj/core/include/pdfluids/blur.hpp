/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Separable, spatially varying, obstacle-aware Gaussian blur of MAC velocities
 *
 ******************************************************************************/
#pragma once

#include <vector>

#include "pdfluids/grid.hpp"

namespace pdfluids {

//! Unnormalized 1D Gaussian taps exp(-t^2 / 2r^2) for t in [-ceil(3r), ceil(3r)].
std::vector<double> gaussian_taps(double radius);

//! Face samples the blur is allowed to read and write: faces with no SOLID cell on
//! either side. Other faces pass through unchanged.
std::vector<char> blur_sample_mask(const CellFlags& flags);

//! Per-face blur radius: average of the in-domain cell radii on both sides.
VelocityField face_average(const ScalarField& cell_values);

//! Applies the blur matrix B (or its adjoint when `transpose`) to a velocity field.
//! Each component is convolved along x, then y, then z with a 1D Gaussian whose
//! standard deviation is the local face radius (in cells). Taps that fall off the
//! array or onto masked faces are dropped and the kernel renormalized, so constants
//! are preserved away from walls. Radius 0 is the identity.
VelocityField blur_obstacle_aware(const VelocityField& field,
                                  const ScalarField& radius,
                                  const CellFlags& flags,
                                  bool transpose = false);

}  // namespace pdfluids

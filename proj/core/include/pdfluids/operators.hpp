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
#pragma once

#include "pdfluids/bc_table.hpp"
#include "pdfluids/grid.hpp"

namespace pdfluids {

//! MAC divergence (sum of outward face velocities / h) in FLUID cells, 0 elsewhere.
ScalarField divergence(const VelocityField& vel, const CellFlags& flags);

//! u <- u - grad p on Interior and Dirichlet faces (ghost p = 0); Neumann faces untouched.
VelocityField subtract_gradient(const VelocityField& vel,
                                const ScalarField& p,
                                const CellFlags& flags,
                                const BcTable& bc);

//! Linear interpolation of one staggered component at a physical point (clamped).
double sample_component(const VelocityField& vel, int axis, const Vec3& point);
Vec3 sample_velocity(const VelocityField& vel, const Vec3& point);
//! Linear interpolation of a cell-centered field. With flags, SOLID cells are skipped
//! and the remaining weights renormalized.
double sample_scalar(const ScalarField& field, const Vec3& point, const CellFlags* flags = nullptr);

//! Backward RK2 (midpoint) trace from `start`; the ray is clamped to the domain and
//! stops before entering a SOLID cell.
Vec3 backtrace(const VelocityField& vel, const CellFlags& flags, const Vec3& start, double dt);

//! Semi-Lagrangian transport. SOLID cells (and faces touching SOLID or the domain
//! border) keep their values.
ScalarField advect_semi_lagrangian(const ScalarField& field,
                                   const VelocityField& vel,
                                   const CellFlags& flags,
                                   double dt);
VelocityField advect_semi_lagrangian(const VelocityField& field,
                                     const VelocityField& vel,
                                     const CellFlags& flags,
                                     double dt);

//! Refines by an integer factor (h / factor); values are linear samples of the coarse
//! field at the fine face centers, in the same physical units.
VelocityField upsample(const VelocityField& vel, int factor);

}  // namespace pdfluids

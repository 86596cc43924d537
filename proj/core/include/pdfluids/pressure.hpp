/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Jacobi-preconditioned CG pressure solve and divergence-free projection
 *
 ******************************************************************************/
#pragma once

#include <vector>

#include "pdfluids/bc_table.hpp"
#include "pdfluids/grid.hpp"

namespace pdfluids {

struct CgConfig {
  double eps_start = 1e-2;
  double eps_final = 1e-5;
  int max_cg_iters = 5000;

  //! Requires 0 < eps_final <= eps_start and a positive iteration cap.
  void validate() const;
  bool operator==(const CgConfig&) const = default;
};

//! Accuracy schedule for the projections inside one optimizer solve. Starts loose and
//! tightens by one decade whenever the iterate change comes within a decade of the
//! stopping threshold, down to eps_final.
class AdaptiveCgController {
 public:
  explicit AdaptiveCgController(const CgConfig& cfg);

  double tolerance() const { return eps_; }
  bool at_final() const { return eps_ <= cfg_.eps_final; }
  //! Returns the (possibly tightened) tolerance.
  double adapt(double residual_z, double eps_stop);

 private:
  CgConfig cfg_;
  double eps_;
};

double adapt_cg_tolerance(AdaptiveCgController& controller, double residual_z, double eps_stop);

//! The 5/7-point pressure Laplacian restricted to FLUID cells. Rows are scaled so
//! that A p = -div(u) yields div(u - grad p) = 0.
class PoissonOperator {
 public:
  PoissonOperator(const CellFlags& flags, const BcTable& bc);

  std::size_t size() const { return cells_.size(); }
  //! Grid cell index of unknown n.
  std::size_t cell(std::size_t n) const { return cells_[n]; }
  void apply(std::span<const double> p, std::span<double> out) const;
  double diagonal(std::size_t n) const { return diag_[n] * inv_h2_; }
  //! Subtracts the per-component mean of b over fluid regions with no Dirichlet face.
  void make_compatible(std::span<double> b) const;

 private:
  std::vector<std::size_t> cells_;
  std::vector<int> diag_;
  std::vector<std::array<int, 6>> nbrs_;
  std::vector<int> component_;
  std::vector<char> component_has_dirichlet_;
  double inv_h2_ = 1.0;
};

struct PoissonResult {
  ScalarField pressure;
  int iterations = 0;
  double residual = 0.0;  // relative: ||Ap - rhs|| / max(||rhs||, 1)
};

//! Solves A p = rhs with Jacobi-PCG to a relative residual of eps_cg.
//! Throws ConvergenceError past max_iters.
PoissonResult solve_poisson(const ScalarField& rhs,
                            const CellFlags& flags,
                            const BcTable& bc,
                            double eps_cg,
                            int max_iters = 5000);

struct Projection {
  VelocityField velocity;
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

//! Euclidean projection onto divergence-free fields: vel - grad p with
//! p = solve_poisson(-div vel). Neumann faces keep their input velocity.
Projection project(const VelocityField& vel,
                   const CellFlags& flags,
                   const BcTable& bc,
                   double eps_cg,
                   int max_iters = 5000);

}  // namespace pdfluids

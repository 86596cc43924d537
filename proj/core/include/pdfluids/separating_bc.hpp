/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Separating solid-wall boundary conditions. Fluid may leave a wall but never
 * enter it: wall faces are classified as separating or non-separating with
 * hysteresis, and the non-separating ones get a zero normal velocity.
 *
 ******************************************************************************/
#pragma once

#include <cstddef>
#include <vector>

#include "pdfluids/bc_table.hpp"
#include "pdfluids/grid.hpp"
#include "pdfluids/pressure.hpp"
#include "pdfluids/prox.hpp"

namespace pdfluids {

//! A face between a FLUID and a SOLID cell. The wall normal points from the solid
//! into the fluid: n = sign * e_axis.
struct BoundaryFace {
  std::size_t index = 0;  //!< position in the velocity layout
  int axis = 0;
  int sign = 1;

  double normal_velocity(const VelocityField& u) const { return sign * u.data[index]; }
};

//! All FLUID-SOLID faces, ordered by face index.
std::vector<BoundaryFace> boundary_faces(const CellFlags& flags);

//! Classification state for one solve: which wall faces are non-separating and the
//! accumulated wall-ward motion of each.
struct BcState {
  std::vector<BoundaryFace> faces;
  std::vector<char> non_separating;  //!< per entry of `faces`
  std::vector<double> memory;        //!< per entry of `faces`

  BcState() = default;
  //! Every wall face of `flags`, all separating with zero memory.
  explicit BcState(const CellFlags& flags);

  std::size_t non_separating_count() const;
  //! Face indices of the non-separating set, ascending.
  std::vector<std::size_t> non_separating_faces() const;
  //! Copies classification and memory of faces that are still wall faces here.
  void inherit(const BcState& previous);
  void lock_all();
};

//! One classification sweep. Faces with |u.n| >= threshold are updated: wall-ward
//! motion (u.n <= 0) makes a face non-separating and accumulates into its memory;
//! outward motion at least as strong as the memory (or any outward motion above the
//! threshold when !use_memory) makes it separating and clears the memory. Weaker
//! faces keep their state. Returns true when the non-separating set changed.
bool classify(const VelocityField& u, BcState& state, double threshold, bool use_memory);

//! Zeroes the normal velocity of every non-separating face; all other values unchanged.
VelocityField prox_f_bc(const VelocityField& v, const BcState& state);
//! prox_f_bc bound to a live state, declared an orthogonal projection.
ProxOperator bc_prox(const BcState& state);

//! Neumann on non-separating faces, Dirichlet (p = 0) on all other wall faces.
BcTable mixed_bc_table(const BcState& state, const GridDims& dims);

enum class SeparatingMethod { Pd, Admm, Iop };

struct SeparatingOptions {
  SeparatingMethod method = SeparatingMethod::Pd;
  PdParams pd = default_pd();
  AdmmParams admm;
  IopParams iop;
  CgConfig cg;
  //! Extrapolation step after each classification (PD / ADMM / IOP).
  bool krylov = true;
  //! Force every wall face non-separating and skip classification.
  bool lock_all = false;
  //! Carry classification and memory over from the previous step's state.
  bool persist_memory = false;
  //! Classification threshold on |u.n|; 0 selects cg.eps_final.
  double threshold = 0.0;
  //! Sweep cap of the accelerated solver.
  int max_sweeps = 50;

  static PdParams default_pd()
  {
    PdParams p;
    p.adaptive = true;
    p.max_iters = 500;
    return p;
  }
};

struct SeparatingResult {
  VelocityField velocity;
  BcState state;
  ConvergenceLog log;
  int cg_iterations = 0;
  bool converged = false;
};

//! Optimizer-based solve: f = indicator of zero normal velocity on the non-separating
//! set, projection with Dirichlet p = 0 on every wall face, classification after every
//! projection. The state is reset (or inherited from `previous` with persist_memory)
//! and seeded by one classification of `u`.
SeparatingResult solve_separating_standard(const VelocityField& u,
                                           const CellFlags& flags,
                                           const SeparatingOptions& options,
                                           const BcState* previous = nullptr);

//! Mixed-boundary sweeps: classify once, then repeat {zero non-separating normals;
//! project with Neumann on the non-separating set and Dirichlet elsewhere; classify}
//! until the classification is stable. Memory is not used, so faces only ever enter
//! the non-separating set.
SeparatingResult solve_separating_accelerated(const VelocityField& u,
                                              const CellFlags& flags,
                                              const SeparatingOptions& options);

//! Conventional solid walls: zero every face touching SOLID, project with Neumann walls.
SeparatingResult solve_regular(const VelocityField& u, const CellFlags& flags, const CgConfig& cg);

//! Sets every face that touches a SOLID cell to zero.
void zero_solid_faces(VelocityField& u, const CellFlags& flags);

}  // namespace pdfluids

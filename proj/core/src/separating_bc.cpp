/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Separating solid-wall boundary conditions
 *
 ******************************************************************************/
#include "pdfluids/separating_bc.hpp"

#include <algorithm>
#include <cmath>

namespace pdfluids {

std::vector<BoundaryFace> boundary_faces(const CellFlags& flags)
{
  std::vector<BoundaryFace> out;
  VelocityField layout(flags.dims);
  for_each_face(layout, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    const bool lo_fluid = flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]);
    const bool hi_fluid = flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]);
    const bool lo_solid = flags.is_solid(fc.lo[0], fc.lo[1], fc.lo[2]);
    const bool hi_solid = flags.is_solid(fc.hi[0], fc.hi[1], fc.hi[2]);
    if (lo_solid && hi_fluid)
      out.push_back({idx, axis, +1});
    else if (lo_fluid && hi_solid)
      out.push_back({idx, axis, -1});
  });
  return out;
}

BcState::BcState(const CellFlags& flags)
    : faces(boundary_faces(flags)), non_separating(faces.size(), 0), memory(faces.size(), 0.0)
{
}

std::size_t BcState::non_separating_count() const
{
  return static_cast<std::size_t>(std::count(non_separating.begin(), non_separating.end(), 1));
}

std::vector<std::size_t> BcState::non_separating_faces() const
{
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < faces.size(); ++n)
    if (non_separating[n])
      out.push_back(faces[n].index);
  return out;
}

void BcState::inherit(const BcState& previous)
{
  // both face lists are sorted by index
  std::size_t p = 0;
  for (std::size_t n = 0; n < faces.size(); ++n) {
    while (p < previous.faces.size() && previous.faces[p].index < faces[n].index)
      ++p;
    if (p < previous.faces.size() && previous.faces[p].index == faces[n].index &&
        previous.faces[p].sign == faces[n].sign) {
      non_separating[n] = previous.non_separating[p];
      memory[n] = previous.memory[p];
    }
  }
}

void BcState::lock_all()
{
  std::fill(non_separating.begin(), non_separating.end(), 1);
}

bool classify(const VelocityField& u, BcState& state, double threshold, bool use_memory)
{
  bool changed = false;
  for (std::size_t n = 0; n < state.faces.size(); ++n) {
    const double un = state.faces[n].normal_velocity(u);
    if (!(std::abs(un) >= threshold))
      continue;
    if (un <= 0.0) {
      changed |= !state.non_separating[n];
      state.non_separating[n] = 1;
      state.memory[n] += un;
    } else {
      const double m = use_memory ? state.memory[n] : 0.0;
      if (std::abs(un) >= std::abs(m)) {
        changed |= state.non_separating[n] != 0;
        state.non_separating[n] = 0;
        state.memory[n] = 0.0;
      }
    }
  }
  return changed;
}

VelocityField prox_f_bc(const VelocityField& v, const BcState& state)
{
  VelocityField out = v;
  for (std::size_t n = 0; n < state.faces.size(); ++n)
    if (state.non_separating[n])
      out.data[state.faces[n].index] = 0.0;
  return out;
}

ProxOperator bc_prox(const BcState& state)
{
  return {[&state](double, const VelocityField& v) { return prox_f_bc(v, state); }, true};
}

BcTable mixed_bc_table(const BcState& state, const GridDims& dims)
{
  BcTable table = BcTable::all_dirichlet(dims);
  for (std::size_t n = 0; n < state.faces.size(); ++n)
    if (state.non_separating[n])
      table.set_solid(state.faces[n].index, FaceBc::Neumann);
  return table;
}

void zero_solid_faces(VelocityField& u, const CellFlags& flags)
{
  for_each_face(u, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    if (flags.is_solid(fc.lo[0], fc.lo[1], fc.lo[2]) || flags.is_solid(fc.hi[0], fc.hi[1], fc.hi[2]))
      u.data[idx] = 0.0;
  });
}

SeparatingResult solve_separating_standard(const VelocityField& u,
                                           const CellFlags& flags,
                                           const SeparatingOptions& options,
                                           const BcState* previous)
{
  require_same_dims(u.dims, flags.dims, "separating solve");
  options.cg.validate();
  const double threshold = options.threshold > 0.0 ? options.threshold : options.cg.eps_final;
  SeparatingResult result;
  result.state = BcState(flags);
  BcState& state = result.state;
  if (options.lock_all) {
    state.lock_all();
  } else {
    if (options.persist_memory && previous)
      state.inherit(*previous);
    classify(u, state, threshold, true);
  }

  const Projector proj = make_projector(flags, BcTable::all_dirichlet(flags.dims),
                                        options.cg.max_cg_iters);
  const ProxOperator prox = bc_prox(state);
  SolveHooks hooks;
  if (!options.lock_all) {
    hooks.after_projection = [&state, threshold](VelocityField& z, double) {
      classify(z, state, threshold, true);
    };
  }
  hooks.krylov = options.krylov;
  hooks.error_fn = [&state](const VelocityField& z) { return norm(z - prox_f_bc(z, state)); };

  switch (options.method) {
    case SeparatingMethod::Pd:
      result.log.method = "separating-pd";
      result.velocity = pd_solve(prox, proj, options.pd, options.cg, u, result.log, hooks);
      break;
    case SeparatingMethod::Admm:
      result.log.method = "separating-admm";
      result.velocity = admm_solve(prox, proj, options.admm, options.cg, u, result.log, hooks);
      break;
    case SeparatingMethod::Iop:
      result.log.method = "separating-iop";
      result.velocity = iop_solve(prox, proj, options.iop, options.cg, u, result.log, hooks);
      break;
  }
  result.cg_iterations = result.log.total_cg_iterations();
  result.converged = result.log.converged;
  return result;
}

SeparatingResult solve_separating_accelerated(const VelocityField& u,
                                              const CellFlags& flags,
                                              const SeparatingOptions& options)
{
  require_same_dims(u.dims, flags.dims, "separating solve");
  options.cg.validate();
  if (options.max_sweeps < 1)
    throw InvalidArgument("max_sweeps must be positive");
  const double threshold = options.threshold > 0.0 ? options.threshold : options.cg.eps_final;

  SeparatingResult result;
  result.log.method = "separating-accelerated";
  result.state = BcState(flags);
  BcState& state = result.state;
  classify(u, state, threshold, false);

  VelocityField v = u;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    const VelocityField before = v;
    v = prox_f_bc(v, state);
    Projection p = project(v, flags, mixed_bc_table(state, flags.dims), options.cg.eps_final,
                           options.cg.max_cg_iters);
    v = std::move(p.velocity);
    const bool changed = classify(v, state, threshold, false);

    ConvergenceRecord rec;
    rec.iter = sweep;
    rec.residual = norm(v - before);
    rec.epsilon = 0.0;
    rec.eps_cg = options.cg.eps_final;
    rec.cg_iters = p.cg_iterations;
    result.log.records.push_back(rec);
    if (!changed) {
      result.log.converged = true;
      break;
    }
  }
  result.velocity = std::move(v);
  result.cg_iterations = result.log.total_cg_iterations();
  result.converged = result.log.converged;
  return result;
}

SeparatingResult solve_regular(const VelocityField& u, const CellFlags& flags, const CgConfig& cg)
{
  require_same_dims(u.dims, flags.dims, "regular solve");
  cg.validate();
  VelocityField v = u;
  zero_solid_faces(v, flags);
  Projection p = project(v, flags, BcTable::all_neumann(flags.dims), cg.eps_final, cg.max_cg_iters);

  SeparatingResult result;
  result.log.method = "regular";
  ConvergenceRecord rec;
  rec.iter = 1;
  rec.residual = p.cg_residual;
  rec.eps_cg = cg.eps_final;
  rec.cg_iters = p.cg_iterations;
  result.log.records.push_back(rec);
  result.log.converged = true;
  result.velocity = std::move(p.velocity);
  result.state = BcState(flags);
  result.state.lock_all();
  result.cg_iterations = p.cg_iterations;
  result.converged = true;
  return result;
}

}  // namespace pdfluids

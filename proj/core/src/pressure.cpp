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
#include "pdfluids/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdfluids/cg.hpp"
#include "pdfluids/operators.hpp"

namespace pdfluids {

void CgConfig::validate() const
{
  if (!(eps_final > 0.0) || !(eps_final <= eps_start))
    throw InvalidArgument("CG tolerances need 0 < eps_final <= eps_start");
  if (max_cg_iters < 1)
    throw InvalidArgument("max_cg_iters must be positive");
}

AdaptiveCgController::AdaptiveCgController(const CgConfig& cfg) : cfg_(cfg), eps_(cfg.eps_start)
{
  cfg_.validate();
}

double AdaptiveCgController::adapt(double residual_z, double eps_stop)
{
  if (residual_z <= 10.0 * eps_stop)
    eps_ = std::max(eps_ / 10.0, cfg_.eps_final);
  return eps_;
}

double adapt_cg_tolerance(AdaptiveCgController& controller, double residual_z, double eps_stop)
{
  return controller.adapt(residual_z, eps_stop);
}

PoissonOperator::PoissonOperator(const CellFlags& flags, const BcTable& bc)
{
  require_same_dims(flags.dims, bc.dims(), "poisson");
  const GridDims& d = flags.dims;
  inv_h2_ = 1.0 / (d.h * d.h);

  std::vector<int> unknown(d.cell_count(), -1);
  for (std::size_t c = 0; c < d.cell_count(); ++c)
    if (flags.tags[c] == CellType::Fluid) {
      unknown[c] = static_cast<int>(cells_.size());
      cells_.push_back(c);
    }
  diag_.assign(cells_.size(), 0);
  nbrs_.assign(cells_.size(), {-1, -1, -1, -1, -1, -1});
  std::vector<char> touches_dirichlet(cells_.size(), 0);

  VelocityField layout(d);
  for_each_face(layout, [&](int axis, int i, int j, int k, std::size_t idx) {
    const FaceKind kind = face_kind(flags, bc, axis, i, j, k, idx);
    if (kind == FaceKind::Inactive || kind == FaceKind::Neumann)
      return;
    const auto fc = face_cells(axis, i, j, k);
    const bool lo_fluid = flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]);
    const bool hi_fluid = flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]);
    const int lo = lo_fluid ? unknown[d.cell_index(fc.lo[0], fc.lo[1], fc.lo[2])] : -1;
    const int hi = hi_fluid ? unknown[d.cell_index(fc.hi[0], fc.hi[1], fc.hi[2])] : -1;
    if (lo >= 0) {
      ++diag_[lo];
      nbrs_[lo][2 * axis + 1] = hi;
      if (hi < 0)
        touches_dirichlet[lo] = 1;
    }
    if (hi >= 0) {
      ++diag_[hi];
      nbrs_[hi][2 * axis] = lo;
      if (lo < 0)
        touches_dirichlet[hi] = 1;
    }
  });

  // Connected fluid regions; a region without any Dirichlet face is singular.
  component_.assign(cells_.size(), -1);
  int ncomp = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < cells_.size(); ++s) {
    if (component_[s] >= 0)
      continue;
    component_has_dirichlet_.push_back(0);
    component_[s] = ncomp;
    stack.push_back(static_cast<int>(s));
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      if (touches_dirichlet[c])
        component_has_dirichlet_[ncomp] = 1;
      for (int nb : nbrs_[c])
        if (nb >= 0 && component_[nb] < 0) {
          component_[nb] = ncomp;
          stack.push_back(nb);
        }
    }
    ++ncomp;
  }
}

void PoissonOperator::apply(std::span<const double> p, std::span<double> out) const
{
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    double s = diag_[n] * p[n];
    for (int nb : nbrs_[n])
      if (nb >= 0)
        s -= p[nb];
    out[n] = s * inv_h2_;
  }
}

void PoissonOperator::make_compatible(std::span<double> b) const
{
  const std::size_t ncomp = component_has_dirichlet_.size();
  std::vector<double> sum(ncomp, 0.0);
  std::vector<std::size_t> count(ncomp, 0);
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    sum[component_[n]] += b[n];
    ++count[component_[n]];
  }
  for (std::size_t n = 0; n < cells_.size(); ++n) {
    const int c = component_[n];
    if (!component_has_dirichlet_[c])
      b[n] -= sum[c] / static_cast<double>(count[c]);
  }
}

PoissonResult solve_poisson(const ScalarField& rhs,
                            const CellFlags& flags,
                            const BcTable& bc,
                            double eps_cg,
                            int max_iters)
{
  require_same_dims(rhs.dims, flags.dims, "solve_poisson");
  for (double v : rhs.values)
    if (!std::isfinite(v))
      throw InvalidArgument("pressure right-hand side is not finite");

  const PoissonOperator op(flags, bc);
  const std::size_t n = op.size();
  std::vector<double> b(n), x(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    b[u] = rhs.values[op.cell(u)];
  op.make_compatible(b);

  std::vector<double> inv_diag(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double dg = op.diagonal(u);
    inv_diag[u] = dg > 0.0 ? 1.0 / dg : 0.0;
  }
  const double scale = std::max(std::sqrt(detail::dot(b, b)), 1.0);
  const CgStats stats = preconditioned_cg(
      [&](std::span<const double> in, std::span<double> out) { op.apply(in, out); },
      [&](std::span<const double> in, std::span<double> out) {
        for (std::size_t u = 0; u < n; ++u)
          out[u] = inv_diag[u] * in[u];
      },
      b, x, eps_cg, scale, max_iters);

  PoissonResult result{ScalarField(rhs.dims), stats.iterations, stats.residual / scale};
  if (!stats.converged)
    throw ConvergenceError("pressure CG did not reach the requested accuracy",
                           result.residual, stats.iterations);
  for (std::size_t u = 0; u < n; ++u)
    result.pressure.values[op.cell(u)] = x[u];
  return result;
}

Projection project(const VelocityField& vel,
                   const CellFlags& flags,
                   const BcTable& bc,
                   double eps_cg,
                   int max_iters)
{
  ScalarField rhs = divergence(vel, flags);
  for (auto& v : rhs.values)
    v = -v;
  PoissonResult p = solve_poisson(rhs, flags, bc, eps_cg, max_iters);
  return {subtract_gradient(vel, p.pressure, flags, bc), p.iterations, p.residual};
}

}  // namespace pdfluids

/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Fluid guiding objective, proximal operators and guided projection
 *
 ******************************************************************************/
#include "pdfluids/guiding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdfluids/blur.hpp"
#include "pdfluids/cg.hpp"
#include "pdfluids/operators.hpp"

namespace pdfluids {

double GuidingConfig::mean_weight(const CellFlags& flags) const
{
  require_same_dims(weights.dims, flags.dims, "guiding weights");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < flags.tags.size(); ++c)
    if (flags.tags[c] == CellType::Fluid) {
      s += weights.values[c];
      ++n;
    }
  if (n == 0)
    throw InvalidArgument("guiding needs at least one FLUID cell");
  return s / static_cast<double>(n);
}

void GuidingConfig::validate(const CellFlags& flags) const
{
  flags.dims.validate();
  require_same_dims(weights.dims, flags.dims, "guiding weights");
  require_same_dims(radius.dims, flags.dims, "blur radius");
  require_same_dims(target.dims, flags.dims, "target velocity");
  require_same_dims(current.dims, flags.dims, "current velocity");
  for (double w : weights.values)
    if (!(w > 0.0) || !std::isfinite(w))
      throw InvalidArgument("guiding weights must be finite and positive");
  for (std::size_t c = 0; c < radius.values.size(); ++c) {
    const double r = radius.values[c];
    if (!(r >= 0.0) || !std::isfinite(r))
      throw InvalidArgument("blur radius must be finite and non-negative");
    if (flags.tags[c] == CellType::Solid && r != 0.0)
      throw InvalidArgument("blur radius must be 0 at SOLID cells");
  }
  if (!(blend_ratio >= 0.0 && blend_ratio <= 1.0))
    throw InvalidArgument("blend ratio must lie in [0, 1]");
}

std::vector<char> guiding_face_mask(const CellFlags& flags)
{
  VelocityField layout(flags.dims);
  std::vector<char> mask(layout.data.size(), 0);
  for_each_face(layout, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    mask[idx] = flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]) &&
                flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]);
  });
  return mask;
}

GuidingProblem::GuidingProblem(GuidingConfig cfg, CellFlags flags)
    : cfg_(std::move(cfg)), flags_(std::move(flags))
{
  cfg_.validate(flags_);
  active_ = guiding_face_mask(flags_);
  w2_ = face_average(cfg_.weights);
  for (std::size_t n = 0; n < w2_.data.size(); ++n)
    w2_.data[n] = active_[n] ? w2_.data[n] * w2_.data[n] : 0.0;

  btb_target_ = btb(cfg_.target);
  btb_current_ = btb(cfg_.current);
  b_ = VelocityField(flags_.dims);
  for (std::size_t n = 0; n < b_.data.size(); ++n)
    b_.data[n] = -2.0 * (btb_target_.data[n] + w2_.data[n] * cfg_.current.data[n]);

  const VelocityField bt = mask(blur(cfg_.target));
  c_ = dot(bt, bt);
  for (std::size_t n = 0; n < w2_.data.size(); ++n)
    c_ += w2_.data[n] * cfg_.current.data[n] * cfg_.current.data[n];
}

VelocityField GuidingProblem::blur(const VelocityField& v) const
{
  return blur_obstacle_aware(v, cfg_.radius, flags_, false);
}

VelocityField GuidingProblem::blur_adjoint(const VelocityField& v) const
{
  return blur_obstacle_aware(v, cfg_.radius, flags_, true);
}

VelocityField GuidingProblem::mask(VelocityField v) const
{
  require_same_dims(v.dims, flags_.dims, "guiding field");
  for (std::size_t n = 0; n < v.data.size(); ++n)
    if (!active_[n])
      v.data[n] = 0.0;
  return v;
}

VelocityField GuidingProblem::btb(const VelocityField& v) const
{
  return blur_adjoint(mask(blur(v)));
}

VelocityField GuidingProblem::btb_prox(const VelocityField& v) const
{
  if (cfg_.use_b_squared)
    return mask(blur(mask(blur(v))));
  return btb(v);
}

VelocityField GuidingProblem::apply_a(const VelocityField& v) const
{
  VelocityField out = btb(v);
  for (std::size_t n = 0; n < out.data.size(); ++n)
    out.data[n] = 2.0 * (out.data[n] + w2_.data[n] * v.data[n]);
  return out;
}

double GuidingProblem::objective(const VelocityField& x) const
{
  const VelocityField bd = mask(blur(x - cfg_.target));
  double f = dot(bd, bd);
  for (std::size_t n = 0; n < x.data.size(); ++n) {
    const double d = x.data[n] - cfg_.current.data[n];
    f += w2_.data[n] * d * d;
  }
  return f;
}

VelocityField GuidingProblem::gradient(const VelocityField& x) const
{
  VelocityField g = apply_a(x);
  g += b_;
  return g;
}

SmwCache GuidingProblem::precompute(double sigma) const
{
  if (!(sigma > 0.0))
    throw InvalidArgument("proximal parameter sigma must be positive");
  SmwCache cache;
  cache.sigma = sigma;
  const VelocityField diff = cfg_.target - cfg_.current;
  cache.q = cfg_.use_b_squared ? btb_prox(diff) : btb_target_ - btb_current_;
  cache.q *= 2.0;
  cache.q.add_scaled(cfg_.current, -sigma);
  cache.gamma = VelocityField(flags_.dims);
  for (std::size_t n = 0; n < cache.gamma.data.size(); ++n)
    cache.gamma.data[n] = 1.0 / (2.0 * w2_.data[n] + sigma);
  return cache;
}

VelocityField GuidingProblem::prox_smw(const SmwCache& cache, const VelocityField& v) const
{
  require_same_dims(v.dims, flags_.dims, "prox argument");
  // g = G (sigma v + q)
  VelocityField g(flags_.dims);
  for (std::size_t n = 0; n < g.data.size(); ++n)
    g.data[n] = cache.gamma.data[n] * (cache.sigma * v.data[n] + cache.q.data[n]);
  const VelocityField kg = btb_prox(g);
  VelocityField x = cfg_.current;
  for (std::size_t n = 0; n < x.data.size(); ++n)
    x.data[n] += g.data[n] - 2.0 * cache.gamma.data[n] * kg.data[n];
  return x;
}

namespace {

// CG on a VelocityField-valued SPD operator.
template <class Op>
CgStats field_cg(const Op& op,
                 const VelocityField& diag,
                 const VelocityField& rhs,
                 VelocityField& x,
                 double tol,
                 int max_iters)
{
  const GridDims d = rhs.dims;
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    VelocityField v(d);
    std::copy(in.begin(), in.end(), v.data.begin());
    const VelocityField r = op(v);
    std::copy(r.data.begin(), r.data.end(), out.begin());
  };
  auto precond = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t n = 0; n < in.size(); ++n)
      out[n] = in[n] / diag.data[n];
  };
  const double scale = norm(rhs);
  if (scale == 0.0) {
    // homogeneous system with an SPD operator
    std::fill(x.data.begin(), x.data.end(), 0.0);
    return {0, 0.0, true};
  }
  return preconditioned_cg(apply, precond, rhs.data, x.data, tol, scale, max_iters);
}

}  // namespace

VelocityField GuidingProblem::prox_exact(double sigma, const VelocityField& v, double tol) const
{
  if (!(sigma > 0.0))
    throw InvalidArgument("proximal parameter sigma must be positive");
  require_same_dims(v.dims, flags_.dims, "prox argument");
  VelocityField rhs = sigma * v;
  rhs -= b_;
  VelocityField diag(flags_.dims);
  for (std::size_t n = 0; n < diag.data.size(); ++n)
    diag.data[n] = 2.0 * w2_.data[n] + sigma;
  auto op = [&](const VelocityField& p) {
    VelocityField r = apply_a(p);
    r.add_scaled(p, sigma);
    return r;
  };
  VelocityField x = v;
  const CgStats st = field_cg(op, diag, rhs, x, tol, 100000);
  if (!st.converged)
    throw ConvergenceError("exact guiding prox did not converge", st.residual, st.iterations);
  return x;
}

VelocityField GuidingProblem::unconstrained_minimizer(double tol) const
{
  VelocityField diag(flags_.dims, 1.0);
  for (std::size_t n = 0; n < diag.data.size(); ++n)
    if (active_[n])
      diag.data[n] = 2.0 * w2_.data[n];
  // Solve for the offset from u_c so that inactive faces stay exactly at u_c.
  auto op = [&](const VelocityField& p) { return mask(apply_a(mask(p))); };
  VelocityField rhs = mask(gradient(cfg_.current));
  rhs *= -1.0;
  VelocityField delta(flags_.dims);
  const CgStats st = field_cg(op, diag, rhs, delta, tol, 100000);
  if (!st.converged)
    throw ConvergenceError("guiding minimizer solve did not converge", st.residual, st.iterations);
  VelocityField x = cfg_.current;
  x += mask(delta);
  return x;
}

VelocityField GuidingProblem::project_minimizer_set(const VelocityField& v) const
{
  return project_minimizer_set(v, unconstrained_minimizer());
}

VelocityField GuidingProblem::project_minimizer_set(const VelocityField& v,
                                                    const VelocityField& xm) const
{
  require_same_dims(v.dims, flags_.dims, "projection argument");
  require_same_dims(xm.dims, flags_.dims, "minimizer");
  VelocityField out = v;
  for (std::size_t n = 0; n < out.data.size(); ++n)
    if (active_[n])
      out.data[n] = xm.data[n];
  return out;
}

ProxOperator smw_prox(std::shared_ptr<const GuidingProblem> problem, double sigma)
{
  auto cache = std::make_shared<const SmwCache>(problem->precompute(sigma));
  return {[problem, cache](double s, const VelocityField& v) {
            if (s != cache->sigma)
              throw InvalidArgument("guiding prox was precomputed for sigma = " +
                                    std::to_string(cache->sigma));
            return problem->prox_smw(*cache, v);
          },
          false};
}

ProxOperator exact_prox(std::shared_ptr<const GuidingProblem> problem, double tol)
{
  return {[problem, tol](double s, const VelocityField& v) { return problem->prox_exact(s, v, tol); },
          false};
}

ProxOperator minimizer_set_projection(std::shared_ptr<const GuidingProblem> problem)
{
  auto xm = std::make_shared<const VelocityField>(problem->unconstrained_minimizer());
  return {[problem, xm](double, const VelocityField& v) {
            return problem->project_minimizer_set(v, *xm);
          },
          true};
}

GuidingParams default_guiding_params(double mean_weight)
{
  if (!(mean_weight > 0.0) || !std::isfinite(mean_weight))
    throw InvalidArgument("mean guiding weight must be positive");
  GuidingParams p;
  p.pd.tau = 0.58 / mean_weight;
  p.pd.sigma = 2.44 / p.pd.tau;
  p.pd.theta = 0.3;
  p.pd.adaptive = false;
  p.admm.rho = 1.4 * mean_weight * mean_weight;
  return p;
}

VelocityField blend_linear(const VelocityField& current, const VelocityField& target, double ratio)
{
  require_same_dims(current.dims, target.dims, "blend");
  if (!(ratio >= 0.0 && ratio <= 1.0))
    throw InvalidArgument("blend ratio must lie in [0, 1]");
  VelocityField out = ratio * current;
  out.add_scaled(target, 1.0 - ratio);
  return out;
}

VelocityField blend_detail_preserving(const VelocityField& current,
                                      const VelocityField& target,
                                      const ScalarField& radius,
                                      const CellFlags& flags)
{
  require_same_dims(current.dims, target.dims, "blend");
  VelocityField out = current;
  out -= blur_obstacle_aware(current, radius, flags, false);
  out += target;
  return out;
}

namespace {

// D^T s with D = div on FLUID cells.
VelocityField divergence_adjoint(const ScalarField& s, const CellFlags& flags)
{
  const double inv_h = 1.0 / flags.dims.h;
  VelocityField out(flags.dims);
  for_each_face(out, [&](int axis, int i, int j, int k, std::size_t idx) {
    const auto fc = face_cells(axis, i, j, k);
    double v = 0.0;
    if (flags.is_fluid(fc.lo[0], fc.lo[1], fc.lo[2]))
      v += s.at(fc.lo[0], fc.lo[1], fc.lo[2]);
    if (flags.is_fluid(fc.hi[0], fc.hi[1], fc.hi[2]))
      v -= s.at(fc.hi[0], fc.hi[1], fc.hi[2]);
    out.data[idx] = v * inv_h;
  });
  return out;
}

}  // namespace

DirectSolveResult direct_least_squares(const GuidingProblem& problem, double tol, int max_iters)
{
  const CellFlags& flags = problem.flags();
  const GuidingConfig& cfg = problem.config();
  // Inactive faces are fixed at u_c; unknowns live on the active faces only.
  VelocityField fixed = cfg.current;
  for (std::size_t n = 0; n < fixed.data.size(); ++n)
    if (problem.active()[n])
      fixed.data[n] = 0.0;

  auto op = [&](const VelocityField& p) {
    const VelocityField pm = problem.mask(p);
    VelocityField r = problem.apply_a(problem.apply_a(pm));
    r += divergence_adjoint(divergence(pm, flags), flags);
    return problem.mask(std::move(r));
  };
  VelocityField rhs = problem.apply_a(problem.linear_term());
  rhs += divergence_adjoint(divergence(fixed, flags), flags);
  rhs = problem.mask(std::move(rhs));
  rhs *= -1.0;

  VelocityField diag(flags.dims, 1.0);
  VelocityField x = problem.mask(cfg.current);
  const CgStats st = field_cg(op, diag, rhs, x, tol, max_iters);
  if (!st.converged)
    throw ConvergenceError("direct least-squares solve did not converge", st.residual,
                           st.iterations);
  x += fixed;
  const double scale = norm(rhs);
  return {std::move(x), st.iterations, scale > 0.0 ? st.residual / scale : 0.0};
}

VelocityField guide_step(const GuidingConfig& cfg,
                         const CellFlags& flags,
                         const BcTable& bc,
                         const GuideOptions& options,
                         ConvergenceLog& log)
{
  options.cg.validate();
  auto problem = std::make_shared<const GuidingProblem>(cfg, flags);
  GuidingParams params = options.params;
  if (options.use_defaults) {
    const GuidingParams def = default_guiding_params(cfg.mean_weight(flags));
    params.pd.tau = def.pd.tau;
    params.pd.sigma = def.pd.sigma;
    params.pd.theta = def.pd.theta;
    params.pd.adaptive = false;
    params.admm.rho = def.admm.rho;
  }
  const Projector proj = make_projector(flags, bc, options.cg.max_cg_iters);
  SolveHooks hooks;
  hooks.objective = [problem](const VelocityField& z) { return problem->objective(z); };

  switch (options.method) {
    case GuidingMethod::Pd: {
      log.method = options.exact_prox ? "pd-exact" : "pd";
      const ProxOperator prox =
          options.exact_prox ? exact_prox(problem) : smw_prox(problem, params.pd.sigma);
      return pd_solve(prox, proj, params.pd, options.cg, cfg.current, log, hooks);
    }
    case GuidingMethod::Admm: {
      log.method = options.exact_prox ? "admm-exact" : "admm";
      const ProxOperator prox =
          options.exact_prox ? exact_prox(problem) : smw_prox(problem, params.admm.rho);
      return admm_solve(prox, proj, params.admm, options.cg, cfg.current, log, hooks);
    }
    case GuidingMethod::Iop:
      log.method = "iop";
      return iop_solve(minimizer_set_projection(problem), proj, options.iop, options.cg,
                       cfg.current, log, hooks);
    case GuidingMethod::Direct: {
      log.method = "direct";
      log.clear();
      DirectSolveResult r = direct_least_squares(*problem, options.direct_tol);
      ConvergenceRecord rec;
      rec.iter = 1;
      rec.residual = r.residual;
      rec.epsilon = options.direct_tol;
      rec.eps_cg = options.direct_tol;
      rec.cg_iters = r.iterations;
      rec.objective = problem->objective(r.velocity);
      log.records.push_back(rec);
      log.converged = true;
      return std::move(r.velocity);
    }
  }
  throw InvalidArgument("unknown guiding method");
}

}  // namespace pdfluids

/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Proximal splitting solvers
 *
 ******************************************************************************/
#include "pdfluids/prox.hpp"

#include <cmath>

namespace pdfluids {

ProxOperator identity_prox()
{
  return {[](double, const VelocityField& v) { return v; }, false};
}

Projector make_projector(const CellFlags& flags, const BcTable& bc, int max_cg_iters)
{
  return [flags, bc, max_cg_iters](const VelocityField& v, double eps_cg) {
    return project(v, flags, bc, eps_cg, max_cg_iters);
  };
}

void PdParams::validate() const
{
  if (!adaptive && !(tau > 0.0 && sigma > 0.0))
    throw InvalidArgument("PD needs tau > 0 and sigma > 0");
  if (!adaptive && !(theta > 0.0 && theta <= 1.0))
    throw InvalidArgument("PD needs 0 < theta <= 1");
  if (adaptive && !(accel.gamma >= 0.0 && accel.tau0 > 0.0 && accel.sigma0 > 0.0))
    throw InvalidArgument("adaptive PD needs gamma >= 0, tau0 > 0, sigma0 > 0");
  if (max_iters < 1)
    throw InvalidArgument("max_iters must be positive");
  if (eps_abs < 0.0 || eps_rel < 0.0)
    throw InvalidArgument("stopping tolerances must be non-negative");
}

void AdmmParams::validate() const
{
  if (!(rho > 0.0))
    throw InvalidArgument("ADMM needs rho > 0");
  if (max_iters < 1)
    throw InvalidArgument("max_iters must be positive");
}

int ConvergenceLog::total_cg_iterations() const
{
  int s = 0;
  for (const auto& r : records)
    s += r.cg_iters;
  return s;
}

StopCheck stop_check(const VelocityField& z_new,
                     const VelocityField& z_old,
                     double eps_abs,
                     double eps_rel,
                     std::size_t n_dim)
{
  StopCheck s;
  s.residual = norm(z_new - z_old);
  s.epsilon = std::sqrt(static_cast<double>(n_dim)) * eps_abs + eps_rel * norm(z_new);
  s.stop = s.residual <= s.epsilon;
  return s;
}

StopCheck stop_check(const VelocityField& z_new,
                     const VelocityField& z_old,
                     double eps_abs,
                     double eps_rel)
{
  return stop_check(z_new, z_old, eps_abs, eps_rel, z_new.dof_count());
}

VelocityField moreau_transform(const ProxOperator& prox_f, double sigma, const VelocityField& v)
{
  if (!(sigma > 0.0))
    throw InvalidArgument("Moreau transform needs sigma > 0");
  VelocityField out = v;
  out.add_scaled(prox_f(sigma, (1.0 / sigma) * v), -sigma);
  return out;
}

PdStep adaptive_pd_update(double tau, double sigma, double gamma)
{
  const double theta = 1.0 / std::sqrt(1.0 + 2.0 * tau * gamma);
  return {tau * theta, sigma / theta, theta};
}

KrylovResult krylov_accelerate(const VelocityField& z_k,
                               const VelocityField& z_km1,
                               const std::function<double(const VelocityField&)>& error_fn,
                               std::optional<double> eps_km1)
{
  KrylovResult result{z_k, error_fn(z_k), false};
  if (!eps_km1 || *eps_km1 == 0.0 || result.error == 0.0)
    return result;
  const double ratio = result.error / *eps_km1;
  VelocityField candidate = z_k;
  candidate.add_scaled(z_k - z_km1, -ratio);
  const double err = error_fn(candidate);
  if (err < result.error) {
    result.z = std::move(candidate);
    result.error = err;
    result.accepted = true;
  }
  return result;
}

namespace {

// Post-projection extensions common to every solver; returns the error of z for the
// next Krylov step.
std::optional<double> apply_hooks(const SolveHooks& hooks,
                                  VelocityField& z,
                                  const VelocityField& z_old,
                                  double eps_cg,
                                  std::optional<double> prev_error)
{
  if (hooks.after_projection)
    hooks.after_projection(z, eps_cg);
  if (hooks.krylov) {
    if (!hooks.error_fn)
      throw InvalidArgument("Krylov acceleration needs an error function");
    KrylovResult kr = krylov_accelerate(z, z_old, hooks.error_fn, prev_error);
    z = std::move(kr.z);
    return kr.error;
  }
  return prev_error;
}

void record(ConvergenceLog& log,
            const SolveHooks& hooks,
            int iter,
            const StopCheck& sc,
            double eps_cg,
            int cg_iters,
            const VelocityField& z)
{
  ConvergenceRecord r;
  r.iter = iter;
  r.residual = sc.residual;
  r.epsilon = sc.epsilon;
  r.eps_cg = eps_cg;
  r.cg_iters = cg_iters;
  if (hooks.objective)
    r.objective = hooks.objective(z);
  log.records.push_back(r);
}

}  // namespace

VelocityField pd_solve(const ProxOperator& prox_f,
                       const Projector& project,
                       const PdParams& params,
                       const CgConfig& cg,
                       const VelocityField& z0,
                       ConvergenceLog& log,
                       const SolveHooks& hooks)
{
  params.validate();
  log.clear();
  if (log.method.empty())
    log.method = "pd";

  AdaptiveCgController controller(cg);
  double tau = params.adaptive ? params.accel.tau0 : params.tau;
  double sigma = params.adaptive ? params.accel.sigma0 : params.sigma;
  double theta = params.theta;

  VelocityField x(z0.dims);
  VelocityField z = z0;
  VelocityField y = z0;
  std::optional<double> krylov_error;

  for (int k = 1; k <= params.max_iters; ++k) {
    // x-update through the Moreau identity
    VelocityField arg = y;
    arg.add_scaled(x, 1.0 / sigma);
    const VelocityField px = prox_f(sigma, arg);
    x.add_scaled(y, sigma).add_scaled(px, -sigma);

    // z-update: projection of z - tau x
    VelocityField z_old = z;
    VelocityField w = z;
    w.add_scaled(x, -tau);
    const double eps_cg = controller.tolerance();
    Projection proj = project(w, eps_cg);
    z = std::move(proj.velocity);
    krylov_error = apply_hooks(hooks, z, z_old, eps_cg, krylov_error);

    if (params.adaptive) {
      const PdStep next = adaptive_pd_update(tau, sigma, params.accel.gamma);
      tau = next.tau;
      sigma = next.sigma;
      theta = next.theta;
    }

    // y-update (extrapolation)
    y = z;
    y.add_scaled(z - z_old, theta);

    const StopCheck sc = stop_check(z, z_old, params.eps_abs, params.eps_rel);
    record(log, hooks, k, sc, eps_cg, proj.cg_iterations, z);
    if (sc.stop && controller.at_final()) {
      log.converged = true;
      break;
    }
    controller.adapt(sc.residual, sc.epsilon);
  }
  return z;
}

VelocityField admm_solve(const ProxOperator& prox_f,
                         const Projector& project,
                         const AdmmParams& params,
                         const CgConfig& cg,
                         const VelocityField& z0,
                         ConvergenceLog& log,
                         const SolveHooks& hooks)
{
  params.validate();
  log.clear();
  if (log.method.empty())
    log.method = "admm";

  AdaptiveCgController controller(cg);
  VelocityField z = z0;
  VelocityField y(z0.dims);
  std::optional<double> krylov_error;

  for (int k = 1; k <= params.max_iters; ++k) {
    const VelocityField x = prox_f(params.rho, z - y);
    VelocityField z_old = z;
    const double eps_cg = controller.tolerance();
    Projection proj = project(x + y, eps_cg);
    z = std::move(proj.velocity);
    krylov_error = apply_hooks(hooks, z, z_old, eps_cg, krylov_error);
    y += x;
    y -= z;

    const StopCheck sc = stop_check(z, z_old, params.eps_abs, params.eps_rel);
    record(log, hooks, k, sc, eps_cg, proj.cg_iterations, z);
    if (sc.stop && controller.at_final()) {
      log.converged = true;
      break;
    }
    controller.adapt(sc.residual, sc.epsilon);
  }
  return z;
}

VelocityField iop_solve(const ProxOperator& proj_f,
                        const Projector& project,
                        const IopParams& params,
                        const CgConfig& cg,
                        const VelocityField& z0,
                        ConvergenceLog& log,
                        const SolveHooks& hooks)
{
  if (!proj_f.is_orthogonal_projection)
    throw InvalidArgument("IOP requires f to be an orthogonal projection");
  if (params.max_iters < 1)
    throw InvalidArgument("max_iters must be positive");
  log.clear();
  if (log.method.empty())
    log.method = "iop";

  AdaptiveCgController controller(cg);
  SolveHooks h = hooks;
  h.krylov = hooks.krylov || params.krylov;
  if (h.krylov && !h.error_fn)
    h.error_fn = [&proj_f](const VelocityField& z) { return norm(z - proj_f(1.0, z)); };

  VelocityField z = z0;
  std::optional<double> krylov_error;
  for (int k = 1; k <= params.max_iters; ++k) {
    const VelocityField x = proj_f(1.0, z);
    VelocityField z_old = z;
    const double eps_cg = controller.tolerance();
    Projection proj = project(x, eps_cg);
    z = std::move(proj.velocity);
    krylov_error = apply_hooks(h, z, z_old, eps_cg, krylov_error);

    const StopCheck sc = stop_check(z, z_old, params.eps_abs, params.eps_rel);
    record(log, h, k, sc, eps_cg, proj.cg_iterations, z);
    if (sc.stop && controller.at_final()) {
      log.converged = true;
      break;
    }
    controller.adapt(sc.residual, sc.epsilon);
  }
  return z;
}

}  // namespace pdfluids

/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Proximal splitting solvers: first-order primal-dual, ADMM and iterated
 * orthogonal projection, sharing one proximal-operator interface.
 *
 * All solvers minimize f(z) + g(z) where g is the indicator of divergence-free
 * fields, so prox_g is the pressure projection. The linear operator of the
 * primal-dual splitting is the identity.
 *
 ******************************************************************************/
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pdfluids/grid.hpp"
#include "pdfluids/pressure.hpp"

namespace pdfluids {

//! prox_{f,sigma}(v) = argmin_x f(x) + sigma/2 ||x - v||^2
struct ProxOperator {
  std::function<VelocityField(double sigma, const VelocityField& v)> apply;
  //! True when f is the indicator of a closed convex set, so prox is a projection.
  bool is_orthogonal_projection = false;

  VelocityField operator()(double sigma, const VelocityField& v) const { return apply(sigma, v); }
};

ProxOperator identity_prox();

//! Divergence projection at a requested CG accuracy.
using Projector = std::function<Projection(const VelocityField&, double eps_cg)>;

Projector make_projector(const CellFlags& flags, const BcTable& bc, int max_cg_iters = 5000);

struct AdaptiveParams {
  double gamma = 200.0;
  double tau0 = 150.0;
  double sigma0 = 1.0 / 150.0;

  bool operator==(const AdaptiveParams&) const = default;
};

struct PdParams {
  double tau = 1.0;
  double sigma = 1.0;
  double theta = 1.0;
  int max_iters = 200;
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;
  //! Use the accelerated schedule (tau, sigma, theta) from `accel` instead of fixed values.
  bool adaptive = false;
  AdaptiveParams accel;

  void validate() const;
  bool operator==(const PdParams&) const = default;
};

struct AdmmParams {
  double rho = 1.0;
  int max_iters = 200;
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;

  void validate() const;
  bool operator==(const AdmmParams&) const = default;
};

struct IopParams {
  int max_iters = 200;
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;
  bool krylov = false;

  bool operator==(const IopParams&) const = default;
};

struct ConvergenceRecord {
  int iter = 0;
  double residual = 0.0;
  double epsilon = 0.0;
  double eps_cg = 0.0;
  int cg_iters = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceLog {
  std::string method;
  std::vector<ConvergenceRecord> records;
  bool converged = false;

  int iterations() const { return static_cast<int>(records.size()); }
  int total_cg_iterations() const;
  void clear()
  {
    records.clear();
    converged = false;
  }
};

struct StopCheck {
  bool stop = false;
  double residual = 0.0;
  double epsilon = 0.0;
};

//! residual = ||z_new - z_old||, eps = sqrt(n_dim) eps_abs + eps_rel ||z_new||.
StopCheck stop_check(const VelocityField& z_new,
                     const VelocityField& z_old,
                     double eps_abs,
                     double eps_rel,
                     std::size_t n_dim);
//! Same, with n_dim = z_new.dof_count().
StopCheck stop_check(const VelocityField& z_new,
                     const VelocityField& z_old,
                     double eps_abs,
                     double eps_rel);

//! prox_{f*,1/sigma}(v) = v - sigma * prox_{f,sigma}(v / sigma)
VelocityField moreau_transform(const ProxOperator& prox_f, double sigma, const VelocityField& v);

struct PdStep {
  double tau;
  double sigma;
  double theta;
};

//! theta = 1/sqrt(1 + 2 tau gamma), tau' = tau theta, sigma' = sigma / theta.
PdStep adaptive_pd_update(double tau, double sigma, double gamma);

struct KrylovResult {
  VelocityField z;
  double error = 0.0;
  bool accepted = false;
};

//! Extrapolation step for projection iterations. Evaluates eps_k = error_fn(z_k); when a
//! previous error is known and nonzero, tries z_k - (eps_k / eps_km1)(z_k - z_km1) and
//! keeps it only if it lowers the error.
KrylovResult krylov_accelerate(const VelocityField& z_k,
                               const VelocityField& z_km1,
                               const std::function<double(const VelocityField&)>& error_fn,
                               std::optional<double> eps_km1);

//! Optional instrumentation and problem-specific extensions shared by all solvers.
struct SolveHooks {
  //! Called on every new projected iterate z (e.g. boundary classification).
  std::function<void(VelocityField& z, double eps_cg)> after_projection;
  //! Enables krylov_accelerate on z each iteration; needs error_fn.
  bool krylov = false;
  std::function<double(const VelocityField&)> error_fn;
  //! Recorded into the log when set.
  std::function<double(const VelocityField&)> objective;
};

//! First-order primal-dual iteration with x0 = 0, y0 = z0:
//!   x <- x + sigma y - sigma prox_f(sigma, x / sigma + y)
//!   z <- Pi_div(z - tau x)
//!   y <- z_new + theta (z_new - z_old)
//! Projection accuracy follows an AdaptiveCgController; the solve only stops once that
//! controller has reached its final accuracy. Returns the last z.
VelocityField pd_solve(const ProxOperator& prox_f,
                       const Projector& project,
                       const PdParams& params,
                       const CgConfig& cg,
                       const VelocityField& z0,
                       ConvergenceLog& log,
                       const SolveHooks& hooks = {});

//! Scaled ADMM with y0 = 0:
//!   x <- prox_f(rho, z - y);  z <- Pi_div(x + y);  y <- y + x - z
VelocityField admm_solve(const ProxOperator& prox_f,
                         const Projector& project,
                         const AdmmParams& params,
                         const CgConfig& cg,
                         const VelocityField& z0,
                         ConvergenceLog& log,
                         const SolveHooks& hooks = {});

//! Alternating projections x <- Pi_f(z), z <- Pi_div(x). Throws InvalidArgument when
//! proj_f is not declared an orthogonal projection.
VelocityField iop_solve(const ProxOperator& proj_f,
                        const Projector& project,
                        const IopParams& params,
                        const CgConfig& cg,
                        const VelocityField& z0,
                        ConvergenceLog& log,
                        const SolveHooks& hooks = {});

}  // namespace pdfluids

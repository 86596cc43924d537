/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Fluid guiding: pull a simulated velocity toward the large-scale motion of a
 * target field while keeping it divergence free.
 *
 *   f(x) = ||P B (x - u_t)||^2 + ||P W (x - u_c)||^2
 *
 * B is the obstacle-aware Gaussian blur, W the per-face guiding weights and P the
 * mask of faces between two FLUID cells. f is quadratic,
 *   f(x) = 1/2 x^T A x + b^T x + c,  A = 2 (B^T P B + P W^2),
 *   b = -2 (B^T P B u_t + P W^2 u_c),  c = |P B u_t|^2 + |P W u_c|^2,
 * and its proximal operator is (A + sigma I)^-1 (sigma v - b).
 *
 ******************************************************************************/
#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "pdfluids/bc_table.hpp"
#include "pdfluids/grid.hpp"
#include "pdfluids/prox.hpp"

namespace pdfluids {

struct GuidingConfig {
  ScalarField weights;  //!< W per cell, > 0
  ScalarField radius;   //!< blur radius per cell (in cells), >= 0 and 0 at SOLID
  VelocityField target;   //!< u_t
  VelocityField current;  //!< u_c
  double blend_ratio = 0.5;  //!< only used by the blend baselines
  //! Approximate B^T B by B B in the fast proximal operator.
  bool use_b_squared = false;

  //! Mean of W over FLUID cells.
  double mean_weight(const CellFlags& flags) const;
  //! Throws InvalidArgument / DimensionMismatch on inconsistent data.
  void validate(const CellFlags& flags) const;
};

//! Faces between two in-domain FLUID cells: the faces the objective acts on.
std::vector<char> guiding_face_mask(const CellFlags& flags);

//! Cached constants for the fast proximal operator at one sigma.
struct SmwCache {
  double sigma = 0.0;
  VelocityField q;      //!< 2 B^T P B (u_t - u_c) - sigma u_c
  VelocityField gamma;  //!< 1 / (2 P W^2 + sigma)
};

//! Implicit quadratic form of the guiding objective for one time step.
class GuidingProblem {
 public:
  GuidingProblem(GuidingConfig cfg, CellFlags flags);

  const GuidingConfig& config() const { return cfg_; }
  const CellFlags& flags() const { return flags_; }
  const std::vector<char>& active() const { return active_; }
  //! P W^2 per face.
  const VelocityField& weight_squared() const { return w2_; }

  VelocityField blur(const VelocityField& v) const;
  VelocityField blur_adjoint(const VelocityField& v) const;
  VelocityField mask(VelocityField v) const;
  //! B^T P B v.
  VelocityField btb(const VelocityField& v) const;
  //! The operator standing in for B^T P B in the fast prox (B P B with use_b_squared).
  VelocityField btb_prox(const VelocityField& v) const;

  //! A v
  VelocityField apply_a(const VelocityField& v) const;
  const VelocityField& linear_term() const { return b_; }
  double constant_term() const { return c_; }

  //! f(x) evaluated from its definition.
  double objective(const VelocityField& x) const;
  //! A x + b
  VelocityField gradient(const VelocityField& x) const;

  SmwCache precompute(double sigma) const;
  //! Sherman-Morrison-Woodbury approximation of prox_{f,sigma}(v):
  //!   u_c + G(sigma v + q) - 2 G K G (sigma v + q),  G = diag(gamma), K = btb_prox.
  VelocityField prox_smw(const SmwCache& cache, const VelocityField& v) const;
  //! Solves (A + sigma I) x = sigma v - b by CG to relative residual `tol`.
  VelocityField prox_exact(double sigma, const VelocityField& v, double tol = 1e-12) const;

  //! argmin f over the active faces; other faces keep u_c.
  VelocityField unconstrained_minimizer(double tol = 1e-12) const;
  //! Orthogonal projection onto the set of minimizers of f: active faces take the
  //! unconstrained minimizer, other faces keep v.
  VelocityField project_minimizer_set(const VelocityField& v) const;
  //! Same, with a precomputed unconstrained_minimizer().
  VelocityField project_minimizer_set(const VelocityField& v, const VelocityField& minimizer) const;

 private:
  GuidingConfig cfg_;
  CellFlags flags_;
  std::vector<char> active_;
  VelocityField w2_;
  VelocityField btb_target_;
  VelocityField btb_current_;
  VelocityField b_;
  double c_ = 0.0;
};

//! prox operator backed by prox_smw, precomputed at `sigma`; calls with any other sigma
//! throw InvalidArgument.
ProxOperator smw_prox(std::shared_ptr<const GuidingProblem> problem, double sigma);
ProxOperator exact_prox(std::shared_ptr<const GuidingProblem> problem, double tol = 1e-12);
//! Orthogonal projection onto the minimizer set of f (declared as such).
ProxOperator minimizer_set_projection(std::shared_ptr<const GuidingProblem> problem);

struct GuidingParams {
  PdParams pd;
  AdmmParams admm;
};

//! tau = 0.58 / W, sigma = 2.44 / tau, theta = 0.3 and rho = 1.4 W^2 for the mean weight W.
GuidingParams default_guiding_params(double mean_weight);

//! r u_c + (1 - r) u_t
VelocityField blend_linear(const VelocityField& current, const VelocityField& target, double ratio);
//! u_c - B u_c + u_t
VelocityField blend_detail_preserving(const VelocityField& current,
                                      const VelocityField& target,
                                      const ScalarField& radius,
                                      const CellFlags& flags);

struct DirectSolveResult {
  VelocityField velocity;
  int iterations = 0;
  double residual = 0.0;
};

//! Least-squares solve of the stacked system [A; D] x = [-b; 0], D = div on FLUID
//! cells, through CG on the normal equations over the active faces. The result is not
//! projected, so it keeps the divergence the least-squares balance leaves behind.
DirectSolveResult direct_least_squares(const GuidingProblem& problem,
                                       double tol = 1e-8,
                                       int max_iters = 200000);

enum class GuidingMethod { Pd, Admm, Iop, Direct };

struct GuideOptions {
  GuidingMethod method = GuidingMethod::Pd;
  //! Use the exact proximal operator instead of the SMW approximation (PD / ADMM).
  bool exact_prox = false;
  //! Solver parameters; when `use_defaults` the tau/sigma/theta/rho come from
  //! default_guiding_params and only iteration caps and tolerances are taken from here.
  GuidingParams params;
  bool use_defaults = true;
  IopParams iop;
  CgConfig cg;
  double direct_tol = 1e-8;
};

//! One guided pressure projection of cfg.current. PD, ADMM and IOP return divergence-
//! free fields; Direct returns the least-squares solution as is. IOP replaces f by the
//! indicator of its minimizer set.
VelocityField guide_step(const GuidingConfig& cfg,
                         const CellFlags& flags,
                         const BcTable& bc,
                         const GuideOptions& options,
                         ConvergenceLog& log);

}  // namespace pdfluids

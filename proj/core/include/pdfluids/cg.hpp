/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Matrix-free preconditioned conjugate gradients
 *
 ******************************************************************************/
#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace pdfluids {

struct CgStats {
  int iterations = 0;
  double residual = 0.0;  // final ||b - Ax||
  bool converged = false;
};

namespace detail {
inline double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    s += a[n] * b[n];
  return s;
}
}  // namespace detail

//! Solves A x = b for symmetric positive (semi-)definite A, starting from the given x.
//! `apply(in, out)` computes out = A in, `precond(in, out)` out = P^-1 in.
//! Stops when ||b - Ax|| <= tol * scale.
template <class Apply, class Precond>
CgStats preconditioned_cg(Apply&& apply,
                          Precond&& precond,
                          std::span<const double> b,
                          std::span<double> x,
                          double tol,
                          double scale,
                          int max_iters)
{
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(ap));
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - ap[i];

  CgStats stats;
  const double target = tol * scale;
  stats.residual = std::sqrt(detail::dot(r, r));
  if (stats.residual <= target) {
    stats.converged = true;
    return stats;
  }
  precond(std::span<const double>(r), std::span<double>(z));
  p = z;
  double rz = detail::dot(r, z);
  for (int it = 1; it <= max_iters; ++it) {
    apply(std::span<const double>(p), std::span<double>(ap));
    const double pap = detail::dot(p, ap);
    if (!(pap > 0.0)) {
      stats.iterations = it;
      return stats;
    }
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    stats.iterations = it;
    stats.residual = std::sqrt(detail::dot(r, r));
    if (stats.residual <= target) {
      stats.converged = true;
      return stats;
    }
    precond(std::span<const double>(r), std::span<double>(z));
    const double rz_new = detail::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = z[i] + beta * p[i];
  }
  return stats;
}

}  // namespace pdfluids

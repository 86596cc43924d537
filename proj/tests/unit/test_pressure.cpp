/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Poisson operator, Krylov solver, pressure projection and the CG accuracy schedule
 *
 ******************************************************************************/
#include <doctest.h>

#include <oracles/dense.hpp>
#include <pdfluids/cg.hpp>
#include <pdfluids/operators.hpp>
#include <pdfluids/pressure.hpp>

#include "support.hpp"

using namespace pdfluids;
namespace oracle = pdfluids::oracle;

namespace {

//! Box with an EMPTY pocket and an interior obstacle.
CellFlags mixed_flags(const GridDims& d)
{
  CellFlags flags = CellFlags::box(d);
  for (int i = 1; i < d.nx - 1; ++i)
    flags.set(i, d.ny - 2, 0, CellType::Empty);
  flags.set(3, 3, 0, CellType::Solid);
  return flags;
}

}  // namespace

TEST_CASE("preconditioned CG solves a small SPD system")
{
  Eigen::MatrixXd M = Eigen::MatrixXd::Random(6, 6);
  const Eigen::MatrixXd A = M * M.transpose() + 6.0 * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
  std::vector<double> rhs(b.data(), b.data() + 6), x(6, 0.0);
  const CgStats st = preconditioned_cg(
      [&](std::span<const double> in, std::span<double> out) {
        const Eigen::VectorXd r = A * Eigen::Map<const Eigen::VectorXd>(in.data(), 6);
        std::copy(r.data(), r.data() + 6, out.begin());
      },
      [&](std::span<const double> in, std::span<double> out) {
        for (int i = 0; i < 6; ++i)
          out[i] = in[i] / A(i, i);
      },
      rhs, x, 1e-13, b.norm(), 100);
  CHECK(st.converged);
  CHECK(st.iterations <= 6);
  const Eigen::VectorXd expected = A.ldlt().solve(b);
  CHECK((Eigen::Map<Eigen::VectorXd>(x.data(), 6) - expected).norm() < 1e-10);
}

TEST_CASE("Poisson operator equals the dense -D G on FLUID cells")
{
  const GridDims d{8, 7, 1, 0.125};
  const CellFlags flags = mixed_flags(d);
  for (auto walls : {oracle::Walls::Neumann, oracle::Walls::Dirichlet}) {
    const BcTable bc =
        walls == oracle::Walls::Neumann ? BcTable::all_neumann(d) : BcTable::all_dirichlet(d);
    const PoissonOperator op(flags, bc);
    const Eigen::MatrixXd A = oracle::poisson_matrix(flags, walls);
    REQUIRE(static_cast<Eigen::Index>(op.size()) == A.rows());
    const Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(A.rows(), -1.0, 1.0).array().sin();
    std::vector<double> out(op.size());
    op.apply(std::span<const double>(p.data(), op.size()), out);
    const Eigen::VectorXd expected = A * p;
    for (std::size_t n = 0; n < op.size(); ++n) {
      CHECK(out[n] == doctest::Approx(expected[static_cast<Eigen::Index>(n)]).epsilon(1e-12));
      CHECK(op.diagonal(n) == doctest::Approx(A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))));
    }
  }
}

TEST_CASE("solve_poisson")
{
  const GridDims d{8, 8, 1, 1.0 / 8.0};

  SUBCASE("zero right-hand side gives zero pressure")
  {
    const CellFlags flags = CellFlags::box(d);
    const PoissonResult r = solve_poisson(ScalarField(d), flags, BcTable::all_dirichlet(d), 1e-8);
    CHECK(test::max_abs(r.pressure) == 0.0);
    CHECK(r.iterations == 0);
  }
  SUBCASE("point source matches a dense direct solve")
  {
    const CellFlags flags = CellFlags::box(d);
    ScalarField rhs(d);
    rhs.at(3, 4) = 1.0;
    const double eps = 1e-10;
    const PoissonResult r = solve_poisson(rhs, flags, BcTable::all_dirichlet(d), eps);
    const Eigen::MatrixXd A = oracle::poisson_matrix(flags, oracle::Walls::Dirichlet);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
    Eigen::VectorXd got(A.rows());
    Eigen::Index n = 0;
    for (std::size_t c = 0; c < d.cell_count(); ++c)
      if (flags.tags[c] == CellType::Fluid) {
        b[n] = rhs.values[c];
        got[n++] = r.pressure.values[c];
      }
    const Eigen::VectorXd expected = A.ldlt().solve(b);
    CHECK((A * got - b).norm() <= eps * std::max(b.norm(), 1.0) * 1.0001);
    CHECK((got - expected).norm() / expected.norm() < 1e-6);
    CHECK(r.residual <= eps);
  }
  SUBCASE("closed Neumann box removes the incompatible constant")
  {
    const CellFlags flags = CellFlags::box(d);
    const PoissonResult r =
        solve_poisson(ScalarField(d, 3.0), flags, BcTable::all_neumann(d), 1e-8);
    CHECK(test::max_abs(r.pressure) == 0.0);
  }
  SUBCASE("iteration cap raises with the last residual")
  {
    const CellFlags flags = CellFlags::box(d);
    const ScalarField rhs = test::random_scalar(d, 4);
    try {
      solve_poisson(rhs, flags, BcTable::all_dirichlet(d), 1e-14, 2);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.iterations() == 2);
      CHECK(e.residual() > 1e-14);
    }
  }
  SUBCASE("non-finite right-hand side is rejected")
  {
    ScalarField rhs(d);
    rhs.at(2, 2) = std::nan("");
    CHECK_THROWS_AS(solve_poisson(rhs, CellFlags::box(d), BcTable::all_neumann(d), 1e-6),
                    InvalidArgument);
  }
}

TEST_CASE("project")
{
  SUBCASE("divergence-free vortex is returned unchanged")
  {
    const GridDims d{16, 16, 1, 1.0 / 16.0};
    const VelocityField u = test::vortex_field(d);
    const CellFlags open(d);
    REQUIRE(test::max_abs(divergence(u, open)) < 1e-10);
    const Projection p = project(u, open, BcTable::all_neumann(d), 1e-5);
    CHECK(norm(p.velocity - u) <= 1e-5 * norm(u));
  }
  SUBCASE("random field becomes divergence-free")
  {
    const GridDims d{16, 16, 1, 1.0};
    const CellFlags flags = CellFlags::box(d);
    const VelocityField u = test::random_interior_field(flags, 11);
    const Projection p = project(u, flags, BcTable::all_neumann(d), 1e-5);
    CHECK(test::max_abs(divergence(p.velocity, flags)) <= 1e-4);
  }
  SUBCASE("pure gradient field is annihilated")
  {
    const GridDims d{16, 16, 1, 1.0 / 16.0};
    const CellFlags flags = CellFlags::box(d);
    const BcTable bc = BcTable::all_neumann(d);
    ScalarField phi = test::random_scalar(d, 13);
    const VelocityField grad = VelocityField(d) - subtract_gradient(VelocityField(d), phi, flags, bc);
    REQUIRE(norm(grad) > 1.0);
    const Projection p = project(grad, flags, bc, 1e-8);
    CHECK(norm(p.velocity) <= 1e-6 * norm(grad));
  }
  SUBCASE("matches the dense projection with free surfaces and walls")
  {
    const GridDims d{9, 8, 1, 1.0 / 9.0};
    const CellFlags flags = mixed_flags(d);
    const VelocityField u = test::random_field(d, 21);
    for (auto walls : {oracle::Walls::Neumann, oracle::Walls::Dirichlet}) {
      const BcTable bc =
          walls == oracle::Walls::Neumann ? BcTable::all_neumann(d) : BcTable::all_dirichlet(d);
      const Eigen::VectorXd expected = oracle::projection(u, flags, walls);
      const Eigen::VectorXd got = oracle::to_vector(project(u, flags, bc, 1e-11).velocity);
      CHECK((got - expected).norm() / expected.norm() < 1e-8);
    }
  }
}

TEST_CASE("adaptive CG accuracy schedule")
{
  CgConfig cfg;
  CHECK(cfg.eps_start == 1e-2);
  CHECK(cfg.eps_final == 1e-5);

  SUBCASE("residual far above the threshold keeps the tolerance")
  {
    AdaptiveCgController c(cfg);
    CHECK(adapt_cg_tolerance(c, 1.0, 1e-3) == 1e-2);
    CHECK_FALSE(c.at_final());
  }
  SUBCASE("residual within a decade tightens by one decade")
  {
    AdaptiveCgController c(cfg);
    CHECK(adapt_cg_tolerance(c, 1e-2, 1e-3) == doctest::Approx(1e-3));
  }
  SUBCASE("repeated triggers clamp at the final accuracy")
  {
    AdaptiveCgController c(cfg);
    for (int n = 0; n < 10; ++n)
      adapt_cg_tolerance(c, 0.0, 1e-3);
    CHECK(c.tolerance() == doctest::Approx(1e-5));
    CHECK(c.at_final());
  }
  SUBCASE("invalid configurations")
  {
    CHECK_THROWS_AS((CgConfig{1e-5, 1e-2, 10}.validate()), InvalidArgument);
    CHECK_THROWS_AS((CgConfig{1e-2, 0.0, 10}.validate()), InvalidArgument);
    CHECK_THROWS_AS((CgConfig{1e-2, 1e-5, 0}.validate()), InvalidArgument);
  }
}

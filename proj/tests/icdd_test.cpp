#include <gtest/gtest.h>

#include <cmath>

#include "icdd/dns.hpp"
#include "icdd/homogenization.hpp"
#include "icdd/icdd.hpp"
#include "oracles.hpp"

using namespace icdd;

namespace {

IcddProblem cavity_problem(double ell, double h, double k_hat = 7.231e-4, double porosity = 0.36) {
  const auto preset = make_preset(1);
  const double delta = delta_star(porosity, ell);
  return IcddProblem(build_icdd_grid(preset.domain, h, delta), delta,
                     icdd_physics(preset, permeability_dimensional(k_hat, ell)), FemConfig{});
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(IcddGrid, InsertsBothInterfaces) {
  const auto grid = build_icdd_grid({-0.5, 0.5, -0.5, 1.0}, 0.1, 0.0125);
  EXPECT_GE(grid.find_row(0.0, 1e-12), 0);
  EXPECT_GE(grid.find_row(-0.0125, 1e-12), 0);
  // y = -0.1 is kept; nothing within h/4 of -delta except the inserted line.
  EXPECT_GE(grid.find_row(-0.1, 1e-12), 0);
  const auto close = build_icdd_grid({-0.5, 0.5, -0.5, 1.0}, 0.1, 0.095);
  EXPECT_LT(close.find_row(-0.1, 1e-12), 0);
}

TEST(IcddGrid, RejectsEmptyOverlap) {
  EXPECT_THROW(build_icdd_grid({-0.5, 0.5, -0.5, 1.0}, 0.1, 0.0), InputError);
  EXPECT_THROW(build_icdd_grid({-0.5, 0.5, -0.5, 1.0}, 0.1, 0.6), InputError);
  const auto preset = make_preset(1);
  const auto grid = build_rect_mesh(preset.domain, 0.1);
  EXPECT_THROW(IcddProblem(grid, 0.0, icdd_physics(preset, 1e-6), FemConfig{}), InputError);
}

TEST(IcddGrid, InterfaceSitsAtTabulatedDepth) {
  const auto& c4 = reference_configuration("C4");
  const auto p = cavity_problem(1.0 / 20, 1.0 / 20, c4.k_hat, c4.porosity());
  EXPECT_NEAR(p.gamma_f(), -1.253e-2, 5e-6);
}

TEST(IcddProblem, RestrictionsPairNodesAtTheSameAbscissa) {
  const auto p = cavity_problem(0.1, 0.1);
  const auto& sf = *p.stokes().space;
  const auto& sp = *p.darcy().space;
  ASSERT_EQ(p.gamma_f_nodes_in_darcy().size(), p.stokes().interface_nodes.size());
  for (std::size_t i = 0; i < p.stokes().interface_nodes.size(); ++i) {
    const Vec2 a = sf.coords(p.stokes().interface_nodes[i]);
    const Vec2 b = sp.coords(p.gamma_f_nodes_in_darcy()[i]);
    EXPECT_NEAR(a[0], b[0], 1e-14);
    EXPECT_NEAR(a[1], b[1], 1e-14);
    EXPECT_NEAR(a[1], p.gamma_f(), 1e-14);
  }
  for (std::size_t i = 0; i < p.darcy().interface_nodes.size(); ++i) {
    const Vec2 a = sp.coords(p.darcy().interface_nodes[i]);
    const Vec2 b = sf.coords(p.gamma_p_nodes_in_stokes()[i]);
    EXPECT_NEAR(a[0], b[0], 1e-14);
    EXPECT_NEAR(b[1], 0.0, 1e-14);
  }
  // Darcy velocity on Gamma_f at the impermeable walls is a fixed zero: the row is empty.
  const auto& r = p.restrict_darcy_to_gamma_f();
  EXPECT_EQ(r.row_ptr[1] - r.row_ptr[0], 0);
}

TEST(IcddProblem, ZeroDataGivesZeroSolution) {
  auto preset = make_preset(1);
  preset.boundary.set(BoundaryTag::top, BoundaryCondition::no_slip());
  const double delta = delta_star(0.36, 0.1);
  const IcddProblem p(build_icdd_grid(preset.domain, 0.1, delta), delta, icdd_physics(preset, 7.231e-6), FemConfig{});
  EXPECT_EQ(p.schur_rhs().norm(), 0.0);
  const auto s = icdd_solve(p);
  EXPECT_EQ(s.g.norm(), 0.0);
  EXPECT_EQ(s.composite.stokes.u1.norm(), 0.0);
}

TEST(IcddProblem, OperatorIsLinear) {
  const auto p = cavity_problem(0.1, 0.1);
  const int n = p.interface_size();
  const Vector a = Vector::LinSpaced(n, -1.0, 2.0);
  const Vector b = Vector::LinSpaced(n, 3.0, 0.5).cwiseProduct(Vector::LinSpaced(n, 0.0, 1.0));
  const Vector lhs = p.schur_apply(2.5 * a - 0.75 * b);
  const Vector rhs = 2.5 * p.schur_apply(a) - 0.75 * p.schur_apply(b);
  EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(IcddProblem, MatrixFreeOperatorMatchesDenseElimination) {
  const auto p = cavity_problem(0.1, 0.1);
  ASSERT_LE(p.interface_size(), 300);
  const auto o = oracle::dense_interface(p);
  EXPECT_LT(rel(p.dense_schur(), o.S), 1e-10);
  EXPECT_LT(rel(p.schur_rhs(), o.b), 1e-10);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(o.T.rows(), o.T.cols());
  EXPECT_LT(rel(o.S, I - o.T * o.T), 1e-10);
  EXPECT_LT(rel(o.b, o.c + o.T * o.c), 1e-10);
}

TEST(IcddProblem, KrylovSolutionMatchesMonolithicSolve) {
  const auto p = cavity_problem(0.1, 0.1);
  const auto s = icdd_solve(p);
  const auto [mono, g] = p.monolithic_solve();
  EXPECT_LT((s.g - g).norm() / g.norm(), 1e-6);
  EXPECT_LT((s.composite.stokes.u1 - mono.stokes.u1).norm() / mono.stokes.u1.norm(), 1e-6);
  EXPECT_LT((s.composite.darcy.p - mono.darcy.p).norm() / mono.darcy.p.norm(), 1e-6);
  // The unsquared system (I - T) g = c has the same solution.
  const auto o = oracle::dense_interface(p);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(o.T.rows(), o.T.cols());
  EXPECT_LT(rel((I - o.T).lu().solve(o.c), g), 1e-8);
}

TEST(IcddProblem, InterfaceResidualsVanishAtConvergence) {
  const auto p = cavity_problem(0.1, 0.1);
  const auto s = icdd_solve(p);
  EXPECT_LE(s.check.dual_stokes, 1e-6);
  EXPECT_LE(s.check.dual_darcy, 1e-6);
  EXPECT_LE(s.check.matching_gamma_f, 1e-6);
  EXPECT_LE(s.check.matching_gamma_p, 1e-6);
  EXPECT_LE(s.krylov.iterations, 10);
  // The composite field takes Stokes values down to Gamma_f and Darcy values below.
  EXPECT_TRUE(s.composite.from_stokes(p.gamma_f()));
  EXPECT_FALSE(s.composite.from_stokes(p.gamma_f() - 1e-9));
}

TEST(IcddProblem, RejectsWrongInterfaceLength) {
  const auto p = cavity_problem(0.1, 0.1);
  EXPECT_THROW(p.schur_apply(Vector::Zero(3)), InputError);
}

TEST(IcddProblem, SecondOrderElementsAgreeWithMonolithic) {
  const auto preset = make_preset(3);
  const double delta = delta_star(0.36, 0.1);
  FemConfig fem;
  fem.order = 2;
  fem.pressure_order = 2;
  const IcddProblem p(build_icdd_grid(preset.domain, 0.1, delta), delta, icdd_physics(preset, 7.231e-6), fem);
  const auto s = icdd_solve(p);
  const auto [mono, g] = p.monolithic_solve();
  EXPECT_LT((s.g - g).norm() / g.norm(), 1e-6);
}

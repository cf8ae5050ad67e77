#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "icdd/homogenization.hpp"

using namespace icdd;

TEST(Porosity, ExactForBothShapes) {
  EXPECT_DOUBLE_EQ((ObstacleSpec{ObstacleShape::square, 0.8}.porosity()), 1.0 - 0.64);
  EXPECT_DOUBLE_EQ((ObstacleSpec{ObstacleShape::circle, 0.3}.porosity()), 1.0 - std::numbers::pi * 0.09);
  EXPECT_NEAR((ObstacleSpec{ObstacleShape::circle, 0.4}.porosity()), 0.497, 5e-4);
}

TEST(Porosity, RejectsOversizedObstacles) {
  EXPECT_THROW((ObstacleSpec{ObstacleShape::square, 1.0}.validate()), InputError);
  EXPECT_THROW((ObstacleSpec{ObstacleShape::circle, 0.5}.validate()), InputError);
  EXPECT_THROW((ObstacleSpec{ObstacleShape::square, 0.0}.validate()), InputError);
}

TEST(DeltaStar, PolynomialAndScaling) {
  EXPECT_NEAR(delta_star_hat(0.36), 0.3847 * 0.1296 + 0.0255 * 0.36 + 0.0344, 1e-15);
  EXPECT_NEAR(delta_star(0.36, 0.1), 9.344e-3, 5e-7);
  EXPECT_NEAR(delta_star(0.64, 1.0 / 40), 5.207e-3, 5e-7);
  EXPECT_DOUBLE_EQ(delta_star(0.5, 0.2), 2.0 * delta_star(0.5, 0.1));
  EXPECT_THROW(delta_star_hat(1.0), InputError);
  EXPECT_THROW(delta_star(0.5, 0.0), InputError);
}

TEST(DeltaStar, CloseToTabulatedSquareValues) {
  EXPECT_LE(std::abs(delta_star_hat(0.360) - 0.102), 0.02);
  EXPECT_LE(std::abs(delta_star_hat(0.640) - 0.210), 0.02);
}

TEST(DeltaStar, IncreasesWithPorosity) {
  double prev = 0.0;
  for (double t = 0.05; t < 1.0; t += 0.05) {
    EXPECT_GT(delta_star_hat(t), prev);
    prev = delta_star_hat(t);
  }
}

TEST(Permeability, DimensionalScaling) {
  EXPECT_NEAR(permeability_dimensional(7.231e-4, 0.1), 7.231e-6, 1e-18);
  EXPECT_NEAR(permeability_dimensional(6.326e-3, 1.0 / 40), 3.954e-6, 5e-10);
  EXPECT_THROW(permeability_dimensional(-1.0, 0.1), InputError);
}

TEST(ReferenceTable, FourConfigurations) {
  ASSERT_EQ(reference_configurations().size(), 4u);
  EXPECT_EQ(reference_configuration("C3").obstacle.shape, ObstacleShape::circle);
  EXPECT_DOUBLE_EQ(reference_configuration("C2").k_hat, 6.326e-3);
  EXPECT_THROW(reference_configuration("C5"), InputError);
}

class CellProblem : public ::testing::TestWithParam<std::pair<double, double>> {};

TEST_P(CellProblem, PermeabilityMatchesPublishedValue) {
  const auto [side, published] = GetParam();
  const auto cell = solve_cell_problem({ObstacleShape::square, side});
  EXPECT_NEAR(cell.k_hat(0, 0), published, 0.03 * published);
  EXPECT_NEAR(cell.k_hat(1, 1), cell.k_hat(0, 0), 1e-10 * published);
  EXPECT_LT(std::abs(cell.k_hat(0, 1)), 1e-10 * published);
  EXPECT_LT(std::abs(cell.k_hat(1, 0)), 1e-10 * published);
  EXPECT_DOUBLE_EQ(cell.porosity, 1.0 - side * side);
}

INSTANTIATE_TEST_SUITE_P(Squares, CellProblem,
                         ::testing::Values(std::pair{0.8, 7.231e-4}, std::pair{0.6, 6.326e-3}));

TEST(CellProblemProperties, SmallerObstacleIsMorePermeable) {
  CellProblemConfig cfg;
  cfg.n_per_cell = 20;
  const double a = solve_cell_problem({ObstacleShape::square, 0.8}, cfg).k_hat(0, 0);
  const double b = solve_cell_problem({ObstacleShape::square, 0.6}, cfg).k_hat(0, 0);
  const double c = solve_cell_problem({ObstacleShape::square, 0.4}, cfg).k_hat(0, 0);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
}

TEST(CellProblemProperties, TensorIsPeriodicAndVanishesInObstacle) {
  CellProblemConfig cfg;
  cfg.n_per_cell = 20;
  const auto cell = solve_cell_problem({ObstacleShape::square, 0.6}, cfg);
  EXPECT_EQ(cell.tensor(0.5, 0.5), Eigen::Matrix2d::Zero());
  EXPECT_LT((cell.tensor(0.05, 0.13) - cell.tensor(1.05, -0.87)).norm(), 1e-15);
  // w_1 points along +x in the channel between obstacles.
  EXPECT_GT(cell.tensor(0.5, 0.05)(0, 0), 0.0);
}

TEST(CellProblemProperties, CirclesAreNotMeshed) {
  EXPECT_THROW(solve_cell_problem({ObstacleShape::circle, 0.3}), InputError);
}

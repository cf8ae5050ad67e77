#include <gtest/gtest.h>

#include <cmath>

#include "icdd/validation.hpp"

using namespace icdd;

namespace {

PointField analytic(std::function<FlowSample(double, double)> f) {
  return [f = std::move(f)](double x, double y) { return std::optional<FlowSample>(f(x, y)); };
}

const StructuredMesh& unit_grid() {
  static const StructuredMesh m = build_rect_mesh({0.0, 1.0, -1.0, 1.0}, 0.125);
  return m;
}

}  // namespace

TEST(L2Error, IdenticalFieldsGiveZero) {
  const auto f = analytic([](double x, double y) { return FlowSample{Vec2(x * y, 1.0), x - y}; });
  const RegionSpec band{RegionKind::custom, -0.3, 0.7};
  EXPECT_EQ(l2_error(f, f, unit_grid(), band, Quantity::velocity), 0.0);
  EXPECT_EQ(l2_error(f, f, unit_grid(), band, Quantity::pressure), 0.0);
}

TEST(L2Error, PolynomialIntegrandsAreExact) {
  // |(y, 0)|^2 over [0,1] x [0,1] integrates to 1/3; clipped bands keep exactness.
  const auto f = analytic([](double, double y) { return FlowSample{Vec2(y, 0.0), 2.0}; });
  const RegionSpec band{RegionKind::custom, 0.0, 1.0};
  EXPECT_NEAR(l2_error(f, zero_field(), unit_grid(), band, Quantity::velocity), std::sqrt(1.0 / 3.0), 1e-14);
  EXPECT_NEAR(l2_error(f, zero_field(), unit_grid(), band, Quantity::pressure), 2.0, 1e-14);
  const RegionSpec clipped{RegionKind::custom, 0.1, 0.33};
  EXPECT_NEAR(l2_error(f, zero_field(), unit_grid(), clipped, Quantity::velocity),
              std::sqrt((0.33 * 0.33 * 0.33 - 0.001) / 3.0), 1e-14);
}

TEST(L2Error, UndefinedPointsAreZeroedOrSkipped) {
  const auto holey = [](double x, double y) -> std::optional<FlowSample> {
    if (x < 0.5) return std::nullopt;
    return FlowSample{Vec2(1.0, 0.0), 1.0};
  };
  const RegionSpec band{RegionKind::custom, 0.0, 1.0};
  const auto one = analytic([](double, double) { return FlowSample{Vec2(1.0, 0.0), 1.0}; });
  EXPECT_NEAR(l2_error(holey, one, unit_grid(), band, Quantity::velocity, Undefined::zero), std::sqrt(0.5), 1e-14);
  EXPECT_EQ(l2_error(holey, one, unit_grid(), band, Quantity::pressure, Undefined::skip), 0.0);
}

TEST(L2Error, DisjointBandsCombinePythagorean) {
  const auto f = analytic([](double x, double y) { return FlowSample{Vec2(std::sin(3 * x), y * y), x * y}; });
  const auto& g = unit_grid();
  const RegionSpec all{RegionKind::custom, -0.8, 0.6}, lo{RegionKind::custom, -0.8, -0.137}, hi{RegionKind::custom, -0.137, 0.6};
  for (auto q : {Quantity::velocity, Quantity::pressure}) {
    const double a = l2_error(f, zero_field(), g, all, q);
    const double b = l2_error(f, zero_field(), g, lo, q), c = l2_error(f, zero_field(), g, hi, q);
    EXPECT_NEAR(a * a, b * b + c * c, 1e-13 * a * a);
  }
}

TEST(L2Error, RejectsBadRegions) {
  const auto f = zero_field();
  EXPECT_THROW(l2_error(f, f, unit_grid(), {RegionKind::custom, 0.5, 0.5}, Quantity::velocity), InputError);
  EXPECT_THROW(l2_error(f, f, unit_grid(), {RegionKind::custom, -2.0, 0.5}, Quantity::velocity), InputError);
}

TEST(Regions, Bands) {
  const auto f = RegionSpec::fluid_star(0.01);
  EXPECT_DOUBLE_EQ(f.y_lo, -0.01);
  EXPECT_DOUBLE_EQ(f.y_hi, 0.5);
  const auto m = RegionSpec::porous_minus(0.5, 0.01);
  EXPECT_DOUBLE_EQ(m.y_lo, -0.5);
  EXPECT_DOUBLE_EQ(m.y_hi, -0.01);
  EXPECT_DOUBLE_EQ(RegionSpec::porous_star(0.5, 0.1).y_hi, -0.1);
}

TEST(Slope, PowerLawsAreRecovered) {
  const std::vector<double> h = {0.1, 0.05, 0.025};
  std::vector<double> e2, e15;
  for (double x : h) {
    e2.push_back(x * x);
    e15.push_back(7.0 * std::pow(x, 1.5));
  }
  EXPECT_NEAR(loglog_slope(h, e2), 2.0, 1e-12);
  EXPECT_NEAR(loglog_slope(h, e15), 1.5, 1e-12);
  std::vector<double> scaled = e2;
  for (double& v : scaled) v *= 1e-9;
  EXPECT_NEAR(loglog_slope(h, scaled), loglog_slope(h, e2), 1e-12);
  EXPECT_THROW(loglog_slope({0.1}, {1.0}), InputError);
  EXPECT_THROW(loglog_slope({0.1, 0.1}, {1.0, 2.0}), InputError);
  EXPECT_THROW(loglog_slope({0.1, 0.05}, {1.0, 0.0}), InputError);
}

TEST(Slope, ReportSlopesUseAllRows) {
  std::vector<ErrorReport> rows;
  for (double ell : {0.1, 0.05, 0.025}) {
    ErrorReport r;
    r.cell_size = ell;
    r.eu_fluid = std::pow(ell, 1.5);
    r.ep_fluid = std::sqrt(ell);
    r.eu_porous_minus = r.eu_porous_star = ell * ell;
    r.ep_porous_minus = r.ep_porous_star = ell;
    rows.push_back(r);
  }
  const auto s = slopes_of(rows);
  EXPECT_NEAR(s.slope_u_fluid, 1.5, 1e-12);
  EXPECT_NEAR(s.slope_p_fluid, 0.5, 1e-12);
  EXPECT_NEAR(s.slope_u_porous_star, 2.0, 1e-12);
  EXPECT_NEAR(s.slope_p_porous_minus, 1.0, 1e-12);
}

TEST(Trace, SymmetricAndSignAware) {
  const auto f = analytic([](double x, double) { return FlowSample{Vec2(x, 1.0), 2.0 * x}; });
  const auto g = analytic([](double x, double) { return FlowSample{Vec2(-x, 1.0), -2.0 * x}; });
  const std::vector<double> bp = {0.0, 0.5, 1.0};
  const auto a = trace_error(f, g, 0.0, bp), b = trace_error(g, f, 0.0, bp);
  EXPECT_DOUBLE_EQ(a.eu1, b.eu1);
  EXPECT_NEAR(a.eu1, 2.0 / std::sqrt(3.0), 1e-14);
  EXPECT_EQ(a.eu2, 0.0);
  EXPECT_NEAR(a.ep, 4.0 / std::sqrt(3.0), 1e-14);
}

TEST(Tiling, WholeCellsOnly) {
  EXPECT_NO_THROW(check_tiling({-0.5, 0.5, -0.5, 0.0}, 0.1));
  EXPECT_NO_THROW(check_tiling({-0.5, 0.5, -0.5, 0.0}, 1.0 / 40));
  EXPECT_THROW(check_tiling({-0.5, 0.5, -0.5, 0.0}, 0.3), InputError);
}

TEST(Reconstruction, CellAverageRecoversTheDarcyVelocity) {
  CellProblemConfig cc;
  cc.n_per_cell = 20;
  const auto cell = solve_cell_problem({ObstacleShape::square, 0.6}, cc);
  const double ell = 0.1;
  const Vec2 u(3e-9, -1e-9);
  const auto darcy = analytic([u](double, double) { return FlowSample{u, 5.0}; });
  const auto rec = reconstruct_porous_velocity(darcy, cell, ell, {-0.5, -0.5});
  // Cell [-0.3, -0.2] x [-0.4, -0.3]; Q1 integrands are exact with 2 Gauss points per element.
  const auto rule = QuadratureRule::gauss(2);
  Vec2 mean = Vec2::Zero();
  const double h = ell / cc.n_per_cell;
  for (int j = 0; j < cc.n_per_cell; ++j) {
    for (int i = 0; i < cc.n_per_cell; ++i) {
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
          const double x = -0.3 + (i + rule.points[a]) * h, y = -0.4 + (j + rule.points[b]) * h;
          mean += rule.weights[a] * rule.weights[b] * h * h * rec(x, y)->u;
        }
      }
    }
  }
  mean /= ell * ell;
  EXPECT_LT((mean - u).norm(), 1e-9 * u.norm());
  EXPECT_DOUBLE_EQ(rec(-0.27, -0.33)->p, 5.0);
  EXPECT_EQ(rec(-0.25, -0.35)->u.norm(), 0.0);  // obstacle centre
}

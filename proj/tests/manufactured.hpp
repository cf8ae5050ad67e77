#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "icdd/validation.hpp"

namespace manufactured {

using namespace icdd;

struct Study {
  std::vector<double> h;
  std::vector<double> error;
  double slope() const { return loglog_slope(h, error); }
};

inline std::vector<double> levels(int order) {
  return order == 1 ? std::vector<double>{1.0 / 8, 1.0 / 16, 1.0 / 32} : std::vector<double>{1.0 / 4, 1.0 / 8, 1.0 / 16};
}

/// Stokes on the unit square, mu = 1, u = (sin x cos y, -cos x sin y), p = sin(x + y), velocity data everywhere.
inline Study stokes(int order) {
  const auto exact_u = [](double x, double y) { return Vec2(std::sin(x) * std::cos(y), -std::cos(x) * std::sin(y)); };
  StokesProblem prob;
  prob.viscosity = 1.0;
  prob.forcing = [exact_u](double x, double y) {
    return Vec2(2.0 * exact_u(x, y) + Vec2(std::cos(x + y), std::cos(x + y)));
  };
  for (auto tag : {BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom, BoundaryTag::top}) {
    prob.boundary.set(tag, BoundaryCondition::velocity(exact_u));
  }
  prob.zero_mean_pressure = true;
  FemConfig cfg;
  cfg.order = cfg.pressure_order = order;
  const PointField exact = [exact_u](double x, double y) {
    return std::optional<FlowSample>(FlowSample{exact_u(x, y), 0.0});
  };
  Study s;
  for (double h : levels(order)) {
    const auto mesh = build_rect_mesh({0, 1, 0, 1}, h);
    const auto f = solve_system(assemble_stokes(make_space(mesh, order), prob, cfg));
    s.h.push_back(h);
    s.error.push_back(l2_error(point_field(f), exact, mesh, {RegionKind::custom, 0.0, 1.0}, Quantity::velocity,
                               Undefined::zero, order + 2));
  }
  return s;
}

/// Darcy on the unit square, p = sin(pi x) sin(pi y), f = (2 pi cos(pi x) sin(pi y), 0) so that div u = 0.
inline Study darcy(int order) {
  const double pi = std::numbers::pi;
  const auto exact_p = [pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
  DarcyProblem prob;
  prob.viscosity = 1e-3;
  prob.permeability = 1e-6;
  prob.forcing = [pi](double x, double y) { return Vec2(2.0 * pi * std::cos(pi * x) * std::sin(pi * y), 0.0); };
  for (auto tag : {BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom, BoundaryTag::top}) {
    prob.boundary.set(tag, BoundaryCondition::pressure(exact_p));
  }
  FemConfig cfg;
  cfg.order = cfg.pressure_order = order;
  const PointField exact = [exact_p](double x, double y) {
    return std::optional<FlowSample>(FlowSample{Vec2::Zero(), exact_p(x, y)});
  };
  Study s;
  for (double h : levels(order)) {
    const auto mesh = build_rect_mesh({0, 1, 0, 1}, h);
    const auto f = solve_system(assemble_darcy(make_space(mesh, order), prob, cfg));
    s.h.push_back(h);
    s.error.push_back(l2_error(point_field(f), exact, mesh, {RegionKind::custom, 0.0, 1.0}, Quantity::pressure,
                               Undefined::zero, order + 2));
  }
  return s;
}

}  // namespace manufactured

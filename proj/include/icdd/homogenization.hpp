/**
 * @file homogenization.hpp
 * @brief Periodic cell problem, permeability, porosity and the interface-depth rule.
 */
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "icdd/discretization.hpp"
#include "icdd/errors.hpp"
#include "icdd/fem.hpp"
#include "icdd/mesh.hpp"
#include "icdd/sparse.hpp"

namespace icdd {

enum class ObstacleShape { square, circle };

inline const char* to_string(ObstacleShape s) { return s == ObstacleShape::square ? "square" : "circle"; }

/// Obstacle inside the unit reference cell: side length (square) or radius (circle).
struct ObstacleSpec {
  ObstacleShape shape = ObstacleShape::square;
  double size = 0.8;

  double porosity() const {
    validate();
    return shape == ObstacleShape::square ? 1.0 - size * size : 1.0 - std::numbers::pi * size * size;
  }

  void validate() const {
    const double limit = shape == ObstacleShape::square ? 1.0 : 0.5;
    if (!(size > 0.0 && size < limit)) {
      throw InputError(std::string(to_string(shape)) + " obstacle size must lie in (0, " +
                       (shape == ObstacleShape::square ? "1" : "0.5") + ")");
    }
  }
};

struct CellProblemConfig {
  int n_per_cell = 80;
  FemConfig fem;
};

/// Velocities w_j and pressures q_j of the two cell problems (force e_j).
struct CellSolution {
  ObstacleSpec obstacle;
  std::array<NodalField, 2> w;
  Eigen::Matrix2d k_hat = Eigen::Matrix2d::Zero();
  double porosity = 0.0;

  /// Matrix W with W(i, j) = (w_j)_i at reference point (xi, eta), wrapped periodically.
  /// Zero inside the obstacle.
  Eigen::Matrix2d tensor(double xi, double eta) const {
    xi -= std::floor(xi);
    eta -= std::floor(eta);
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    for (int j = 0; j < 2; ++j) {
      const auto s = w[j].evaluate(xi, eta);
      if (!s) return Eigen::Matrix2d::Zero();
      m.col(j) = s->u;
    }
    return m;
  }
};

/**
 * Solve the two periodic Stokes cell problems with unit viscosity on the fluid part of
 * the unit cell and integrate the velocities into K-hat.
 */
inline CellSolution solve_cell_problem(const ObstacleSpec& obstacle, const CellProblemConfig& cfg = {}) {
  obstacle.validate();
  if (obstacle.shape != ObstacleShape::square) {
    throw InputError("cell problems are only meshed for square obstacles");
  }
  cfg.fem.validate();
  const ObstacleLattice lattice{1.0, obstacle.size, {0.0, 1.0, 0.0, 1.0}};
  const auto space = make_space(build_perforated_mesh({0.0, 1.0, 0.0, 1.0}, lattice, cfg.n_per_cell),
                                cfg.fem.order);
  CellSolution out;
  out.obstacle = obstacle;
  out.porosity = obstacle.porosity();
  const Vector weights = node_integrals(*space);
  // Both directions share the matrix; only the forcing differs.
  const auto sys0 = assemble_cell_problem(space, 0, cfg.fem);
  const auto sys1 = assemble_cell_problem(space, 1, cfg.fem);
  const auto lu = factorize(sys0.K);
  out.w[0] = sys0.expand(lu.solve(sys0.rhs), Vector());
  out.w[1] = sys1.expand(lu.solve(sys1.rhs), Vector());
  for (int j = 0; j < 2; ++j) {
    out.k_hat(0, j) = weights.dot(out.w[j].u1);
    out.k_hat(1, j) = weights.dot(out.w[j].u2);
  }
  return out;
}

/// Dimensional permeability K = l^2 K-hat.
inline double permeability_dimensional(double k_hat, double cell_size) {
  if (!(k_hat > 0.0)) throw InputError("dimensionless permeability must be positive");
  if (!(cell_size > 0.0)) throw InputError("cell size must be positive");
  return cell_size * cell_size * k_hat;
}

/// Dimensionless interface depth fitted against porosity.
inline double delta_star_hat(double porosity) {
  if (!(porosity > 0.0 && porosity < 1.0)) throw InputError("porosity must lie in (0, 1)");
  return 0.3847 * porosity * porosity + 0.0255 * porosity + 0.0344;
}

/// Depth of the lower interface below the obstacle-top line: Gamma_f sits at y = -delta*.
inline double delta_star(double porosity, double cell_size) {
  if (!(cell_size > 0.0)) throw InputError("cell size must be positive");
  return cell_size * delta_star_hat(porosity);
}

/// Published cell data for one obstacle, used when the obstacle cannot be meshed.
struct PorousConfiguration {
  std::string name;
  ObstacleSpec obstacle;
  double k_hat = 0.0;

  double porosity() const { return obstacle.porosity(); }
};

/// Table of the four reference configurations C1-C4.
inline const std::vector<PorousConfiguration>& reference_configurations() {
  static const std::vector<PorousConfiguration> table = {
      {"C1", {ObstacleShape::square, 0.8}, 7.231e-4},
      {"C2", {ObstacleShape::square, 0.6}, 6.326e-3},
      {"C3", {ObstacleShape::circle, 0.4}, 1.828e-3},
      {"C4", {ObstacleShape::circle, 0.3}, 1.098e-2},
  };
  return table;
}

inline const PorousConfiguration& reference_configuration(const std::string& name) {
  for (const auto& c : reference_configurations()) {
    if (c.name == name) return c;
  }
  throw InputError("unknown configuration '" + name + "' (expected C1, C2, C3 or C4)");
}

}  // namespace icdd

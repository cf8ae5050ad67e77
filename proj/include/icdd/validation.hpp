/**
 * @file validation.hpp
 * @brief Errors of the coupled model against pore-resolved references.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "icdd/dns.hpp"
#include "icdd/errors.hpp"
#include "icdd/fem.hpp"
#include "icdd/homogenization.hpp"
#include "icdd/icdd.hpp"
#include "icdd/mesh.hpp"

namespace icdd {

/// Pointwise field; nullopt where undefined (outside the mesh or inside an obstacle).
using PointField = std::function<std::optional<FlowSample>(double, double)>;

inline PointField point_field(const NodalField& f) {
  return [&f](double x, double y) { return f.evaluate(x, y); };
}

inline PointField point_field(const CompositeSolution& c) {
  return [&c](double x, double y) { return c.evaluate(x, y); };
}

inline PointField zero_field() {
  return [](double, double) { return std::optional<FlowSample>(FlowSample{}); };
}

enum class RegionKind { fluid_star, porous_minus, porous_star, custom };

inline const char* to_string(RegionKind k) {
  switch (k) {
    case RegionKind::fluid_star: return "fluid*";
    case RegionKind::porous_minus: return "porous-";
    case RegionKind::porous_star: return "porous*";
    case RegionKind::custom: return "custom";
  }
  return "?";
}

/// Horizontal band y_lo <= y <= y_hi over the full width.
struct RegionSpec {
  RegionKind kind = RegionKind::custom;
  double y_lo = 0.0;
  double y_hi = 0.0;

  /// -delta <= y < y_hi: free fluid plus the overlap, below the lid corners.
  static RegionSpec fluid_star(double delta, double y_hi = 0.5) {
    return {RegionKind::fluid_star, -delta, y_hi};
  }
  /// -d <= y <= -delta: porous part below Gamma_f.
  static RegionSpec porous_minus(double depth, double delta) {
    return {RegionKind::porous_minus, -depth, -delta};
  }
  /// -d <= y <= -l: porous part away from the boundary layer.
  static RegionSpec porous_star(double depth, double cell_size) {
    return {RegionKind::porous_star, -depth, -cell_size};
  }
};

enum class Quantity { velocity, pressure };

/// Treatment of points where a field is undefined.
enum class Undefined {
  zero,  ///< trivial extension: the missing value is 0
  skip,  ///< leave the point out of the integral
};

/**
 * L2 norm of a - b over the band, by Gauss quadrature on the cells of `grid` clipped to
 * the band. Velocity differences use the Euclidean norm.
 */
inline double l2_error(const PointField& a, const PointField& b, const StructuredMesh& grid,
                       const RegionSpec& region, Quantity q, Undefined policy = Undefined::zero,
                       int points = 3) {
  if (!(region.y_hi > region.y_lo)) throw InputError("empty region");
  const auto& xs = grid.xs();
  const auto& ys = grid.ys();
  if (region.y_lo < ys.front() - 1e-12 || region.y_hi > ys.back() + 1e-12) {
    throw InputError("region lies outside the field domain");
  }
  const auto rule = QuadratureRule::gauss(points);
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
    const double y0 = std::max(ys[j], region.y_lo), y1 = std::min(ys[j + 1], region.y_hi);
    if (!(y1 > y0)) continue;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double x0 = xs[i], x1 = xs[i + 1];
      for (std::size_t qy = 0; qy < rule.points.size(); ++qy) {
        const double y = y0 + rule.points[qy] * (y1 - y0);
        for (std::size_t qx = 0; qx < rule.points.size(); ++qx) {
          const double x = x0 + rule.points[qx] * (x1 - x0);
          auto va = a(x, y);
          auto vb = b(x, y);
          if ((!va || !vb) && policy == Undefined::skip) continue;
          const FlowSample sa = va.value_or(FlowSample{}), sb = vb.value_or(FlowSample{});
          const double d2 = q == Quantity::velocity ? (sa.u - sb.u).squaredNorm()
                                                    : (sa.p - sb.p) * (sa.p - sb.p);
          sum += rule.weights[qx] * rule.weights[qy] * (x1 - x0) * (y1 - y0) * d2;
        }
      }
    }
  }
  return std::sqrt(sum);
}

/// Porous velocity with the cell fluctuations: u~(x) = W(x / l) K-hat^-1 u(x), or the literal
/// W(x / l) u(x) when `normalized` is false. Pressure is passed through.
inline PointField reconstruct_porous_velocity(PointField darcy, const CellSolution& cell, double cell_size,
                                              Vec2 origin, bool normalized = true) {
  if (!(cell_size > 0.0)) throw InputError("cell size must be positive");
  const Eigen::Matrix2d scale = normalized ? Eigen::Matrix2d(cell.k_hat.inverse()) : Eigen::Matrix2d::Identity();
  return [darcy = std::move(darcy), &cell, cell_size, origin, scale](double x, double y)
             -> std::optional<FlowSample> {
    auto v = darcy(x, y);
    if (!v) return std::nullopt;
    const Eigen::Matrix2d w = cell.tensor((x - origin[0]) / cell_size, (y - origin[1]) / cell_size);
    v->u = w * (scale * v->u);
    return v;
  };
}

/// Check that a porous band is tiled by whole cells.
inline void check_tiling(const RectDomain& porous, double cell_size) {
  const auto whole = [cell_size](double len) {
    const double r = len / cell_size;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
  };
  if (!whole(porous.width()) || !whole(porous.height())) {
    throw InputError("porous region is not tileable by cells of size " + std::to_string(cell_size));
  }
}

struct TraceError {
  double eu1 = 0.0;
  double eu2 = 0.0;
  double ep = 0.0;
};

/// One-dimensional L2 errors along y = ybar, by Gauss quadrature between breakpoints.
inline TraceError trace_error(const PointField& a, const PointField& b, double ybar,
                              const std::vector<double>& breakpoints, int points = 4) {
  if (breakpoints.size() < 2) throw InputError("trace needs at least two breakpoints");
  const auto rule = QuadratureRule::gauss(points);
  double s1 = 0.0, s2 = 0.0, sp = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double x0 = breakpoints[i], x1 = breakpoints[i + 1];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double x = x0 + rule.points[q] * (x1 - x0);
      const double w = rule.weights[q] * (x1 - x0);
      const FlowSample sa = a(x, ybar).value_or(FlowSample{});
      const FlowSample sb = b(x, ybar).value_or(FlowSample{});
      s1 += w * (sa.u[0] - sb.u[0]) * (sa.u[0] - sb.u[0]);
      s2 += w * (sa.u[1] - sb.u[1]) * (sa.u[1] - sb.u[1]);
      sp += w * (sa.p - sb.p) * (sa.p - sb.p);
    }
  }
  return {std::sqrt(s1), std::sqrt(s2), std::sqrt(sp)};
}

/// Trace error between two nodal fields; ybar must be a grid line of both meshes.
inline TraceError trace_error(const NodalField& a, const NodalField& b, double ybar) {
  for (const NodalField* f : {&a, &b}) {
    const auto& m = f->space->mesh();
    if (m.find_row(ybar, 1e-9 * (m.ys().back() - m.ys().front())) < 0) {
      throw InputError("trace coordinate is not a grid line of both fields");
    }
  }
  std::vector<double> bp = a.space->mesh().xs();
  bp.insert(bp.end(), b.space->mesh().xs().begin(), b.space->mesh().xs().end());
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return trace_error(point_field(a), point_field(b), ybar, bp);
}

/// Least-squares slope of log(err) against log(h).
inline double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw InputError("slope needs at least two matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0)) throw InputError("slope needs positive samples");
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) throw InputError("slope needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

struct ErrorReport {
  std::string preset;
  std::string configuration;
  double cell_size = 0.0;
  double delta = 0.0;
  double eu_fluid = 0.0;
  double ep_fluid = 0.0;
  double eu_porous_minus = 0.0;
  double ep_porous_minus = 0.0;
  double eu_porous_star = 0.0;
  double ep_porous_star = 0.0;
  int krylov_iterations = 0;
};

/// Solver settings shared by validation runs.
struct ValidationConfig {
  DnsConfig dns;
  /// Macroscale mesh size h = l / icdd_cells_per_length.
  int icdd_cells_per_length = 10;
  FemConfig fem;
  KrylovConfig krylov;
  /// Cell-problem resolution; 0 uses the DNS resolution so both describe the same discrete medium.
  int cell_resolution = 0;
  int quadrature_points = 3;
};

/// Everything computed for one (preset, obstacle, l) run.
struct ValidationRun {
  DnsSolution dns;
  CellSolution cell;
  IcddSolution icdd;
  double permeability = 0.0;
  ErrorReport errors;
};

inline CellSolution cell_for(double obstacle_side, const ValidationConfig& cfg) {
  CellProblemConfig cc;
  cc.fem = cfg.dns.fem;
  cc.n_per_cell = cfg.cell_resolution > 0 ? cfg.cell_resolution : cfg.dns.n_per_cell;
  return solve_cell_problem({ObstacleShape::square, obstacle_side}, cc);
}

/// Coupled solve for a preset with explicit permeability and interface depth.
inline IcddSolution run_icdd(const TestCasePreset& preset, double permeability, double delta, double h,
                             const FemConfig& fem, const KrylovConfig& krylov) {
  const IcddProblem problem(build_icdd_grid(preset.domain, h, delta), delta,
                            icdd_physics(preset, permeability), fem);
  return icdd_solve(problem, krylov);
}

/// Region errors of a coupled solution against a DNS reference.
inline ErrorReport compute_errors(const TestCasePreset& preset, const DnsSolution& dns, const CellSolution& cell,
                                  const CompositeSolution& model, double delta, int points = 3) {
  const double ell = dns.cell_size;
  const RectDomain porous = preset.porous_region();
  check_tiling(porous, ell);
  const StructuredMesh& grid = dns.field.space->mesh();
  const PointField ref = point_field(dns.field);
  const PointField coupled = point_field(model);
  const PointField porous_model =
      reconstruct_porous_velocity(point_field(model.darcy), cell, ell, {porous.x_min, porous.y_min});
  const double depth = -porous.y_min;
  const auto fluid = RegionSpec::fluid_star(delta, std::min(0.5, preset.domain.y_max));
  const auto minus = RegionSpec::porous_minus(depth, delta);
  const auto star = RegionSpec::porous_star(depth, ell);
  ErrorReport r;
  r.preset = preset.name;
  r.cell_size = ell;
  r.delta = delta;
  r.eu_fluid = l2_error(ref, coupled, grid, fluid, Quantity::velocity, Undefined::zero, points);
  r.ep_fluid = l2_error(ref, coupled, grid, fluid, Quantity::pressure, Undefined::skip, points);
  r.eu_porous_minus = l2_error(ref, porous_model, grid, minus, Quantity::velocity, Undefined::zero, points);
  r.ep_porous_minus = l2_error(ref, porous_model, grid, minus, Quantity::pressure, Undefined::skip, points);
  r.eu_porous_star = l2_error(ref, porous_model, grid, star, Quantity::velocity, Undefined::zero, points);
  r.ep_porous_star = l2_error(ref, porous_model, grid, star, Quantity::pressure, Undefined::skip, points);
  return r;
}

/// DNS, cell problem, coupled solve and errors for one cell size.
inline ValidationRun validation_run(const TestCasePreset& preset, double obstacle_side, double cell_size,
                                    const ValidationConfig& cfg, std::optional<double> delta = {}) {
  ValidationRun run;
  run.dns = solve_dns(preset, cell_size, obstacle_side, cfg.dns);
  run.cell = cell_for(obstacle_side, cfg);
  run.permeability = permeability_dimensional(run.cell.k_hat(0, 0), cell_size);
  const double d = delta.value_or(delta_star(run.cell.porosity, cell_size));
  run.icdd = run_icdd(preset, run.permeability, d, cell_size / cfg.icdd_cells_per_length, cfg.fem, cfg.krylov);
  run.errors = compute_errors(preset, run.dns, run.cell, run.icdd.composite, d, cfg.quadrature_points);
  run.errors.krylov_iterations = run.icdd.krylov.iterations;
  return run;
}

struct ConvergenceStudy {
  std::vector<ErrorReport> rows;
  double slope_u_fluid = 0.0;
  double slope_p_fluid = 0.0;
  double slope_u_porous_minus = 0.0;
  double slope_p_porous_minus = 0.0;
  double slope_u_porous_star = 0.0;
  double slope_p_porous_star = 0.0;
};

inline ConvergenceStudy slopes_of(std::vector<ErrorReport> rows) {
  ConvergenceStudy s;
  s.rows = std::move(rows);
  std::vector<double> h;
  for (const auto& r : s.rows) h.push_back(r.cell_size);
  const auto col = [&](double ErrorReport::*m) {
    std::vector<double> v;
    for (const auto& r : s.rows) v.push_back(r.*m);
    return loglog_slope(h, v);
  };
  s.slope_u_fluid = col(&ErrorReport::eu_fluid);
  s.slope_p_fluid = col(&ErrorReport::ep_fluid);
  s.slope_u_porous_minus = col(&ErrorReport::eu_porous_minus);
  s.slope_p_porous_minus = col(&ErrorReport::ep_porous_minus);
  s.slope_u_porous_star = col(&ErrorReport::eu_porous_star);
  s.slope_p_porous_star = col(&ErrorReport::ep_porous_star);
  return s;
}

/// Error table and least-squares slopes over several cell sizes.
inline ConvergenceStudy convergence_study(const TestCasePreset& preset, const std::string& configuration,
                                          double obstacle_side, const std::vector<double>& cell_sizes,
                                          const ValidationConfig& cfg = {}) {
  if (cell_sizes.size() < 2) throw InputError("convergence study needs at least two cell sizes");
  std::vector<ErrorReport> rows;
  for (double ell : cell_sizes) {
    auto r = validation_run(preset, obstacle_side, ell, cfg).errors;
    r.configuration = configuration;
    rows.push_back(r);
  }
  return slopes_of(std::move(rows));
}

struct SweepRow {
  double delta = 0.0;
  double error = 0.0;
  int krylov_iterations = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::size_t best = 0;  ///< index of the smallest error
};

/**
 * Velocity error on the restricted fluid domain {-delta* <= y < 0.5} for each interface depth,
 * against one DNS reference. The region is fixed at the reference depth so that the
 * errors are comparable.
 */
inline SweepResult delta_sweep(const TestCasePreset& preset, const DnsSolution& dns, double permeability,
                               double reference_delta, const std::vector<double>& deltas,
                               const ValidationConfig& cfg = {}) {
  if (deltas.empty()) throw InputError("delta sweep needs at least one value");
  const double h = dns.cell_size / cfg.icdd_cells_per_length;
  const auto region = RegionSpec::fluid_star(reference_delta, std::min(0.5, preset.domain.y_max));
  SweepResult out;
  for (double d : deltas) {
    const auto sol = run_icdd(preset, permeability, d, h, cfg.fem, cfg.krylov);
    const double e = l2_error(point_field(dns.field), point_field(sol.composite), dns.field.space->mesh(),
                              region, Quantity::velocity, Undefined::zero, cfg.quadrature_points);
    if (!std::isfinite(e)) throw Error("non-finite sweep error");
    out.rows.push_back({d, e, sol.krylov.iterations});
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (out.rows[i].error < out.rows[out.best].error) out.best = i;
  }
  return out;
}

}  // namespace icdd

/**
 * @file dns.hpp
 * @brief Test-case presets and the pore-resolving Stokes solve on the perforated domain.
 */
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "icdd/discretization.hpp"
#include "icdd/errors.hpp"
#include "icdd/fem.hpp"
#include "icdd/icdd.hpp"
#include "icdd/mesh.hpp"
#include "icdd/sparse.hpp"

namespace icdd {

enum class PresetId { cavity = 1, normal_filtration = 2, oblique_filtration = 3 };

/// Flow data on the full domain. The porous medium fills y < 0.
struct TestCasePreset {
  PresetId id = PresetId::cavity;
  std::string name;
  RectDomain domain;
  VectorFunction forcing;
  BoundarySpec boundary;
  bool zero_mean_pressure = false;
  double viscosity = 1e-3;
  double density = 1e3;

  RectDomain porous_region() const { return {domain.x_min, domain.x_max, domain.y_min, 0.0}; }
};

/// Presets #1 (lid-driven cavity), #2 (normal filtration), #3 (oblique filtration).
inline TestCasePreset make_preset(int id) {
  TestCasePreset p;
  const auto stress = [](double, double) { return Vec2(0.0, -1e-7); };
  switch (id) {
    case 1:
      p.id = PresetId::cavity;
      p.name = "cavity";
      p.domain = {-0.5, 0.5, -0.5, 1.0};
      p.boundary.set(BoundaryTag::left, BoundaryCondition::no_slip())
          .set(BoundaryTag::right, BoundaryCondition::no_slip())
          .set(BoundaryTag::bottom, BoundaryCondition::no_slip())
          .set(BoundaryTag::top, BoundaryCondition::velocity([](double x, double) {
            return Vec2((1.0 - 4.0 * x * x) * 1e-6, 0.0);
          }));
      p.zero_mean_pressure = true;
      break;
    case 2:
      p.id = PresetId::normal_filtration;
      p.name = "normal-filtration";
      p.domain = {-0.25, 0.25, -0.5, 1.0};
      p.boundary.set(BoundaryTag::left, BoundaryCondition::no_slip())
          .set(BoundaryTag::right, BoundaryCondition::no_slip())
          .set(BoundaryTag::top, BoundaryCondition::stress_free())
          .set(BoundaryTag::bottom, BoundaryCondition::traction(stress));
      break;
    case 3:
      p.id = PresetId::oblique_filtration;
      p.name = "oblique-filtration";
      p.domain = {-0.5, 0.5, -0.5, 0.5};
      p.forcing = [](double, double) { return Vec2(1e-8, -1e-7); };
      p.boundary.set(BoundaryTag::left, BoundaryCondition::no_slip())
          .set(BoundaryTag::right, BoundaryCondition::no_slip())
          .set(BoundaryTag::top, BoundaryCondition::stress_free())
          .set(BoundaryTag::bottom, BoundaryCondition::traction(stress));
      break;
    default: throw InputError("unknown test case preset " + std::to_string(id) + " (expected 1, 2 or 3)");
  }
  return p;
}

/// Outward unit normal of an outer boundary tag.
inline Vec2 outward_normal(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::left: return {-1.0, 0.0};
    case BoundaryTag::right: return {1.0, 0.0};
    case BoundaryTag::bottom: return {0.0, -1.0};
    case BoundaryTag::top: return {0.0, 1.0};
    case BoundaryTag::obstacle: break;
  }
  throw InputError("obstacle boundaries have no fixed normal");
}

/**
 * Coupled-model data for a preset: Stokes keeps the preset conditions, Darcy turns walls
 * into impermeable sides and a normal stress t into the pressure p = -t.n.
 */
inline IcddPhysics icdd_physics(const TestCasePreset& preset, double permeability) {
  IcddPhysics ph;
  ph.viscosity = preset.viscosity;
  ph.permeability = permeability;
  ph.forcing = preset.forcing;
  ph.stokes_boundary = preset.boundary;
  ph.stokes_zero_mean_pressure = preset.zero_mean_pressure;
  for (auto tag : {BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom}) {
    const auto* bc = preset.boundary.find(tag);
    if (!bc) continue;
    switch (bc->kind) {
      case BoundaryKind::velocity:
      case BoundaryKind::impermeable:
        ph.darcy_boundary.set(tag, BoundaryCondition::impermeable());
        break;
      case BoundaryKind::traction: {
        const Vec2 n = outward_normal(tag);
        const VectorFunction t = bc->vector_value;
        ph.darcy_boundary.set(tag, BoundaryCondition::pressure([t, n](double x, double y) {
          return t ? -t(x, y).dot(n) : 0.0;
        }));
        break;
      }
      case BoundaryKind::pressure: ph.darcy_boundary.set(tag, *bc); break;
    }
  }
  return ph;
}

struct DnsConfig {
  int n_per_cell = 10;
  FemConfig fem;
};

struct DnsSolution {
  NodalField field;
  double cell_size = 0.0;
  double obstacle_side = 0.0;
  PresetId preset = PresetId::cavity;
};

/// Square-obstacle lattice filling the porous region of a preset.
inline ObstacleLattice preset_lattice(const TestCasePreset& preset, double cell_size, double obstacle_side) {
  ObstacleLattice lat{cell_size, obstacle_side, preset.porous_region()};
  lat.validate();
  return lat;
}

/// Stokes flow on the perforated domain with no slip on every obstacle.
inline DnsSolution solve_dns(const TestCasePreset& preset, double cell_size, double obstacle_side,
                             const DnsConfig& cfg = {}) {
  cfg.fem.validate();
  const auto lattice = preset_lattice(preset, cell_size, obstacle_side);
  const auto space = make_space(build_perforated_mesh(preset.domain, lattice, cfg.n_per_cell), cfg.fem.order);
  StokesProblem prob;
  prob.viscosity = preset.viscosity;
  prob.forcing = preset.forcing;
  prob.boundary = preset.boundary;
  prob.boundary.set(BoundaryTag::obstacle, BoundaryCondition::no_slip());
  prob.zero_mean_pressure = preset.zero_mean_pressure;
  DnsSolution out;
  out.field = solve_system(assemble_stokes(space, prob, cfg.fem));
  out.cell_size = cell_size;
  out.obstacle_side = obstacle_side;
  out.preset = preset.id;
  return out;
}

/// DNS fields copied onto a hole-free mesh over the same grid, zero inside obstacles.
inline NodalField trivial_extension(const NodalField& dns, FeSpacePtr full) {
  const FeSpace& a = *dns.space;
  const FeSpace& b = *full;
  if (a.order() != b.order() || a.mesh().xs() != b.mesh().xs() || a.mesh().ys() != b.mesh().ys()) {
    throw InputError("node mismatch between the perforated and the full mesh");
  }
  NodalField out(full);
  for (int n = 0; n < b.num_nodes(); ++n) {
    const auto [I, J] = b.node_ij(n);
    const int m = a.node_index(I, J);
    if (m < 0) continue;
    out.u1[n] = dns.u1[m];
    out.u2[n] = dns.u2[m];
    out.p[n] = dns.p[m];
  }
  return out;
}

/// Hole-free space over the grid of a field.
inline FeSpacePtr full_space_of(const NodalField& f) {
  return make_space(build_tensor_mesh(f.space->mesh().xs(), f.space->mesh().ys()), f.space->order());
}

/// Mean speed (1/W) * integral of |u(x, y)| dx along a horizontal line, zero in obstacles.
inline double mean_speed_along(const NodalField& f, double y) {
  const auto& xs = f.space->mesh().xs();
  const auto rule = QuadratureRule::gauss(4);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double len = xs[i + 1] - xs[i];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto v = f.evaluate(xs[i] + rule.points[q] * len, y);
      if (v) s += rule.weights[q] * len * v->u.norm();
    }
  }
  return s / (xs.back() - xs.front());
}

/// Samples (x, u1, u2, p) along y at the lattice x-coordinates of the field.
struct TracePoint {
  double x = 0.0;
  FlowSample value;
  bool defined = false;
};

inline std::vector<TracePoint> line_trace(const NodalField& f, double y) {
  std::vector<TracePoint> out;
  for (int I = 0; I < f.space->lattice_nx(); ++I) {
    const double x = f.space->lattice_x(I);
    const auto v = f.evaluate(x, y);
    out.push_back({x, v.value_or(FlowSample{}), v.has_value()});
  }
  return out;
}

}  // namespace icdd

/**
 * @file discretization.hpp
 * @brief Stabilized equal-order finite elements for Stokes and Darcy flow.
 *
 * Unknowns are nodal velocities and pressures on one FeSpace. Every degree of freedom is
 * classified as free, fixed (strong Dirichlet data) or interface (Dirichlet data supplied
 * later as a vector g). The assembled system keeps only free rows:
 *
 *     K x = rhs - K_gamma g,        K = [A  Bt]
 *                                       [B  C ]
 *
 * Free unknowns are ordered velocities (node-major) then pressures, then an optional
 * Lagrange multiplier fixing the mean pressure.
 */
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icdd/errors.hpp"
#include "icdd/fem.hpp"
#include "icdd/mesh.hpp"
#include "icdd/sparse.hpp"

namespace icdd {

using ScalarFunction = std::function<double(double, double)>;
using VectorFunction = std::function<Vec2(double, double)>;

enum class BoundaryKind {
  velocity,     ///< prescribed velocity vector
  traction,     ///< prescribed normal stress (natural)
  impermeable,  ///< zero normal velocity
  pressure,     ///< prescribed pressure (Darcy only)
};

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::velocity;
  VectorFunction vector_value;
  ScalarFunction scalar_value;

  static BoundaryCondition no_slip() { return {BoundaryKind::velocity, {}, {}}; }
  static BoundaryCondition velocity(VectorFunction f) { return {BoundaryKind::velocity, std::move(f), {}}; }
  static BoundaryCondition traction(VectorFunction f) { return {BoundaryKind::traction, std::move(f), {}}; }
  static BoundaryCondition stress_free() { return {BoundaryKind::traction, {}, {}}; }
  static BoundaryCondition impermeable() { return {BoundaryKind::impermeable, {}, {}}; }
  static BoundaryCondition pressure(ScalarFunction f) { return {BoundaryKind::pressure, {}, std::move(f)}; }
};

struct BoundarySpec {
  std::map<BoundaryTag, BoundaryCondition> conditions;

  BoundarySpec& set(BoundaryTag tag, BoundaryCondition bc) {
    conditions[tag] = std::move(bc);
    return *this;
  }
  const BoundaryCondition* find(BoundaryTag tag) const {
    const auto it = conditions.find(tag);
    return it == conditions.end() ? nullptr : &it->second;
  }
};

struct FemConfig {
  int order = 1;
  int pressure_order = 1;
  /// Dimensionless stabilization constant gamma in tau = gamma h^2 / mu.
  double stabilization = 0.1;

  void validate() const {
    if (order != 1 && order != 2) throw InputError("element order must be 1 or 2");
    if (pressure_order != order) {
      throw InputError("pressure order must equal velocity order (equal-order elements)");
    }
    if (!(stabilization > 0.0)) throw InputError("stabilization constant must be positive");
  }
};

struct StokesProblem {
  double viscosity = 1.0;
  VectorFunction forcing;  ///< empty means zero
  BoundarySpec boundary;
  bool zero_mean_pressure = false;
};

struct DarcyProblem {
  double viscosity = 1.0;
  double permeability = 1.0;
  VectorFunction forcing;
  BoundarySpec boundary;
};

enum class DofKind : std::uint8_t { free, fixed, interface };

/// Assembled system on the free unknowns of one subdomain.
struct SaddleSystem {
  FeSpacePtr space;
  int n_velocity = 0;
  int n_pressure = 0;
  int n_multiplier = 0;

  /// Per full dof (velocity 2n+c, pressure 2N+n).
  std::vector<DofKind> kind;
  std::vector<int> index;
  std::vector<double> fixed_value;
  /// Periodic images: node -> node carrying its unknowns.
  std::vector<int> master;

  std::vector<int> free_dofs;       ///< full ids, in free order (multiplier excluded)
  std::vector<int> interface_dofs;  ///< full ids, in interface order
  std::vector<int> interface_nodes;

  SparseMatrix K;
  SparseMatrix K_gamma;
  Vector rhs;

  int size() const { return n_velocity + n_pressure + n_multiplier; }
  int interface_size() const { return static_cast<int>(interface_dofs.size()); }
  int num_nodes() const { return space->num_nodes(); }
  int velocity_dof(int node, int c) const { return 2 * node + c; }
  int pressure_dof(int node) const { return 2 * num_nodes() + node; }

  SparseMatrix A() const { return K.block(0, n_velocity, 0, n_velocity); }
  SparseMatrix Bt() const { return K.block(0, n_velocity, n_velocity, size()); }
  SparseMatrix B() const { return K.block(n_velocity, size(), 0, n_velocity); }
  SparseMatrix C() const { return K.block(n_velocity, size(), n_velocity, size()); }

  /// Right-hand side for interface data g.
  Vector load(const Vector& g) const {
    check_interface(g);
    Vector b = rhs;
    if (g.size() > 0) K_gamma.multiply_add(g, b, -1.0);
    return b;
  }

  /// Value of full dof d given free solution x and interface data g.
  double dof_value(int d, const Vector& x, const Vector& g) const {
    const int nn = num_nodes();
    const int node = d < 2 * nn ? d / 2 : d - 2 * nn;
    const int m = master.empty() ? node : master[static_cast<std::size_t>(node)];
    const int dm = d < 2 * nn ? 2 * m + d % 2 : 2 * nn + m;
    switch (kind[static_cast<std::size_t>(dm)]) {
      case DofKind::free: return x[index[static_cast<std::size_t>(dm)]];
      case DofKind::interface: return g[index[static_cast<std::size_t>(dm)]];
      case DofKind::fixed: return fixed_value[static_cast<std::size_t>(dm)];
    }
    return 0.0;
  }

  NodalField expand(const Vector& x, const Vector& g) const {
    if (x.size() != size()) throw InputError("solution vector has the wrong size");
    check_interface(g);
    NodalField f(space);
    const int nn = num_nodes();
    for (int n = 0; n < nn; ++n) {
      f.u1[n] = dof_value(2 * n, x, g);
      f.u2[n] = dof_value(2 * n + 1, x, g);
      f.p[n] = dof_value(2 * nn + n, x, g);
    }
    return f;
  }

  /// Lagrange multiplier value (zero when absent).
  double multiplier(const Vector& x) const { return n_multiplier ? x[size() - 1] : 0.0; }

 private:
  void check_interface(const Vector& g) const {
    if (g.size() != interface_size()) {
      throw InputError("interface vector has length " + std::to_string(g.size()) + ", expected " +
                       std::to_string(interface_size()));
    }
  }
};

namespace detail {

/// Basis values and physical derivatives at the quadrature points of an hx-by-hy element.
struct ElementTables {
  int nloc = 0;
  int nq = 0;
  double hx = 0.0;
  double hy = 0.0;
  std::vector<double> xi, eta, w;     // per quadrature point
  std::vector<double> phi, dx, dy, lap;  // [q * nloc + a]

  ElementTables(const FeSpace& space, double hx_, double hy_) : hx(hx_), hy(hy_) {
    const int k = space.order();
    const int n1 = k + 1;
    nloc = n1 * n1;
    const auto rule = QuadratureRule::gauss(k + 1);
    const int m = static_cast<int>(rule.points.size());
    nq = m * m;
    std::array<double, 3> v1{}, d1{}, s1{}, v2{}, d2{}, s2{};
    for (int qy = 0; qy < m; ++qy) {
      for (int qx = 0; qx < m; ++qx) {
        const double tx = rule.points[qx], ty = rule.points[qy];
        xi.push_back(tx);
        eta.push_back(ty);
        w.push_back(rule.weights[qx] * rule.weights[qy] * hx * hy);
        space.basis().eval(tx, v1.data(), d1.data(), s1.data());
        space.basis().eval(ty, v2.data(), d2.data(), s2.data());
        for (int b = 0; b < n1; ++b) {
          for (int a = 0; a < n1; ++a) {
            phi.push_back(v1[a] * v2[b]);
            dx.push_back(d1[a] * v2[b] / hx);
            dy.push_back(v1[a] * d2[b] / hy);
            lap.push_back(s1[a] * v2[b] / (hx * hx) + v1[a] * s2[b] / (hy * hy));
          }
        }
      }
    }
  }

  double P(int q, int a) const { return phi[static_cast<std::size_t>(q * nloc + a)]; }
  double Dx(int q, int a) const { return dx[static_cast<std::size_t>(q * nloc + a)]; }
  double Dy(int q, int a) const { return dy[static_cast<std::size_t>(q * nloc + a)]; }
  double D(int q, int a, int c) const { return c == 0 ? Dx(q, a) : Dy(q, a); }
  double Lap(int q, int a) const { return lap[static_cast<std::size_t>(q * nloc + a)]; }
};

/// Element operator: local dofs ordered velocity (2a+c) then pressure (2 nloc + a).
struct ElementOperator {
  Eigen::MatrixXd K;
  Eigen::VectorXd mean;  ///< integral of each pressure basis function
};

inline ElementOperator stokes_element(const ElementTables& t, double mu, double tau, int order) {
  const int n = t.nloc;
  ElementOperator op{Eigen::MatrixXd::Zero(3 * n, 3 * n), Eigen::VectorXd::Zero(n)};
  for (int q = 0; q < t.nq; ++q) {
    const double w = t.w[static_cast<std::size_t>(q)];
    for (int a = 0; a < n; ++a) {
      op.mean[a] += w * t.P(q, a);
      for (int b = 0; b < n; ++b) {
        const double grad = t.Dx(q, a) * t.Dx(q, b) + t.Dy(q, a) * t.Dy(q, b);
        for (int c = 0; c < 2; ++c) {
          op.K(2 * a + c, 2 * b + c) += mu * w * grad;
          op.K(2 * a + c, 2 * n + b) -= w * t.P(q, b) * t.D(q, a, c);
          double cont = -w * t.P(q, a) * t.D(q, b, c);
          if (order >= 2) cont += tau * mu * w * t.Lap(q, b) * t.D(q, a, c);
          op.K(2 * n + a, 2 * b + c) += cont;
        }
        op.K(2 * n + a, 2 * n + b) -= tau * w * grad;
      }
    }
  }
  return op;
}

inline ElementOperator darcy_element(const ElementTables& t, double mu, double perm) {
  const int n = t.nloc;
  const double r = mu / perm;
  ElementOperator op{Eigen::MatrixXd::Zero(3 * n, 3 * n), Eigen::VectorXd::Zero(n)};
  for (int q = 0; q < t.nq; ++q) {
    const double w = t.w[static_cast<std::size_t>(q)];
    for (int a = 0; a < n; ++a) {
      op.mean[a] += w * t.P(q, a);
      for (int b = 0; b < n; ++b) {
        const double mass = w * t.P(q, a) * t.P(q, b);
        for (int c = 0; c < 2; ++c) {
          op.K(2 * a + c, 2 * b + c) += r * mass;
          op.K(2 * a + c, 2 * n + b) += w * t.D(q, b, c) * t.P(q, a);
          op.K(2 * n + a, 2 * b + c) += w * t.P(q, b) * t.D(q, a, c);
        }
        op.K(2 * n + a, 2 * n + b) -=
            w * (t.Dx(q, a) * t.Dx(q, b) + t.Dy(q, a) * t.Dy(q, b)) / r;
      }
    }
  }
  return op;
}

/// Consistent element load for a body force; `stab` multiplies the (f, grad q) term.
inline Eigen::VectorXd element_load(const ElementTables& t, const VectorFunction& f, double x0,
                                    double y0, double stab) {
  const int n = t.nloc;
  Eigen::VectorXd fe = Eigen::VectorXd::Zero(3 * n);
  for (int q = 0; q < t.nq; ++q) {
    const Vec2 fv = f(x0 + t.xi[static_cast<std::size_t>(q)] * t.hx,
                      y0 + t.eta[static_cast<std::size_t>(q)] * t.hy);
    const double w = t.w[static_cast<std::size_t>(q)];
    for (int a = 0; a < n; ++a) {
      fe[2 * a] += w * fv[0] * t.P(q, a);
      fe[2 * a + 1] += w * fv[1] * t.P(q, a);
      fe[2 * n + a] -= stab * w * (fv[0] * t.Dx(q, a) + fv[1] * t.Dy(q, a));
    }
  }
  return fe;
}

/// Degree-of-freedom classification before assembly.
struct DofPlan {
  std::vector<DofKind> kind;
  std::vector<double> fixed_value;
  std::vector<int> interface_dofs;
  std::vector<int> interface_nodes;
  std::vector<int> master;
  bool multiplier = false;
};

inline SaddleSystem assemble(FeSpacePtr space, DofPlan plan,
                             const std::function<ElementOperator(const ElementTables&)>& element,
                             const VectorFunction& forcing,
                             const std::function<double(const ElementTables&)>& load_stab,
                             const BoundarySpec* boundary) {
  SaddleSystem sys;
  sys.space = space;
  const FeSpace& sp = *space;
  const int nn = sp.num_nodes();
  const int nfull = 3 * nn;
  sys.kind = std::move(plan.kind);
  sys.fixed_value = std::move(plan.fixed_value);
  sys.master = std::move(plan.master);
  sys.interface_dofs = std::move(plan.interface_dofs);
  sys.interface_nodes = std::move(plan.interface_nodes);
  sys.index.assign(static_cast<std::size_t>(nfull), -1);

  const auto is_image = [&](int d) {
    if (sys.master.empty()) return false;
    const int node = d < 2 * nn ? d / 2 : d - 2 * nn;
    return sys.master[static_cast<std::size_t>(node)] != node;
  };
  for (int d = 0; d < nfull; ++d) {
    if (sys.kind[static_cast<std::size_t>(d)] != DofKind::free || is_image(d)) continue;
    sys.index[static_cast<std::size_t>(d)] = static_cast<int>(sys.free_dofs.size());
    sys.free_dofs.push_back(d);
    (d < 2 * nn ? sys.n_velocity : sys.n_pressure)++;
  }
  for (std::size_t i = 0; i < sys.interface_dofs.size(); ++i) {
    const int d = sys.interface_dofs[i];
    if (sys.kind[static_cast<std::size_t>(d)] != DofKind::interface) {
      throw Error("interface dof table is inconsistent");
    }
    sys.index[static_cast<std::size_t>(d)] = static_cast<int>(i);
  }
  sys.n_multiplier = plan.multiplier ? 1 : 0;
  const int nfree = sys.size();
  const int mult = nfree - 1;
  const int nint = sys.interface_size();

  const int nloc = sp.nodes_per_element();
  const auto& elems = sp.mesh().elements();
  const auto& xs = sp.mesh().xs();
  const auto& ys = sp.mesh().ys();

  // Local dof -> full dof of the carrying (master) node.
  std::vector<int> loc(static_cast<std::size_t>(3 * nloc));
  const auto gather = [&](int e) {
    const int* nodes = sp.element_nodes(e);
    for (int a = 0; a < nloc; ++a) {
      const int m = sys.master.empty() ? nodes[a] : sys.master[static_cast<std::size_t>(nodes[a])];
      loc[static_cast<std::size_t>(2 * a)] = 2 * m;
      loc[static_cast<std::size_t>(2 * a + 1)] = 2 * m + 1;
      loc[static_cast<std::size_t>(2 * nloc + a)] = 2 * nn + m;
    }
  };

  CsrBuilder kb(nfree, nfree), gb(nfree, nint);
  for (int e = 0; e < static_cast<int>(elems.size()); ++e) {
    gather(e);
    for (int r : loc) {
      if (sys.kind[static_cast<std::size_t>(r)] != DofKind::free) continue;
      const int ri = sys.index[static_cast<std::size_t>(r)];
      for (int c : loc) {
        const auto kc = sys.kind[static_cast<std::size_t>(c)];
        if (kc == DofKind::free) kb.reserve_entry(ri, sys.index[static_cast<std::size_t>(c)]);
        if (kc == DofKind::interface) gb.reserve_entry(ri, sys.index[static_cast<std::size_t>(c)]);
      }
      if (plan.multiplier && r >= 2 * nn) {
        kb.reserve_entry(ri, mult);
        kb.reserve_entry(mult, ri);
      }
    }
  }
  if (plan.multiplier) kb.reserve_entry(mult, mult);
  kb.freeze();
  gb.freeze();
  sys.rhs = Vector::Zero(nfree);

  std::map<std::pair<double, double>, std::pair<ElementTables, ElementOperator>> cache;
  for (int e = 0; e < static_cast<int>(elems.size()); ++e) {
    const auto [i, j] = elems[static_cast<std::size_t>(e)];
    const double hx = xs[i + 1] - xs[i], hy = ys[j + 1] - ys[j];
    auto it = cache.find({hx, hy});
    if (it == cache.end()) {
      ElementTables t(sp, hx, hy);
      ElementOperator op = element(t);
      it = cache.emplace(std::pair{hx, hy}, std::pair{std::move(t), std::move(op)}).first;
    }
    const auto& [tab, op] = it->second;
    gather(e);
    Eigen::VectorXd fe;
    if (forcing) fe = element_load(tab, forcing, xs[i], ys[j], load_stab(tab));
    for (int lr = 0; lr < 3 * nloc; ++lr) {
      const int r = loc[static_cast<std::size_t>(lr)];
      if (sys.kind[static_cast<std::size_t>(r)] != DofKind::free) continue;
      const int ri = sys.index[static_cast<std::size_t>(r)];
      for (int lc = 0; lc < 3 * nloc; ++lc) {
        const double v = op.K(lr, lc);
        if (v == 0.0) continue;
        const int c = loc[static_cast<std::size_t>(lc)];
        switch (sys.kind[static_cast<std::size_t>(c)]) {
          case DofKind::free: kb.add(ri, sys.index[static_cast<std::size_t>(c)], v); break;
          case DofKind::interface: gb.add(ri, sys.index[static_cast<std::size_t>(c)], v); break;
          case DofKind::fixed: sys.rhs[ri] -= v * sys.fixed_value[static_cast<std::size_t>(c)]; break;
        }
      }
      if (forcing) sys.rhs[ri] += fe[lr];
      if (plan.multiplier && lr >= 2 * nloc) {
        const double m = op.mean[lr - 2 * nloc];
        kb.add(ri, mult, m);
        kb.add(mult, ri, m);
      }
    }
  }

  // Natural boundary terms: integral of the traction against velocity test functions.
  if (boundary) {
    const auto rule = QuadratureRule::gauss(sp.order() + 1);
    std::array<double, 3> v{};
    for (const auto& edge : sp.mesh().boundary_edges()) {
      const BoundaryCondition* bc = boundary->find(edge.tag);
      if (!bc || bc->kind != BoundaryKind::traction || !bc->vector_value) continue;
      const auto nodes = sp.edge_nodes(edge);
      const int i = edge.cell_i, j = edge.cell_j;
      const bool vertical = edge.side == CellSide::west || edge.side == CellSide::east;
      const double len = vertical ? ys[j + 1] - ys[j] : xs[i + 1] - xs[i];
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double s = rule.points[q];
        double x = 0.0, y = 0.0;
        if (vertical) {
          x = edge.side == CellSide::west ? xs[i] : xs[i + 1];
          y = ys[j] + s * len;
        } else {
          x = xs[i] + s * len;
          y = edge.side == CellSide::south ? ys[j] : ys[j + 1];
        }
        const Vec2 tr = bc->vector_value(x, y);
        sp.basis().eval(s, v.data(), nullptr, nullptr);
        for (std::size_t a = 0; a < nodes.size(); ++a) {
          const int m = sys.master.empty() ? nodes[a] : sys.master[static_cast<std::size_t>(nodes[a])];
          for (int c = 0; c < 2; ++c) {
            const int d = 2 * m + c;
            if (sys.kind[static_cast<std::size_t>(d)] != DofKind::free) continue;
            sys.rhs[sys.index[static_cast<std::size_t>(d)]] += rule.weights[q] * len * tr[c] * v[a];
          }
        }
      }
    }
  }

  sys.K = kb.release();
  sys.K_gamma = gb.release();
  return sys;
}

/// Tags present on the mesh boundary.
inline std::vector<BoundaryTag> present_tags(const StructuredMesh& mesh) {
  std::array<bool, 5> seen{};
  for (const auto& e : mesh.boundary_edges()) seen[static_cast<std::size_t>(e.tag)] = true;
  std::vector<BoundaryTag> out;
  for (auto t : kAllBoundaryTags) {
    if (seen[static_cast<std::size_t>(t)]) out.push_back(t);
  }
  return out;
}

/// Every boundary tag needs a condition unless the interface covers all of its nodes.
inline void check_boundary_coverage(const FeSpace& sp, const BoundarySpec& spec,
                                    const std::vector<std::uint8_t>& on_interface) {
  for (auto tag : present_tags(sp.mesh())) {
    if (spec.find(tag)) continue;
    for (int n = 0; n < sp.num_nodes(); ++n) {
      if (sp.on_boundary(n, tag) && !on_interface[static_cast<std::size_t>(n)]) {
        throw InputError(std::string("no boundary condition for tag '") + to_string(tag) + "'");
      }
    }
  }
}

/// Interface nodes on a mesh vertex row.
inline std::vector<std::uint8_t> interface_mask(const FeSpace& sp, std::optional<int> row,
                                                std::vector<int>* nodes) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(sp.num_nodes()), 0);
  if (!row) return mask;
  if (*row < 0 || *row > sp.mesh().ny()) throw InputError("interface row outside the mesh");
  auto list = sp.row_nodes(*row);
  if (list.empty()) throw InputError("interface row contains no mesh node");
  for (int n : list) mask[static_cast<std::size_t>(n)] = 1;
  if (nodes) *nodes = std::move(list);
  return mask;
}

inline std::array<BoundaryTag, 5> tags_by_precedence() {
  return {BoundaryTag::obstacle, BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom,
          BoundaryTag::top};
}

}  // namespace detail

/// Interface row of a mesh: the grid row whose coordinate matches y.
inline int interface_row(const StructuredMesh& mesh, double y) {
  return extract_interface_nodes(mesh, y).row;
}

/**
 * Stokes system with PSPG stabilization on `space`. When `interface` names a vertex row,
 * both velocity components on that row become interface unknowns g, ordered node by node
 * with increasing x.
 */
inline SaddleSystem assemble_stokes(FeSpacePtr space, const StokesProblem& prob,
                                    const FemConfig& cfg, std::optional<int> interface = {}) {
  cfg.validate();
  if (cfg.order != space->order()) throw InputError("space order differs from configuration");
  if (!(prob.viscosity > 0.0)) throw InputError("viscosity must be positive");
  const FeSpace& sp = *space;
  const int nn = sp.num_nodes();
  detail::DofPlan plan;
  plan.kind.assign(static_cast<std::size_t>(3 * nn), DofKind::free);
  plan.fixed_value.assign(static_cast<std::size_t>(3 * nn), 0.0);
  const auto on_int = detail::interface_mask(sp, interface, &plan.interface_nodes);
  for (const auto& [tag, bc] : prob.boundary.conditions) {
    if (bc.kind == BoundaryKind::pressure) {
      throw InputError(std::string("pressure condition on tag '") + to_string(tag) +
                       "' is not supported for Stokes flow");
    }
  }
  detail::check_boundary_coverage(sp, prob.boundary, on_int);

  for (int n = 0; n < nn; ++n) {
    if (on_int[static_cast<std::size_t>(n)]) continue;
    const Vec2 x = sp.coords(n);
    bool done = false;
    for (auto tag : detail::tags_by_precedence()) {
      const auto* bc = prob.boundary.find(tag);
      if (!bc || bc->kind != BoundaryKind::velocity || !sp.on_boundary(n, tag)) continue;
      const Vec2 v = bc->vector_value ? bc->vector_value(x[0], x[1]) : Vec2::Zero();
      for (int c = 0; c < 2; ++c) {
        plan.kind[static_cast<std::size_t>(2 * n + c)] = DofKind::fixed;
        plan.fixed_value[static_cast<std::size_t>(2 * n + c)] = v[c];
      }
      done = true;
      break;
    }
    if (done) continue;
    for (auto tag : detail::tags_by_precedence()) {
      const auto* bc = prob.boundary.find(tag);
      if (!bc || bc->kind != BoundaryKind::impermeable) continue;
      const auto normals = sp.boundary_normals(n, tag);
      for (int c = 0; c < 2; ++c) {
        if (normals & (1u << c)) plan.kind[static_cast<std::size_t>(2 * n + c)] = DofKind::fixed;
      }
    }
  }
  for (int n : plan.interface_nodes) {
    for (int c = 0; c < 2; ++c) {
      plan.kind[static_cast<std::size_t>(2 * n + c)] = DofKind::interface;
      plan.interface_dofs.push_back(2 * n + c);
    }
  }
  plan.multiplier = prob.zero_mean_pressure;

  const double mu = prob.viscosity;
  const double gamma = cfg.stabilization;
  const int order = cfg.order;
  const auto tau = [&](const detail::ElementTables& t) {
    const double h = std::max(t.hx, t.hy);
    return gamma * h * h / mu;
  };
  return detail::assemble(
      space, std::move(plan),
      [&](const detail::ElementTables& t) { return detail::stokes_element(t, mu, tau(t), order); },
      prob.forcing, tau, &prob.boundary);
}

/**
 * Darcy system with symmetric pressure-gradient stabilization. When `interface` names a
 * vertex row, the pressures on that row become interface unknowns g.
 */
inline SaddleSystem assemble_darcy(FeSpacePtr space, const DarcyProblem& prob, const FemConfig& cfg,
                                   std::optional<int> interface = {}) {
  cfg.validate();
  if (cfg.order != space->order()) throw InputError("space order differs from configuration");
  if (!(prob.viscosity > 0.0)) throw InputError("viscosity must be positive");
  if (!(prob.permeability > 0.0)) throw InputError("permeability must be positive");
  const FeSpace& sp = *space;
  const int nn = sp.num_nodes();
  detail::DofPlan plan;
  plan.kind.assign(static_cast<std::size_t>(3 * nn), DofKind::free);
  plan.fixed_value.assign(static_cast<std::size_t>(3 * nn), 0.0);
  const auto on_int = detail::interface_mask(sp, interface, &plan.interface_nodes);
  for (const auto& [tag, bc] : prob.boundary.conditions) {
    if (bc.kind == BoundaryKind::velocity || bc.kind == BoundaryKind::traction) {
      throw InputError(std::string("condition on tag '") + to_string(tag) +
                       "' must be a pressure or impermeability condition for Darcy flow");
    }
  }
  detail::check_boundary_coverage(sp, prob.boundary, on_int);

  bool has_pressure_data = interface.has_value();
  for (int n = 0; n < nn; ++n) {
    const Vec2 x = sp.coords(n);
    for (auto tag : detail::tags_by_precedence()) {
      const auto* bc = prob.boundary.find(tag);
      if (!bc || !sp.on_boundary(n, tag)) continue;
      if (bc->kind == BoundaryKind::impermeable) {
        const auto normals = sp.boundary_normals(n, tag);
        for (int c = 0; c < 2; ++c) {
          if (normals & (1u << c)) plan.kind[static_cast<std::size_t>(2 * n + c)] = DofKind::fixed;
        }
      } else if (!on_int[static_cast<std::size_t>(n)] &&
                 plan.kind[static_cast<std::size_t>(2 * nn + n)] == DofKind::free) {
        plan.kind[static_cast<std::size_t>(2 * nn + n)] = DofKind::fixed;
        plan.fixed_value[static_cast<std::size_t>(2 * nn + n)] =
            bc->scalar_value ? bc->scalar_value(x[0], x[1]) : 0.0;
        has_pressure_data = true;
      }
    }
  }
  for (int n : plan.interface_nodes) {
    plan.kind[static_cast<std::size_t>(2 * nn + n)] = DofKind::interface;
    plan.interface_dofs.push_back(2 * nn + n);
  }
  plan.multiplier = !has_pressure_data;

  const double mu = prob.viscosity, perm = prob.permeability;
  return detail::assemble(
      space, std::move(plan),
      [&](const detail::ElementTables& t) { return detail::darcy_element(t, mu, perm); },
      prob.forcing, [&](const detail::ElementTables&) { return perm / mu; }, nullptr);
}

/**
 * Periodic cell problem: unit viscosity, body force e_dir, no slip on the obstacle,
 * periodic identification of opposite sides and zero-mean pressure.
 */
inline SaddleSystem assemble_cell_problem(FeSpacePtr space, int dir, const FemConfig& cfg) {
  cfg.validate();
  if (dir != 0 && dir != 1) throw InputError("cell problem direction must be 0 or 1");
  if (cfg.order != space->order()) throw InputError("space order differs from configuration");
  const FeSpace& sp = *space;
  const int nn = sp.num_nodes();
  detail::DofPlan plan;
  plan.kind.assign(static_cast<std::size_t>(3 * nn), DofKind::free);
  plan.fixed_value.assign(static_cast<std::size_t>(3 * nn), 0.0);
  plan.master.resize(static_cast<std::size_t>(nn));
  const int LX = sp.lattice_nx() - 1, LY = sp.lattice_ny() - 1;
  for (int n = 0; n < nn; ++n) {
    auto [I, J] = sp.node_ij(n);
    if (I == LX) I = 0;
    if (J == LY) J = 0;
    const int m = sp.node_index(I, J);
    if (m < 0) throw InputError("mismatched periodic node pairs on the cell boundary");
    plan.master[static_cast<std::size_t>(n)] = m;
  }
  for (int n = 0; n < nn; ++n) {
    if (!sp.on_boundary(n, BoundaryTag::obstacle)) continue;
    for (int c = 0; c < 2; ++c) {
      plan.kind[static_cast<std::size_t>(2 * n + c)] = DofKind::fixed;
    }
  }
  // A fixed image pins its master as well.
  for (int n = 0; n < nn; ++n) {
    const int m = plan.master[static_cast<std::size_t>(n)];
    for (int c = 0; c < 2; ++c) {
      if (plan.kind[static_cast<std::size_t>(2 * n + c)] == DofKind::fixed) {
        plan.kind[static_cast<std::size_t>(2 * m + c)] = DofKind::fixed;
      }
    }
  }
  plan.multiplier = true;
  const double gamma = cfg.stabilization;
  const int order = cfg.order;
  const auto tau = [&](const detail::ElementTables& t) {
    const double h = std::max(t.hx, t.hy);
    return gamma * h * h;
  };
  const VectorFunction force = [dir](double, double) {
    return dir == 0 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
  };
  return detail::assemble(
      space, std::move(plan),
      [&](const detail::ElementTables& t) { return detail::stokes_element(t, 1.0, tau(t), order); },
      force, tau, nullptr);
}

/// Solve K x = rhs - K_gamma g with a fresh factorization.
inline NodalField solve_system(const SaddleSystem& sys, const Vector& g = Vector()) {
  const Vector gg = g.size() == 0 ? Vector::Zero(sys.interface_size()) : g;
  const auto lu = factorize(sys.K);
  return sys.expand(lu.solve(sys.load(gg)), gg);
}

}  // namespace icdd

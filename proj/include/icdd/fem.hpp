/**
 * @file fem.hpp
 * @brief Tensor-product Lagrange elements of order 1 or 2 on structured meshes.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "icdd/errors.hpp"
#include "icdd/mesh.hpp"
#include "icdd/sparse.hpp"

namespace icdd {

using Vec2 = Eigen::Vector2d;

/// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  static QuadratureRule gauss(int n) {
    if (n < 1) throw InputError("quadrature needs at least one point");
    QuadratureRule q;
    q.points.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    // Legendre P_n(x) and P_n'(x) by the three-term recurrence.
    const auto legendre = [n](double x) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        const auto [p, dp] = legendre(x);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double dp = legendre(x).second;
      q.points[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
      q.weights[static_cast<std::size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return q;
  }
};

/// Lagrange basis of order k on equispaced nodes of [0, 1].
struct LagrangeBasis1D {
  int order = 1;

  int size() const { return order + 1; }

  double node(int a) const { return static_cast<double>(a) / order; }

  /// Values, first and second derivatives of every basis function at t.
  void eval(double t, double* v, double* d, double* dd) const {
    const int n = size();
    for (int a = 0; a < n; ++a) {
      double val = 1.0, der = 0.0, der2 = 0.0;
      const double ta = node(a);
      // Product rule over factors (t - t_m) / (t_a - t_m).
      for (int m = 0; m < n; ++m) {
        if (m == a) continue;
        const double c = 1.0 / (ta - node(m));
        const double f = (t - node(m)) * c;
        der2 = der2 * f + 2.0 * der * c;
        der = der * f + val * c;
        val *= f;
      }
      v[a] = val;
      if (d) d[a] = der;
      if (dd) dd[a] = der2;
    }
  }
};

/// Nodes of the order-k Lagrange lattice over a structured mesh. Lattice point (I, J)
/// sits at the k-subdivision of the grid; nodes are the lattice points touching an
/// active cell, numbered lexicographically with x fastest.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const StructuredMesh> mesh, int order)
      : mesh_(std::move(mesh)), order_(order), basis_{order} {
    if (!mesh_) throw InputError("finite element space needs a mesh");
    if (order_ != 1 && order_ != 2) throw InputError("element order must be 1 or 2");
    lx_ = order_ * mesh_->nx() + 1;
    ly_ = order_ * mesh_->ny() + 1;
    node_of_point_.assign(static_cast<std::size_t>(lx_) * ly_, -1);
    xcoord_.resize(static_cast<std::size_t>(lx_));
    ycoord_.resize(static_cast<std::size_t>(ly_));
    for (int I = 0; I < lx_; ++I) xcoord_[I] = lattice_coord(mesh_->xs(), I);
    for (int J = 0; J < ly_; ++J) ycoord_[J] = lattice_coord(mesh_->ys(), J);
    for (int J = 0; J < ly_; ++J) {
      for (int I = 0; I < lx_; ++I) {
        if (touches_active(I, J)) {
          node_of_point_[static_cast<std::size_t>(J) * lx_ + I] = static_cast<int>(node_ij_.size());
          node_ij_.push_back({I, J});
        }
      }
    }
    const auto& elems = mesh_->elements();
    const int nloc = nodes_per_element();
    element_nodes_.resize(elems.size() * static_cast<std::size_t>(nloc));
    for (std::size_t e = 0; e < elems.size(); ++e) {
      const auto [i, j] = elems[e];
      for (int b = 0; b <= order_; ++b) {
        for (int a = 0; a <= order_; ++a) {
          element_nodes_[e * nloc + static_cast<std::size_t>(b * (order_ + 1) + a)] =
              node_index(order_ * i + a, order_ * j + b);
        }
      }
    }
    build_boundary_info();
  }

  const StructuredMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const StructuredMesh> mesh_ptr() const { return mesh_; }
  int order() const { return order_; }
  const LagrangeBasis1D& basis() const { return basis_; }
  int nodes_per_element() const { return (order_ + 1) * (order_ + 1); }
  int num_nodes() const { return static_cast<int>(node_ij_.size()); }
  int lattice_nx() const { return lx_; }
  int lattice_ny() const { return ly_; }

  int node_index(int I, int J) const {
    if (I < 0 || J < 0 || I >= lx_ || J >= ly_) return -1;
    return node_of_point_[static_cast<std::size_t>(J) * lx_ + I];
  }
  std::array<int, 2> node_ij(int n) const { return node_ij_[static_cast<std::size_t>(n)]; }
  double lattice_x(int I) const { return xcoord_[static_cast<std::size_t>(I)]; }
  double lattice_y(int J) const { return ycoord_[static_cast<std::size_t>(J)]; }
  Vec2 coords(int n) const {
    const auto [I, J] = node_ij(n);
    return {lattice_x(I), lattice_y(J)};
  }

  /// Local nodes of element e, local index b*(k+1)+a.
  const int* element_nodes(int e) const {
    return element_nodes_.data() + static_cast<std::size_t>(e) * nodes_per_element();
  }

  /// Active lattice nodes on mesh vertex row `row`, sorted by x.
  std::vector<int> row_nodes(int row) const {
    std::vector<int> out;
    const int J = order_ * row;
    for (int I = 0; I < lx_; ++I) {
      const int n = node_index(I, J);
      if (n >= 0) out.push_back(n);
    }
    return out;
  }

  /// Bitmask of boundary-edge normals touching node n for a tag: bit 0 for an edge
  /// with x-normal, bit 1 for an edge with y-normal.
  std::uint8_t boundary_normals(int n, BoundaryTag tag) const {
    return boundary_[static_cast<std::size_t>(n) * 5 + static_cast<std::size_t>(tag)];
  }
  bool on_boundary(int n, BoundaryTag tag) const { return boundary_normals(n, tag) != 0; }

  /// Lattice nodes along a boundary edge (k+1 nodes, increasing coordinate).
  std::vector<int> edge_nodes(const BoundaryEdge& edge) const {
    std::vector<int> out;
    const int I0 = order_ * edge.cell_i, J0 = order_ * edge.cell_j;
    for (int a = 0; a <= order_; ++a) {
      switch (edge.side) {
        case CellSide::west: out.push_back(node_index(I0, J0 + a)); break;
        case CellSide::east: out.push_back(node_index(I0 + order_, J0 + a)); break;
        case CellSide::south: out.push_back(node_index(I0 + a, J0)); break;
        case CellSide::north: out.push_back(node_index(I0 + a, J0 + order_)); break;
      }
    }
    return out;
  }

  /// Active cell containing (x, y), preferring active neighbours on shared edges.
  std::optional<std::array<int, 2>> locate(double x, double y) const {
    const auto& xs = mesh_->xs();
    const auto& ys = mesh_->ys();
    const double tx = 1e-12 * (xs.back() - xs.front());
    const double ty = 1e-12 * (ys.back() - ys.front());
    if (x < xs.front() - tx || x > xs.back() + tx || y < ys.front() - ty || y > ys.back() + ty) {
      return std::nullopt;
    }
    const auto cell = [](const std::vector<double>& v, double t) {
      const auto it = std::upper_bound(v.begin(), v.end(), t);
      int i = static_cast<int>(it - v.begin()) - 1;
      return std::clamp(i, 0, static_cast<int>(v.size()) - 2);
    };
    const int i = cell(xs, x), j = cell(ys, y);
    if (mesh_->is_active(i, j)) return std::array<int, 2>{i, j};
    // Points on a grid line may belong to a neighbouring active cell.
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const int ii = i + di, jj = j + dj;
        if (!mesh_->is_active(ii, jj)) continue;
        if (x >= xs[ii] - tx && x <= xs[ii + 1] + tx && y >= ys[jj] - ty && y <= ys[jj + 1] + ty) {
          return std::array<int, 2>{ii, jj};
        }
      }
    }
    return std::nullopt;
  }

  /// Element id of active cell (i, j).
  int element_id(int i, int j) const {
    const auto& elems = mesh_->elements();
    const auto it = std::lower_bound(elems.begin(), elems.end(), std::array<int, 2>{i, j},
                                     [](const std::array<int, 2>& a, const std::array<int, 2>& b) {
                                       return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0];
                                     });
    if (it == elems.end() || (*it)[0] != i || (*it)[1] != j) return -1;
    return static_cast<int>(it - elems.begin());
  }

 private:
  double lattice_coord(const std::vector<double>& grid, int I) const {
    const int i = I / order_, a = I % order_;
    if (a == 0) return grid[static_cast<std::size_t>(i)];
    const double t = static_cast<double>(a) / order_;
    return grid[static_cast<std::size_t>(i)] * (1.0 - t) + grid[static_cast<std::size_t>(i) + 1] * t;
  }

  bool touches_active(int I, int J) const {
    const int k = order_;
    const int i_hi = I / k, j_hi = J / k;
    const int i_lo = (I % k == 0) ? i_hi - 1 : i_hi;
    const int j_lo = (J % k == 0) ? j_hi - 1 : j_hi;
    for (int j = j_lo; j <= j_hi; ++j) {
      for (int i = i_lo; i <= i_hi; ++i) {
        if (mesh_->is_active(i, j)) return true;
      }
    }
    return false;
  }

  void build_boundary_info() {
    boundary_.assign(static_cast<std::size_t>(num_nodes()) * 5, 0);
    for (const auto& edge : mesh_->boundary_edges()) {
      const std::uint8_t bit =
          (edge.side == CellSide::west || edge.side == CellSide::east) ? 1 : 2;
      for (int n : edge_nodes(edge)) {
        boundary_[static_cast<std::size_t>(n) * 5 + static_cast<std::size_t>(edge.tag)] |= bit;
      }
    }
  }

  std::shared_ptr<const StructuredMesh> mesh_;
  int order_;
  LagrangeBasis1D basis_;
  int lx_ = 0;
  int ly_ = 0;
  std::vector<double> xcoord_;
  std::vector<double> ycoord_;
  std::vector<int> node_of_point_;
  std::vector<std::array<int, 2>> node_ij_;
  std::vector<int> element_nodes_;
  std::vector<std::uint8_t> boundary_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

inline FeSpacePtr make_space(StructuredMesh mesh, int order) {
  return std::make_shared<const FeSpace>(std::make_shared<const StructuredMesh>(std::move(mesh)),
                                         order);
}

/// Point value of velocity and pressure.
struct FlowSample {
  Vec2 u = Vec2::Zero();
  double p = 0.0;
};

/// Velocity and pressure nodal values on a finite element space.
struct NodalField {
  FeSpacePtr space;
  Vector u1;
  Vector u2;
  Vector p;

  NodalField() = default;
  explicit NodalField(FeSpacePtr s)
      : space(std::move(s)),
        u1(Vector::Zero(space->num_nodes())),
        u2(Vector::Zero(space->num_nodes())),
        p(Vector::Zero(space->num_nodes())) {}

  /// Interpolated value inside element (i, j) at reference coordinates (xi, eta).
  FlowSample evaluate_in_cell(int i, int j, double xi, double eta) const {
    const auto& sp = *space;
    const int k = sp.order();
    std::array<double, 3> bx{}, by{};
    sp.basis().eval(xi, bx.data(), nullptr, nullptr);
    sp.basis().eval(eta, by.data(), nullptr, nullptr);
    FlowSample s;
    for (int b = 0; b <= k; ++b) {
      for (int a = 0; a <= k; ++a) {
        const int n = sp.node_index(k * i + a, k * j + b);
        const double w = bx[a] * by[b];
        s.u[0] += w * u1[n];
        s.u[1] += w * u2[n];
        s.p += w * p[n];
      }
    }
    return s;
  }

  /// Value at (x, y); nullopt outside the active region.
  std::optional<FlowSample> evaluate(double x, double y) const {
    const auto cell = space->locate(x, y);
    if (!cell) return std::nullopt;
    const auto [i, j] = *cell;
    const auto& xs = space->mesh().xs();
    const auto& ys = space->mesh().ys();
    const double xi = std::clamp((x - xs[i]) / (xs[i + 1] - xs[i]), 0.0, 1.0);
    const double eta = std::clamp((y - ys[j]) / (ys[j + 1] - ys[j]), 0.0, 1.0);
    return evaluate_in_cell(i, j, xi, eta);
  }
};

/// Integral of every nodal basis function over the active cells.
inline Vector node_integrals(const FeSpace& sp) {
  Vector out = Vector::Zero(sp.num_nodes());
  const auto rule = QuadratureRule::gauss(sp.order() + 1);
  const int k = sp.order();
  std::vector<double> w1(static_cast<std::size_t>(k + 1), 0.0);
  std::array<double, 3> v{};
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    sp.basis().eval(rule.points[q], v.data(), nullptr, nullptr);
    for (int a = 0; a <= k; ++a) w1[a] += rule.weights[q] * v[a];
  }
  const auto& xs = sp.mesh().xs();
  const auto& ys = sp.mesh().ys();
  const auto& elems = sp.mesh().elements();
  for (std::size_t e = 0; e < elems.size(); ++e) {
    const auto [i, j] = elems[e];
    const double area = (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    const int* nodes = sp.element_nodes(static_cast<int>(e));
    for (int b = 0; b <= k; ++b) {
      for (int a = 0; a <= k; ++a) out[nodes[b * (k + 1) + a]] += area * w1[a] * w1[b];
    }
  }
  return out;
}

}  // namespace icdd

/**
 * @file mesh.hpp
 * @brief Structured axis-aligned quadrilateral meshes with optional holes.
 *
 * A mesh is a tensor-product grid (xs, ys) together with an activity mask
 * over its cells. Inactive cells are holes (square obstacles). Vertices are
 * the grid points touching at least one active cell and are numbered
 * lexicographically, x fastest.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "icdd/errors.hpp"

namespace icdd {

struct RectDomain {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) {
      throw InputError("degenerate rectangle domain");
    }
  }
};

/// Periodic lattice of centred square obstacles.
struct ObstacleLattice {
  double cell_size = 0.1;      ///< pore scale (cell side length)
  double obstacle_side = 0.8;  ///< obstacle side as a fraction of cell_size
  RectDomain extent;           ///< porous rectangle tiled by the cells

  double porosity() const { return 1.0 - obstacle_side * obstacle_side; }

  void validate() const {
    extent.validate();
    if (!(cell_size > 0.0)) throw InputError("lattice cell size must be positive");
    if (!(obstacle_side > 0.0 && obstacle_side < 1.0)) {
      throw InputError("obstacle side fraction must lie in (0, 1)");
    }
    const auto multiple = [&](double len) {
      const double q = len / cell_size;
      return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, q);
    };
    if (!multiple(extent.width()) || !multiple(extent.height())) {
      throw InputError("lattice extent is not an integer multiple of the cell size");
    }
  }
};

enum class BoundaryTag : std::uint8_t { left = 0, right = 1, bottom = 2, top = 3, obstacle = 4 };

inline constexpr std::array<BoundaryTag, 5> kAllBoundaryTags = {
    BoundaryTag::left, BoundaryTag::right, BoundaryTag::bottom, BoundaryTag::top,
    BoundaryTag::obstacle};

inline const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::left: return "left";
    case BoundaryTag::right: return "right";
    case BoundaryTag::bottom: return "bottom";
    case BoundaryTag::top: return "top";
    case BoundaryTag::obstacle: return "obstacle";
  }
  return "?";
}

/// Side of a cell an edge lies on.
enum class CellSide : std::uint8_t { west, east, south, north };

struct BoundaryEdge {
  int cell_i = 0;
  int cell_j = 0;
  CellSide side = CellSide::south;
  BoundaryTag tag = BoundaryTag::bottom;
};

/// Ordered set of mesh vertices on one horizontal grid line.
struct NodeLine {
  double y = 0.0;          ///< snapped coordinate of the line
  int row = 0;             ///< grid row index
  std::vector<int> nodes;  ///< vertex ids sorted by increasing x
};

class StructuredMesh {
 public:
  StructuredMesh() = default;

  StructuredMesh(std::vector<double> xs, std::vector<double> ys, std::vector<std::uint8_t> active)
      : xs_(std::move(xs)), ys_(std::move(ys)), active_(std::move(active)) {
    if (xs_.size() < 2 || ys_.size() < 2) throw InputError("mesh needs at least one cell per axis");
    const auto increasing = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) return false;
      }
      return true;
    };
    if (!increasing(xs_) || !increasing(ys_)) {
      throw InputError("grid coordinates must be strictly increasing");
    }
    if (active_.empty()) active_.assign(static_cast<std::size_t>(nx() * ny()), 1);
    if (active_.size() != static_cast<std::size_t>(nx() * ny())) {
      throw InputError("cell mask has the wrong size");
    }
    build();
  }

  int nx() const { return static_cast<int>(xs_.size()) - 1; }
  int ny() const { return static_cast<int>(ys_.size()) - 1; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

  bool is_active(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx() || j >= ny()) return false;
    return active_[static_cast<std::size_t>(j * nx() + i)] != 0;
  }
  const std::vector<std::uint8_t>& cell_mask() const { return active_; }

  int num_elements() const { return static_cast<int>(elements_.size()); }
  /// Active cells as (i, j) pairs in lexicographic order.
  const std::vector<std::array<int, 2>>& elements() const { return elements_; }

  int num_nodes() const { return static_cast<int>(node_ij_.size()); }
  /// Vertex id of grid point (i, j), or -1 when the point touches no active cell.
  int node_index(int i, int j) const {
    if (i < 0 || j < 0 || i > nx() || j > ny()) return -1;
    return node_of_point_[static_cast<std::size_t>(j * (nx() + 1) + i)];
  }
  std::array<int, 2> node_ij(int node) const { return node_ij_[static_cast<std::size_t>(node)]; }
  std::array<double, 2> node_coords(int node) const {
    const auto [i, j] = node_ij(node);
    return {xs_[static_cast<std::size_t>(i)], ys_[static_cast<std::size_t>(j)]};
  }

  /// Vertex ids of cell (i, j): SW, SE, NW, NE.
  std::array<int, 4> element_nodes(int i, int j) const {
    return {node_index(i, j), node_index(i + 1, j), node_index(i, j + 1), node_index(i + 1, j + 1)};
  }

  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  double min_cell_height() const {
    double h = std::numeric_limits<double>::infinity();
    for (int j = 0; j < ny(); ++j) h = std::min(h, ys_[j + 1] - ys_[j]);
    return h;
  }

  RectDomain bounding_box() const { return {xs_.front(), xs_.back(), ys_.front(), ys_.back()}; }

  double active_area() const {
    double a = 0.0;
    for (const auto& [i, j] : elements_) a += (xs_[i + 1] - xs_[i]) * (ys_[j + 1] - ys_[j]);
    return a;
  }

  /// Mesh restricted to grid rows [j0, j1] (vertex rows, inclusive). Coordinates are copied
  /// bitwise, so sub-meshes of one grid are conformal on their overlap.
  StructuredMesh sub_rows(int j0, int j1) const {
    if (j0 < 0 || j1 > ny() || j1 <= j0) throw InputError("invalid row range for sub-mesh");
    std::vector<double> ys(ys_.begin() + j0, ys_.begin() + j1 + 1);
    std::vector<std::uint8_t> mask;
    mask.reserve(static_cast<std::size_t>(nx() * (j1 - j0)));
    for (int j = j0; j < j1; ++j) {
      for (int i = 0; i < nx(); ++i) mask.push_back(is_active(i, j) ? 1 : 0);
    }
    return StructuredMesh(xs_, std::move(ys), std::move(mask));
  }

  /// Index of the grid row closest to y, or -1 if none lies within tol.
  int find_row(double y, double tol) const {
    const auto it = std::lower_bound(ys_.begin(), ys_.end(), y);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (auto c : {it - 1, it}) {
      if (c < ys_.begin() || c >= ys_.end()) continue;
      const double d = std::abs(*c - y);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c - ys_.begin());
      }
    }
    return best_d <= tol ? best : -1;
  }

 private:
  void build() {
    node_of_point_.assign(static_cast<std::size_t>((nx() + 1) * (ny() + 1)), -1);
    for (int j = 0; j <= ny(); ++j) {
      for (int i = 0; i <= nx(); ++i) {
        if (is_active(i - 1, j - 1) || is_active(i, j - 1) || is_active(i - 1, j) ||
            is_active(i, j)) {
          node_of_point_[static_cast<std::size_t>(j * (nx() + 1) + i)] =
              static_cast<int>(node_ij_.size());
          node_ij_.push_back({i, j});
        }
      }
    }
    for (int j = 0; j < ny(); ++j) {
      for (int i = 0; i < nx(); ++i) {
        if (!is_active(i, j)) continue;
        elements_.push_back({i, j});
        const auto add = [&](CellSide side, int ni, int nj, BoundaryTag outer) {
          if (is_active(ni, nj)) return;
          const bool outside = ni < 0 || nj < 0 || ni >= nx() || nj >= ny();
          boundary_edges_.push_back({i, j, side, outside ? outer : BoundaryTag::obstacle});
        };
        add(CellSide::west, i - 1, j, BoundaryTag::left);
        add(CellSide::east, i + 1, j, BoundaryTag::right);
        add(CellSide::south, i, j - 1, BoundaryTag::bottom);
        add(CellSide::north, i, j + 1, BoundaryTag::top);
      }
    }
  }

  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<std::uint8_t> active_;
  std::vector<int> node_of_point_;
  std::vector<std::array<int, 2>> node_ij_;
  std::vector<std::array<int, 2>> elements_;
  std::vector<BoundaryEdge> boundary_edges_;
};

namespace detail {

inline int checked_count(double extent, double h, const char* what) {
  const double q = extent / h;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * std::max(1.0, q) || r < 1.0) {
    throw InputError(std::string(what) + " is not an integer multiple of the element size");
  }
  return static_cast<int>(r);
}

inline std::vector<double> uniform_points(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) v[k] = a + (b - a) * static_cast<double>(k) / n;
  v.back() = b;
  return v;
}

}  // namespace detail

/// Uniform grid with ceil(extent / h) cells per axis.
inline StructuredMesh build_rect_mesh(const RectDomain& domain, double h) {
  domain.validate();
  if (!(h > 0.0)) throw InputError("element size must be positive");
  const auto count = [h](double len) {
    return std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
  };
  const int nx = count(domain.width());
  const int ny = count(domain.height());
  return StructuredMesh(detail::uniform_points(domain.x_min, domain.x_max, nx),
                        detail::uniform_points(domain.y_min, domain.y_max, ny), {});
}

/// Tensor-product grid from explicit breakpoints.
inline StructuredMesh build_tensor_mesh(std::vector<double> xs, std::vector<double> ys) {
  return StructuredMesh(std::move(xs), std::move(ys), {});
}

/// Uniform grid of size cell_size / n_per_cell with the lattice obstacles removed.
inline StructuredMesh build_perforated_mesh(const RectDomain& domain, const ObstacleLattice& lattice,
                                            int n_per_cell) {
  domain.validate();
  lattice.validate();
  if (n_per_cell < 1) throw InputError("elements per cell must be positive");
  const double h = lattice.cell_size / n_per_cell;
  const int nx = detail::checked_count(domain.width(), h, "domain width");
  const int ny = detail::checked_count(domain.height(), h, "domain height");

  const double gap = 0.5 * (1.0 - lattice.obstacle_side) * n_per_cell;
  const double side = lattice.obstacle_side * n_per_cell;
  if (std::abs(gap - std::round(gap)) > 1e-9 || std::abs(side - std::round(side)) > 1e-9) {
    throw InputError("obstacle edges do not align with grid lines");
  }
  const auto& ext = lattice.extent;
  if (ext.x_min < domain.x_min - 1e-12 || ext.x_max > domain.x_max + 1e-12 ||
      ext.y_min < domain.y_min - 1e-12 || ext.y_max > domain.y_max + 1e-12) {
    throw InputError("obstacle lattice does not fit inside the domain");
  }
  const int i0 = detail::checked_count(ext.x_min - domain.x_min + h, h, "lattice offset") - 1;
  const int j0 = detail::checked_count(ext.y_min - domain.y_min + h, h, "lattice offset") - 1;
  const int cells_x = static_cast<int>(std::round(ext.width() / lattice.cell_size));
  const int cells_y = static_cast<int>(std::round(ext.height() / lattice.cell_size));
  const int g = static_cast<int>(std::round(gap));
  const int s = static_cast<int>(std::round(side));

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx * ny), 1);
  for (int cj = 0; cj < cells_y; ++cj) {
    for (int ci = 0; ci < cells_x; ++ci) {
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          const int i = i0 + ci * n_per_cell + g + a;
          const int j = j0 + cj * n_per_cell + g + b;
          mask[static_cast<std::size_t>(j * nx + i)] = 0;
        }
      }
    }
  }
  return StructuredMesh(detail::uniform_points(domain.x_min, domain.x_max, nx),
                        detail::uniform_points(domain.y_min, domain.y_max, ny), std::move(mask));
}

/// Vertices on the grid line nearest to y. The line must lie within half of the
/// smallest element height.
inline NodeLine extract_interface_nodes(const StructuredMesh& mesh, double y) {
  const int row = mesh.find_row(y, 0.5 * mesh.min_cell_height());
  if (row < 0) throw InputError("interface coordinate does not match any grid line");
  NodeLine line{mesh.ys()[static_cast<std::size_t>(row)], row, {}};
  for (int i = 0; i <= mesh.nx(); ++i) {
    const int n = mesh.node_index(i, row);
    if (n >= 0) line.nodes.push_back(n);
  }
  if (line.nodes.empty()) throw InputError("interface line contains no mesh vertex");
  return line;
}

/// Two interface lines that must not share a grid row.
inline std::array<NodeLine, 2> extract_disjoint_interfaces(const StructuredMesh& mesh, double y_a,
                                                           double y_b) {
  NodeLine a = extract_interface_nodes(mesh, y_a);
  NodeLine b = extract_interface_nodes(mesh, y_b);
  if (a.row == b.row) throw InputError("interfaces coincide; they must be disjoint");
  return {std::move(a), std::move(b)};
}

/// Legacy VTK unstructured grid (ASCII) of the active cells.
inline void write_vtk_mesh(std::ostream& os, const StructuredMesh& mesh) {
  os << "# vtk DataFile Version 3.0\nstructured quadrilateral mesh\nASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.num_nodes() << " double\n";
  os.precision(17);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const auto [x, y] = mesh.node_coords(n);
    os << x << ' ' << y << " 0\n";
  }
  os << "CELLS " << mesh.num_elements() << ' ' << 5 * mesh.num_elements() << '\n';
  for (const auto& [i, j] : mesh.elements()) {
    const auto v = mesh.element_nodes(i, j);
    os << "4 " << v[0] << ' ' << v[1] << ' ' << v[3] << ' ' << v[2] << '\n';
  }
  os << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) os << "9\n";
}

}  // namespace icdd

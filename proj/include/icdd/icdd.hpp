/**
 * @file icdd.hpp
 * @brief Interface control domain decomposition for coupled Stokes-Darcy flow.
 *
 * Stokes lives on Omega_f = {y > -delta}, Darcy on Omega_p = {y < 0}; the strip between
 * is the overlap. The controls are the Stokes velocity g_f on Gamma_f (y = -delta) and the
 * Darcy pressure g_p on Gamma_p (y = 0). With
 *
 *     T g = [ R_pf K_p^-1 (-K_gamma_p g_p) ; R_fp K_f^-1 (-K_gamma_f g_f) ]
 *     c   = [ R_pf K_p^-1 F_p ; R_fp K_f^-1 F_f ]
 *
 * the interface system is (I - T^2) g = (I + T) c. Each application of I - T^2 costs two
 * primal and two dual subdomain solves.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "icdd/discretization.hpp"
#include "icdd/errors.hpp"
#include "icdd/fem.hpp"
#include "icdd/mesh.hpp"
#include "icdd/sparse.hpp"

namespace icdd {

/// Data of the coupled problem, independent of the mesh.
struct IcddPhysics {
  double viscosity = 1e-3;
  double permeability = 1e-6;
  VectorFunction forcing;
  /// Conditions on the outer boundary of Omega_f; the bottom tag is replaced by Gamma_f.
  BoundarySpec stokes_boundary;
  /// Conditions on the outer boundary of Omega_p; the top tag is replaced by Gamma_p.
  BoundarySpec darcy_boundary;
  bool stokes_zero_mean_pressure = false;
};

/**
 * Tensor grid over the domain with a line at y = 0 and the line y = -delta inserted
 * exactly. Uniform lines closer than h/4 to the inserted line are dropped.
 */
inline StructuredMesh build_icdd_grid(const RectDomain& domain, double h, double delta) {
  domain.validate();
  if (!(h > 0.0)) throw InputError("mesh size must be positive");
  if (!(domain.y_min < 0.0 && domain.y_max > 0.0)) {
    throw InputError("the domain must contain the obstacle-top line y = 0");
  }
  if (!(delta > 0.0)) throw InputError("overlap is empty: delta must be positive");
  if (-delta <= domain.y_min) throw InputError("Gamma_f lies below the domain");
  const auto xs = detail::uniform_points(domain.x_min, domain.x_max,
                                         detail::checked_count(domain.width(), h, "domain width"));
  const auto lower = detail::uniform_points(domain.y_min, 0.0,
                                            detail::checked_count(-domain.y_min, h, "porous depth"));
  const auto upper = detail::uniform_points(0.0, domain.y_max,
                                            detail::checked_count(domain.y_max, h, "fluid height"));
  std::vector<double> ys;
  for (double y : lower) {
    const bool keep = y == domain.y_min || y == 0.0 || std::abs(y + delta) >= 0.25 * h;
    if (keep && y != 0.0) ys.push_back(y);
  }
  ys.push_back(-delta);
  ys.insert(ys.end(), upper.begin(), upper.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  return build_tensor_mesh(xs, ys);
}

/// Composite field: Stokes on y >= -delta (overlap included), Darcy below.
struct CompositeSolution {
  NodalField stokes;
  NodalField darcy;
  double gamma_f = 0.0;

  bool from_stokes(double y) const { return y >= gamma_f; }

  std::optional<FlowSample> evaluate(double x, double y) const {
    return from_stokes(y) ? stokes.evaluate(x, y) : darcy.evaluate(x, y);
  }
};

/// Health of a converged interface state.
struct InterfaceCheck {
  double dual_stokes = 0.0;     ///< |W_f| / |U_f|
  double dual_darcy = 0.0;      ///< |W_p| / |U_p|
  double matching_gamma_f = 0.0;  ///< |g_f - u_p on Gamma_f| / |g_f|
  double matching_gamma_p = 0.0;  ///< |g_p - p_f on Gamma_p| / |g_p|
};

struct IcddSolution {
  CompositeSolution composite;
  Vector g;
  KrylovResult krylov;
  InterfaceCheck check;
};

class IcddProblem {
 public:
  /**
   * Split a tensor grid into Omega_f (rows from y = -delta up) and Omega_p (rows up to
   * y = 0), assemble and factorize both subproblems and build the restriction maps.
   */
  IcddProblem(const StructuredMesh& grid, double delta, IcddPhysics physics, const FemConfig& fem)
      : physics_(std::move(physics)), fem_(fem), delta_(delta) {
    fem_.validate();
    if (!(delta > 0.0)) throw InputError("overlap is empty: delta must be positive");
    const double tol = 1e-9 * (grid.ys().back() - grid.ys().front());
    const int row_f = grid.find_row(-delta, tol);
    const int row_p = grid.find_row(0.0, tol);
    if (row_p < 0) throw InputError("Gamma_p (y = 0) is not a grid line");
    if (row_f < 0) throw InputError("Gamma_f (y = -delta) is not a grid line");
    if (row_f == row_p) throw InputError("interfaces coincide; they must be disjoint");
    if (row_f > row_p) throw InputError("Gamma_f must lie below Gamma_p");
    if (row_f == 0) throw InputError("Gamma_f coincides with the bottom boundary");
    if (row_p == grid.ny()) throw InputError("Gamma_p coincides with the top boundary");
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        if (!grid.is_active(i, j)) throw InputError("the macroscale grid must not contain holes");
      }
    }
    const int k = fem_.order;
    space_f_ = make_space(grid.sub_rows(row_f, grid.ny()), k);
    space_p_ = make_space(grid.sub_rows(0, row_p), k);
    gamma_f_row_in_p_ = row_f;
    gamma_p_row_in_f_ = row_p - row_f;

    StokesProblem sp;
    sp.viscosity = physics_.viscosity;
    sp.forcing = physics_.forcing;
    sp.boundary = physics_.stokes_boundary;
    sp.boundary.conditions.erase(BoundaryTag::bottom);
    sp.zero_mean_pressure = physics_.stokes_zero_mean_pressure;
    stokes_ = assemble_stokes(space_f_, sp, fem_, 0);

    DarcyProblem dp;
    dp.viscosity = physics_.viscosity;
    dp.permeability = physics_.permeability;
    dp.forcing = physics_.forcing;
    dp.boundary = physics_.darcy_boundary;
    dp.boundary.conditions.erase(BoundaryTag::top);
    darcy_ = assemble_darcy(space_p_, dp, fem_, space_p_->mesh().ny());

    lu_f_ = factorize(stokes_.K);
    lu_p_ = factorize(darcy_.K);
    build_restrictions();
  }

  const SaddleSystem& stokes() const { return stokes_; }
  const SaddleSystem& darcy() const { return darcy_; }
  const IcddPhysics& physics() const { return physics_; }
  double delta() const { return delta_; }
  double gamma_f() const { return space_f_->mesh().ys().front(); }
  /// Restriction of the Darcy unknowns to Gamma_f, in g_f layout.
  const SparseMatrix& restrict_darcy_to_gamma_f() const { return r_pf_; }
  /// Restriction of the Stokes unknowns to Gamma_p, in g_p layout.
  const SparseMatrix& restrict_stokes_to_gamma_p() const { return r_fp_; }
  /// Darcy nodes on Gamma_f matching the Stokes interface nodes.
  const std::vector<int>& gamma_f_nodes_in_darcy() const { return gamma_f_in_p_; }
  /// Stokes nodes on Gamma_p matching the Darcy interface nodes.
  const std::vector<int>& gamma_p_nodes_in_stokes() const { return gamma_p_in_f_; }

  int size_f() const { return stokes_.interface_size(); }
  int size_p() const { return darcy_.interface_size(); }
  int interface_size() const { return size_f() + size_p(); }

  /// Stokes unknowns for interface velocity gf.
  Vector solve_stokes(const Vector& gf, bool homogeneous = false) const {
    return lu_f_.solve(homogeneous ? Vector(-(stokes_.K_gamma * gf)) : stokes_.load(gf));
  }
  /// Darcy unknowns for interface pressure gp.
  Vector solve_darcy(const Vector& gp, bool homogeneous = false) const {
    return lu_p_.solve(homogeneous ? Vector(-(darcy_.K_gamma * gp)) : darcy_.load(gp));
  }

  /// Right-hand side b = (I + T) c.
  Vector schur_rhs() const {
    const Vector c_f = r_fp_ * solve_stokes(Vector::Zero(size_f()));  // Stokes pressure on Gamma_p
    const Vector c_p = r_pf_ * solve_darcy(Vector::Zero(size_p()));   // Darcy velocity on Gamma_f
    Vector b(interface_size());
    b.head(size_f()) = c_p + t_p(c_f);
    b.tail(size_p()) = c_f + t_f(c_p);
    return b;
  }

  /// t = S g with S = I - T^2, matrix-free.
  Vector schur_apply(const Vector& g) const {
    check_size(g);
    const Vector gf = g.head(size_f()), gp = g.tail(size_p());
    const Vector p_tilde = t_f(gf);
    const Vector u_tilde = t_p(gp);
    const Vector q_tilde = t_f(gf - u_tilde);
    const Vector w_tilde = t_p(gp - p_tilde);
    Vector t(interface_size());
    t.head(size_f()) = gf - u_tilde + w_tilde;
    t.tail(size_p()) = gp + q_tilde - p_tilde;
    return t;
  }

  KrylovResult schur_solve(const Vector& b, const KrylovConfig& cfg) const {
    check_size(b);
    return bicgstab([this](const Vector& g) { return schur_apply(g); }, b, cfg);
  }

  /// Final subdomain solves for a given interface state.
  CompositeSolution compose(const Vector& g) const {
    check_size(g);
    const Vector gf = g.head(size_f()), gp = g.tail(size_p());
    return {stokes_.expand(solve_stokes(gf), gf), darcy_.expand(solve_darcy(gp), gp), gamma_f()};
  }

  /// Dual solutions and matching residuals at interface state g.
  InterfaceCheck check(const Vector& g) const {
    check_size(g);
    const Vector gf = g.head(size_f()), gp = g.tail(size_p());
    const Vector uf = solve_stokes(gf), up = solve_darcy(gp);
    const Vector mismatch_f = gf - r_pf_ * up;
    const Vector mismatch_p = gp - r_fp_ * uf;
    const Vector wf = solve_stokes(mismatch_f, true);
    const Vector wp = solve_darcy(mismatch_p, true);
    const auto ratio = [](double a, double b) { return b > 0.0 ? a / b : a; };
    return {ratio(wf.norm(), uf.norm()), ratio(wp.norm(), up.norm()),
            ratio(mismatch_f.norm(), gf.norm()), ratio(mismatch_p.norm(), gp.norm())};
  }

  /// Dense interface operator by applying S to every unit vector.
  Eigen::MatrixXd dense_schur() const {
    const int n = interface_size();
    Eigen::MatrixXd s(n, n);
    for (int j = 0; j < n; ++j) s.col(j) = schur_apply(Vector::Unit(n, j));
    return s;
  }

  /// Direct sparse solve of the coupled system [K_f 0 KG_f 0; 0 K_p 0 KG_p; 0 -R_pf I 0; -R_fp 0 0 I].
  std::pair<CompositeSolution, Vector> monolithic_solve() const {
    const SparseMatrix m = monolithic_matrix();
    Vector rhs = Vector::Zero(m.rows);
    rhs.head(stokes_.size()) = stokes_.rhs;
    rhs.segment(stokes_.size(), darcy_.size()) = darcy_.rhs;
    const Vector x = factorize(m).solve(rhs);
    const Vector g = x.tail(interface_size());
    const Vector gf = g.head(size_f()), gp = g.tail(size_p());
    CompositeSolution c{stokes_.expand(x.head(stokes_.size()), gf),
                        darcy_.expand(x.segment(stokes_.size(), darcy_.size()), gp), gamma_f()};
    return {std::move(c), g};
  }

  SparseMatrix monolithic_matrix() const {
    const int nf = stokes_.size(), np = darcy_.size();
    const int of = nf + np, op = of + size_f();
    std::vector<SparseMatrix::Triplet> t;
    const auto put = [&t](const SparseMatrix& a, int r0, int c0, double s) {
      for (int r = 0; r < a.rows; ++r) {
        for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
          t.push_back({r0 + r, c0 + a.col_idx[k], s * a.values[k]});
        }
      }
    };
    put(stokes_.K, 0, 0, 1.0);
    put(stokes_.K_gamma, 0, of, 1.0);
    put(darcy_.K, nf, nf, 1.0);
    put(darcy_.K_gamma, nf, op, 1.0);
    put(r_pf_, of, nf, -1.0);
    put(r_fp_, op, 0, -1.0);
    for (int i = 0; i < interface_size(); ++i) t.push_back({of + i, of + i, 1.0});
    return SparseMatrix::from_triplets(op + size_p(), op + size_p(), std::move(t));
  }

 private:
  Vector t_f(const Vector& gf) const { return r_fp_ * solve_stokes(gf, true); }
  Vector t_p(const Vector& gp) const { return r_pf_ * solve_darcy(gp, true); }

  void check_size(const Vector& g) const {
    if (g.size() != interface_size()) {
      throw InputError("interface vector has length " + std::to_string(g.size()) + ", expected " +
                       std::to_string(interface_size()));
    }
  }

  void build_restrictions() {
    const int k = fem_.order;
    // Gamma_f: Stokes interface nodes (bottom row) against Darcy nodes on row_f.
    std::vector<SparseMatrix::Triplet> t;
    for (std::size_t i = 0; i < stokes_.interface_nodes.size(); ++i) {
      const int I = space_f_->node_ij(stokes_.interface_nodes[i])[0];
      const int m = space_p_->node_index(I, k * gamma_f_row_in_p_);
      if (m < 0) throw InputError("non-conformal meshes on Gamma_f");
      gamma_f_in_p_.push_back(m);
      for (int c = 0; c < 2; ++c) {
        const int d = 2 * m + c;
        switch (darcy_.kind[static_cast<std::size_t>(d)]) {
          case DofKind::free:
            t.push_back({static_cast<int>(2 * i) + c, darcy_.index[static_cast<std::size_t>(d)], 1.0});
            break;
          case DofKind::fixed:
            if (darcy_.fixed_value[static_cast<std::size_t>(d)] != 0.0) {
              throw InputError("Gamma_f touches nonzero Darcy velocity data");
            }
            break;
          case DofKind::interface: throw InputError("Gamma_f touches Gamma_p");
        }
      }
    }
    r_pf_ = SparseMatrix::from_triplets(size_f(), darcy_.size(), std::move(t));

    t.clear();
    const int nn_f = stokes_.num_nodes();
    for (std::size_t i = 0; i < darcy_.interface_nodes.size(); ++i) {
      const int I = space_p_->node_ij(darcy_.interface_nodes[i])[0];
      const int m = space_f_->node_index(I, k * gamma_p_row_in_f_);
      if (m < 0) throw InputError("non-conformal meshes on Gamma_p");
      gamma_p_in_f_.push_back(m);
      const int d = 2 * nn_f + m;
      if (stokes_.kind[static_cast<std::size_t>(d)] != DofKind::free) {
        throw InputError("Stokes pressure on Gamma_p is constrained");
      }
      t.push_back({static_cast<int>(i), stokes_.index[static_cast<std::size_t>(d)], 1.0});
    }
    r_fp_ = SparseMatrix::from_triplets(size_p(), stokes_.size(), std::move(t));
  }

  IcddPhysics physics_;
  FemConfig fem_;
  double delta_;
  FeSpacePtr space_f_;
  FeSpacePtr space_p_;
  int gamma_f_row_in_p_ = 0;
  int gamma_p_row_in_f_ = 0;
  SaddleSystem stokes_;
  SaddleSystem darcy_;
  Factorization lu_f_;
  Factorization lu_p_;
  SparseMatrix r_pf_;
  SparseMatrix r_fp_;
  std::vector<int> gamma_f_in_p_;
  std::vector<int> gamma_p_in_f_;
};

/// Right-hand side, Krylov solve from zero, final subdomain solves.
inline IcddSolution icdd_solve(const IcddProblem& problem, const KrylovConfig& cfg = {}) {
  cfg.validate();
  IcddSolution out;
  out.krylov = problem.schur_solve(problem.schur_rhs(), cfg);
  if (!out.krylov.converged()) {
    throw Error(std::string("interface solve did not converge (") + to_string(out.krylov.status) +
                " after " + std::to_string(out.krylov.iterations) + " iterations)");
  }
  out.g = out.krylov.solution;
  out.composite = problem.compose(out.g);
  out.check = problem.check(out.g);
  return out;
}

}  // namespace icdd

/**
 * @file sparse.hpp
 * @brief CSR matrices, sparse LU (UMFPACK) and a matrix-free BiCGStab driver.
 */
#pragma once

#include <umfpack.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "icdd/errors.hpp"

namespace icdd {

using Vector = Eigen::VectorXd;

/// Compressed sparse row matrix. Column indices are strictly increasing in each row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> values;

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), row_ptr(static_cast<std::size_t>(r) + 1, 0) {}

  int nnz() const { return static_cast<int>(values.size()); }

  struct Triplet {
    int row;
    int col;
    double value;
  };

  /// Duplicates are summed.
  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m(rows, cols);
    for (std::size_t k = 0; k < entries.size();) {
      const auto& t = entries[k];
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
        throw InputError("triplet index out of range");
      }
      double v = 0.0;
      std::size_t l = k;
      for (; l < entries.size() && entries[l].row == t.row && entries[l].col == t.col; ++l) {
        v += entries[l].value;
      }
      m.col_idx.push_back(t.col);
      m.values.push_back(v);
      ++m.row_ptr[static_cast<std::size_t>(t.row) + 1];
      k = l;
    }
    for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
  }

  static SparseMatrix identity(int n) {
    std::vector<Triplet> t;
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  double coeff(int r, int c) const {
    const auto b = col_idx.begin() + row_ptr[r];
    const auto e = col_idx.begin() + row_ptr[r + 1];
    const auto it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? values[static_cast<std::size_t>(it - col_idx.begin())] : 0.0;
  }

  /// y += alpha * A x
  void multiply_add(const Vector& x, Vector& y, double alpha = 1.0) const {
    for (int r = 0; r < rows; ++r) {
      double s = 0.0;
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += values[k] * x[col_idx[k]];
      y[r] += alpha * s;
    }
  }

  Vector operator*(const Vector& x) const {
    if (x.size() != cols) throw InputError("dimension mismatch in sparse product");
    Vector y = Vector::Zero(rows);
    multiply_add(x, y);
    return y;
  }

  Vector transpose_multiply(const Vector& x) const {
    Vector y = Vector::Zero(cols);
    for (int r = 0; r < rows; ++r) {
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) y[col_idx[k]] += values[k] * x[r];
    }
    return y;
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(values.size());
    for (int r = 0; r < rows; ++r) {
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) t.push_back({col_idx[k], r, values[k]});
    }
    return from_triplets(cols, rows, std::move(t));
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) d(r, col_idx[k]) += values[k];
    }
    return d;
  }

  /// Rows [r0, r1) and columns [c0, c1).
  SparseMatrix block(int r0, int r1, int c0, int c1) const {
    SparseMatrix m(r1 - r0, c1 - c0);
    for (int r = r0; r < r1; ++r) {
      for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        if (col_idx[k] >= c0 && col_idx[k] < c1) {
          m.col_idx.push_back(col_idx[k] - c0);
          m.values.push_back(values[k]);
        }
      }
      m.row_ptr[r - r0 + 1] = static_cast<int>(m.values.size());
    }
    return m;
  }
};

/// Two-pass CSR assembly: declare the pattern, freeze it, then accumulate values.
class CsrBuilder {
 public:
  CsrBuilder(int rows, int cols) : rows_(rows), cols_(cols), pending_(static_cast<std::size_t>(rows)) {}

  void reserve_entry(int r, int c) { pending_[static_cast<std::size_t>(r)].push_back(c); }

  void freeze() {
    m_ = SparseMatrix(rows_, cols_);
    std::size_t total = 0;
    for (auto& row : pending_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      total += row.size();
    }
    m_.col_idx.reserve(total);
    for (int r = 0; r < rows_; ++r) {
      auto& row = pending_[static_cast<std::size_t>(r)];
      m_.col_idx.insert(m_.col_idx.end(), row.begin(), row.end());
      m_.row_ptr[r + 1] = static_cast<int>(m_.col_idx.size());
      std::vector<int>().swap(row);
    }
    m_.values.assign(m_.col_idx.size(), 0.0);
    pending_.clear();
    frozen_ = true;
  }

  void add(int r, int c, double v) {
    const auto b = m_.col_idx.begin() + m_.row_ptr[r];
    const auto e = m_.col_idx.begin() + m_.row_ptr[r + 1];
    const auto it = std::lower_bound(b, e, c);
    if (it == e || *it != c) throw Error("entry outside the frozen sparsity pattern");
    m_.values[static_cast<std::size_t>(it - m_.col_idx.begin())] += v;
  }

  bool frozen() const { return frozen_; }
  SparseMatrix release() { return std::move(m_); }

 private:
  int rows_;
  int cols_;
  std::vector<std::vector<int>> pending_;
  SparseMatrix m_;
  bool frozen_ = false;
};

/// Reusable sparse LU factorization with partial pivoting.
class Factorization {
 public:
  /// Reciprocal pivot-ratio threshold below which the matrix is reported singular.
  static constexpr double kSingularRcond = 1e-14;

  Factorization() = default;

  explicit Factorization(const SparseMatrix& a) : n_(a.rows) {
    if (a.rows != a.cols) throw InputError("factorize: matrix must be square");
    // UMFPACK reads compressed columns; the CSR arrays of A are the CSC arrays of A^T,
    // so the factors are those of A^T and solves request the transposed system.
    store_ = std::make_shared<Storage>();
    store_->ptr = a.row_ptr;
    store_->idx = a.col_idx;
    store_->val = a.values;
    if (n_ == 0) return;
    umfpack_di_defaults(store_->control);
    double info[UMFPACK_INFO];
    void* symbolic = nullptr;
    int status = umfpack_di_symbolic(n_, n_, store_->ptr.data(), store_->idx.data(),
                                     store_->val.data(), &symbolic, store_->control, info);
    if (status != UMFPACK_OK) {
      if (symbolic) umfpack_di_free_symbolic(&symbolic);
      throw SingularSystemError("symbolic factorization failed (status " +
                                    std::to_string(status) + ")",
                                -1);
    }
    void* numeric = nullptr;
    status = umfpack_di_numeric(store_->ptr.data(), store_->idx.data(), store_->val.data(), symbolic,
                                &numeric, store_->control, info);
    umfpack_di_free_symbolic(&symbolic);
    store_->numeric = numeric;
    rcond_ = info[UMFPACK_RCOND];
    if (status == UMFPACK_WARNING_singular_matrix || status != UMFPACK_OK ||
        !(rcond_ > kSingularRcond)) {
      const long pivot = weakest_pivot();
      throw SingularSystemError("singular system: pivot " + std::to_string(pivot) +
                                    " vanishes (rcond " + std::to_string(rcond_) + ")",
                                pivot);
    }
  }

  int size() const { return n_; }
  double rcond() const { return rcond_; }

  Vector solve(const Vector& b) const {
    if (b.size() != n_) throw InputError("factorization solve: dimension mismatch");
    Vector x = Vector::Zero(n_);
    if (n_ == 0) return x;
    double info[UMFPACK_INFO];
    const int status =
        umfpack_di_solve(UMFPACK_At, store_->ptr.data(), store_->idx.data(), store_->val.data(),
                         x.data(), b.data(), store_->numeric, store_->control, info);
    if (status != UMFPACK_OK) {
      throw SingularSystemError("sparse solve failed (status " + std::to_string(status) + ")", -1);
    }
    return x;
  }

 private:
  struct Storage {
    std::vector<int> ptr;
    std::vector<int> idx;
    std::vector<double> val;
    double control[UMFPACK_CONTROL];
    void* numeric = nullptr;
    ~Storage() {
      if (numeric) umfpack_di_free_numeric(&numeric);
    }
  };

  long weakest_pivot() const {
    if (!store_->numeric) return -1;
    int lnz = 0, unz = 0, nr = 0, nc = 0, nz_udiag = 0;
    if (umfpack_di_get_lunz(&lnz, &unz, &nr, &nc, &nz_udiag, store_->numeric) != UMFPACK_OK) {
      return -1;
    }
    std::vector<int> p(static_cast<std::size_t>(n_)), q(static_cast<std::size_t>(n_));
    std::vector<double> udiag(static_cast<std::size_t>(n_));
    int do_recip = 0;
    if (umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, p.data(),
                               q.data(), udiag.data(), &do_recip, nullptr,
                               store_->numeric) != UMFPACK_OK) {
      return -1;
    }
    std::size_t k = 0;
    for (std::size_t i = 1; i < udiag.size(); ++i) {
      if (std::abs(udiag[i]) < std::abs(udiag[k])) k = i;
    }
    // Columns of A^T are rows of A.
    return q[k];
  }

  int n_ = 0;
  double rcond_ = 1.0;
  std::shared_ptr<Storage> store_;
};

inline Factorization factorize(const SparseMatrix& a) { return Factorization(a); }

struct KrylovConfig {
  double tolerance = 1e-8;
  int max_iterations = 200;
  /// Relative size of |rho| or |omega| below which an iteration is declared broken down.
  double breakdown_threshold = 1e-14;

  void validate() const {
    if (!(tolerance > 0.0 && tolerance < 1.0)) throw InputError("Krylov tolerance must lie in (0,1)");
    if (max_iterations < 1) throw InputError("Krylov max iterations must be at least 1");
  }
};

enum class KrylovStatus { converged, max_iterations, breakdown };

inline const char* to_string(KrylovStatus s) {
  switch (s) {
    case KrylovStatus::converged: return "converged";
    case KrylovStatus::max_iterations: return "max-iterations";
    case KrylovStatus::breakdown: return "breakdown";
  }
  return "?";
}

struct KrylovResult {
  Vector solution;
  int iterations = 0;
  int restarts = 0;
  KrylovStatus status = KrylovStatus::max_iterations;
  /// Relative residual norms, starting with the initial residual.
  std::vector<double> residual_history;
  /// ||b - A x|| / ||b|| recomputed from the returned solution.
  double true_relative_residual = 0.0;

  bool converged() const { return status == KrylovStatus::converged; }
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// Unpreconditioned BiCGStab for a matrix-free operator, starting from x = 0.
/// A breakdown triggers one restart from the current iterate with a perturbed
/// shadow residual; a second breakdown is reported.
inline KrylovResult bicgstab(const LinearOperator& apply, const Vector& b, const KrylovConfig& cfg) {
  cfg.validate();
  if (!b.allFinite()) throw InputError("bicgstab: right-hand side is not finite");
  const Eigen::Index n = b.size();
  KrylovResult res;
  res.solution = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.status = KrylovStatus::converged;
    res.residual_history = {0.0};
    return res;
  }
  Vector& x = res.solution;
  Vector r = b;
  res.residual_history.push_back(1.0);

  const auto shadow = [&](const Vector& rr, bool perturb) {
    Vector s = rr;
    if (perturb) {
      const double amp = 0.5 * rr.norm() / std::sqrt(static_cast<double>(n));
      for (Eigen::Index i = 0; i < n; ++i) s[i] += (i % 2 == 0 ? amp : -amp);
    }
    return s;
  };

  Vector rhat = shadow(r, false);
  Vector p = Vector::Zero(n), v = Vector::Zero(n);
  double rho_old = 1.0, alpha = 1.0, omega = 1.0;
  bool broke_down = false;

  const auto restart = [&]() -> bool {
    if (res.restarts >= 1) return false;
    ++res.restarts;
    r = b - apply(x);
    rhat = shadow(r, true);
    p.setZero();
    v.setZero();
    rho_old = alpha = omega = 1.0;
    return true;
  };

  // A converged recursive residual is confirmed against the true residual.
  const auto confirm = [&]() {
    Vector rt = b - apply(x);
    if (rt.norm() / bnorm <= cfg.tolerance) return true;
    r = rt;
    rhat = r;
    p.setZero();
    v.setZero();
    rho_old = alpha = omega = 1.0;
    return false;
  };

  while (res.iterations < cfg.max_iterations) {
    const double rho = rhat.dot(r);
    if (std::abs(rho) <= cfg.breakdown_threshold * rhat.norm() * r.norm()) {
      if (!restart()) {
        broke_down = true;
        break;
      }
      continue;
    }
    const double beta = (rho / rho_old) * (alpha / omega);
    p = r + beta * (p - omega * v);
    v = apply(p);
    const double rv = rhat.dot(v);
    if (std::abs(rv) <= cfg.breakdown_threshold * rhat.norm() * v.norm() || rv == 0.0) {
      if (!restart()) {
        broke_down = true;
        break;
      }
      continue;
    }
    alpha = rho / rv;
    Vector s = r - alpha * v;
    ++res.iterations;
    if (s.norm() / bnorm <= cfg.tolerance) {
      x += alpha * p;
      r = s;
      res.residual_history.push_back(s.norm() / bnorm);
      if (confirm()) {
        res.status = KrylovStatus::converged;
        break;
      }
      continue;
    }
    const Vector t = apply(s);
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    x += alpha * p + omega * s;
    r = s - omega * t;
    res.residual_history.push_back(r.norm() / bnorm);
    if (r.norm() / bnorm <= cfg.tolerance) {
      if (confirm()) {
        res.status = KrylovStatus::converged;
        break;
      }
      continue;
    }
    if (std::abs(omega) <= cfg.breakdown_threshold) {
      if (!restart()) {
        broke_down = true;
        break;
      }
      continue;
    }
    rho_old = rho;
  }
  if (broke_down) res.status = KrylovStatus::breakdown;
  res.true_relative_residual = (b - apply(x)).norm() / bnorm;
  return res;
}

// --- MatrixMarket -----------------------------------------------------------

inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows << ' ' << a.cols << ' ' << a.nnz() << '\n';
  os.precision(17);
  for (int r = 0; r < a.rows; ++r) {
    for (int k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      os << r + 1 << ' ' << a.col_idx[k] + 1 << ' ' << a.values[k] << '\n';
    }
  }
}

inline void write_matrix_market(std::ostream& os, const Vector& v) {
  os << "%%MatrixMarket matrix array real general\n" << v.size() << " 1\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
}

namespace detail {
inline std::string next_data_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw InputError("MatrixMarket: unexpected end of input");
}
}  // namespace detail

inline SparseMatrix read_matrix_market(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket matrix coordinate real", 0) != 0) {
    throw InputError("MatrixMarket: expected a real coordinate matrix");
  }
  const bool symmetric = header.find("symmetric") != std::string::npos;
  std::istringstream dims(detail::next_data_line(is));
  int rows = 0, cols = 0, nnz = 0;
  if (!(dims >> rows >> cols >> nnz)) throw InputError("MatrixMarket: malformed size line");
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (int k = 0; k < nnz; ++k) {
    std::istringstream line(detail::next_data_line(is));
    int r = 0, c = 0;
    double v = 0.0;
    if (!(line >> r >> c >> v)) throw InputError("MatrixMarket: malformed entry");
    t.push_back({r - 1, c - 1, v});
    if (symmetric && r != c) t.push_back({c - 1, r - 1, v});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

inline Vector read_matrix_market_vector(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("%%MatrixMarket matrix array real", 0) != 0) {
    throw InputError("MatrixMarket: expected a real array");
  }
  std::istringstream dims(detail::next_data_line(is));
  int rows = 0, cols = 0;
  if (!(dims >> rows >> cols) || cols != 1) throw InputError("MatrixMarket: expected one column");
  Vector v(rows);
  for (int i = 0; i < rows; ++i) {
    std::istringstream line(detail::next_data_line(is));
    if (!(line >> v[i])) throw InputError("MatrixMarket: malformed value");
  }
  return v;
}

}  // namespace icdd

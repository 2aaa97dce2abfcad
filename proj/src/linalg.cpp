#include "pml/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pml/error.hpp"

namespace pml::linalg {

namespace {

constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
std::atomic<std::size_t> g_dense_limit{kUnlimited};

}  // namespace

DenseAllocationGuard::DenseAllocationGuard(std::size_t max_dim)
    : previous_(g_dense_limit.exchange(max_dim)) {}

DenseAllocationGuard::~DenseAllocationGuard() { g_dense_limit.store(previous_); }

void DenseAllocationGuard::check(std::size_t rows, std::size_t cols) {
  const std::size_t limit = g_dense_limit.load();
  if (rows > limit && cols > limit) {
    std::ostringstream msg;
    msg << "dense allocation of " << rows << "x" << cols
        << " exceeds the active guard limit " << limit;
    throw AllocationGuardError(msg.str());
  }
}

// ---------------------------------------------------------------------------
// SparseSymMatrix

SparseSymMatrix SparseSymMatrix::from_csr(std::size_t n,
                                          std::vector<std::int64_t> row_ptr,
                                          std::vector<Index> col_idx,
                                          std::vector<double> values) {
  if (row_ptr.size() != n + 1 || row_ptr.front() != 0 ||
      static_cast<std::size_t>(row_ptr.back()) != col_idx.size() ||
      col_idx.size() != values.size()) {
    throw ParameterError("inconsistent CSR array lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row_ptr[i + 1] < row_ptr[i]) throw ParameterError("row_ptr not monotone");
    for (auto e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const Index j = col_idx[e];
      if (j < 0 || static_cast<std::size_t>(j) >= n) {
        throw ParameterError("column index out of range in row " + std::to_string(i));
      }
      if (e > row_ptr[i] && col_idx[e - 1] >= j) {
        throw ParameterError("column indices not strictly increasing in row " +
                             std::to_string(i));
      }
      if (!(values[e] > 0.0) || !std::isfinite(values[e])) {
        throw ParameterError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") is not a positive finite weight");
      }
    }
  }
  // Structural and numerical symmetry.
  for (std::size_t i = 0; i < n; ++i) {
    for (auto e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const auto j = static_cast<std::size_t>(col_idx[e]);
      const auto first = col_idx.begin() + row_ptr[j];
      const auto last = col_idx.begin() + row_ptr[j + 1];
      const auto it = std::lower_bound(first, last, static_cast<Index>(i));
      if (it == last || *it != static_cast<Index>(i) ||
          values[it - col_idx.begin()] != values[e]) {
        throw ParameterError("matrix is not symmetric at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
    }
  }
  return SparseSymMatrix(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseSymMatrix SparseSymMatrix::from_entries(std::size_t n, std::vector<Triplet> entries) {
  std::vector<Triplet> upper;
  upper.reserve(entries.size());
  for (const auto& t : entries) {
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n) {
      throw ParameterError("entry index out of range");
    }
    if (t.value < 0.0 || !std::isfinite(t.value)) {
      throw ParameterError("negative or non-finite weight at (" + std::to_string(t.row) +
                           "," + std::to_string(t.col) + ")");
    }
    if (t.value == 0.0) continue;
    upper.push_back(t.row <= t.col ? t : Triplet{t.col, t.row, t.value});
  }
  std::sort(upper.begin(), upper.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t e = 1; e < upper.size(); ++e) {
    if (upper[e].row == upper[e - 1].row && upper[e].col == upper[e - 1].col) {
      throw ParameterError("duplicate entry (" + std::to_string(upper[e].row) + "," +
                           std::to_string(upper[e].col) + ")");
    }
  }
  return from_sorted_upper(n, upper);
}

SparseSymMatrix SparseSymMatrix::from_sorted_upper(std::size_t n,
                                                   std::span<const Triplet> upper) {
  std::vector<std::int64_t> lower_count(n, 0);
  std::vector<std::int64_t> row_ptr(n + 1, 0);
  for (const auto& t : upper) {
    ++row_ptr[t.row + 1];
    if (t.row != t.col) {
      ++row_ptr[t.col + 1];
      ++lower_count[t.col];
    }
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  const auto nnz = static_cast<std::size_t>(row_ptr.back());
  std::vector<Index> col_idx(nnz);
  std::vector<double> values(nnz);
  // Strictly-lower entries of row r come from upper entries (c, r) with c < r.
  // Visiting upper entries in row order appends them with ascending c; the
  // row's own upper part (diagonal first) follows them.
  std::vector<std::int64_t> lower_pos(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<std::int64_t> upper_pos(n);
  for (std::size_t r = 0; r < n; ++r) upper_pos[r] = row_ptr[r] + lower_count[r];
  for (const auto& t : upper) {
    auto& up = upper_pos[t.row];
    col_idx[up] = t.col;
    values[up] = t.value;
    ++up;
    if (t.row != t.col) {
      auto& lo = lower_pos[t.col];
      col_idx[lo] = t.row;
      values[lo] = t.value;
      ++lo;
    }
  }
  return SparseSymMatrix(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseSymMatrix SparseSymMatrix::from_dense(const Matrix& dense) {
  if (dense.rows() != dense.cols()) throw DimensionError("from_dense: matrix not square");
  const auto n = static_cast<std::size_t>(dense.rows());
  std::vector<Triplet> upper;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = i; j < dense.cols(); ++j) {
      const double v = dense(i, j);
      if (v != dense(j, i)) throw ParameterError("from_dense: matrix not symmetric");
      if (v < 0.0) throw ParameterError("from_dense: negative weight");
      if (v != 0.0) upper.push_back({static_cast<Index>(i), static_cast<Index>(j), v});
    }
  }
  return from_sorted_upper(n, upper);
}

SparseSymMatrix SparseSymMatrix::weighted_sum(
    std::span<const SparseSymMatrix* const> layers, std::span<const double> weights) {
  if (layers.empty() || layers.size() != weights.size()) {
    throw DimensionError("weighted_sum: need one weight per layer");
  }
  const std::size_t n = layers.front()->size();
  for (const auto* l : layers) {
    if (l->size() != n) throw DimensionError("weighted_sum: layer sizes differ");
  }
  std::vector<std::int64_t> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<double> acc(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<Index> cols;
  for (std::size_t i = 0; i < n; ++i) {
    cols.clear();
    for (std::size_t t = 0; t < layers.size(); ++t) {
      const auto& a = *layers[t];
      for (auto e = a.row_ptr()[i]; e < a.row_ptr()[i + 1]; ++e) {
        const Index j = a.col_idx()[e];
        if (!seen[j]) {
          seen[j] = 1;
          cols.push_back(j);
        }
        acc[j] += weights[t] * a.values()[e];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (Index j : cols) {
      if (acc[j] < 0.0) throw ParameterError("weighted_sum: negative result");
      if (acc[j] > 0.0) {
        col_idx.push_back(j);
        values.push_back(acc[j]);
      }
      acc[j] = 0.0;
      seen[j] = 0;
    }
    row_ptr.push_back(static_cast<std::int64_t>(col_idx.size()));
  }
  return SparseSymMatrix(n, std::move(row_ptr), std::move(col_idx), std::move(values));
}

Vector SparseSymMatrix::degrees() const {
  Vector d(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) s += values_[e];
    d[static_cast<Eigen::Index>(i)] = s;
  }
  return d;
}

void SparseSymMatrix::multiply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_) {
    throw DimensionError("spmv: vector length " + std::to_string(x.size()) +
                         " does not match matrix size " + std::to_string(n_));
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) s += values_[e] * x[col_idx_[e]];
    out[i] = s;
  }
}

Matrix SparseSymMatrix::to_dense() const {
  DenseAllocationGuard::check(n_, n_);
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    for (auto e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
      m(static_cast<Eigen::Index>(i), col_idx_[e]) = values_[e];
    }
  }
  return m;
}

std::size_t SparseSymMatrix::memory_bytes() const {
  return row_ptr_.size() * sizeof(std::int64_t) + col_idx_.size() * sizeof(Index) +
         values_.size() * sizeof(double);
}

Vector spmv(const SparseSymMatrix& a, const Vector& x) {
  Vector y(x.size());
  a.multiply({x.data(), static_cast<std::size_t>(x.size())},
             {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

// ---------------------------------------------------------------------------
// Dense

DenseSymMatrix::DenseSymMatrix(Matrix m) {
  if (m.rows() != m.cols()) throw DimensionError("DenseSymMatrix: matrix not square");
  DenseAllocationGuard::check(static_cast<std::size_t>(m.rows()),
                              static_cast<std::size_t>(m.cols()));
  if (m.size() > 0) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-12 * scale)) {
      throw DomainError("matrix is not symmetric (max asymmetry " + std::to_string(asym) +
                        ")");
    }
  }
  m_ = 0.5 * (m + m.transpose());
}

DenseSymMatrix DenseSymMatrix::identity(std::size_t n) {
  const auto s = static_cast<Eigen::Index>(n);
  return DenseSymMatrix(Matrix::Identity(s, s));
}

DenseSymMatrix DenseSymMatrix::diagonal(const Vector& d) {
  return DenseSymMatrix(Matrix(d.asDiagonal()));
}

EigenDecomposition dense_sym_eig(const DenseSymMatrix& a) {
  if (a.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error("symmetric eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

DenseSymMatrix sym_matrix_function(const DenseSymMatrix& h,
                                   const std::function<double(double)>& f) {
  const auto eig = dense_sym_eig(h);
  Vector fl = eig.eigenvalues.unaryExpr(f);
  return DenseSymMatrix(eig.eigenvectors * fl.asDiagonal() * eig.eigenvectors.transpose());
}

DenseSymMatrix sym_matrix_power(const DenseSymMatrix& h, double p) {
  if (p == 0.0) return DenseSymMatrix::identity(h.size());
  if (h.size() == 0) return h;
  const auto eig = dense_sym_eig(h);
  const double lmin = eig.eigenvalues.minCoeff();
  const double lmax_abs = eig.eigenvalues.cwiseAbs().maxCoeff();
  const bool integer_p = std::floor(p) == p;
  Vector powered(eig.eigenvalues.size());
  if (p < 0.0) {
    if (!(lmin > 1e-12)) {
      throw SingularityError("negative matrix power of a matrix that is not positive "
                             "definite (lambda_min = " + std::to_string(lmin) + ")",
                             lmin);
    }
    powered = eig.eigenvalues.array().pow(p);
  } else {
    const double floor_tol = 1e-12 * std::max(1.0, lmax_abs);
    for (Eigen::Index i = 0; i < powered.size(); ++i) {
      double l = eig.eigenvalues[i];
      if (l < 0.0 && !integer_p) {
        if (l < -floor_tol) {
          throw DomainError("non-integer power of a matrix with negative eigenvalue " +
                            std::to_string(l));
        }
        l = 0.0;
      }
      powered[i] = std::pow(l, p);
    }
  }
  return DenseSymMatrix(eig.eigenvectors * powered.asDiagonal() *
                        eig.eigenvectors.transpose());
}

// ---------------------------------------------------------------------------
// Orthonormalization

OrthonormalizeResult orthonormalize(const Matrix& v) {
  OrthonormalizeResult result;
  const Eigen::Index n = v.rows();
  Matrix q(n, v.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Vector w = v.col(j);
    const double original = w.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < kept; ++i) {
        w -= q.col(i).dot(w) * q.col(i);
      }
    }
    const double remaining = w.norm();
    if (original == 0.0 || remaining < 1e-12 * original) {
      result.deficient.push_back(static_cast<std::size_t>(j));
      continue;
    }
    q.col(kept++) = w / remaining;
  }
  result.basis = q.leftCols(kept);
  return result;
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  const auto qa = orthonormalize(a).basis;
  const auto qb = orthonormalize(b).basis;
  if (qa.cols() != qb.cols()) return M_PI / 2;
  if (qa.cols() == 0) return 0.0;
  // sin of the largest angle is the spectral norm of the part of span(b)
  // outside span(a); this stays accurate for tiny angles.
  const Matrix residual = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = svd.singularValues()(0);
  return std::asin(std::min(1.0, s));
}

}  // namespace pml::linalg

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pml::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::int32_t;

// Scoped limit on dense allocations made through this library. While a guard
// is alive, requesting a dense matrix whose row AND column counts both exceed
// `max_dim` throws AllocationGuardError. Tall-skinny blocks (n x k) remain
// allowed. Guards nest; the innermost limit wins.
class DenseAllocationGuard {
 public:
  explicit DenseAllocationGuard(std::size_t max_dim);
  ~DenseAllocationGuard();
  DenseAllocationGuard(const DenseAllocationGuard&) = delete;
  DenseAllocationGuard& operator=(const DenseAllocationGuard&) = delete;

  static void check(std::size_t rows, std::size_t cols);

 private:
  std::size_t previous_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Symmetric nonnegative matrix in compressed sparse row form. Both triangles
// are stored, indices are sorted within rows, no explicit zeros. Immutable
// after construction.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  // Validates every invariant; throws ParameterError on violation.
  static SparseSymMatrix from_csr(std::size_t n, std::vector<std::int64_t> row_ptr,
                                  std::vector<Index> col_idx,
                                  std::vector<double> values);

  // Each unordered pair appears once (either orientation); the mirror entry
  // is added automatically. Zero values are dropped, duplicate pairs and
  // negative values are rejected.
  static SparseSymMatrix from_entries(std::size_t n, std::vector<Triplet> entries);

  // Upper-triangle entries (row <= col) already sorted by (row, col) and
  // unique. Linear time; used by the samplers.
  static SparseSymMatrix from_sorted_upper(std::size_t n,
                                           std::span<const Triplet> upper);

  static SparseSymMatrix from_dense(const Matrix& dense);

  // Entrywise sum_t weights[t] * layers[t].
  static SparseSymMatrix weighted_sum(std::span<const SparseSymMatrix* const> layers,
                                      std::span<const double> weights);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return col_idx_.size(); }
  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  // Row sums.
  Vector degrees() const;

  // out = A * x. Summation runs row by row in ascending column order.
  void multiply(std::span<const double> x, std::span<double> out) const;

  Matrix to_dense() const;

  // Approximate heap footprint of the CSR arrays.
  std::size_t memory_bytes() const;

  friend bool operator==(const SparseSymMatrix&, const SparseSymMatrix&) = default;

 private:
  SparseSymMatrix(std::size_t n, std::vector<std::int64_t> row_ptr,
                  std::vector<Index> col_idx, std::vector<double> values)
      : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
        values_(std::move(values)) {}

  std::size_t n_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

Vector spmv(const SparseSymMatrix& a, const Vector& x);

// Real symmetric dense matrix. The constructor rejects input that is not
// symmetric to 1e-12 relative and stores the exact symmetric part.
class DenseSymMatrix {
 public:
  DenseSymMatrix() = default;
  explicit DenseSymMatrix(Matrix m);

  static DenseSymMatrix identity(std::size_t n);
  static DenseSymMatrix diagonal(const Vector& d);

  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const {
    return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix m_;
};

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, matching order
};

// Full symmetric eigendecomposition (Householder tridiagonalization followed
// by implicit symmetric QR).
EigenDecomposition dense_sym_eig(const DenseSymMatrix& a);

// V f(Lambda) V^T for a scalar function applied to the eigenvalues.
DenseSymMatrix sym_matrix_function(const DenseSymMatrix& h,
                                   const std::function<double(double)>& f);

// H^p through the eigendecomposition. p = 0 yields the identity. For p < 0
// the smallest eigenvalue must exceed 1e-12 (SingularityError otherwise).
// For p > 0 eigenvalues within roundoff of zero are clamped to zero;
// clearly negative eigenvalues are a DomainError unless p is an integer.
DenseSymMatrix sym_matrix_power(const DenseSymMatrix& h, double p);

struct OrthonormalizeResult {
  Matrix basis;                        // orthonormal columns that survived
  std::vector<std::size_t> deficient;  // input columns dropped as dependent
  bool rank_deficient() const { return !deficient.empty(); }
};

// Modified Gram-Schmidt with one reorthogonalization pass. A column whose
// norm after projection falls below 1e-12 times its original norm is
// reported in `deficient` and left out of `basis`.
OrthonormalizeResult orthonormalize(const Matrix& v);

// Largest principal angle (radians) between the column spans of a and b.
// Both inputs are orthonormalized first; spans of different dimension
// return pi/2.
double max_principal_angle(const Matrix& a, const Matrix& b);

}  // namespace pml::linalg

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pml/graphs.hpp"
#include "pml/linalg.hpp"

namespace pml::powermean {

using graphs::MultilayerGraph;
using graphs::ShiftedLaplacianOp;
using linalg::DenseSymMatrix;
using linalg::Matrix;
using linalg::Vector;

// ((1/T) sum x_i^p)^(1/p). p = 0 is the geometric mean, p = +inf the maximum
// and p = -inf the minimum. Zero entries are a DomainError for p <= 0.
double scalar_power_mean(std::span<const double> xs, double p);

// ((1/T) sum A_i^p)^(1/p) with every power taken through an
// eigendecomposition. p = 0 gives the log-Euclidean mean
// exp((1/T) sum log A_i). For p <= 0 every A_i must be positive definite.
DenseSymMatrix dense_power_mean(std::span<const DenseSymMatrix> as, double p);

// ---------------------------------------------------------------------------
// Polynomial Krylov approximation of A^p y.

struct PksmResult {
  Vector x;
  int krylov_dim = 0;
  bool converged = false;
  // The Krylov space became invariant, so x is exact up to roundoff.
  bool exact_subspace = false;
};

using ApplyFn = std::function<void(std::span<const double>, std::span<double>)>;

// Lanczos with full reorthogonalization. Each step forms the tridiagonal
// projection H_s from the recurrence coefficients and the candidate
// x_s = ||y|| V_s H_s^p e_1, stopping once ||x_s - x_{s-1}|| <= tol ||x_s||
// or s reaches max_dim. Requires p < 0 and y != 0.
PksmResult pksm_apply(std::size_t n, const ApplyFn& apply, const Vector& y, double p,
                      double tol, int max_dim);
PksmResult pksm_apply(const ShiftedLaplacianOp& a, const Vector& y, double p, double tol,
                      int max_dim);
// pksm_apply on every column of ys, sharing each pass over the adjacency.
std::vector<PksmResult> pksm_apply_block(const ShiftedLaplacianOp& a, const Matrix& ys, double p,
                                         double tol, int max_dim);

// ---------------------------------------------------------------------------
// Eigenpairs of the power mean Laplacian.

struct PowerMeanSolveSpec {
  double p = -10.0;
  std::optional<double> shift;  // defaults to graphs::shift_for(p)
  int k = 1;
  std::optional<double> krylov_tol;  // defaults to outer_tol / 10
  int krylov_max_dim = 60;
  double outer_tol = 1e-8;
  int outer_max_iter = 2000;
  // Extra block columns iterated alongside the k wanted ones; only the
  // first k Ritz pairs are tested and returned.
  int guard_vectors = 4;
  std::uint64_t seed = 0;
  // Workers for the per-layer inner solves; results do not depend on it.
  int threads = 1;
  std::optional<std::chrono::steady_clock::time_point> deadline;

  double resolved_shift() const;
  double resolved_krylov_tol() const;
  void validate() const;
};

// Matrix-free action of (1/T) sum_t (L_sym^(t) + eps I)^p.
class PowerMeanOp {
 public:
  PowerMeanOp(std::vector<ShiftedLaplacianOp> layers, PowerMeanSolveSpec spec);
  PowerMeanOp(const MultilayerGraph& graph, PowerMeanSolveSpec spec);

  std::size_t size() const { return layers_.front().size(); }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<ShiftedLaplacianOp>& layers() const { return layers_; }
  const PowerMeanSolveSpec& spec() const { return spec_; }

  struct Application {
    Vector y;
    std::vector<int> krylov_dims;  // per layer
    bool all_converged = true;
  };
  // Requires spec().p < 0.
  Application apply(const Vector& x) const;
  struct BlockApplication {
    Matrix y;
    std::vector<int> krylov_dims;  // per layer, largest over the columns
    bool all_converged = true;
  };
  BlockApplication apply_block(const Matrix& x) const;

  // Dense (1/T) sum_t (L^(t))^p, then ^(1/p): the oracle path.
  DenseSymMatrix to_dense_mean() const;

 private:
  std::vector<ShiftedLaplacianOp> layers_;
  PowerMeanSolveSpec spec_;
};

struct EigenSolveResult {
  Vector eigenvalues;  // of L_p, ascending
  Matrix eigenvectors;  // n x k, orthonormal
  int outer_iterations = 0;
  std::vector<int> krylov_dims;  // largest inner dimension used, per layer
  Vector residuals;  // relative residual per pair, in M_p^p
  bool converged = false;
  bool dense_path = false;
};

// The k smallest eigenpairs of L_p. For p < 0 this is subspace iteration on
// M_p^p over k + guard_vectors columns with Rayleigh-Ritz extraction each step; for p >= 0 it falls back to
// the dense power mean and a full eigendecomposition.
EigenSolveResult power_mean_eigs(const PowerMeanOp& op);
EigenSolveResult power_mean_eigs(const MultilayerGraph& graph, const PowerMeanSolveSpec& spec);

// Dense reference for any p: dense_power_mean followed by dense_sym_eig.
EigenSolveResult power_mean_eigs_dense(const PowerMeanOp& op);

// Whether the informative eigenvectors sit at the bottom of the expected
// power mean Laplacian: m_p(mu + eps) < 1 + eps with mu_t = 1 - rho_t.
// p may be +-infinity.
bool recovery_condition(double p, double eps, std::span<const double> rhos);

}  // namespace pml::powermean

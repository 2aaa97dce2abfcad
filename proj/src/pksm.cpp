#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pml/error.hpp"
#include "pml/powermean.hpp"

namespace pml::powermean {

namespace {

// ||y|| H^p e_1 for the tridiagonal H with the given diagonal and
// off-diagonal coefficients.
// ||y|| H^p e_1 for integer p < 0 through repeated solves with the LDL^T
// factorization of the tridiagonal H.
Vector projected_integer_power(const std::vector<double>& alpha, const std::vector<double>& beta,
                               int solves, double scale) {
  const std::size_t s = alpha.size();
  std::vector<double> d(s), l(s);
  d[0] = alpha[0];
  for (std::size_t i = 1; i < s; ++i) {
    l[i] = beta[i - 1] / d[i - 1];
    d[i] = alpha[i] - l[i] * beta[i - 1];
  }
  const double dmin = *std::min_element(d.begin(), d.end());
  if (!(dmin > 1e-12 * std::max(1.0, std::abs(alpha[0])))) {
    throw std::logic_error("PKSM: projected matrix lost definiteness (pivot = " +
                           std::to_string(dmin) + ")");
  }
  Vector x = Vector::Zero(static_cast<Eigen::Index>(s));
  x[0] = scale;
  for (int r = 0; r < solves; ++r) {
    for (std::size_t i = 1; i < s; ++i) x[i] -= l[i] * x[i - 1];
    for (std::size_t i = 0; i < s; ++i) x[i] /= d[i];
    for (std::size_t i = s - 1; i > 0; --i) x[i - 1] -= l[i] * x[i];
  }
  return x;
}

Vector projected_power(const std::vector<double>& alpha, const std::vector<double>& beta,
                       double p, double scale) {
  if (p == std::round(p) && p >= -64.0) {
    return projected_integer_power(alpha, beta, static_cast<int>(-p), scale);
  }
  const auto s = static_cast<Eigen::Index>(alpha.size());
  const Vector diag = Eigen::Map<const Vector>(alpha.data(), s);
  const Vector sub = s > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), s - 1)) : Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw std::logic_error("PKSM: tridiagonal eigensolver failed");
  const Vector& lambda = eig.eigenvalues();
  // The projection of a positive definite operator is positive definite;
  // reaching this means the operator was not.
  if (!(lambda.minCoeff() > 1e-12)) {
    throw std::logic_error("PKSM: projected matrix lost definiteness (lambda_min = " +
                           std::to_string(lambda.minCoeff()) + ")");
  }
  const Matrix& q = eig.eigenvectors();
  const Vector weights = lambda.array().pow(p) * q.row(0).transpose().array();
  return scale * (q * weights);
}

void check_pksm_args(std::size_t n, Eigen::Index rows, double p, int max_dim) {
  if (!(p < 0.0)) throw DomainError("pksm_apply requires p < 0");
  if (static_cast<std::size_t>(rows) != n) {
    throw DimensionError("pksm_apply: vector length does not match operator size");
  }
  if (max_dim < 1) throw ParameterError("pksm_apply: max_dim must be positive");
}

// One Lanczos run for A^p y, advanced one operator application at a time.
class LanczosRun {
 public:
  LanczosRun(const Vector& y, double p, double tol, int max_dim) : p_(p), tol_(tol) {
    y_norm_ = y.norm();
    if (!(y_norm_ > 0.0)) throw DomainError("pksm_apply: y must be nonzero");
    const auto rows = y.size();
    dim_cap_ = static_cast<int>(std::min<Eigen::Index>(max_dim, rows));
    basis_.resize(rows, dim_cap_);
    basis_.col(0) = y / y_norm_;
  }

  auto current() const { return basis_.col(step_); }

  // Takes w = A * current(); returns true once the run has finished.
  bool advance(Vector w) {
    const Eigen::Index j = step_;
    const int s = step_ + 1;
    const double a = basis_.col(j).dot(w);
    alpha_.push_back(a);
    w -= a * basis_.col(j);
    if (j > 0) w -= beta_[static_cast<std::size_t>(j - 1)] * basis_.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector proj = basis_.leftCols(s).transpose() * w;
      w.noalias() -= basis_.leftCols(s) * proj;
    }
    const double b = w.norm();
    scale_ = std::max({scale_, std::abs(a), b});

    Vector coeffs = projected_power(alpha_, beta_, p_, y_norm_);
    const bool breakdown = b < 1e-14 * std::max(1.0, scale_);
    bool converged = false;
    if (s > 1) {
      Vector padded = Vector::Zero(coeffs.size());
      padded.head(previous_.size()) = previous_;
      converged = (coeffs - padded).norm() <= tol_ * coeffs.norm();
    }
    if (converged || breakdown || s == dim_cap_) {
      result_.x = basis_.leftCols(s) * coeffs;
      result_.krylov_dim = s;
      result_.exact_subspace = breakdown;
      result_.converged = converged || breakdown;
      basis_.resize(0, 0);
      return true;
    }
    basis_.col(s) = w / b;
    beta_.push_back(b);
    previous_ = std::move(coeffs);
    ++step_;
    return false;
  }

  PksmResult& result() { return result_; }

 private:
  double p_, tol_;
  double y_norm_ = 0.0;
  int dim_cap_ = 0;
  int step_ = 0;
  Matrix basis_;
  std::vector<double> alpha_, beta_;
  Vector previous_;
  double scale_ = 0.0;
  PksmResult result_;
};

}  // namespace

PksmResult pksm_apply(std::size_t n, const ApplyFn& apply, const Vector& y, double p,
                      double tol, int max_dim) {
  check_pksm_args(n, y.size(), p, max_dim);
  LanczosRun run(y, p, tol, max_dim);
  Vector w(y.size());
  for (;;) {
    const Vector v = run.current();
    apply({v.data(), n}, {w.data(), n});
    if (run.advance(w)) return std::move(run.result());
  }
}

PksmResult pksm_apply(const ShiftedLaplacianOp& a, const Vector& y, double p, double tol,
                      int max_dim) {
  return pksm_apply(
      a.size(), [&a](std::span<const double> x, std::span<double> out) { a.apply(x, out); }, y,
      p, tol, max_dim);
}

std::vector<PksmResult> pksm_apply_block(const ShiftedLaplacianOp& a, const Matrix& ys, double p,
                                         double tol, int max_dim) {
  check_pksm_args(a.size(), ys.rows(), p, max_dim);
  std::vector<LanczosRun> runs;
  runs.reserve(static_cast<std::size_t>(ys.cols()));
  for (Eigen::Index c = 0; c < ys.cols(); ++c) runs.emplace_back(ys.col(c), p, tol, max_dim);
  std::vector<std::size_t> active(runs.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  while (!active.empty()) {
    Matrix block(ys.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) {
      block.col(static_cast<Eigen::Index>(c)) = runs[active[c]].current();
    }
    const Matrix applied = a.apply_block(block);
    std::vector<std::size_t> still;
    for (std::size_t c = 0; c < active.size(); ++c) {
      if (!runs[active[c]].advance(applied.col(static_cast<Eigen::Index>(c)))) {
        still.push_back(active[c]);
      }
    }
    active = std::move(still);
  }
  std::vector<PksmResult> out;
  out.reserve(runs.size());
  for (auto& r : runs) out.push_back(std::move(r.result()));
  return out;
}

}  // namespace pml::powermean

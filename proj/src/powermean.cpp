#include "pml/powermean.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "pml/error.hpp"
#include "pml/random.hpp"

namespace pml::powermean {

double scalar_power_mean(std::span<const double> xs, double p) {
  if (xs.empty()) throw ParameterError("power mean of an empty list");
  if (std::isnan(p)) throw ParameterError("power mean exponent is NaN");
  for (double x : xs) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw DomainError("power mean needs nonnegative finite entries");
    }
  }
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (p <= 0.0 && *lo == 0.0) {
    throw DomainError("power mean with p <= 0 needs strictly positive entries");
  }
  if (std::isinf(p)) return p > 0.0 ? *hi : *lo;
  const auto count = static_cast<double>(xs.size());
  if (p == 0.0) {
    double log_sum = 0.0;
    for (double x : xs) log_sum += std::log(x);
    return std::exp(log_sum / count);
  }
  // Factor out the extreme value that dominates the sum so large |p| stays
  // finite: max for p > 0, min for p < 0.
  const double ref = p > 0.0 ? *hi : *lo;
  if (ref == 0.0) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += std::pow(x / ref, p);
  return ref * std::pow(sum / count, 1.0 / p);
}

DenseSymMatrix dense_power_mean(std::span<const DenseSymMatrix> as, double p) {
  if (as.empty()) throw ParameterError("matrix power mean of an empty list");
  const std::size_t n = as.front().size();
  for (const auto& a : as) {
    if (a.size() != n) throw DimensionError("matrix power mean: sizes differ");
  }
  const auto count = static_cast<double>(as.size());
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix sum = Matrix::Zero(dim, dim);
  if (p == 0.0) {
    for (const auto& a : as) {
      const auto eig = linalg::dense_sym_eig(a);
      const double lmin = eig.eigenvalues.size() ? eig.eigenvalues.minCoeff() : 1.0;
      if (!(lmin > 1e-12)) {
        throw SingularityError("log-Euclidean mean needs positive definite matrices "
                               "(lambda_min = " + std::to_string(lmin) + ")",
                               lmin);
      }
      const Vector logs = eig.eigenvalues.array().log();
      sum += eig.eigenvectors * logs.asDiagonal() * eig.eigenvectors.transpose();
    }
    return linalg::sym_matrix_function(DenseSymMatrix(sum / count),
                                       [](double x) { return std::exp(x); });
  }
  for (const auto& a : as) sum += linalg::sym_matrix_power(a, p).matrix();
  return linalg::sym_matrix_power(DenseSymMatrix(sum / count), 1.0 / p);
}

bool recovery_condition(double p, double eps, std::span<const double> rhos) {
  if (rhos.empty()) throw ParameterError("recovery_condition: no layers");
  if (!(eps >= 0.0)) throw ParameterError("recovery_condition: shift must be nonnegative");
  std::vector<double> shifted;
  shifted.reserve(rhos.size());
  for (double rho : rhos) {
    if (!(rho >= -1.0 && rho <= 1.0)) {
      throw ParameterError("recovery_condition: rho outside [-1, 1]");
    }
    shifted.push_back(1.0 - rho + eps);
  }
  const double bound = 1.0 + eps;
  // For p <= 0 a zero entry drives the mean to its limit value 0.
  if (p <= 0.0 && *std::min_element(shifted.begin(), shifted.end()) == 0.0) return 0.0 < bound;
  return scalar_power_mean(shifted, p) < bound;
}

// ---------------------------------------------------------------------------

double PowerMeanSolveSpec::resolved_shift() const {
  return shift ? *shift : graphs::shift_for(p);
}

double PowerMeanSolveSpec::resolved_krylov_tol() const {
  return krylov_tol ? *krylov_tol : outer_tol / 10.0;
}

void PowerMeanSolveSpec::validate() const {
  if (!std::isfinite(p)) throw ParameterError("matrix solves need a finite exponent p");
  if (k < 1) throw ParameterError("k must be at least 1");
  if (!(outer_tol > 0.0) || !(resolved_krylov_tol() > 0.0)) {
    throw ParameterError("tolerances must be positive");
  }
  if (krylov_max_dim < 1 || outer_max_iter < 1) {
    throw ParameterError("iteration caps must be positive");
  }
  const double eps = resolved_shift();
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ParameterError("shift must be nonnegative");
  if (p <= 0.0 && !(eps > 0.0)) {
    throw ParameterError("p <= 0 needs a positive diagonal shift");
  }
  if (threads < 1) throw ParameterError("threads must be at least 1");
  if (guard_vectors < 0) throw ParameterError("guard_vectors must be nonnegative");
}

PowerMeanOp::PowerMeanOp(std::vector<ShiftedLaplacianOp> layers, PowerMeanSolveSpec spec)
    : layers_(std::move(layers)), spec_(std::move(spec)) {
  spec_.validate();
  if (layers_.empty()) throw ParameterError("power mean operator needs at least one layer");
  for (const auto& l : layers_) {
    if (l.size() != layers_.front().size()) throw DimensionError("layer sizes differ");
  }
}

PowerMeanOp::PowerMeanOp(const MultilayerGraph& graph, PowerMeanSolveSpec spec)
    : spec_(std::move(spec)) {
  spec_.validate();
  const double eps = spec_.resolved_shift();
  for (std::size_t t = 0; t < graph.num_layers(); ++t) {
    layers_.emplace_back(graph.layer_ptr(t), eps);
  }
}

PowerMeanOp::Application PowerMeanOp::apply(const Vector& x) const {
  const double p = spec_.p;
  const double tol = spec_.resolved_krylov_tol();
  const int max_dim = spec_.krylov_max_dim;
  std::vector<PksmResult> parts(layers_.size());
  if (spec_.threads > 1 && layers_.size() > 1) {
    std::vector<std::future<void>> pending;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec_.threads),
                                                      layers_.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pending.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t t = w; t < layers_.size(); t += workers) {
          parts[t] = pksm_apply(layers_[t], x, p, tol, max_dim);
        }
      }));
    }
    for (auto& f : pending) f.get();
  } else {
    for (std::size_t t = 0; t < layers_.size(); ++t) {
      parts[t] = pksm_apply(layers_[t], x, p, tol, max_dim);
    }
  }
  // Ordered reduction keeps the sum independent of scheduling.
  Application out;
  out.y = Vector::Zero(x.size());
  for (const auto& part : parts) {
    out.y += part.x;
    out.krylov_dims.push_back(part.krylov_dim);
    out.all_converged = out.all_converged && part.converged;
  }
  out.y /= static_cast<double>(layers_.size());
  return out;
}

PowerMeanOp::BlockApplication PowerMeanOp::apply_block(const Matrix& x) const {
  const double p = spec_.p;
  const double tol = spec_.resolved_krylov_tol();
  const int max_dim = spec_.krylov_max_dim;
  std::vector<std::vector<PksmResult>> parts(layers_.size());
  if (spec_.threads > 1 && layers_.size() > 1) {
    std::vector<std::future<void>> pending;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec_.threads),
                                                      layers_.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pending.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t t = w; t < layers_.size(); t += workers) {
          parts[t] = pksm_apply_block(layers_[t], x, p, tol, max_dim);
        }
      }));
    }
    for (auto& f : pending) f.get();
  } else {
    for (std::size_t t = 0; t < layers_.size(); ++t) {
      parts[t] = pksm_apply_block(layers_[t], x, p, tol, max_dim);
    }
  }
  BlockApplication out;
  out.y = Matrix::Zero(x.rows(), x.cols());
  for (const auto& part : parts) {
    int dim = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto& r = part[static_cast<std::size_t>(c)];
      out.y.col(c) += r.x;
      dim = std::max(dim, r.krylov_dim);
      out.all_converged = out.all_converged && r.converged;
    }
    out.krylov_dims.push_back(dim);
  }
  out.y /= static_cast<double>(layers_.size());
  return out;
}

DenseSymMatrix PowerMeanOp::to_dense_mean() const {
  std::vector<DenseSymMatrix> dense;
  dense.reserve(layers_.size());
  for (const auto& l : layers_) dense.push_back(l.to_dense());
  return dense_power_mean(dense, spec_.p);
}

EigenSolveResult power_mean_eigs_dense(const PowerMeanOp& op) {
  const auto k = static_cast<Eigen::Index>(op.spec().k);
  if (static_cast<std::size_t>(k) > op.size()) {
    throw ParameterError("requested " + std::to_string(k) + " eigenpairs of a " +
                         std::to_string(op.size()) + "-vertex graph");
  }
  // The mean of a single matrix is the matrix itself.
  const DenseSymMatrix mean =
      op.num_layers() == 1 ? op.layers().front().to_dense() : op.to_dense_mean();
  const auto eig = linalg::dense_sym_eig(mean);
  EigenSolveResult result;
  result.eigenvalues = eig.eigenvalues.head(k);
  result.eigenvectors = eig.eigenvectors.leftCols(k);
  result.residuals = Vector::Zero(k);
  result.krylov_dims.assign(op.num_layers(), 0);
  result.converged = true;
  result.dense_path = true;
  return result;
}

namespace {

Matrix random_block(std::size_t n, Eigen::Index cols, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.normal();
  }
  return x;
}

// Orthonormal n x k basis of span(y); dependent columns are replaced by
// fresh random directions.
Matrix orthonormal_block(const Matrix& y, Rng& rng) {
  auto ortho = linalg::orthonormalize(y);
  while (ortho.basis.cols() < y.cols()) {
    Matrix padded(y.rows(), y.cols());
    padded.leftCols(ortho.basis.cols()) = ortho.basis;
    padded.rightCols(y.cols() - ortho.basis.cols()) =
        random_block(static_cast<std::size_t>(y.rows()), y.cols() - ortho.basis.cols(), rng);
    ortho = linalg::orthonormalize(padded);
  }
  return ortho.basis;
}

}  // namespace

EigenSolveResult power_mean_eigs(const PowerMeanOp& op) {
  const auto& spec = op.spec();
  const std::size_t n = op.size();
  if (static_cast<std::size_t>(spec.k) > n) {
    throw ParameterError("requested " + std::to_string(spec.k) + " eigenpairs of a " +
                         std::to_string(n) + "-vertex graph");
  }
  if (spec.p >= 0.0) return power_mean_eigs_dense(op);

  const auto k = static_cast<Eigen::Index>(spec.k);
  const auto m = static_cast<Eigen::Index>(
      std::min<std::size_t>(n, static_cast<std::size_t>(spec.k + spec.guard_vectors)));
  Rng rng(spec.seed);
  Matrix x = orthonormal_block(random_block(n, m, rng), rng);

  EigenSolveResult result;
  result.krylov_dims.assign(op.num_layers(), 0);
  for (int iter = 1; iter <= spec.outer_max_iter; ++iter) {
    if (spec.deadline && std::chrono::steady_clock::now() > *spec.deadline) {
      throw TimeoutError("power mean eigensolver exceeded its deadline after " +
                         std::to_string(iter - 1) + " iterations");
    }
    const auto applied = op.apply_block(x);
    for (std::size_t t = 0; t < applied.krylov_dims.size(); ++t) {
      result.krylov_dims[t] = std::max(result.krylov_dims[t], applied.krylov_dims[t]);
    }
    // Rayleigh-Ritz on span(x): the Ritz values of M_p^p come out ascending,
    // reverse them so the dominant pair (smallest of L_p) is first.
    Matrix g = x.transpose() * applied.y;
    g = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> small(g);
    const Vector theta = small.eigenvalues().reverse();
    const Matrix rotation = small.eigenvectors().rowwise().reverse();
    const Matrix ritz_x = x * rotation;
    const Matrix ritz_y = applied.y * rotation;

    Vector residuals(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      residuals[j] = (ritz_y.col(j) - theta[j] * ritz_x.col(j)).norm() / std::abs(theta[j]);
    }
    result.outer_iterations = iter;
    result.residuals = residuals;
    result.eigenvectors = ritz_x.leftCols(k);
    result.eigenvalues =
        theta.head(k).unaryExpr([&](double t) { return std::pow(t, 1.0 / spec.p); });
    if (residuals.maxCoeff() <= spec.outer_tol) {
      result.converged = true;
      break;
    }
    x = orthonormal_block(ritz_y, rng);
  }
  return result;
}

EigenSolveResult power_mean_eigs(const MultilayerGraph& graph, const PowerMeanSolveSpec& spec) {
  return power_mean_eigs(PowerMeanOp(graph, spec));
}

}  // namespace pml::powermean

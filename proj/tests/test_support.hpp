#pragma once

#include <cmath>
#include <cstdint>

#include "pml/linalg.hpp"
#include "pml/random.hpp"

namespace pml::testing {

using linalg::Matrix;
using linalg::Vector;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
inline Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  return qr.householderQ() * Matrix::Identity(n, n);
}

// SPD matrix with eigenvalues spread log-uniformly over [1, cond]; the
// endpoints are always present.
inline Matrix random_spd(Eigen::Index n, double cond, Rng& rng) {
  Vector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = i == 0 ? 0.0 : (i == 1 ? 1.0 : rng.uniform());
    lambda[i] = std::pow(cond, t);
  }
  const Matrix q = random_orthogonal(n, rng);
  Matrix h = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

inline Matrix random_symmetric(Eigen::Index n, Rng& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

// Random nonnegative symmetric matrix with zero diagonal at the given
// density.
inline Matrix random_adjacency(Eigen::Index n, double density, Rng& rng) {
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (rng.uniform() < density) w(i, j) = w(j, i) = 0.1 + rng.uniform();
    }
  }
  return w;
}

}  // namespace pml::testing

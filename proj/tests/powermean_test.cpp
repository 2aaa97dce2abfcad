#include "pml/powermean.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pml/error.hpp"
#include "pml/sbm.hpp"
#include "test_support.hpp"

namespace pml::powermean {
namespace {

using graphs::shift_for;
using linalg::SparseSymMatrix;
using pml::testing::random_matrix;
using pml::testing::random_orthogonal;

constexpr double kInf = std::numeric_limits<double>::infinity();

double mean_of(std::initializer_list<double> xs, double p) {
  const std::vector<double> v(xs);
  return scalar_power_mean(v, p);
}

std::shared_ptr<const SparseSymMatrix> share(SparseSymMatrix a) {
  return std::make_shared<const SparseSymMatrix>(std::move(a));
}

TEST(ScalarPowerMean, Examples) {
  EXPECT_DOUBLE_EQ(mean_of({1, 3}, 1), 2.0);
  EXPECT_DOUBLE_EQ(mean_of({2, 8}, 0), 4.0);
  EXPECT_DOUBLE_EQ(mean_of({1, 1.0 / 3.0}, -1), 0.5);
  EXPECT_EQ(mean_of({0.2, 1.0}, -kInf), 0.2);
  EXPECT_EQ(mean_of({0.2, 1.0}, kInf), 1.0);
}

TEST(ScalarPowerMean, ZeroEntriesNeedPositiveExponent) {
  EXPECT_THROW(mean_of({0.0, 1.0}, -1), DomainError);
  EXPECT_THROW(mean_of({0.0, 1.0}, 0), DomainError);
  EXPECT_THROW(mean_of({0.0, 1.0}, -kInf), DomainError);
  EXPECT_DOUBLE_EQ(mean_of({0.0, 4.0}, 2), std::sqrt(8.0));
  EXPECT_THROW(mean_of({}, 1), ParameterError);
  EXPECT_THROW(mean_of({-1.0}, 1), DomainError);
}

TEST(ScalarPowerMean, LargeExponentsStayFinite) {
  EXPECT_NEAR(mean_of({1e10, 2e10}, 50), 2e10 * std::pow(0.5 * (1 + std::pow(0.5, 50)), 1.0 / 50),
              1e-3);
  EXPECT_GT(mean_of({1e-10, 1.0}, -50), 1e-10);
}

TEST(ScalarPowerMean, NondecreasingInExponent) {
  Rng rng(31);
  const double grid[] = {-kInf, -10, -5, -2, -1, 0, 1, 2, 5, 10, kInf};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> xs(1 + rng.below(6));
    for (auto& x : xs) x = std::exp(4.0 * (rng.uniform() - 0.5));
    double previous = -kInf;
    for (double p : grid) {
      const double m = scalar_power_mean(xs, p);
      EXPECT_GE(m, previous * (1 - 1e-14)) << "p = " << p;
      previous = m;
    }
  }
}

TEST(DensePowerMean, CommutingDiagonalExamples) {
  Vector a(2), b(2);
  a << 1, 4;
  b << 4, 1;
  const DenseSymMatrix as[] = {DenseSymMatrix::diagonal(a), DenseSymMatrix::diagonal(b)};
  const auto harmonic = dense_power_mean(as, -1.0);
  EXPECT_NEAR(harmonic(0, 0), 1.6, 1e-14);
  EXPECT_NEAR(harmonic(1, 1), 1.6, 1e-14);
  EXPECT_NEAR(harmonic(0, 1), 0.0, 1e-14);
  const auto arithmetic = dense_power_mean(as, 1.0);
  EXPECT_NEAR(arithmetic(0, 0), 2.5, 1e-14);
  EXPECT_NEAR(arithmetic(1, 1), 2.5, 1e-14);
}

TEST(DensePowerMean, MeanOfOneIsTheMatrix) {
  Rng rng(32);
  const DenseSymMatrix a(Matrix(0.5 * pml::testing::random_spd(12, 4.0, rng)));
  for (double p : {-10.0, -2.0, -1.0, 0.5, 1.0, 3.0, 10.0}) {
    const DenseSymMatrix as[] = {a};
    EXPECT_LE((dense_power_mean(as, p).matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-10)
        << "p = " << p;
  }
}

TEST(DensePowerMean, ZeroExponentIsLogEuclidean) {
  Vector a(2), b(2);
  a << 2, 1;
  b << 8, 4;
  const DenseSymMatrix as[] = {DenseSymMatrix::diagonal(a), DenseSymMatrix::diagonal(b)};
  const auto m = dense_power_mean(as, 0.0);
  EXPECT_NEAR(m(0, 0), 4.0, 1e-13);
  EXPECT_NEAR(m(1, 1), 2.0, 1e-13);
}

TEST(DensePowerMean, NegativeExponentNeedsDefiniteInput) {
  Vector a(2);
  a << 0, 1;
  const DenseSymMatrix as[] = {DenseSymMatrix::diagonal(a)};
  EXPECT_THROW(dense_power_mean(as, -1.0), SingularityError);
  EXPECT_THROW(dense_power_mean(as, 0.0), SingularityError);
}

TEST(DensePowerMean, CommutingFamiliesReduceToScalarMeans) {
  Rng rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(20));
    const std::size_t layers = 1 + rng.below(4);
    const Matrix q = random_orthogonal(n, rng);
    std::vector<Vector> spectra;
    std::vector<DenseSymMatrix> as;
    for (std::size_t t = 0; t < layers; ++t) {
      Vector lambda(n);
      for (auto& l : lambda) l = 0.5 + 1.5 * rng.uniform();
      spectra.push_back(lambda);
      as.emplace_back(Matrix(q * lambda.asDiagonal() * q.transpose()));
    }
    for (double p : {-10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0}) {
      const auto m = dense_power_mean(as, p);
      Vector expected(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> xs;
        for (const auto& s : spectra) xs.push_back(s[i]);
        expected[i] = scalar_power_mean(xs, p);
      }
      const Vector got = (q.transpose() * m.matrix() * q).diagonal();
      EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-10) << "p = " << p;
    }
  }
}

// ---------------------------------------------------------------------------
// PKSM

ShiftedLaplacianOp ring_laplacian(std::size_t n, double shift) {
  std::vector<linalg::Triplet> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({static_cast<linalg::Index>(i), static_cast<linalg::Index>((i + 1) % n), 1.0});
  }
  return ShiftedLaplacianOp(share(SparseSymMatrix::from_entries(n, edges)), shift);
}

TEST(Pksm, ScalarOperatorNeedsOneStep) {
  const double c = 3.0;
  const ApplyFn scaled = [c](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  };
  Rng rng(34);
  const Vector y = random_matrix(25, 1, rng);
  const auto r = pksm_apply(25, scaled, y, -2.5, 1e-12, 60);
  EXPECT_LE((r.x - std::pow(c, -2.5) * y).norm(), 1e-14 * y.norm());
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.exact_subspace);
  EXPECT_EQ(r.krylov_dim, 1);
}

TEST(Pksm, DiagonalGraphOperatorIsScalar) {
  // Disjoint edges: every vertex has degree 1, so with shift eps the
  // operator maps (1, 1) on an edge to eps (1, 1).
  const auto op = ShiftedLaplacianOp(
      share(SparseSymMatrix::from_entries(4, {{0, 1, 1.0}, {2, 3, 1.0}})), 0.5);
  const Vector y = Vector::Ones(4);
  const auto r = pksm_apply(op, y, -3.0, 1e-12, 10);
  EXPECT_LE((r.x - std::pow(0.5, -3.0) * y).norm(), 1e-12);
  EXPECT_EQ(r.krylov_dim, 1);
}

TEST(Pksm, EigenvectorInputConvergesAfterOneStep) {
  const auto op = ring_laplacian(16, std::log(3.0));
  Vector y(16);
  for (int i = 0; i < 16; ++i) y[i] = (i % 2 == 0) ? 1.0 : -1.0;  // eigenvalue 2 + eps
  const auto r = pksm_apply(op, y, -2.0, 1e-12, 60);
  EXPECT_EQ(r.krylov_dim, 1);
  EXPECT_LE((r.x - std::pow(2.0 + std::log(3.0), -2.0) * y).norm(), 1e-13 * y.norm());
}

TEST(Pksm, MatchesDenseOracleOnSampledLayer) {
  sbm::Case1Params params;
  params.k = 2;
  params.cluster_size = 100;
  params.layers = {{0.1, 0.02}};
  params.seed = 35;
  const auto s = sbm::sample_case1(params);
  const double p = -5.0;
  const ShiftedLaplacianOp op(s.graph.layer_ptr(0), shift_for(p));
  Rng rng(36);
  const Vector y = random_matrix(200, 1, rng);
  const auto r = pksm_apply(op, y, p, 1e-12, 60);
  const Vector exact = linalg::sym_matrix_power(op.to_dense(), p).matrix() * y;
  EXPECT_TRUE(r.converged);
  EXPECT_LE((r.x - exact).norm(), 1e-8 * exact.norm());
}

TEST(Pksm, ErrorDecreasesWithKrylovDimension) {
  Rng rng(37);
  for (int trial = 0; trial < 6; ++trial) {
    sbm::Case1Params params;
    params.k = 2;
    params.cluster_size = 60;
    params.layers = {{0.2, 0.05}};
    params.seed = 100 + static_cast<std::uint64_t>(trial);
    const auto s = sbm::sample_case1(params);
    const double p = -1.0 - 9.0 * rng.uniform();
    const ShiftedLaplacianOp op(s.graph.layer_ptr(0), shift_for(p));
    const Vector y = random_matrix(120, 1, rng);
    const Vector exact = linalg::sym_matrix_power(op.to_dense(), p).matrix() * y;
    double previous = kInf;
    for (int dim = 1; dim <= 30; ++dim) {
      const auto r = pksm_apply(op, y, p, 1e-300, dim);
      const double err = (r.x - exact).norm();
      EXPECT_LE(err, previous * (1 + 1e-8) + 1e-13 * exact.norm())
          << "dim " << dim << ", relative error " << err / exact.norm();
      previous = err;
    }
  }
}

TEST(Pksm, RejectsBadArguments) {
  const auto op = ring_laplacian(8, 0.5);
  EXPECT_THROW(pksm_apply(op, Vector::Ones(8), 1.0, 1e-8, 10), DomainError);
  EXPECT_THROW(pksm_apply(op, Vector::Zero(8), -1.0, 1e-8, 10), DomainError);
  EXPECT_THROW(pksm_apply(op, Vector::Ones(7), -1.0, 1e-8, 10), DimensionError);
}

TEST(Pksm, ReportsNonConvergenceAtDimensionCap) {
  const auto op = ring_laplacian(200, 0.01);
  Rng rng(38);
  const auto r = pksm_apply(op, random_matrix(200, 1, rng), -10.0, 1e-14, 3);
  EXPECT_EQ(r.krylov_dim, 3);
  EXPECT_FALSE(r.converged);
}

TEST(Pksm, BlockMatchesColumnByColumn) {
  sbm::Case1Params params;
  params.k = 2;
  params.cluster_size = 60;
  params.layers = {{0.2, 0.05}};
  params.seed = 39;
  const auto s = sbm::sample_case1(params);
  Rng rng(40);
  const Matrix ys = random_matrix(120, 4, rng);
  for (double p : {-2.0, -2.5}) {
    const ShiftedLaplacianOp op(s.graph.layer_ptr(0), shift_for(p));
    const auto block = pksm_apply_block(op, ys, p, 1e-12, 60);
    ASSERT_EQ(block.size(), 4u);
    for (Eigen::Index c = 0; c < 4; ++c) {
      const auto single = pksm_apply(op, ys.col(c), p, 1e-12, 60);
      const auto& r = block[static_cast<std::size_t>(c)];
      EXPECT_EQ(r.krylov_dim, single.krylov_dim);
      EXPECT_LE((r.x - single.x).norm(), 1e-10 * single.x.norm());
    }
  }
}

// ---------------------------------------------------------------------------
// Eigensolver

sbm::Case1Params expected_case1(std::vector<sbm::EdgeProbabilities> layers, int k = 2,
                                std::size_t cluster_size = 50) {
  sbm::Case1Params params;
  params.k = k;
  params.cluster_size = cluster_size;
  params.layers = std::move(layers);
  return params;
}

TEST(PowerMeanEigs, SingleExpectedLayer) {
  const auto params = expected_case1({{0.8, 0.2}});
  PowerMeanSolveSpec spec;
  spec.p = -10.0;
  spec.k = 2;
  spec.seed = 1;
  const auto graph = sbm::expected_graph_case1(params);
  const auto r = power_mean_eigs(graph, spec);
  const double eps = shift_for(-10.0);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.eigenvalues[0], eps, 1e-8);
  EXPECT_NEAR(r.eigenvalues[1], 0.4 + eps, 1e-8);
  EXPECT_LT(linalg::max_principal_angle(r.eigenvectors, sbm::case1_indicators(params)), 1e-7);
}

TEST(PowerMeanEigs, CommutingLayersGiveScalarMeans) {
  const auto params = expected_case1({{0.8, 0.2}, {0.3, 0.25}}, 3, 20);
  for (double p : {-1.0, -2.0, -5.0, -10.0}) {
    PowerMeanSolveSpec spec;
    spec.p = p;
    spec.k = 3;
    const double eps = shift_for(p);
    const auto r = power_mean_eigs(sbm::expected_graph_case1(params), spec);
    ASSERT_TRUE(r.converged);
    std::vector<double> expected;
    for (int i = 0; i < 60; ++i) {
      std::vector<double> per_layer;
      for (const auto& l : params.layers) {
        per_layer.push_back(sbm::case1_shifted_spectrum(3, 20, sbm::block_contrast(l.p_in, l.p_out, 3), eps)[i]);
      }
      expected.push_back(scalar_power_mean(per_layer, p));
    }
    std::sort(expected.begin(), expected.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.eigenvalues[i], expected[static_cast<std::size_t>(i)], 1e-8);
  }
}

TEST(PowerMeanEigs, CaseTwoExpectedTripleSpansClusterIndicators) {
  sbm::Case2Params params;
  params.cluster_size = 15;
  params.p_in = 0.8;
  params.p_out = 0.2;
  const auto graph = sbm::expected_graph_case2(params);
  Matrix target = Matrix::Zero(45, 3);
  target.col(0).setOnes();
  for (int i = 0; i < 15; ++i) {
    target(i, 1) = target(i, 2) = -1.0;
    target(15 + i, 1) = 1.0;
    target(30 + i, 2) = 1.0;
  }
  for (double p : {-1.0, -2.0, -5.0, -10.0}) {
    PowerMeanSolveSpec spec;
    spec.p = p;
    spec.k = 3;
    const auto r = power_mean_eigs(graph, spec);
    ASSERT_TRUE(r.converged) << "p = " << p;
    EXPECT_LT(linalg::max_principal_angle(r.eigenvectors, target), 1e-7) << "p = " << p;
  }
}

TEST(PowerMeanEigs, AgreesWithDenseOracle) {
  Rng rng(39);
  for (int trial = 0; trial < 4; ++trial) {
    sbm::Case1Params params = expected_case1({{0.3, 0.05}, {0.1, 0.08}}, 2, 40);
    params.seed = 200 + static_cast<std::uint64_t>(trial);
    const auto s = sbm::sample_case1(params);
    PowerMeanSolveSpec spec;
    spec.p = -2.0;
    spec.k = 2;
    spec.seed = rng.next();
    const PowerMeanOp op(s.graph, spec);
    const auto fast = power_mean_eigs(op);
    const auto dense = power_mean_eigs_dense(op);
    ASSERT_TRUE(fast.converged);
    EXPECT_FALSE(fast.dense_path);
    EXPECT_TRUE(dense.dense_path);
    EXPECT_LE((fast.eigenvalues - dense.eigenvalues).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT(linalg::max_principal_angle(fast.eigenvectors, dense.eigenvectors), 1e-6);
    EXPECT_LE(fast.residuals.maxCoeff(), spec.outer_tol);
  }
}

TEST(PowerMeanEigs, GuardVectorsDoNotChangeTheAnswer) {
  sbm::Case1Params params = expected_case1({{0.3, 0.05}, {0.1, 0.08}}, 2, 40);
  params.seed = 210;
  const auto s = sbm::sample_case1(params);
  PowerMeanSolveSpec spec;
  spec.p = -5.0;
  spec.k = 2;
  spec.guard_vectors = 0;
  const auto plain = power_mean_eigs(s.graph, spec);
  spec.guard_vectors = 4;
  const auto guarded = power_mean_eigs(s.graph, spec);
  ASSERT_TRUE(plain.converged);
  ASSERT_TRUE(guarded.converged);
  EXPECT_EQ(guarded.eigenvectors.cols(), 2);
  EXPECT_LE((plain.eigenvalues - guarded.eigenvalues).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(linalg::max_principal_angle(plain.eigenvectors, guarded.eigenvectors), 1e-6);
  EXPECT_LE(guarded.outer_iterations, plain.outer_iterations);
  spec.guard_vectors = -1;
  EXPECT_THROW(power_mean_eigs(s.graph, spec), ParameterError);
}

TEST(PowerMeanEigs, NonNegativeExponentsUseDensePath) {
  const auto graph = sbm::expected_graph_case1(expected_case1({{0.8, 0.2}, {0.6, 0.3}}));
  for (double p : {0.0, 1.0, 2.0}) {
    PowerMeanSolveSpec spec;
    spec.p = p;
    spec.k = 2;
    const auto r = power_mean_eigs(graph, spec);
    EXPECT_TRUE(r.dense_path);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.eigenvectors.cols(), 2);
  }
}

TEST(PowerMeanEigs, SameSeedSameResult) {
  sbm::Case1Params params = expected_case1({{0.3, 0.05}, {0.05, 0.2}}, 2, 40);
  params.seed = 7;
  const auto s = sbm::sample_case1(params);
  PowerMeanSolveSpec spec;
  spec.p = -5.0;
  spec.k = 2;
  spec.seed = 99;
  const auto a = power_mean_eigs(s.graph, spec);
  spec.threads = 2;
  const auto b = power_mean_eigs(s.graph, spec);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.eigenvectors, b.eigenvectors);
  EXPECT_EQ(a.outer_iterations, b.outer_iterations);
}

TEST(PowerMeanEigs, NonConvergenceIsReported) {
  sbm::Case1Params params = expected_case1({{0.3, 0.05}, {0.05, 0.2}}, 2, 40);
  params.seed = 8;
  const auto s = sbm::sample_case1(params);
  PowerMeanSolveSpec spec;
  spec.p = -1.0;
  spec.k = 2;
  spec.outer_max_iter = 2;
  spec.outer_tol = 1e-14;
  const auto r = power_mean_eigs(s.graph, spec);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.outer_iterations, 2);
  EXPECT_EQ(r.residuals.size(), 2);
}

TEST(PowerMeanEigs, RejectsTooManyEigenpairs) {
  const auto graph = sbm::expected_graph_case1(expected_case1({{0.8, 0.2}}, 2, 2));
  PowerMeanSolveSpec spec;
  spec.k = 5;
  EXPECT_THROW(power_mean_eigs(graph, spec), ParameterError);
}

TEST(PowerMeanSolveSpec, Defaults) {
  PowerMeanSolveSpec spec;
  EXPECT_EQ(spec.krylov_max_dim, 60);
  EXPECT_EQ(spec.outer_tol, 1e-8);
  EXPECT_EQ(spec.outer_max_iter, 2000);
  EXPECT_DOUBLE_EQ(spec.resolved_krylov_tol(), 1e-9);
  EXPECT_DOUBLE_EQ(spec.resolved_shift(), std::log(11.0));
  spec.p = kInf;
  EXPECT_THROW(spec.validate(), ParameterError);
}

// ---------------------------------------------------------------------------
// Recovery condition

TEST(RecoveryCondition, Examples) {
  const double rhos[] = {0.8, -1.0};
  EXPECT_FALSE(recovery_condition(1.0, 0.0, rhos));
  EXPECT_NEAR(mean_of({0.2, 2.0}, 1.0), 1.1, 1e-15);
  EXPECT_TRUE(recovery_condition(-1.0, std::log(2.0), rhos));
  EXPECT_NEAR(mean_of({0.2 + std::log(2.0), 2.0 + std::log(2.0)}, -1.0), 1.3414, 1e-4);
  const double mixed[] = {0.1, -0.5, -0.3};
  EXPECT_TRUE(recovery_condition(-kInf, 0.0, mixed));
  EXPECT_TRUE(recovery_condition(-kInf, 5.0, mixed));
}

TEST(RecoveryCondition, ImpliesAllSmallerExponents) {
  Rng rng(40);
  const double grid[] = {-kInf, -10, -5, -2, -1, 0, 1, 2, 5, 10, kInf};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> rhos(1 + rng.below(5));
    for (auto& r : rhos) r = -0.99 + 1.99 * rng.uniform();
    const bool fixed_eps = rng.below(2) == 0;
    const double eps0 = 2.0 * rng.uniform();
    for (std::size_t i = 0; i < std::size(grid); ++i) {
      const double p = grid[i];
      const double eps_p = fixed_eps ? eps0 : shift_for(p);
      if (!std::isfinite(eps_p) || !recovery_condition(p, eps_p, rhos)) continue;
      for (std::size_t j = 0; j < i; ++j) {
        const double q = grid[j];
        const double eps_q = fixed_eps ? eps0 : shift_for(q);
        if (!std::isfinite(eps_q)) continue;
        EXPECT_TRUE(recovery_condition(q, eps_q, rhos)) << "p = " << p << ", q = " << q;
      }
    }
  }
}

}  // namespace
}  // namespace pml::powermean

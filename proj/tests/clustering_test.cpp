#include "pml/clustering.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "pml/error.hpp"
#include "pml/sbm.hpp"
#include "test_support.hpp"

namespace pml::clustering {
namespace {

using pml::testing::random_matrix;

TEST(ClusteringError, Examples) {
  const std::vector<int> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  EXPECT_EQ(clustering_error(truth, truth), 0.0);
  const std::vector<int> relabelled{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  EXPECT_EQ(clustering_error(relabelled, truth), 0.0);
  std::vector<int> flipped = truth;
  flipped[7] = 0;
  EXPECT_DOUBLE_EQ(clustering_error(flipped, truth), 0.1);
}

TEST(ClusteringError, SymmetricAndRelabellingInvariant) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(6));
    std::vector<int> a(30), b(30);
    for (auto& x : a) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    for (auto& x : b) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<int> a_relabelled(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) a_relabelled[i] = perm[static_cast<std::size_t>(a[i])];
    const double e = clustering_error(a, b);
    EXPECT_EQ(e, clustering_error(b, a));
    EXPECT_EQ(e, clustering_error(a_relabelled, b));
    EXPECT_EQ(e, clustering_error(b, a_relabelled));
  }
}

TEST(ClusteringError, RejectsMismatchesAndTooManyLabels) {
  EXPECT_THROW(clustering_error(std::vector<int>{0, 1}, std::vector<int>{0}), DimensionError);
  std::vector<int> many(9);
  std::iota(many.begin(), many.end(), 0);
  EXPECT_THROW(clustering_error(many, many), ParameterError);
}

TEST(KMeans, SeparatedCloudsAreRecovered) {
  Rng rng(42);
  Matrix pts(90, 2);
  std::vector<int> truth(90);
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  for (int i = 0; i < 90; ++i) {
    truth[static_cast<std::size_t>(i)] = i % 3;
    pts(i, 0) = centers[i % 3][0] + 0.3 * rng.normal();
    pts(i, 1) = centers[i % 3][1] + 0.3 * rng.normal();
  }
  const auto r = kmeans(pts, 3, 1);
  EXPECT_EQ(clustering_error(r.labels, truth), 0.0);
  EXPECT_FALSE(r.degenerate);
}

TEST(KMeans, EachPointItsOwnCluster) {
  Rng rng(43);
  const Matrix pts = random_matrix(6, 3, rng);
  const auto r = kmeans(pts, 6, 2);
  EXPECT_EQ(std::set<int>(r.labels.begin(), r.labels.end()).size(), 6u);
  EXPECT_EQ(r.wcss, 0.0);
}

TEST(KMeans, DuplicatedPairsStayTogether) {
  Matrix pts(4, 2);
  pts << 0, 0, 0, 0, 5, 5, 5, 5;
  const auto r = kmeans(pts, 2, 3);
  EXPECT_EQ(r.labels[0], r.labels[1]);
  EXPECT_EQ(r.labels[2], r.labels[3]);
  EXPECT_NE(r.labels[0], r.labels[2]);
}

TEST(KMeans, TooFewDistinctPointsIsFlagged) {
  Matrix pts(4, 1);
  pts << 1, 1, 1, 1;
  const auto r = kmeans(pts, 2, 4);
  EXPECT_TRUE(r.degenerate);
  EXPECT_THROW(kmeans(pts, 5, 4), ParameterError);
}

TEST(KMeans, DeterministicForSeed) {
  Rng rng(44);
  const Matrix pts = random_matrix(80, 3, rng);
  const auto a = kmeans(pts, 4, 17);
  const auto b = kmeans(pts, 4, 17);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.wcss, b.wcss);
}

sbm::Case1Params two_blocks(std::vector<sbm::EdgeProbabilities> layers, std::size_t size,
                            std::uint64_t seed = 0) {
  sbm::Case1Params p;
  p.k = 2;
  p.cluster_size = size;
  p.layers = std::move(layers);
  p.seed = seed;
  return p;
}

TEST(SpectralCluster, CaseTwoExpectedTripleIsExact) {
  sbm::Case2Params params;
  params.cluster_size = 20;
  params.p_in = 0.8;
  params.p_out = 0.2;
  PowerMeanSolveSpec spec;
  spec.p = -10.0;
  const auto r = spectral_cluster(sbm::expected_graph_case2(params), 3, spec);
  EXPECT_EQ(clustering_error(r.labels, sbm::case2_labels(params)), 0.0);
}

TEST(SpectralCluster, SingleExpectedLayerAnyExponent) {
  const auto params = two_blocks({{0.6, 0.2}}, 25);
  const auto graph = sbm::expected_graph_case1(params);
  for (double p : {-10.0, -2.0, -1.0, 0.0, 1.0, 5.0}) {
    PowerMeanSolveSpec spec;
    spec.p = p;
    const auto r = spectral_cluster(graph, 2, spec);
    EXPECT_EQ(clustering_error(r.labels, sbm::case1_labels(params)), 0.0) << "p = " << p;
  }
}

TEST(SpectralCluster, SampledCaseOneTwoInformativeLayers) {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sbm::sample_case1(two_blocks({{0.1, 0.02}, {0.1, 0.02}}, 100, seed));
    PowerMeanSolveSpec spec;
    spec.p = -10.0;
    spec.seed = seed;
    const auto r = spectral_cluster(s.graph, 2, spec);
    if (clustering_error(r.labels, s.truth.labels) <= 0.05) ++good;
  }
  EXPECT_GE(good, 45);
}

TEST(SpectralCluster, DeterministicForSeed) {
  const auto s = sbm::sample_case1(two_blocks({{0.1, 0.02}, {0.02, 0.1}}, 60, 5));
  PowerMeanSolveSpec spec;
  spec.p = -5.0;
  spec.seed = 12;
  const auto a = spectral_cluster(s.graph, 2, spec);
  const auto b = spectral_cluster(s.graph, 2, spec);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
}

TEST(SpectralCluster, ExpectedInputFollowsRecoveryCondition) {
  // Expected Case 1 layers: zero error when the condition holds, and when it
  // strictly fails the informative eigenvalue sits above the bulk.
  Rng rng(45);
  int held = 0, failed = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const double rho2 = -0.9 + 1.8 * rng.uniform();
    const double rho1 = -0.9 + 1.8 * rng.uniform();
    // For k = 2 with p_in + p_out = 0.5: rho = (p_in - p_out) / 0.5.
    const auto params = two_blocks({{0.25 * (1 + rho1), 0.25 * (1 - rho1)},
                                    {0.25 * (1 + rho2), 0.25 * (1 - rho2)}},
                                   15);
    const double p = trial % 2 == 0 ? -2.0 : 1.0;
    const double eps = graphs::shift_for(p);
    const double rhos[] = {rho1, rho2};
    const double mean = powermean::scalar_power_mean(
        std::vector<double>{1 - rho1 + eps, 1 - rho2 + eps}, p);
    if (std::abs(mean - (1 + eps)) < 1e-3) continue;
    PowerMeanSolveSpec spec;
    spec.p = p;
    const auto graph = sbm::expected_graph_case1(params);
    if (powermean::recovery_condition(p, eps, rhos)) {
      ++held;
      const auto r = spectral_cluster(graph, 2, spec);
      EXPECT_EQ(clustering_error(r.labels, sbm::case1_labels(params)), 0.0);
    } else {
      ++failed;
      spec.k = 3;
      const auto r = powermean::power_mean_eigs(graph, spec);
      EXPECT_NEAR(r.eigenvalues[1], 1 + eps, 1e-8);
      EXPECT_GT(mean, r.eigenvalues[1]);
    }
  }
  EXPECT_GT(held, 0);
  EXPECT_GT(failed, 0);
}

TEST(Baselines, SingleLayerMatchesSpectralClustering) {
  const auto s = sbm::sample_case1(two_blocks({{0.15, 0.03}}, 50, 6));
  PowerMeanSolveSpec spec;
  spec.p = 1.0;
  spec.seed = 3;
  const auto single = spectral_cluster(s.graph, 2, spec);
  const auto agg = baseline_agg(s.graph, 2, 3);
  const auto arith = baseline_arithmetic(s.graph, 2, 3);
  EXPECT_EQ(agg.labels, single.labels);
  EXPECT_EQ(arith.labels, single.labels);
  EXPECT_LE((agg.eigenvalues - single.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Baselines, IdenticalLayersAggregateToSingleLayer) {
  const auto s = sbm::sample_case1(two_blocks({{0.15, 0.03}}, 50, 7));
  const graphs::MultilayerGraph doubled({s.graph.layer(0), s.graph.layer(0)});
  const auto single = baseline_agg(s.graph, 2, 4);
  const auto twice = baseline_agg(doubled, 2, 4);
  EXPECT_EQ(single.labels, twice.labels);
  EXPECT_LE((single.eigenvalues - twice.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Baselines, ArithmeticMeanLosesToNegativePowerWithDisassortativeLayer) {
  double err_arith = 0.0, err_neg = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sbm::sample_case1(two_blocks({{0.1, 0.02}, {0.03, 0.09}}, 100, seed));
    PowerMeanSolveSpec spec;
    spec.p = -10.0;
    spec.seed = seed;
    err_neg += clustering_error(spectral_cluster(s.graph, 2, spec).labels, s.truth.labels);
    err_arith += clustering_error(baseline_arithmetic(s.graph, 2, seed).labels, s.truth.labels);
  }
  EXPECT_GT(err_arith / 50, err_neg / 50);
}

}  // namespace
}  // namespace pml::clustering

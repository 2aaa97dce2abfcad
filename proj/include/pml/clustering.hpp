#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pml/graphs.hpp"
#include "pml/linalg.hpp"
#include "pml/powermean.hpp"

namespace pml::clustering {

using graphs::MultilayerGraph;
using linalg::Matrix;
using linalg::Vector;
using powermean::EigenSolveResult;
using powermean::PowerMeanSolveSpec;

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;  // k x d
  double wcss = 0.0;
  // Fewer than k distinct points, so some cluster stayed empty.
  bool degenerate = false;
};

// Lloyd iterations from k-means++ seeding, best of `restarts` runs by
// within-cluster sum of squares. An empty cluster takes over the point
// farthest from its center. Deterministic given the seed.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 20,
                    int max_iter = 300);

struct ClusteringResult {
  std::vector<int> labels;
  Matrix embedding;    // n x k
  Vector eigenvalues;  // k, ascending
  EigenSolveResult solve;
  double wcss = 0.0;
  bool degenerate = false;
};

// Rows of the k smallest eigenvectors of the power mean Laplacian, clustered
// by k-means. spec.k is overridden by k; the k-means seed is spec.seed.
ClusteringResult spectral_cluster(const MultilayerGraph& graph, int k, PowerMeanSolveSpec spec);

// Spectral clustering on the normalized Laplacian of the mean adjacency.
ClusteringResult baseline_agg(const MultilayerGraph& graph, int k, std::uint64_t seed);

// The arithmetic mean of the layer Laplacians (power mean with p = 1).
ClusteringResult baseline_arithmetic(const MultilayerGraph& graph, int k, std::uint64_t seed);

// Fraction of misclassified vertices under the best matching of predicted
// to true labels. Exhaustive over label permutations, so at most 8 distinct
// labels on either side.
double clustering_error(std::span<const int> pred, std::span<const int> truth);

}  // namespace pml::clustering

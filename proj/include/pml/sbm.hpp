#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pml/graphs.hpp"
#include "pml/linalg.hpp"

namespace pml::sbm {

using graphs::MultilayerGraph;
using linalg::DenseSymMatrix;
using linalg::Matrix;
using linalg::SparseSymMatrix;
using linalg::Vector;

struct EdgeProbabilities {
  double p_in = 0.0;
  double p_out = 0.0;
};

// (p_in - p_out) / (p_in + (k-1) p_out).
double block_contrast(double p_in, double p_out, int k);

// k equal clusters of cluster_size vertices; vertex i belongs to cluster
// i / cluster_size. One (p_in, p_out) pair per layer.
struct Case1Params {
  int k = 2;
  std::size_t cluster_size = 100;
  std::vector<EdgeProbabilities> layers;
  std::uint64_t seed = 0;

  std::size_t size() const { return static_cast<std::size_t>(k) * cluster_size; }
  void validate() const;
};

// Three clusters and three layers. Layer t joins vertices with p_in when both
// lie in cluster t or both lie outside it, and with p_out otherwise.
struct Case2Params {
  std::size_t cluster_size = 100;
  double p_in = 0.1;
  double p_out = 0.02;
  std::uint64_t seed = 0;

  std::size_t size() const { return 3 * cluster_size; }
  void validate() const;
};

// Layer partitions follow a copy process: layer 0 labels are uniform over K,
// each later layer keeps a vertex's previous label with probability
// copy_prob and redraws it uniformly otherwise. Edges are planted partition
// with uniform expected degree `degree`, a fraction `mixing` of which ignores
// communities.
struct Case3Params {
  std::size_t n = 100;
  std::size_t layers = 10;
  int communities = 2;
  double copy_prob = 1.0;
  double mixing = 0.0;
  double degree = 10.0;
  std::uint64_t seed = 0;

  // degree (1 - mixing + mixing/K) K / n
  double p_in() const;
  // degree * mixing / n
  double p_out() const;
  void validate() const;
};

struct GroundTruth {
  std::vector<int> labels;  // consensus labels in [0, k)
  int k = 0;
  std::vector<std::vector<int>> layer_labels;  // per layer, Case 3 only
};

struct Sample {
  MultilayerGraph graph;
  GroundTruth truth;
};

std::vector<int> case1_labels(const Case1Params& params);
// Cluster index 0, 1, 2 per vertex.
std::vector<int> case2_labels(const Case2Params& params);

// Block-constant expected adjacency with p_in on the diagonal.
DenseSymMatrix expected_adjacency_case1(const Case1Params& params, std::size_t t);
DenseSymMatrix expected_adjacency_case2(const Case2Params& params, std::size_t t);

// Expected layers as sparse matrices (every entry stored), ready for the
// matrix-free operators.
MultilayerGraph expected_graph_case1(const Case1Params& params);
MultilayerGraph expected_graph_case2(const Case2Params& params);

// Columns 1, (k-1) 1_{C_i} - 1_{rest} for i = 2..k.
Matrix case1_indicators(const Case1Params& params);

// Eigenvalues of (1+shift) I - D^{-1/2} W D^{-1/2} for an expected Case 1
// layer with the given contrast: shift, then 1 - rho + shift (k-1 times),
// then 1 + shift (n-k times).
Vector case1_shifted_spectrum(int k, std::size_t cluster_size, double rho, double shift);

// Closed-form eigenstructure of one expected Case 2 layer.
struct Case2LayerEigen {
  double smallest;  // tau - 1
  double second;    // tau - (a + 2c - delta) / 2
  double bulk;      // tau, multiplicity 3n - 2
  // Entry ratio (on the layer's own cluster) / (on the other two) of the
  // eigenvectors for `smallest` and `second`.
  double smallest_ratio;
  double second_ratio;
};
Case2LayerEigen case2_layer_eigen(double p_in, double p_out, double shift);

// Independent Bernoulli edges for i < j with probability p_in when
// group[i] == group[j] and p_out otherwise. No self-loops. A layer with an
// isolated vertex is redrawn, up to 100 attempts.
SparseSymMatrix sample_planted_partition(const std::vector<int>& group, double p_in,
                                         double p_out, std::uint64_t seed);

Sample sample_case1(const Case1Params& params);
Sample sample_case2(const Case2Params& params);
Sample sample_case3(const Case3Params& params);

}  // namespace pml::sbm

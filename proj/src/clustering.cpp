#include "pml/clustering.hpp"

#include <algorithm>
#include <numeric>

#include "pml/error.hpp"

namespace pml::clustering {

namespace {

ClusteringResult cluster_embedding(EigenSolveResult solve, int k, std::uint64_t seed) {
  ClusteringResult result;
  auto km = kmeans(solve.eigenvectors, k, seed);
  result.labels = std::move(km.labels);
  result.wcss = km.wcss;
  result.degenerate = km.degenerate;
  result.embedding = solve.eigenvectors;
  result.eigenvalues = solve.eigenvalues;
  result.solve = std::move(solve);
  return result;
}

}  // namespace

ClusteringResult spectral_cluster(const MultilayerGraph& graph, int k, PowerMeanSolveSpec spec) {
  spec.k = k;
  return cluster_embedding(powermean::power_mean_eigs(graph, spec), k, spec.seed);
}

ClusteringResult baseline_agg(const MultilayerGraph& graph, int k, std::uint64_t seed) {
  const MultilayerGraph aggregate({graphs::aggregate_adjacency(graph)});
  PowerMeanSolveSpec spec;
  spec.p = 1.0;
  spec.seed = seed;
  return spectral_cluster(aggregate, k, spec);
}

ClusteringResult baseline_arithmetic(const MultilayerGraph& graph, int k, std::uint64_t seed) {
  PowerMeanSolveSpec spec;
  spec.p = 1.0;
  spec.seed = seed;
  return spectral_cluster(graph, k, spec);
}

double clustering_error(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("clustering_error: label vectors differ in length");
  }
  if (pred.empty()) throw ParameterError("clustering_error: empty labelling");
  const auto check = [](std::span<const int> labels) {
    const int lo = *std::min_element(labels.begin(), labels.end());
    if (lo < 0) throw ParameterError("clustering_error: labels must be nonnegative");
    return *std::max_element(labels.begin(), labels.end()) + 1;
  };
  const int k = std::max(check(pred), check(truth));
  if (k > 8) {
    throw ParameterError("clustering_error: " + std::to_string(k) +
                         " labels exceed the exhaustive matching limit of 8; use an "
                         "assignment solver (Hungarian method) instead");
  }
  const auto ku = static_cast<std::size_t>(k);
  std::vector<std::size_t> confusion(ku * ku, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++confusion[static_cast<std::size_t>(pred[i]) * ku + static_cast<std::size_t>(truth[i])];
  }
  std::vector<int> perm(ku);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t a = 0; a < ku; ++a) {
      agree += confusion[a * ku + static_cast<std::size_t>(perm[a])];
    }
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(pred.size() - best) / static_cast<double>(pred.size());
}

}  // namespace pml::clustering

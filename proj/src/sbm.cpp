#include "pml/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pml/error.hpp"
#include "pml/random.hpp"

namespace pml::sbm {

namespace {

constexpr int kMaxAttempts = 100;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

Matrix block_matrix(const std::vector<int>& group, double p_in, double p_out) {
  const auto n = static_cast<Eigen::Index>(group.size());
  linalg::DenseAllocationGuard::check(group.size(), group.size());
  Matrix w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      w(i, j) = group[static_cast<std::size_t>(i)] == group[static_cast<std::size_t>(j)] ? p_in
                                                                                        : p_out;
    }
  }
  return w;
}

std::vector<int> case2_layer_groups(const Case2Params& params, std::size_t t) {
  const auto labels = case2_labels(params);
  std::vector<int> group(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    group[i] = labels[i] == static_cast<int>(t) ? 0 : 1;
  }
  return group;
}

}  // namespace

double block_contrast(double p_in, double p_out, int k) {
  if (k < 1) throw ParameterError("block_contrast: k must be positive");
  const double denom = p_in + (k - 1) * p_out;
  if (!(denom > 0.0)) throw ParameterError("block_contrast: layer has no edges");
  return (p_in - p_out) / denom;
}

void Case1Params::validate() const {
  if (k < 1) throw ParameterError("Case 1 needs k >= 1");
  if (cluster_size < 1) throw ParameterError("Case 1 needs a positive cluster size");
  if (layers.empty()) throw ParameterError("Case 1 needs at least one layer");
  for (const auto& l : layers) {
    check_probability(l.p_in, "p_in");
    check_probability(l.p_out, "p_out");
  }
}

void Case2Params::validate() const {
  if (cluster_size < 1) throw ParameterError("Case 2 needs a positive cluster size");
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  if (!(p_out > 0.0 && p_out <= p_in)) {
    throw ParameterError("Case 2 needs 0 < p_out <= p_in");
  }
}

double Case3Params::p_in() const {
  return degree * (1.0 - mixing + mixing / communities) * communities / static_cast<double>(n);
}

double Case3Params::p_out() const { return degree * mixing / static_cast<double>(n); }

void Case3Params::validate() const {
  if (n < 2) throw ParameterError("Case 3 needs n >= 2");
  if (layers < 1) throw ParameterError("Case 3 needs at least one layer");
  if (communities < 1) throw ParameterError("Case 3 needs at least one community");
  check_probability(copy_prob, "copy probability");
  check_probability(mixing, "mixing");
  if (!(degree > 0.0)) throw ParameterError("Case 3 expected degree must be positive");
  if (p_in() > 1.0 || p_out() > 1.0) {
    throw ParameterError("Case 3 edge probabilities exceed 1 (p_in = " + std::to_string(p_in()) +
                         ", p_out = " + std::to_string(p_out()) + ")");
  }
}

std::vector<int> case1_labels(const Case1Params& params) {
  std::vector<int> labels(params.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i / params.cluster_size);
  }
  return labels;
}

std::vector<int> case2_labels(const Case2Params& params) {
  std::vector<int> labels(params.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<int>(i / params.cluster_size);
  }
  return labels;
}

DenseSymMatrix expected_adjacency_case1(const Case1Params& params, std::size_t t) {
  params.validate();
  const auto& l = params.layers.at(t);
  return DenseSymMatrix(block_matrix(case1_labels(params), l.p_in, l.p_out));
}

DenseSymMatrix expected_adjacency_case2(const Case2Params& params, std::size_t t) {
  params.validate();
  if (t > 2) throw ParameterError("Case 2 has layers 0, 1, 2");
  return DenseSymMatrix(block_matrix(case2_layer_groups(params, t), params.p_in, params.p_out));
}

MultilayerGraph expected_graph_case1(const Case1Params& params) {
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < params.layers.size(); ++t) {
    layers.push_back(SparseSymMatrix::from_dense(expected_adjacency_case1(params, t).matrix()));
  }
  return MultilayerGraph(std::move(layers));
}

MultilayerGraph expected_graph_case2(const Case2Params& params) {
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < 3; ++t) {
    layers.push_back(SparseSymMatrix::from_dense(expected_adjacency_case2(params, t).matrix()));
  }
  return MultilayerGraph(std::move(layers));
}

Matrix case1_indicators(const Case1Params& params) {
  const auto labels = case1_labels(params);
  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix chi(n, params.k);
  chi.col(0).setOnes();
  for (int c = 1; c < params.k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      chi(i, c) = labels[static_cast<std::size_t>(i)] == c ? params.k - 1.0 : -1.0;
    }
  }
  return chi;
}

Vector case1_shifted_spectrum(int k, std::size_t cluster_size, double rho, double shift) {
  const auto n = static_cast<Eigen::Index>(k) * static_cast<Eigen::Index>(cluster_size);
  Vector lambda(n);
  lambda[0] = shift;
  for (Eigen::Index i = 1; i < k; ++i) lambda[i] = 1.0 - rho + shift;
  for (Eigen::Index i = k; i < n; ++i) lambda[i] = 1.0 + shift;
  std::sort(lambda.begin(), lambda.end());
  return lambda;
}

Case2LayerEigen case2_layer_eigen(double p_in, double p_out, double shift) {
  const double alpha = p_in + 2.0 * p_out;
  const double beta = 2.0 * p_in + p_out;
  const double a = p_in / alpha;
  const double b = p_out / std::sqrt(alpha * beta);
  const double c = p_in / beta;
  const double delta = std::sqrt((a - 2.0 * c) * (a - 2.0 * c) + 8.0 * b * b);
  const double tau = 1.0 + shift;
  Case2LayerEigen e{};
  e.smallest = tau - 1.0;
  e.second = tau - (a + 2.0 * c - delta) / 2.0;
  e.bulk = tau;
  e.smallest_ratio = std::sqrt(alpha / beta);
  e.second_ratio = (a - 2.0 * c - delta) / (2.0 * b);
  return e;
}

SparseSymMatrix sample_planted_partition(const std::vector<int>& group, double p_in,
                                         double p_out, std::uint64_t seed) {
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  const auto n = static_cast<long long>(group.size());
  const double p_max = std::max(p_in, p_out);
  std::vector<linalg::Triplet> upper;
  std::vector<char> touched(group.size());

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, 0x5b3, static_cast<std::uint64_t>(attempt)));
    upper.clear();
    std::fill(touched.begin(), touched.end(), 0);
    if (p_max > 0.0 && n > 1) {
      // Walk the strict upper triangle row by row, jumping geometric gaps at
      // rate p_max and thinning each candidate to its own probability.
      const double log_q = std::log1p(-p_max);
      long long i = 0, j = 0;
      for (;;) {
        long long skip = 0;
        if (p_max < 1.0) {
          const double g = std::floor(std::log(rng.uniform_open_zero()) / log_q);
          skip = g > 4.0e18 ? static_cast<long long>(4.0e18) : static_cast<long long>(g);
        }
        j += skip + 1;
        while (j >= n) {
          ++i;
          if (i >= n - 1) break;
          j = j - n + i + 1;
        }
        if (i >= n - 1) break;
        const double p = group[static_cast<std::size_t>(i)] == group[static_cast<std::size_t>(j)]
                             ? p_in
                             : p_out;
        if (p == p_max || rng.uniform() * p_max < p) {
          upper.push_back({static_cast<linalg::Index>(i), static_cast<linalg::Index>(j), 1.0});
          touched[static_cast<std::size_t>(i)] = 1;
          touched[static_cast<std::size_t>(j)] = 1;
        }
      }
    }
    if (std::all_of(touched.begin(), touched.end(), [](char c) { return c != 0; })) {
      return SparseSymMatrix::from_sorted_upper(group.size(), upper);
    }
  }
  throw Error("sampled layer kept an isolated vertex after " + std::to_string(kMaxAttempts) +
              " attempts (p_in = " + std::to_string(p_in) + ", p_out = " + std::to_string(p_out) +
              ")");
}

Sample sample_case1(const Case1Params& params) {
  params.validate();
  auto labels = case1_labels(params);
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < params.layers.size(); ++t) {
    layers.push_back(sample_planted_partition(labels, params.layers[t].p_in,
                                              params.layers[t].p_out, derive_seed(params.seed, t)));
  }
  return {MultilayerGraph(std::move(layers)), {std::move(labels), params.k, {}}};
}

Sample sample_case2(const Case2Params& params) {
  params.validate();
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < 3; ++t) {
    layers.push_back(sample_planted_partition(case2_layer_groups(params, t), params.p_in,
                                              params.p_out, derive_seed(params.seed, t)));
  }
  return {MultilayerGraph(std::move(layers)), {case2_labels(params), 3, {}}};
}

Sample sample_case3(const Case3Params& params) {
  params.validate();
  const auto k = static_cast<std::uint64_t>(params.communities);
  Rng rng(derive_seed(params.seed, 0xc3));
  std::vector<std::vector<int>> layer_labels(params.layers, std::vector<int>(params.n));
  for (std::size_t i = 0; i < params.n; ++i) {
    layer_labels[0][i] = static_cast<int>(rng.below(k));
  }
  for (std::size_t t = 1; t < params.layers; ++t) {
    for (std::size_t i = 0; i < params.n; ++i) {
      const bool copy = rng.uniform() < params.copy_prob;
      layer_labels[t][i] = copy ? layer_labels[t - 1][i] : static_cast<int>(rng.below(k));
    }
  }

  // Per-vertex mode across layers; ties go to the smallest label.
  std::vector<int> consensus(params.n);
  std::vector<std::size_t> counts(k);
  for (std::size_t i = 0; i < params.n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t t = 0; t < params.layers; ++t) {
      ++counts[static_cast<std::size_t>(layer_labels[t][i])];
    }
    consensus[i] = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                    counts.begin());
  }

  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < params.layers; ++t) {
    layers.push_back(sample_planted_partition(layer_labels[t], params.p_in(), params.p_out(),
                                              derive_seed(params.seed, t)));
  }
  return {MultilayerGraph(std::move(layers)),
          {std::move(consensus), params.communities, std::move(layer_labels)}};
}

}  // namespace pml::sbm

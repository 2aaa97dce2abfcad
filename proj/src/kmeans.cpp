#include <algorithm>
#include <limits>

#include "pml/clustering.hpp"
#include "pml/error.hpp"
#include "pml/random.hpp"

namespace pml::clustering {

namespace {

using Eigen::Index;

struct Run {
  std::vector<int> labels;
  Matrix centers;
  double wcss = 0.0;
};

double sq_dist(const Matrix& points, Index i, const Matrix& centers, Index c) {
  return (points.row(i) - centers.row(c)).squaredNorm();
}

Matrix seed_centers(const Matrix& points, int k, Rng& rng) {
  const Index n = points.rows();
  Matrix centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, sq_dist(points, i, centers, c - 1));
      total += d;
    }
    Index pick = n - 1;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        target -= d2[static_cast<std::size_t>(i)];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave target just above zero; take the last candidate
      // with positive weight.
      while (d2[static_cast<std::size_t>(pick)] == 0.0 && pick > 0) --pick;
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = points.row(pick);
  }
  return centers;
}

Run lloyd(const Matrix& points, Matrix centers, int max_iter) {
  const Index n = points.rows();
  const auto k = static_cast<int>(centers.rows());
  Run run;
  run.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(points, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      auto& label = run.labels[static_cast<std::size_t>(i)];
      if (label != best) {
        label = best;
        changed = true;
      }
      dist[static_cast<std::size_t>(i)] = best_d;
    }

    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int l : run.labels) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      // Move the farthest point whose cluster can spare it.
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        const auto l = static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)]);
        if (counts[l] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) {
          far = i;
        }
      }
      if (far < 0 || dist[static_cast<std::size_t>(far)] == 0.0) continue;
      --counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
      run.labels[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      dist[static_cast<std::size_t>(far)] = 0.0;
      changed = true;
    }

    Matrix sums = Matrix::Zero(k, points.cols());
    for (Index i = 0; i < n; ++i) sums.row(run.labels[static_cast<std::size_t>(i)]) += points.row(i);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    if (!changed) break;
  }
  run.wcss = 0.0;
  for (Index i = 0; i < n; ++i) {
    run.wcss += sq_dist(points, i, centers, run.labels[static_cast<std::size_t>(i)]);
  }
  run.centers = std::move(centers);
  return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts,
                    int max_iter) {
  if (k < 1) throw ParameterError("kmeans: k must be positive");
  if (static_cast<Index>(k) > points.rows()) {
    throw ParameterError("kmeans: k = " + std::to_string(k) + " exceeds the " +
                         std::to_string(points.rows()) + " points");
  }
  if (restarts < 1 || max_iter < 1) throw ParameterError("kmeans: restarts and max_iter >= 1");
  if (!points.allFinite()) throw DomainError("kmeans: points contain non-finite values");

  Run best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Run run = lloyd(points, seed_centers(points, k, rng), max_iter);
    if (!have_best || run.wcss < best.wcss) {
      best = std::move(run);
      have_best = true;
    }
  }
  KMeansResult result;
  result.labels = std::move(best.labels);
  result.centers = std::move(best.centers);
  result.wcss = best.wcss;
  std::vector<bool> used(static_cast<std::size_t>(k), false);
  for (int l : result.labels) used[static_cast<std::size_t>(l)] = true;
  result.degenerate = std::find(used.begin(), used.end(), false) != used.end();
  return result;
}

}  // namespace pml::clustering

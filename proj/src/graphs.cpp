#include "pml/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pml/error.hpp"

namespace pml::graphs {

namespace {

SparseSymMatrix induced_subgraph(const SparseSymMatrix& a,
                                 const std::vector<std::size_t>& kept) {
  std::vector<std::int64_t> new_index(a.size(), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) new_index[kept[i]] = static_cast<std::int64_t>(i);
  std::vector<linalg::Triplet> upper;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::size_t old = kept[i];
    for (auto e = a.row_ptr()[old]; e < a.row_ptr()[old + 1]; ++e) {
      const auto j = new_index[a.col_idx()[e]];
      if (j >= static_cast<std::int64_t>(i)) {
        upper.push_back({static_cast<linalg::Index>(i), static_cast<linalg::Index>(j),
                         a.values()[e]});
      }
    }
  }
  // kept is ascending, so the new column order matches the old one.
  return SparseSymMatrix::from_sorted_upper(kept.size(), upper);
}

}  // namespace

MultilayerGraph::MultilayerGraph(std::vector<SparseSymMatrix> layers) {
  std::vector<std::shared_ptr<const SparseSymMatrix>> shared;
  shared.reserve(layers.size());
  for (auto& l : layers) shared.push_back(std::make_shared<const SparseSymMatrix>(std::move(l)));
  *this = MultilayerGraph(std::move(shared));
}

MultilayerGraph::MultilayerGraph(std::vector<std::shared_ptr<const SparseSymMatrix>> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw ParameterError("a multilayer graph needs at least one layer");
  n_ = layers_.front()->size();
  for (std::size_t t = 0; t < layers_.size(); ++t) {
    if (!layers_[t]) throw ParameterError("null layer " + std::to_string(t));
    if (layers_[t]->size() != n_) {
      throw DimensionError("layer " + std::to_string(t) + " has " +
                           std::to_string(layers_[t]->size()) + " vertices, expected " +
                           std::to_string(n_));
    }
  }
}

double shift_for(double p) {
  if (p < 0.0) return std::log1p(std::abs(p));
  if (p == 0.0) return 1e-6;
  return 0.0;
}

ShiftedLaplacianOp::ShiftedLaplacianOp(std::shared_ptr<const SparseSymMatrix> adjacency,
                                       double shift)
    : adjacency_(std::move(adjacency)), shift_(shift) {
  if (!adjacency_) throw ParameterError("null adjacency");
  if (!(shift >= 0.0) || !std::isfinite(shift)) {
    throw ParameterError("shift must be finite and nonnegative");
  }
  const Vector d = adjacency_->degrees();
  std::vector<std::size_t> isolated;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) isolated.push_back(static_cast<std::size_t>(i));
  }
  if (!isolated.empty()) {
    std::ostringstream msg;
    msg << "isolated vertices (zero degree):";
    const std::size_t shown = std::min<std::size_t>(isolated.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << isolated[i];
    if (shown < isolated.size()) msg << " ... (" << isolated.size() << " total)";
    throw IsolatedVertexError(msg.str(), std::move(isolated));
  }
  inv_sqrt_deg_ = d.array().rsqrt();
  const auto& w = adjacency_->values();
  unit_weights_ = std::all_of(w.begin(), w.end(), [](double v) { return v == 1.0; });
}

void ShiftedLaplacianOp::apply(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = size();
  if (x.size() != n || out.size() != n) {
    throw DimensionError("operator applied to vector of length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(n));
  }
  const auto& row_ptr = adjacency_->row_ptr();
  const auto& col_idx = adjacency_->col_idx();
  const auto& values = adjacency_->values();
  const double* s = inv_sqrt_deg_.data();
  const double t = tau();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (auto e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const auto j = col_idx[e];
      acc += values[e] * s[j] * x[j];
    }
    out[i] = t * x[i] - s[i] * acc;
  }
}

Vector ShiftedLaplacianOp::apply(const Vector& x) const {
  Vector y(x.size());
  apply({x.data(), static_cast<std::size_t>(x.size())},
        {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

namespace {

using RowBlock = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// acc.row(i) += sum_e w_e * in.row(col_e) over the row's entries. Cols > 0
// fixes the block width at compile time; 0 means in.cols().
template <int Cols, bool UnitWeights>
void accumulate_rows(const linalg::SparseSymMatrix& a, const RowBlock& in, RowBlock& acc) {
  const Eigen::Index m = Cols > 0 ? Cols : in.cols();
  const auto& row_ptr = a.row_ptr();
  const auto& col_idx = a.col_idx();
  const auto& values = a.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double* out_row = acc.data() + static_cast<Eigen::Index>(i) * m;
    for (auto e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const double* in_row = in.data() + col_idx[e] * m;
      if constexpr (UnitWeights) {
        for (Eigen::Index c = 0; c < m; ++c) out_row[c] += in_row[c];
      } else {
        const double v = values[e];
        for (Eigen::Index c = 0; c < m; ++c) out_row[c] += v * in_row[c];
      }
    }
  }
}

template <bool UnitWeights>
void accumulate_rows(const linalg::SparseSymMatrix& a, const RowBlock& in, RowBlock& acc) {
  switch (in.cols()) {
    case 1: return accumulate_rows<1, UnitWeights>(a, in, acc);
    case 2: return accumulate_rows<2, UnitWeights>(a, in, acc);
    case 3: return accumulate_rows<3, UnitWeights>(a, in, acc);
    case 4: return accumulate_rows<4, UnitWeights>(a, in, acc);
    case 5: return accumulate_rows<5, UnitWeights>(a, in, acc);
    case 6: return accumulate_rows<6, UnitWeights>(a, in, acc);
    case 7: return accumulate_rows<7, UnitWeights>(a, in, acc);
    case 8: return accumulate_rows<8, UnitWeights>(a, in, acc);
    default: return accumulate_rows<0, UnitWeights>(a, in, acc);
  }
}

}  // namespace

Matrix ShiftedLaplacianOp::apply_block(const Matrix& x) const {
  const std::size_t n = size();
  if (static_cast<std::size_t>(x.rows()) != n) {
    throw DimensionError("operator applied to block with " + std::to_string(x.rows()) +
                         " rows, expected " + std::to_string(n));
  }
  const RowBlock scaled = inv_sqrt_deg_.asDiagonal() * x;
  RowBlock acc = RowBlock::Zero(x.rows(), x.cols());
  if (unit_weights_) {
    accumulate_rows<true>(*adjacency_, scaled, acc);
  } else {
    accumulate_rows<false>(*adjacency_, scaled, acc);
  }
  return tau() * x - inv_sqrt_deg_.asDiagonal() * Matrix(acc);
}

DenseSymMatrix ShiftedLaplacianOp::to_dense() const {
  Matrix w = adjacency_->to_dense();
  Matrix l = -(inv_sqrt_deg_.asDiagonal() * w * inv_sqrt_deg_.asDiagonal());
  l.diagonal().array() += tau();
  return DenseSymMatrix(std::move(l));
}

ShiftedLaplacianOp shifted_laplacian(std::shared_ptr<const SparseSymMatrix> adjacency,
                                     double shift) {
  return ShiftedLaplacianOp(std::move(adjacency), shift);
}

SparseSymMatrix knn_graph(const Matrix& features, int k) {
  const Eigen::Index n = features.rows();
  if (k < 1) throw ParameterError("knn: k must be positive");
  if (k >= n) {
    throw ParameterError("knn: k = " + std::to_string(k) + " requires more than k samples (n = " +
                         std::to_string(n) + ")");
  }
  // Centre and normalize rows; correlation is then a plain dot product.
  Matrix z = features.colwise() - features.rowwise().mean();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = z.row(i).norm();
    const double scale = std::max(1.0, features.row(i).cwiseAbs().maxCoeff());
    if (!(norm > 1e-12 * scale * std::sqrt(static_cast<double>(features.cols())))) {
      throw ParameterError("knn: sample " + std::to_string(i) +
                           " has zero variance; Pearson correlation undefined");
    }
    z.row(i) /= norm;
  }
  std::vector<linalg::Triplet> entries;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Vector corr(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    corr.noalias() = z * z.row(i).transpose();
    // Quantize so that correlations equal up to roundoff tie exactly.
    corr = (corr.array() * 1e12).round();
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        if (corr[a] != corr[b]) return corr[a] > corr[b];
                        return a < b;
                      });
    for (int r = 0; r < k; ++r) {
      const auto j = order[static_cast<std::size_t>(r)];
      entries.push_back({static_cast<linalg::Index>(std::min(i, j)),
                         static_cast<linalg::Index>(std::max(i, j)), 1.0});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const auto& a, const auto& b) {
                              return a.row == b.row && a.col == b.col;
                            }),
                entries.end());
  return SparseSymMatrix::from_sorted_upper(static_cast<std::size_t>(n), entries);
}

SparseSymMatrix aggregate_adjacency(const MultilayerGraph& graph) {
  std::vector<const SparseSymMatrix*> layers;
  for (std::size_t t = 0; t < graph.num_layers(); ++t) layers.push_back(&graph.layer(t));
  const std::vector<double> weights(layers.size(), 1.0 / static_cast<double>(layers.size()));
  return SparseSymMatrix::weighted_sum(layers, weights);
}

Restriction restrict_to_largest_component(const MultilayerGraph& graph) {
  std::vector<std::size_t> kept(graph.size());
  std::iota(kept.begin(), kept.end(), 0);
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < graph.num_layers(); ++t) layers.push_back(graph.layer(t));

  for (;;) {
    const std::size_t m = kept.size();
    std::vector<char> alive(m, 1);
    for (const auto& l : layers) {
      const Vector d = l.degrees();
      for (std::size_t i = 0; i < m; ++i) {
        if (!(d[static_cast<Eigen::Index>(i)] > 0.0)) alive[i] = 0;
      }
    }
    // Union-find over the union graph restricted to alive vertices.
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& l : layers) {
      for (std::size_t i = 0; i < m; ++i) {
        if (!alive[i]) continue;
        for (auto e = l.row_ptr()[i]; e < l.row_ptr()[i + 1]; ++e) {
          const auto j = static_cast<std::size_t>(l.col_idx()[e]);
          if (alive[j]) {
            const auto a = find(i), b = find(j);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
          }
        }
      }
    }
    std::vector<std::size_t> count(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      if (alive[i]) ++count[find(i)];
    }
    const auto best = static_cast<std::size_t>(
        std::max_element(count.begin(), count.end()) - count.begin());
    if (count.empty() || count[best] == 0) {
      throw IsolatedVertexError("no vertex has positive degree in every layer", {});
    }
    std::vector<std::size_t> local;
    for (std::size_t i = 0; i < m; ++i) {
      if (alive[i] && find(i) == best) local.push_back(i);
    }
    if (local.size() == m) break;
    std::vector<std::size_t> next_kept;
    for (auto i : local) next_kept.push_back(kept[i]);
    for (auto& l : layers) l = induced_subgraph(l, local);
    kept = std::move(next_kept);
  }
  return {MultilayerGraph(std::move(layers)), std::move(kept)};
}

}  // namespace pml::graphs

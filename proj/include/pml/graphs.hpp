#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pml/linalg.hpp"

namespace pml::graphs {

using linalg::DenseSymMatrix;
using linalg::Matrix;
using linalg::SparseSymMatrix;
using linalg::Vector;

// T >= 1 nonnegative symmetric layers over a shared vertex set.
class MultilayerGraph {
 public:
  explicit MultilayerGraph(std::vector<SparseSymMatrix> layers);
  explicit MultilayerGraph(std::vector<std::shared_ptr<const SparseSymMatrix>> layers);

  std::size_t size() const { return n_; }
  std::size_t num_layers() const { return layers_.size(); }
  const SparseSymMatrix& layer(std::size_t t) const { return *layers_.at(t); }
  const std::shared_ptr<const SparseSymMatrix>& layer_ptr(std::size_t t) const {
    return layers_.at(t);
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::shared_ptr<const SparseSymMatrix>> layers_;
};

// Diagonal shift used for exponent p: log(1+|p|) for p < 0, 1e-6 for p = 0,
// and 0 for p > 0.
double shift_for(double p);

// Matrix-free x -> (1+eps) x - D^{-1/2} W D^{-1/2} x for one layer. Holds a
// shared reference to the adjacency; never forms a dense matrix.
class ShiftedLaplacianOp {
 public:
  // Throws IsolatedVertexError listing every zero-degree vertex.
  ShiftedLaplacianOp(std::shared_ptr<const SparseSymMatrix> adjacency, double shift);

  std::size_t size() const { return adjacency_->size(); }
  double shift() const { return shift_; }
  double tau() const { return 1.0 + shift_; }
  const Vector& inv_sqrt_degrees() const { return inv_sqrt_deg_; }
  const SparseSymMatrix& adjacency() const { return *adjacency_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  Vector apply(const Vector& x) const;
  // Column-wise apply over a block, one pass over the adjacency.
  Matrix apply_block(const Matrix& x) const;

  // Dense (1+eps) I - D^{-1/2} W D^{-1/2}; subject to DenseAllocationGuard.
  DenseSymMatrix to_dense() const;

 private:
  std::shared_ptr<const SparseSymMatrix> adjacency_;
  Vector inv_sqrt_deg_;
  double shift_;
  bool unit_weights_ = false;  // every stored weight is 1
};

ShiftedLaplacianOp shifted_laplacian(std::shared_ptr<const SparseSymMatrix> adjacency,
                                     double shift);

// Unweighted k-nearest-neighbour graph of the rows of `features` (samples x
// features) under Pearson correlation; higher correlation is nearer, ties go
// to the lower index, and the result is the union of both directions.
SparseSymMatrix knn_graph(const Matrix& features, int k);

// (1/T) sum_t W^(t) as a single layer.
SparseSymMatrix aggregate_adjacency(const MultilayerGraph& graph);

struct Restriction {
  MultilayerGraph graph;
  std::vector<std::size_t> kept;  // original index of each retained vertex
};

// Drops vertices isolated in any layer, then keeps the largest connected
// component of the union graph, repeating until every layer has positive
// degrees on the remaining vertex set.
Restriction restrict_to_largest_component(const MultilayerGraph& graph);

}  // namespace pml::graphs

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pml/graphs.hpp"

namespace pml::graphs {

// Matrix Market coordinate files. Reading accepts `real`, `integer` and
// `pattern` fields with `symmetric` or `general` symmetry; general files must
// still describe a symmetric matrix. Errors carry the offending line number.
SparseSymMatrix read_matrix_market(std::istream& in);
SparseSymMatrix load_layer(const std::filesystem::path& path);

// Writes `coordinate real symmetric`, lower triangle, 1-based indices.
void write_matrix_market(std::ostream& out, const SparseSymMatrix& a);
void save_layer(const SparseSymMatrix& a, const std::filesystem::path& path);

// Feature CSV: one header row, then one sample per row, comma separated.
Matrix read_features_csv(std::istream& in);
Matrix load_features(const std::filesystem::path& path);

// A multilayer bundle is a directory holding layer_000.mtx ... and a
// meta.json with {"n", "T", optional "ground_truth"}.
struct Bundle {
  MultilayerGraph graph;
  std::optional<std::vector<int>> ground_truth;
};

void save_bundle(const std::filesystem::path& dir, const MultilayerGraph& graph,
                 const std::optional<std::vector<int>>& ground_truth,
                 const std::string& extra_meta_json = {});
Bundle load_bundle(const std::filesystem::path& dir);

std::string layer_file_name(std::size_t t);

}  // namespace pml::graphs

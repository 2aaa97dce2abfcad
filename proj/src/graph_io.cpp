#include "pml/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pml/error.hpp"

namespace pml::graphs {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SparseSymMatrix read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty Matrix Market input", 1);
  ++line_no;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", line_no);
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix" || format != "coordinate") {
    throw ParseError("only 'matrix coordinate' files are supported", line_no);
  }
  if (field != "real" && field != "integer" && field != "pattern") {
    throw ParseError("unsupported field '" + field + "'", line_no);
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw ParseError("unsupported symmetry '" + symmetry + "'", line_no);
  }
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  // Size line, skipping comments and blank lines.
  long long rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream ss(t);
    std::string extra;
    if (!(ss >> rows >> cols >> entries) || (ss >> extra)) {
      throw ParseError("malformed size line", line_no);
    }
    break;
  }
  if (rows < 0) throw ParseError("missing size line", line_no);
  if (rows != cols) throw ParseError("matrix is not square", line_no);
  if (entries < 0) throw ParseError("negative entry count", line_no);

  const auto n = static_cast<std::size_t>(rows);
  // Keyed by (min, max) to detect asymmetry and duplicates.
  std::map<std::pair<long long, long long>, std::pair<double, std::size_t>> seen;
  long long read = 0;
  while (read < entries && std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream ss(t);
    long long i = 0, j = 0;
    std::string value_tok, extra;
    if (!(ss >> i >> j)) throw ParseError("malformed entry", line_no);
    double v = 1.0;
    if (!pattern) {
      if (!(ss >> value_tok) || !parse_double(value_tok, v)) {
        throw ParseError("malformed entry value", line_no);
      }
    }
    if (ss >> extra) throw ParseError("trailing tokens in entry", line_no);
    if (i < 1 || j < 1 || i > rows || j > cols) {
      throw ParseError("index out of range (indices are 1-based)", line_no);
    }
    if (!std::isfinite(v) || v < 0.0) throw ParseError("negative or non-finite weight", line_no);
    ++read;
    if (symmetric) {
      const auto key = std::minmax(i, j);
      if (!seen.emplace(key, std::make_pair(v, line_no)).second) {
        throw ParseError("duplicate entry", line_no);
      }
    } else {
      const std::pair<long long, long long> key{i, j};
      if (!seen.emplace(key, std::make_pair(v, line_no)).second) {
        throw ParseError("duplicate entry", line_no);
      }
    }
  }
  if (read < entries) {
    throw ParseError("expected " + std::to_string(entries) + " entries, found " +
                         std::to_string(read),
                     line_no);
  }

  std::vector<linalg::Triplet> upper;
  if (symmetric) {
    for (const auto& [key, val] : seen) {
      upper.push_back({static_cast<linalg::Index>(key.first - 1),
                       static_cast<linalg::Index>(key.second - 1), val.first});
    }
  } else {
    for (const auto& [key, val] : seen) {
      const auto [i, j] = key;
      if (i > j) continue;
      if (i == j) {
        upper.push_back({static_cast<linalg::Index>(i - 1), static_cast<linalg::Index>(j - 1),
                         val.first});
        continue;
      }
      const auto it = seen.find({j, i});
      const double mirror = it == seen.end() ? 0.0 : it->second.first;
      if (mirror != val.first) {
        throw ParseError("general matrix is not symmetric at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")",
                         val.second);
      }
      upper.push_back({static_cast<linalg::Index>(i - 1), static_cast<linalg::Index>(j - 1),
                       val.first});
    }
    for (const auto& [key, val] : seen) {
      const auto [i, j] = key;
      if (i > j && seen.find({j, i}) == seen.end() && val.first != 0.0) {
        throw ParseError("general matrix is not symmetric at (" + std::to_string(i) + "," +
                             std::to_string(j) + ")",
                         val.second);
      }
    }
  }
  // std::map iteration already yields (row, col) order; drop explicit zeros.
  upper.erase(std::remove_if(upper.begin(), upper.end(),
                             [](const auto& t) { return t.value == 0.0; }),
              upper.end());
  return SparseSymMatrix::from_sorted_upper(n, upper);
}

SparseSymMatrix load_layer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_matrix_market(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void write_matrix_market(std::ostream& out, const SparseSymMatrix& a) {
  std::size_t lower_nnz = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (auto e = a.row_ptr()[i]; e < a.row_ptr()[i + 1]; ++e) {
      if (static_cast<std::size_t>(a.col_idx()[e]) <= i) ++lower_nnz;
    }
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.size() << ' ' << a.size() << ' ' << lower_nnz << '\n';
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (auto e = a.row_ptr()[i]; e < a.row_ptr()[i + 1]; ++e) {
      const auto j = static_cast<std::size_t>(a.col_idx()[e]);
      if (j > i) break;
      out << i + 1 << ' ' << j + 1 << ' ' << format_double(a.values()[e]) << '\n';
    }
  }
}

void save_layer(const SparseSymMatrix& a, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_matrix_market(out, a);
  if (!out) throw Error("write failed for " + path.string());
}

Matrix read_features_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty feature file", 1);
  ++line_no;
  std::size_t width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const auto tok = trim(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start));
      double v = 0.0;
      if (!parse_double(tok, v) || !std::isfinite(v)) {
        throw ParseError("invalid number '" + tok + "'", line_no);
      }
      data.push_back(v);
      ++fields;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields),
                       line_no);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("feature file has no data rows", line_no);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * width + j];
    }
  }
  return m;
}

Matrix load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_features_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::string layer_file_name(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%03zu.mtx", t);
  return buf;
}

void save_bundle(const std::filesystem::path& dir, const MultilayerGraph& graph,
                 const std::optional<std::vector<int>>& ground_truth,
                 const std::string& extra_meta_json) {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < graph.num_layers(); ++t) {
    save_layer(graph.layer(t), dir / layer_file_name(t));
  }
  nlohmann::ordered_json meta;
  meta["n"] = graph.size();
  meta["T"] = graph.num_layers();
  if (ground_truth) {
    if (ground_truth->size() != graph.size()) {
      throw DimensionError("ground truth length does not match vertex count");
    }
    meta["ground_truth"] = *ground_truth;
  }
  if (!extra_meta_json.empty()) {
    const auto extra = nlohmann::ordered_json::parse(extra_meta_json);
    for (const auto& [key, value] : extra.items()) meta[key] = value;
  }
  std::ofstream out(dir / "meta.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "meta.json").string());
  out << meta.dump(1) << '\n';
}

Bundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw Error("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("meta.json: ") + e.what(), 0);
  }
  if (!meta.contains("n") || !meta.contains("T")) {
    throw ParseError("meta.json must contain 'n' and 'T'", 0);
  }
  const auto n = meta.at("n").get<std::size_t>();
  const auto layers_count = meta.at("T").get<std::size_t>();
  std::vector<SparseSymMatrix> layers;
  for (std::size_t t = 0; t < layers_count; ++t) {
    layers.push_back(load_layer(dir / layer_file_name(t)));
    if (layers.back().size() != n) {
      throw DimensionError(layer_file_name(t) + " has " + std::to_string(layers.back().size()) +
                           " vertices, meta.json says " + std::to_string(n));
    }
  }
  std::optional<std::vector<int>> truth;
  if (meta.contains("ground_truth") && !meta.at("ground_truth").is_null()) {
    truth = meta.at("ground_truth").get<std::vector<int>>();
    if (truth->size() != n) throw DimensionError("ground_truth length does not match n");
  }
  return {MultilayerGraph(std::move(layers)), std::move(truth)};
}

}  // namespace pml::graphs

#include "commands.hpp"

#include <sched.h>
#include <sys/resource.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "pml/clustering.hpp"
#include "pml/error.hpp"
#include "pml/graph_io.hpp"
#include "pml/random.hpp"

namespace pml::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// CSV field quoting for free text.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '\n' || c == '\r') {
      q += ' ';
      continue;
    }
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

long max_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

int affinity_cpus() {
  cpu_set_t set;
  CPU_ZERO(&set);
  if (sched_getaffinity(0, sizeof set, &set) != 0) return -1;
  return CPU_COUNT(&set);
}

// Output target: the file named by config["out"] or the fallback stream.
class Sink {
 public:
  Sink(const Json& config, std::ostream& fallback) : stream_(&fallback) {
    if (config.contains("out")) {
      path_ = config.at("out").get<std::string>();
      file_ = std::make_unique<std::ofstream>(path_, std::ios::binary);
      if (!*file_) throw Error("cannot write " + path_);
      stream_ = file_.get();
    }
  }
  std::ostream& stream() { return *stream_; }
  bool to_file() const { return file_ != nullptr; }
  const std::string& path() const { return path_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error("write failed" + (path_.empty() ? "" : " for " + path_));
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

// Runs task(i) for i in [0, count) on `workers` threads. Each task writes
// only its own slot, so the order of completion does not matter.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto used = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// sweep

struct SweepPoint {
  std::vector<std::pair<std::string, double>> params;
  int k = 2;
  std::function<sbm::Sample(std::uint64_t)> sample;
};

std::vector<SweepPoint> sweep_points(const Json& c) {
  const auto kind = c.at("experiment").get<std::string>();
  std::vector<SweepPoint> points;
  if (kind == "case1-sweep") {
    const auto base = case1_params(c);
    const auto& j = c.at("case1");
    const auto layer = j.value("sweep_layer", std::size_t{0});
    if (layer >= base.layers.size()) throw UsageError("case1.sweep_layer is out of range");
    std::vector<sbm::EdgeProbabilities> sweep;
    if (j.contains("sweep") && !j.at("sweep").empty()) {
      for (const auto& s : j.at("sweep")) {
        sweep.push_back({s.at("p_in").get<double>(), s.at("p_out").get<double>()});
      }
    } else {
      sweep.push_back(base.layers[layer]);
    }
    for (const auto& s : sweep) {
      auto params = base;
      params.layers[layer] = s;
      params.validate();
      points.push_back({{{"sweep_p_in", s.p_in}, {"sweep_p_out", s.p_out}},
                        params.k,
                        [params](std::uint64_t seed) mutable {
                          params.seed = seed;
                          return sbm::sample_case1(params);
                        }});
    }
  } else if (kind == "case2") {
    auto params = case2_params(c);
    points.push_back({{{"p_in", params.p_in}, {"p_out", params.p_out}},
                      3,
                      [params](std::uint64_t seed) mutable {
                        params.seed = seed;
                        return sbm::sample_case2(params);
                      }});
  } else if (kind == "case3-grid") {
    const auto& j = c.at("case3");
    for (double copy : number_list(j.at("copy_prob"), "case3.copy_prob")) {
      for (double mixing : number_list(j.at("mixing"), "case3.mixing")) {
        auto params = case3_params(c, copy, mixing);
        points.push_back({{{"copy_prob", copy}, {"mixing", mixing}},
                          params.communities,
                          [params](std::uint64_t seed) mutable {
                            params.seed = seed;
                            return sbm::sample_case3(params);
                          }});
      }
    }
  } else {
    throw UsageError("sweep does not run experiment '" + kind + "'");
  }
  return points;
}

struct SweepRow {
  std::string method;
  double p = 0.0;
  double error = std::nan("");
  int outer_iterations = 0;
  double wall_ms = 0.0;
  std::string failure;
};

clustering::ClusteringResult run_method(const Method& m, const graphs::MultilayerGraph& g, int k,
                                        const Json& c, std::uint64_t seed) {
  switch (m.kind) {
    case MethodKind::Aggregate:
      return clustering::baseline_agg(g, k, seed);
    case MethodKind::Arithmetic:
      return clustering::spectral_cluster(g, k, solver_spec(c, 1.0, seed));
    case MethodKind::PowerMean:
      return clustering::spectral_cluster(g, k, solver_spec(c, m.p, seed));
    case MethodKind::Dense:
      break;
  }
  throw UsageError("method " + m.name() + " is not available here");
}

std::vector<SweepRow> sweep_task(const SweepPoint& point, const std::vector<Method>& methods,
                                 const Json& c, std::uint64_t seed) {
  std::vector<SweepRow> rows;
  std::optional<sbm::Sample> sample;
  std::string sample_failure;
  try {
    sample = point.sample(seed);
  } catch (const std::exception& e) {
    sample_failure = std::string("sampling failed: ") + e.what();
  }
  for (const auto& m : methods) {
    SweepRow row;
    row.method = m.name();
    row.p = m.p;
    if (!sample) {
      row.failure = sample_failure;
      rows.push_back(row);
      continue;
    }
    const auto start = Clock::now();
    try {
      const auto result = run_method(m, sample->graph, point.k, c, seed);
      row.wall_ms = elapsed_ms(start);
      row.error = clustering::clustering_error(result.labels, sample->truth.labels);
      row.outer_iterations = result.solve.outer_iterations;
    } catch (const std::exception& e) {
      row.wall_ms = elapsed_ms(start);
      row.failure = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_summary(std::ostream& os, const std::vector<SweepPoint>& points,
                   const std::vector<Method>& methods, int runs,
                   const std::vector<std::vector<SweepRow>>& results) {
  os << "point";
  for (const auto& [name, v] : points.front().params) os << ',' << name;
  os << ",method,p,runs,failures,mean_error,std_error,mean_wall_ms\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      double sum = 0.0, sum_sq = 0.0, wall = 0.0;
      int ok = 0, failed = 0;
      for (int r = 0; r < runs; ++r) {
        const auto& row = results[i * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)][m];
        if (!row.failure.empty()) {
          ++failed;
          continue;
        }
        ++ok;
        sum += row.error;
        sum_sq += row.error * row.error;
        wall += row.wall_ms;
      }
      const double mean = ok > 0 ? sum / ok : std::nan("");
      const double var = ok > 1 ? std::max(0.0, (sum_sq - ok * mean * mean) / (ok - 1)) : 0.0;
      os << i;
      for (const auto& [name, v] : points[i].params) os << ',' << num(v);
      os << ',' << methods[m].name() << ',' << num(methods[m].p) << ',' << ok << ',' << failed
         << ',' << num(mean) << ',' << num(ok > 0 ? std::sqrt(var) : std::nan("")) << ','
         << num(ok > 0 ? wall / ok : std::nan("")) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// cluster

graphs::MultilayerGraph features_graph(const std::vector<std::string>& files, int knn) {
  std::vector<linalg::SparseSymMatrix> layers;
  for (const auto& f : files) layers.push_back(graphs::knn_graph(graphs::load_features(f), knn));
  return graphs::MultilayerGraph(std::move(layers));
}

}  // namespace

void write_metadata(std::ostream& os, const Json& config) {
  os << "# pml " << kVersion << '\n';
  os << "# config_hash: fnv1a64:" << hex64(config_hash(config)) << '\n';
  os << "# seed: " << config.value("seed", std::uint64_t{0}) << '\n';
  os << "# config: " << config.dump() << '\n';
}

int cmd_generate(const Json& c, std::ostream& out, std::ostream&) {
  if (!c.contains("out")) throw UsageError("generate needs --out DIR");
  const auto model = c.at("model").get<std::string>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  sbm::Sample sample = [&] {
    if (model == "case1") {
      auto params = case1_params(c);
      params.seed = seed;
      return sbm::sample_case1(params);
    }
    if (model == "case2") {
      auto params = case2_params(c);
      params.seed = seed;
      return sbm::sample_case2(params);
    }
    const auto copies = number_list(c.at("case3").at("copy_prob"), "case3.copy_prob");
    const auto mixings = number_list(c.at("case3").at("mixing"), "case3.mixing");
    if (copies.size() != 1 || mixings.size() != 1) {
      throw UsageError("generate takes a single case3.copy_prob and case3.mixing");
    }
    auto params = case3_params(c, copies[0], mixings[0]);
    params.seed = seed;
    return sbm::sample_case3(params);
  }();

  Json meta;
  meta["model"] = model;
  meta["seed"] = seed;
  meta["params"] = c.at(model);
  meta["config_hash"] = "fnv1a64:" + hex64(config_hash(c));
  if (!sample.truth.layer_labels.empty()) meta["layer_labels"] = sample.truth.layer_labels;
  const std::string dir = c.at("out").get<std::string>();
  graphs::save_bundle(dir, sample.graph, sample.truth.labels, meta.dump());

  const auto& g = sample.graph;
  const double pairs = 0.5 * static_cast<double>(g.size()) * static_cast<double>(g.size() - 1);
  out << "bundle: " << dir << '\n';
  out << "n: " << g.size() << "\nT: " << g.num_layers() << "\nk: " << sample.truth.k << '\n';
  for (std::size_t t = 0; t < g.num_layers(); ++t) {
    const double edges = static_cast<double>(g.layer(t).nnz()) / 2.0;
    out << "layer " << t << ": edges " << static_cast<std::size_t>(edges) << ", density "
        << num(pairs > 0 ? edges / pairs : 0.0) << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const Json& c, std::ostream& out, std::ostream& err) {
  const auto points = sweep_points(c);
  const auto methods = expand_methods(c);
  for (const auto& m : methods) {
    if (m.kind == MethodKind::Dense) throw UsageError("method 'dense' is only for benchmark");
  }
  const int runs = c.at("runs").get<int>();
  const auto master = c.at("seed").get<std::uint64_t>();
  const int workers = worker_count(c);

  const std::size_t tasks = points.size() * static_cast<std::size_t>(runs);
  std::vector<std::vector<SweepRow>> results(tasks);
  parallel_for(tasks, workers, [&](std::size_t task) {
    const std::size_t i = task / static_cast<std::size_t>(runs);
    const std::size_t r = task % static_cast<std::size_t>(runs);
    results[task] = sweep_task(points[i], methods, c, derive_seed(master, i, r));
  });

  Sink sink(c, out);
  auto& os = sink.stream();
  write_metadata(os, c);
  os << "# workers: " << workers << '\n';
  os << "point";
  for (const auto& [name, v] : points.front().params) os << ',' << name;
  os << ",method,p,run,clustering_error,outer_iterations,wall_ms,error\n";
  bool any_failure = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int r = 0; r < runs; ++r) {
      for (const auto& row : results[i * static_cast<std::size_t>(runs) + static_cast<std::size_t>(r)]) {
        any_failure = any_failure || !row.failure.empty();
        os << i;
        for (const auto& [name, v] : points[i].params) os << ',' << num(v);
        os << ',' << row.method << ',' << num(row.p) << ',' << r << ',' << num(row.error) << ','
           << row.outer_iterations << ',' << num(row.wall_ms) << ',' << field(row.failure)
           << '\n';
      }
    }
  }
  sink.finish();

  if (c.value("summary", false)) {
    if (sink.to_file()) {
      const std::string path = sink.path() + ".summary.csv";
      std::ofstream summary(path, std::ios::binary);
      if (!summary) throw Error("cannot write " + path);
      write_metadata(summary, c);
      write_summary(summary, points, methods, runs, results);
      err << "summary: " << path << '\n';
    } else {
      out << '\n';
      write_summary(out, points, methods, runs, results);
    }
  }
  return any_failure ? kExitPartial : kExitOk;
}

int cmd_benchmark(const Json& c, std::ostream& out, std::ostream& err) {
  const auto& b = c.at("benchmark");
  const auto sizes = b.at("sizes").get<std::vector<std::size_t>>();
  const auto layers = b.at("layers").get<std::size_t>();
  const auto k = b.at("k").get<int>();
  const double p_in = b.at("p_in").get<double>();
  const double p_out = b.at("p_out").get<double>();
  const double timeout_s = b.at("timeout_s").get<double>();
  const auto dense_max_n = b.value("dense_max_n", std::size_t{2000});
  const auto methods = expand_methods(c);
  const int runs = c.at("runs").get<int>();
  const auto master = c.at("seed").get<std::uint64_t>();
  if (sizes.empty()) throw UsageError("benchmark.sizes is empty");
  for (const auto& m : methods) {
    if (m.kind != MethodKind::PowerMean && m.kind != MethodKind::Dense) {
      throw UsageError("benchmark times Lp and dense solves only");
    }
    if (m.kind == MethodKind::PowerMean && !(m.p < 0.0)) {
      throw UsageError("the matrix-free benchmark needs p < 0");
    }
  }
  // Benchmarks are always single-threaded: one worker, one numeric thread.
  const int workers = 1;
  Eigen::setNbThreads(1);

  Sink sink(c, out);
  auto& os = sink.stream();
  write_metadata(os, c);
  os << "# workers: " << workers << '\n';
  os << "# numeric_threads: 1\n";
  os << "# hardware_concurrency: " << std::thread::hardware_concurrency() << '\n';
  os << "# affinity_cpus: " << affinity_cpus() << '\n';
  os << "n,nnz,method,p,run,wall_ms,outer_iterations,krylov_dims,converged,max_rss_kb,error\n";
  os.flush();

  bool any_failure = false;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const std::size_t n = sizes[si];
    if (n % static_cast<std::size_t>(k) != 0) {
      throw UsageError("benchmark size " + std::to_string(n) + " is not divisible by k");
    }
    sbm::Case1Params params;
    params.k = k;
    params.cluster_size = n / static_cast<std::size_t>(k);
    params.layers.assign(layers, {p_in, p_out});
    params.seed = derive_seed(master, si);
    const auto sample = sbm::sample_case1(params);
    std::size_t nnz = 0;
    for (std::size_t t = 0; t < layers; ++t) nnz += sample.graph.layer(t).nnz();

    for (const auto& m : methods) {
      if (m.kind == MethodKind::Dense && n > dense_max_n) {
        err << "skipping dense solve at n = " << n << " (limit " << dense_max_n << ")\n";
        continue;
      }
      const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                               std::chrono::duration<double>(timeout_s));
      for (int r = 0; r < runs; ++r) {
        auto spec = solver_spec(c, m.p, derive_seed(master, si, static_cast<std::uint64_t>(r)));
        spec.k = k;
        spec.threads = 1;
        spec.deadline = deadline;
        std::string failure;
        bool abort_point = false;
        powermean::EigenSolveResult res;
        const auto start = Clock::now();
        try {
          if (m.kind == MethodKind::PowerMean) {
            linalg::DenseAllocationGuard guard(dense_max_n);
            res = powermean::power_mean_eigs(sample.graph, spec);
          } else {
            res = powermean::power_mean_eigs_dense(powermean::PowerMeanOp(sample.graph, spec));
          }
        } catch (const TimeoutError& e) {
          failure = e.what();
          abort_point = true;
        } catch (const AllocationGuardError& e) {
          failure = e.what();
          abort_point = true;
        } catch (const std::exception& e) {
          failure = e.what();
        }
        const double wall = elapsed_ms(start);
        std::string dims;
        for (std::size_t t = 0; t < res.krylov_dims.size(); ++t) {
          dims += (t ? ";" : "") + std::to_string(res.krylov_dims[t]);
        }
        any_failure = any_failure || !failure.empty();
        os << n << ',' << nnz << ',' << m.name() << ',' << num(m.p) << ',' << r << ','
           << num(wall) << ',' << res.outer_iterations << ',' << dims << ','
           << (failure.empty() && res.converged ? 1 : 0) << ',' << max_rss_kb() << ','
           << field(failure) << '\n';
        os.flush();
        err << "n=" << n << " " << m.name() << " p=" << num(m.p) << " run " << r << ": "
            << num(wall) << " ms" << (failure.empty() ? "" : " (" + failure + ")") << '\n';
        if (abort_point) break;
      }
    }
  }
  sink.finish();
  return any_failure ? kExitPartial : kExitOk;
}

int cmd_cluster(const Json& c, std::ostream& out, std::ostream& err) {
  const bool has_bundle = c.contains("bundle");
  const bool has_features = c.contains("features") && !c.at("features").empty();
  if (has_bundle && has_features) {
    throw UsageError("give either --bundle or --features, not both");
  }
  if (!has_bundle && !has_features) throw UsageError("cluster needs --bundle or --features");
  if (has_features && !c.contains("knn")) throw UsageError("--features needs --knn K");
  if (has_bundle && c.contains("knn")) throw UsageError("--knn applies to --features only");
  const auto methods = expand_methods(c);
  if (methods.size() != 1) throw UsageError("cluster runs exactly one method and one p");
  const auto& method = methods.front();
  if (method.kind == MethodKind::Dense) throw UsageError("method 'dense' is only for benchmark");
  const int k = c.at("k").get<int>();
  const auto seed = c.at("seed").get<std::uint64_t>();

  std::optional<graphs::MultilayerGraph> graph;
  std::optional<std::vector<int>> truth;
  if (has_bundle) {
    auto bundle = graphs::load_bundle(c.at("bundle").get<std::string>());
    graph.emplace(std::move(bundle.graph));
    truth = std::move(bundle.ground_truth);
  } else {
    graph.emplace(features_graph(c.at("features").get<std::vector<std::string>>(),
                                 c.at("knn").get<int>()));
  }
  std::vector<std::size_t> kept(graph->size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  if (c.value("largest_component", false)) {
    auto restricted = graphs::restrict_to_largest_component(*graph);
    graph.emplace(std::move(restricted.graph));
    kept = std::move(restricted.kept);
    if (truth) {
      std::vector<int> sub;
      for (auto i : kept) sub.push_back((*truth)[i]);
      truth = std::move(sub);
    }
  }

  const auto start = Clock::now();
  const auto result = run_method(method, *graph, k, c, seed);
  const double wall = elapsed_ms(start);

  Sink sink(c, out);
  auto& os = sink.stream();
  write_metadata(os, c);
  os << "vertex,label\n";
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    os << kept[i] << ',' << result.labels[i] << '\n';
  }
  sink.finish();

  std::ostream& report = sink.to_file() ? out : err;
  report << "method: " << method.name();
  if (method.kind == MethodKind::PowerMean) report << " (p = " << num(method.p) << ")";
  report << "\nvertices: " << graph->size() << "\nlayers: " << graph->num_layers()
         << "\nouter_iterations: " << result.solve.outer_iterations
         << "\nconverged: " << (result.solve.converged ? "yes" : "no") << "\nwall_ms: "
         << num(wall) << '\n';
  if (truth) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", clustering::clustering_error(result.labels, *truth));
    report << "clustering_error: " << buf << '\n';
  }
  return kExitOk;
}

int run_command(const std::string& command, const Json& config, std::ostream& out,
                std::ostream& err) {
  if (command == "generate") return cmd_generate(config, out, err);
  if (command == "sweep") return cmd_sweep(config, out, err);
  if (command == "benchmark") return cmd_benchmark(config, out, err);
  if (command == "cluster") return cmd_cluster(config, out, err);
  throw UsageError("unknown command '" + command + "'");
}

}  // namespace pml::cli

#include "experiment_config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "pml/error.hpp"

namespace pml::cli {

namespace {

Json solver_defaults() {
  return Json{{"outer_tol", 1e-8},
              {"krylov_max_dim", 60},
              {"outer_max_iter", 2000},
              {"guard_vectors", 4}};
}

Json case1_defaults(bool sweep) {
  Json j{{"k", 2},
         {"cluster_size", 100},
         {"layers", Json::array({Json{{"p_in", 0.1}, {"p_out", 0.02}},
                                 Json{{"p_in", 0.02}, {"p_out", 0.1}}})}};
  if (sweep) {
    Json points = Json::array();
    for (int i = 0; i <= 8; ++i) {
      points.push_back(Json{{"p_in", 0.02 + 0.01 * i}, {"p_out", 0.1 - 0.01 * i}});
    }
    j["sweep_layer"] = 1;
    j["sweep"] = points;
  }
  return j;
}

Json case2_defaults() { return Json{{"cluster_size", 100}, {"p_in", 0.1}, {"p_out", 0.02}}; }

Json case3_defaults(bool grid) {
  Json j{{"n", 100}, {"layers", 10}, {"communities", 2}, {"degree", 10.0}};
  if (grid) {
    j["copy_prob"] = Json::array({0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    j["mixing"] = Json::array({0.0, 0.1, 0.2, 0.3, 0.4, 0.5});
  } else {
    j["copy_prob"] = 1.0;
    j["mixing"] = 0.0;
  }
  return j;
}

void merge(Json& base, const Json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

int env_thread_cap() {
  const char* raw = std::getenv("PML_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1) throw UsageError("PML_THREADS must be a positive integer");
  return static_cast<int>(v);
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

Json default_config(const std::string& command, const std::string& experiment) {
  Json c;
  c["command"] = command;
  c["seed"] = 0;
  c["solver"] = solver_defaults();
  if (command == "generate") {
    const std::string model = experiment.empty() ? "case1" : experiment;
    c["model"] = model;
    if (model == "case1") {
      c["case1"] = case1_defaults(false);
    } else if (model == "case2") {
      c["case2"] = case2_defaults();
    } else if (model == "case3") {
      c["case3"] = case3_defaults(false);
    } else {
      throw UsageError("unknown model '" + model + "' (expected case1, case2 or case3)");
    }
  } else if (command == "sweep") {
    const std::string kind = experiment.empty() ? "case1-sweep" : experiment;
    c["experiment"] = kind;
    c["p"] = Json::array({-10.0});
    c["methods"] = Json::array({"Lp", "L1", "Lagg"});
    if (kind == "case1-sweep") {
      c["runs"] = 50;
      c["case1"] = case1_defaults(true);
    } else if (kind == "case2") {
      c["runs"] = 10;
      c["case2"] = case2_defaults();
    } else if (kind == "case3-grid") {
      c["runs"] = 10;
      c["case3"] = case3_defaults(true);
    } else {
      throw UsageError("unknown experiment '" + kind +
                       "' (expected case1-sweep, case2 or case3-grid)");
    }
  } else if (command == "benchmark") {
    c["experiment"] = "benchmark";
    c["runs"] = 10;
    c["p"] = Json::array({-1.0, -2.0, -5.0, -10.0});
    c["methods"] = Json::array({"Lp"});
    c["benchmark"] = Json{{"sizes", Json::array({10000, 20000, 30000, 40000})},
                          {"layers", 2},
                          {"p_in", 0.05},
                          {"p_out", 0.025},
                          {"k", 2},
                          {"timeout_s", 600.0},
                          {"dense_max_n", 2000}};
  } else if (command == "cluster") {
    c["experiment"] = "cluster-files";
    c["p"] = Json::array({-10.0});
    c["methods"] = Json::array({"Lp"});
    c["k"] = 2;
  } else {
    throw UsageError("unknown command '" + command + "'");
  }
  c["summary"] = false;
  c["single_thread"] = command == "benchmark";
  return c;
}

void set_path(Json& config, const std::string& dotted_key, const std::string& raw) {
  if (dotted_key.empty()) throw UsageError("--set needs key=value");
  Json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw UsageError("malformed key '" + dotted_key + "'");
    if (dot == std::string::npos) {
      Json value;
      try {
        value = Json::parse(raw);
      } catch (const Json::parse_error&) {
        value = raw;
      }
      (*node)[part] = std::move(value);
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = Json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

Json resolve_config(const std::string& command, const Overrides& o) {
  Json file_config = Json::object();
  if (o.config_path) {
    std::ifstream in(*o.config_path);
    if (!in) throw UsageError("cannot open config file " + *o.config_path);
    try {
      file_config = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw UsageError("config file " + *o.config_path + ": " + e.what());
    }
    if (!file_config.is_object()) throw UsageError("config file must hold a JSON object");
  }
  // The experiment kind picks the defaults, so settle it first.
  std::string experiment;
  const char* kind_key = command == "generate" ? "model" : "experiment";
  if (file_config.contains(kind_key)) experiment = file_config.at(kind_key).get<std::string>();
  Json set_patch = Json::object();
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    set_path(set_patch, s.substr(0, eq), s.substr(eq + 1));
  }
  if (set_patch.contains(kind_key)) experiment = set_patch.at(kind_key).get<std::string>();
  if (o.experiment) experiment = *o.experiment;

  Json c = default_config(command, experiment);
  merge(c, file_config);
  merge(c, set_patch);
  if (!experiment.empty()) c[kind_key] = experiment;
  if (o.seed) c["seed"] = *o.seed;
  if (o.p) c["p"] = *o.p;
  if (o.methods) c["methods"] = *o.methods;
  if (o.runs) c["runs"] = *o.runs;
  if (o.out) c["out"] = *o.out;
  if (o.knn) c["knn"] = *o.knn;
  if (o.k) c["k"] = *o.k;
  if (o.bundle) c["bundle"] = *o.bundle;
  if (!o.features.empty()) c["features"] = o.features;
  if (o.summary) c["summary"] = true;
  if (o.single_thread) c["single_thread"] = true;
  if (o.largest_component) c["largest_component"] = true;

  if (c.contains("runs") && c.at("runs").get<int>() < 1) throw UsageError("--runs must be >= 1");
  if (c.contains("p")) {
    for (double p : number_list(c.at("p"), "p")) {
      if (!std::isfinite(p)) throw UsageError("p values must be finite");
    }
  }
  return c;
}

std::uint64_t config_hash(const Json& config) {
  Json hashed = config;
  hashed.erase("out");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : hashed.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string Method::name() const {
  switch (kind) {
    case MethodKind::PowerMean:
      return "Lp";
    case MethodKind::Arithmetic:
      return "L1";
    case MethodKind::Aggregate:
      return "Lagg";
    case MethodKind::Dense:
      return "dense";
  }
  return "?";
}

std::vector<Method> expand_methods(const Json& config) {
  const auto names = config.at("methods").get<std::vector<std::string>>();
  const auto ps = config.contains("p") ? number_list(config.at("p"), "p") : std::vector<double>{};
  std::vector<Method> out;
  for (const auto& name : names) {
    if (name == "Lp" || name == "dense") {
      if (ps.empty()) throw UsageError("method " + name + " needs at least one p value");
      for (double p : ps) {
        out.push_back({name == "Lp" ? MethodKind::PowerMean : MethodKind::Dense, p});
      }
    } else if (name == "L1") {
      out.push_back({MethodKind::Arithmetic, 1.0});
    } else if (name == "Lagg") {
      out.push_back({MethodKind::Aggregate, std::numeric_limits<double>::quiet_NaN()});
    } else {
      throw UsageError("unknown method '" + name + "' (expected Lp, L1, Lagg or dense)");
    }
  }
  if (out.empty()) throw UsageError("no methods selected");
  return out;
}

powermean::PowerMeanSolveSpec solver_spec(const Json& config, double p, std::uint64_t seed) {
  powermean::PowerMeanSolveSpec spec;
  spec.p = p;
  spec.seed = seed;
  const Json s = config.contains("solver") ? config.at("solver") : Json::object();
  spec.outer_tol = get_or(s, "outer_tol", spec.outer_tol);
  spec.krylov_max_dim = get_or(s, "krylov_max_dim", spec.krylov_max_dim);
  spec.outer_max_iter = get_or(s, "outer_max_iter", spec.outer_max_iter);
  spec.guard_vectors = get_or(s, "guard_vectors", spec.guard_vectors);
  if (s.contains("krylov_tol")) spec.krylov_tol = s.at("krylov_tol").get<double>();
  if (s.contains("shift")) spec.shift = s.at("shift").get<double>();
  return spec;
}

sbm::Case1Params case1_params(const Json& config) {
  const auto& j = config.at("case1");
  sbm::Case1Params params;
  params.k = j.at("k").get<int>();
  params.cluster_size = j.at("cluster_size").get<std::size_t>();
  for (const auto& l : j.at("layers")) {
    params.layers.push_back({l.at("p_in").get<double>(), l.at("p_out").get<double>()});
  }
  params.validate();
  return params;
}

sbm::Case2Params case2_params(const Json& config) {
  const auto& j = config.at("case2");
  sbm::Case2Params params;
  params.cluster_size = j.at("cluster_size").get<std::size_t>();
  params.p_in = j.at("p_in").get<double>();
  params.p_out = j.at("p_out").get<double>();
  params.validate();
  return params;
}

sbm::Case3Params case3_params(const Json& config, double copy_prob, double mixing) {
  const auto& j = config.at("case3");
  sbm::Case3Params params;
  params.n = j.at("n").get<std::size_t>();
  params.layers = j.at("layers").get<std::size_t>();
  params.communities = j.at("communities").get<int>();
  params.degree = j.at("degree").get<double>();
  params.copy_prob = copy_prob;
  params.mixing = mixing;
  params.validate();
  return params;
}

std::vector<double> number_list(const Json& value, const std::string& what) {
  if (value.is_number()) return {value.get<double>()};
  if (value.is_array()) {
    std::vector<double> out;
    for (const auto& v : value) {
      if (!v.is_number()) throw UsageError(what + " must hold numbers");
      out.push_back(v.get<double>());
    }
    if (out.empty()) throw UsageError(what + " must not be empty");
    return out;
  }
  throw UsageError(what + " must be a number or a list of numbers");
}

int worker_count(const Json& config) {
  if (config.value("single_thread", false)) return 1;
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  const int cap = env_thread_cap();
  return cap > 0 ? std::min(n, cap) : n;
}

}  // namespace pml::cli

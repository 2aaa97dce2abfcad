#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pml/error.hpp"

namespace {

std::vector<double> parse_p_list(const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw pml::cli::UsageError("bad --p value '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw pml::cli::UsageError("--p needs at least one value");
  return out;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pml::cli;
  CLI::App app{"Multilayer graph clustering with the power mean Laplacian"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::string p_raw, methods_raw;
  std::vector<std::string> features;
  std::uint64_t seed = 0;
  int runs = 0, knn = 0, k = 0;
  std::string config, out, experiment, bundle;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output path");
    sub->add_option("--set", o.sets, "override a config key, e.g. solver.outer_tol=1e-9");
    sub->add_flag("--single-thread", o.single_thread, "one worker, one numeric thread");
  };

  auto* generate = app.add_subcommand("generate", "sample a multilayer SBM bundle");
  add_common(generate);
  generate->add_option("--model", experiment, "case1, case2 or case3");

  auto* sweep = app.add_subcommand("sweep", "clustering error over SBM parameter sweeps");
  add_common(sweep);
  sweep->add_option("--experiment", experiment, "case1-sweep, case2 or case3-grid");
  sweep->add_option("--p", p_raw, "comma-separated exponents");
  sweep->add_option("--methods", methods_raw, "comma-separated: Lp, L1, Lagg");
  sweep->add_option("--runs", runs, "runs per sweep point");
  sweep->add_flag("--summary", o.summary, "also emit mean and std per point and method");

  auto* bench = app.add_subcommand("benchmark", "time the matrix-free eigensolver");
  add_common(bench);
  bench->add_option("--p", p_raw, "comma-separated negative exponents");
  bench->add_option("--methods", methods_raw, "comma-separated: Lp, dense");
  bench->add_option("--runs", runs, "timed runs per point");

  auto* cluster = app.add_subcommand("cluster", "cluster a bundle or feature files");
  add_common(cluster);
  cluster->add_option("--bundle", bundle, "multilayer bundle directory");
  cluster->add_option("--features", features, "feature CSV files, one per layer")
      ->delimiter(',');
  cluster->add_option("--knn", knn, "neighbours per vertex for feature graphs");
  cluster->add_option("--k", k, "number of clusters");
  cluster->add_option("--p", p_raw, "exponent");
  cluster->add_option("--methods", methods_raw, "one of Lp, L1, Lagg");
  cluster->add_flag("--largest-component", o.largest_component,
                    "restrict to the largest component with no isolated vertices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    auto given = [&](const char* name) {
      const auto* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--config")) o.config_path = config;
    if (given("--seed")) o.seed = seed;
    if (given("--out")) o.out = out;
    if (given("--model") || given("--experiment")) o.experiment = experiment;
    if (given("--p")) o.p = parse_p_list(p_raw);
    if (given("--methods")) o.methods = split_list(methods_raw);
    if (given("--runs")) o.runs = runs;
    if (given("--knn")) o.knn = knn;
    if (given("--k")) o.k = k;
    if (given("--bundle")) o.bundle = bundle;
    if (given("--features")) o.features = features;
    const Json resolved = resolve_config(command, o);
    return run_command(command, resolved, std::cout, std::cerr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const pml::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

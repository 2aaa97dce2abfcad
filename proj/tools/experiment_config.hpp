#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pml/powermean.hpp"
#include "pml/sbm.hpp"

namespace pml::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// Raised for bad command lines and inconsistent option combinations; mapped
// to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Values given on the command line. Unset fields leave the config alone.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> p;
  std::optional<std::vector<std::string>> methods;
  std::optional<int> runs;
  std::optional<std::string> out;
  std::optional<int> knn;
  std::optional<int> k;
  std::optional<std::string> bundle;
  std::vector<std::string> features;
  bool summary = false;
  bool single_thread = false;
  bool largest_component = false;
  std::vector<std::string> sets;  // key.path=value
};

// Defaults for a command ("generate", "sweep", "benchmark", "cluster") and
// experiment kind ("case1", "case1-sweep", "case2", "case3", "case3-grid").
Json default_config(const std::string& command, const std::string& experiment);

// Defaults, then the config file, then --set entries, then flags.
Json resolve_config(const std::string& command, const Overrides& overrides);

// Assigns `raw` (parsed as JSON when possible, else kept as a string) at a
// dotted key path, creating objects on the way.
void set_path(Json& config, const std::string& dotted_key, const std::string& raw);

// FNV-1a over the compact dump, leaving out the output path.
std::uint64_t config_hash(const Json& config);
std::string hex64(std::uint64_t v);

enum class MethodKind { PowerMean, Arithmetic, Aggregate, Dense };

struct Method {
  MethodKind kind;
  double p;  // exponent for PowerMean and Dense; 1 for Arithmetic; NaN for Aggregate
  std::string name() const;
};

// "Lp" expands over the p list; "L1" and "Lagg" are the baselines; "dense"
// (benchmark only) is the dense reference solve for each p.
std::vector<Method> expand_methods(const Json& config);

powermean::PowerMeanSolveSpec solver_spec(const Json& config, double p, std::uint64_t seed);

sbm::Case1Params case1_params(const Json& config);
sbm::Case2Params case2_params(const Json& config);
// Case 3 parameters with the copy probability and mixing given explicitly.
sbm::Case3Params case3_params(const Json& config, double copy_prob, double mixing);

// A number or a list of numbers.
std::vector<double> number_list(const Json& value, const std::string& what);

// Worker count for sweeps: 1 under single_thread, else the hardware
// concurrency capped by PML_THREADS.
int worker_count(const Json& config);

}  // namespace pml::cli

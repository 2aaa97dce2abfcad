#pragma once

#include <iosfwd>
#include <string>

#include "experiment_config.hpp"

namespace pml::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
// Some rows carry an error entry; the rest of the output is complete.
inline constexpr int kExitPartial = 3;

// Each command reads a resolved config. Tabular output goes to the file in
// config["out"] when present, else to `out`; progress and messages go to
// `err`.
int cmd_generate(const Json& config, std::ostream& out, std::ostream& err);
int cmd_sweep(const Json& config, std::ostream& out, std::ostream& err);
int cmd_benchmark(const Json& config, std::ostream& out, std::ostream& err);
int cmd_cluster(const Json& config, std::ostream& out, std::ostream& err);

int run_command(const std::string& command, const Json& config, std::ostream& out,
                std::ostream& err);

// `# key: value` lines heading every CSV written by the tool.
void write_metadata(std::ostream& os, const Json& config);

}  // namespace pml::cli

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fkdyn/config.hpp"

namespace fk {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitDifferential = 3 };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"sample", "mix", "spatial", "weights", "bottleneck", "oracle-diff"};
  return names;
}

// Runs one experiment into config run.out and writes manifest.json there.
// Returns an exit code; validation and runtime errors are reported on `log`.
int run_command(const std::string& name, const Config& config, std::ostream& log);

// Full command line: fkdyn <command> --config PATH [--seed S] [--threads T] [--out DIR].
int run_cli(int argc, char** argv);

// Markdown for the configuration keys and every CSV the commands write.
std::string output_schema_markdown();

}  // namespace fk

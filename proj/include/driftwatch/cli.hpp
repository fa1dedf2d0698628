#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "driftwatch/config.hpp"

namespace driftwatch {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitConfig = 3, kExitInternal = 4 };

/// A fully resolved command: everything needed to reproduce its outputs.
struct Invocation {
  std::string subcommand;
  ToolConfig config;
  std::uint64_t seed = 0;
  // Subcommand-specific paths and switches (input, model, trace, scores).
  std::map<std::string, std::string> options;
  std::string out_dir = ".";
  std::vector<std::string> outputs;
};

/// Runs one command line (without the program name). Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Executes a resolved command, writing its outputs and manifest.json into
/// inv.out_dir. Throws InputError / ConfigError.
void execute(Invocation inv, std::ostream& out);

std::string manifest_json(const Invocation& inv);
Invocation invocation_from_manifest(const std::string& json);

}  // namespace driftwatch

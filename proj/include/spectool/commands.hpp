#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spectool::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kThreadsEnv = "SPECTOOL_THREADS";

struct RunOptions {
  std::string command;     ///< spectrum | stability | wireless
  std::string subcommand;  ///< wireless: train | evaluate | robustness
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> model;
};

/// Thread count: --threads, else SPECTOOL_THREADS, else the OpenMP default.
int resolve_threads(const std::optional<int>& flag);

/// Runs one command, writes its outputs and manifest.json into opts.out and
/// returns the names of the files written. Errors are thrown as
/// spectool::Error subclasses; a stability run with bound violations writes
/// everything and then throws InvariantViolation.
std::vector<std::string> run(const RunOptions& opts);

/// run() with errors mapped to exit codes and printed to stderr.
int run_and_report(const RunOptions& opts);

}  // namespace spectool::cli

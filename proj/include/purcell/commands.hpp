#pragma once

// Batch drivers behind the command-line tool. Each command checks that its
// sections are present, then computes and writes CSV files into the output
// directory. The run report lists every file, the seeds and summary numbers.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "purcell/config.hpp"

namespace purcell::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kConfigFailure = 1, kNumericalFailure = 2 };

struct RunReport {
  std::string command;
  std::vector<std::string> outputs;  // file names relative to the output directory
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  std::vector<std::string> log;
  bool numerical_failure = false;  // partial results were written
};

RunReport cmd_sweep(const config::RunConfig& config, const std::filesystem::path& out);
RunReport cmd_readout(const config::RunConfig& config, const std::filesystem::path& out);
RunReport cmd_leakage(const config::RunConfig& config, const std::filesystem::path& out);
RunReport cmd_multiplex(const config::RunConfig& config, const std::filesystem::path& out);

/// Writes run_report.json next to the outputs.
void write_report(const RunReport& report, const std::filesystem::path& out);

/// Loads the config, runs `command` and writes the report. Returns the exit
/// code; diagnostics go to `err`.
int run(const std::string& command, const std::filesystem::path& config_path, const std::filesystem::path& out,
        std::optional<std::uint64_t> seed_override, std::ostream& err);

}  // namespace purcell::cli

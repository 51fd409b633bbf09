#pragma once

// `bench` command-line front end: preflight, subcommand dispatch, report output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pibench/report.hpp"

namespace pibench::benchcli {

constexpr const char* kDefaultSysfsCpuRoot = "/sys/devices/system/cpu";

struct PreflightResult {
  std::map<std::string, std::string> governor;  // "cpu0" -> policy; empty means unavailable
  std::vector<std::string> warnings;

  bool available() const { return !governor.empty(); }
  /// Per-CPU map, or the string "unavailable".
  report::Json governor_json() const;
};

/// Reads <root>/cpu*/cpufreq/scaling_governor. Never throws.
PreflightResult preflight(const std::filesystem::path& sysfs_cpu_root = kDefaultSysfsCpuRoot);

/// Host, core count and governor status for the report's environment block.
report::Json environment(const PreflightResult& pf);

/// Seed from BENCH_SEED if set and numeric. Throws std::invalid_argument on junk.
std::optional<std::uint64_t> seed_override();

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsage = 2 };

/// Full CLI. Reports go to --output or, without it, to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Raw little-endian doubles of one locality's final field.
void write_field(const std::filesystem::path& path, const std::vector<double>& field);
std::vector<double> read_field(const std::filesystem::path& path);

}  // namespace pibench::benchcli

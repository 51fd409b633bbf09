#pragma once

// Uniform benchmark record and its JSON / CSV / gnuplot-dat projections.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace pibench::report {

using Json = nlohmann::json;

struct Metric {
  double value = 0.0;
  std::string unit;
};

struct Row {
  std::map<std::string, std::string> labels;
  std::map<std::string, Metric> metrics;
  std::optional<std::string> error;  // set for failed cells; metrics are then empty
};

struct BenchReport {
  int schema_version = 1;
  std::string benchmark;
  Json config = Json::object();
  Json environment = Json::object();
  std::vector<Row> rows;
  std::vector<std::string> column_order;  // metrics placed first in dat output
  Json sections = Json::object();  // free-form extras: loss traces, trial lists, cost
};

enum class Format { json, csv, dat };

Format parse_format(const std::string& name);

Json to_json(const BenchReport& r);
BenchReport from_json(const Json& j);

/// Sorted keys, two-space indent, doubles printed with 17 significant digits.
std::string canonical_json(const Json& j);

std::string to_csv(const BenchReport& r);

/// Whitespace-separated columns for gnuplot. The first column is the sweep
/// variable ("cores" or "nodes"); then the metrics named in column_order,
/// then any remaining metrics sorted by name. Rows that differ in other
/// labels go to separate blank-line separated blocks, each preceded by a `#`
/// comment naming the labels.
std::string to_dat(const BenchReport& r);

std::string render(const BenchReport& r, Format f);

/// Throws std::runtime_error if the file cannot be written.
void emit_report(const BenchReport& r, Format f, const std::filesystem::path& path);

/// Throws std::runtime_error on unreadable or malformed input.
BenchReport load_report(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace pibench::report

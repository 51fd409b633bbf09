#include "pibench/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pibench::report {

Format parse_format(const std::string& name) {
  if (name == "json") return Format::json;
  if (name == "csv") return Format::csv;
  if (name == "dat") return Format::dat;
  throw std::invalid_argument("unknown report format '" + name + "' (json, csv, dat)");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json to_json(const BenchReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json jr;
    jr["labels"] = row.labels;
    Json metrics = Json::object();
    for (const auto& [name, m] : row.metrics) metrics[name] = {{"value", m.value}, {"unit", m.unit}};
    jr["metrics"] = std::move(metrics);
    if (row.error) jr["error"] = *row.error;
    rows.push_back(std::move(jr));
  }
  Json j;
  j["schema_version"] = r.schema_version;
  j["benchmark"] = r.benchmark;
  j["config"] = r.config;
  j["environment"] = r.environment;
  j["rows"] = std::move(rows);
  j["column_order"] = r.column_order;
  j["sections"] = r.sections;
  return j;
}

BenchReport from_json(const Json& j) {
  try {
    BenchReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1)
      throw std::runtime_error("unsupported schema_version " + std::to_string(r.schema_version));
    r.benchmark = j.at("benchmark").get<std::string>();
    r.config = j.value("config", Json::object());
    r.environment = j.value("environment", Json::object());
    r.sections = j.value("sections", Json::object());
    r.column_order = j.value("column_order", std::vector<std::string>{});
    for (const auto& jr : j.at("rows")) {
      Row row;
      row.labels = jr.value("labels", Json::object()).get<std::map<std::string, std::string>>();
      const Json metrics = jr.value("metrics", Json::object());
      for (const auto& [name, m] : metrics.items()) {
        const auto& v = m.at("value");
        row.metrics[name] = {v.is_null() ? std::nan("") : v.get<double>(), m.value("unit", "")};
      }
      if (jr.contains("error")) row.error = jr.at("error").get<std::string>();
      r.rows.push_back(std::move(row));
    }
    return r;
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
}

namespace {

void emit(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        emit(it.value(), out, indent + 2);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        emit(v, out, indent + 2);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string primary_label(const BenchReport& r) {
  for (const char* key : {"cores", "nodes"})
    for (const auto& row : r.rows)
      if (row.labels.count(key)) return key;
  return {};
}

}  // namespace

std::string canonical_json(const Json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

std::string to_csv(const BenchReport& r) {
  std::set<std::string> label_keys, metric_keys;
  bool any_error = false;
  for (const auto& row : r.rows) {
    for (const auto& [k, v] : row.labels) label_keys.insert(k);
    for (const auto& [k, v] : row.metrics) metric_keys.insert(k);
    any_error = any_error || row.error.has_value();
  }
  std::ostringstream out;
  bool first = true;
  auto cell = [&](const std::string& s) {
    if (!first) out << ',';
    first = false;
    out << csv_field(s);
  };
  for (const auto& k : label_keys) cell(k);
  for (const auto& k : metric_keys) cell(k);
  if (any_error) cell("error");
  out << '\n';
  for (const auto& row : r.rows) {
    first = true;
    for (const auto& k : label_keys) {
      auto it = row.labels.find(k);
      cell(it == row.labels.end() ? "" : it->second);
    }
    for (const auto& k : metric_keys) {
      auto it = row.metrics.find(k);
      cell(it == row.metrics.end() ? "" : format_double(it->second.value));
    }
    if (any_error) cell(row.error.value_or(""));
    out << '\n';
  }
  return out.str();
}

std::string to_dat(const BenchReport& r) {
  const std::string primary = primary_label(r);
  std::set<std::string> remaining;
  for (const auto& row : r.rows)
    for (const auto& [k, v] : row.metrics) remaining.insert(k);
  std::vector<std::string> metric_keys;
  for (const auto& k : r.column_order)
    if (remaining.erase(k)) metric_keys.push_back(k);
  metric_keys.insert(metric_keys.end(), remaining.begin(), remaining.end());

  // Group rows by their non-primary labels, preserving first appearance.
  std::vector<std::map<std::string, std::string>> group_keys;
  std::vector<std::vector<const Row*>> groups;
  for (const auto& row : r.rows) {
    auto key = row.labels;
    key.erase(primary);
    std::size_t g = 0;
    while (g < group_keys.size() && group_keys[g] != key) ++g;
    if (g == group_keys.size()) {
      group_keys.push_back(key);
      groups.emplace_back();
    }
    groups[g].push_back(&row);
  }

  auto describe = [](const std::map<std::string, std::string>& labels) {
    std::string s;
    for (const auto& [k, v] : labels) s += (s.empty() ? "" : " ") + k + "=" + v;
    return s;
  };

  std::ostringstream out;
  out << "# " << (primary.empty() ? "row" : primary);
  for (const auto& k : metric_keys) out << ' ' << k;
  out << '\n';

  std::size_t index = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g > 0) out << "\n\n";
    if (groups.size() > 1 || !group_keys[g].empty()) out << "# " << describe(group_keys[g]) << '\n';
    for (const Row* row : groups[g]) {
      ++index;
      if (row->error) {
        out << "# failed: " << describe(row->labels) << ": " << *row->error << '\n';
        continue;
      }
      if (primary.empty()) {
        out << index;
      } else {
        auto it = row->labels.find(primary);
        out << (it == row->labels.end() ? std::string("NaN") : it->second);
      }
      for (const auto& k : metric_keys) {
        auto it = row->metrics.find(k);
        out << ' ' << (it == row->metrics.end() ? std::string("NaN") : format_double(it->second.value));
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string render(const BenchReport& r, Format f) {
  switch (f) {
    case Format::json: return canonical_json(to_json(r));
    case Format::csv: return to_csv(r);
    case Format::dat: return to_dat(r);
  }
  return {};
}

void emit_report(const BenchReport& r, Format f, const std::filesystem::path& path) {
  const std::string text = render(r, f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

BenchReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read report " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw std::runtime_error("report " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace pibench::report

#include "pibench/energy.hpp"

#include <stdexcept>

namespace pibench::energy {

const std::vector<PowerProfile>& builtin_profiles() {
  static const std::vector<PowerProfile> profiles{{"pi3b", 3.7}, {"pi3bplus", 5.1}, {"pi4", 6.4}};
  return profiles;
}

PowerProfile resolve_profile(const std::string& name, std::optional<double> watts) {
  if (name == "custom") {
    if (!watts) throw std::invalid_argument("profile 'custom' requires --watts");
    if (!(*watts > 0.0)) throw std::invalid_argument("watts must be > 0");
    return {"custom", *watts};
  }
  for (const auto& p : builtin_profiles()) {
    if (p.model_name != name) continue;
    if (watts) {
      if (!(*watts > 0.0)) throw std::invalid_argument("watts must be > 0");
      return {name, *watts};
    }
    return p;
  }
  throw std::invalid_argument("unknown power profile '" + name + "' (pi3b, pi3bplus, pi4, custom)");
}

double cost_cents(double watts, double seconds, double rate_cents_per_kwh) {
  return watts * seconds / kJoulesPerKwh * rate_cents_per_kwh;
}

CostReport cost_per_iteration(double seconds, std::size_t nodes, const PowerProfile& profile,
                              std::size_t iterations, double rate_cents_per_kwh) {
  if (iterations == 0) throw std::invalid_argument("iterations must be >= 1");
  if (nodes == 0) throw std::invalid_argument("node count must be >= 1");
  const double watts = profile.watts * static_cast<double>(nodes);
  CostReport c;
  c.rate_cents_per_kwh = rate_cents_per_kwh;
  c.kwh = watts * seconds / kJoulesPerKwh;
  c.total_cents = cost_cents(watts, seconds, rate_cents_per_kwh);
  c.cents_per_iteration = c.total_cents / static_cast<double>(iterations);
  return c;
}

std::vector<RowCost> cost_report(const report::BenchReport& r, const PowerProfile& profile,
                                 std::optional<std::size_t> iterations, double rate_cents_per_kwh) {
  std::vector<RowCost> out;
  for (const auto& row : r.rows) {
    if (row.error) continue;
    auto elapsed = row.metrics.find("elapsed_s");
    if (elapsed == row.metrics.end()) continue;
    RowCost rc;
    rc.labels = row.labels;
    rc.seconds = elapsed->second.value;
    if (auto n = row.labels.find("nodes"); n != row.labels.end()) rc.nodes = std::stoul(n->second);
    if (iterations) {
      rc.iterations = *iterations;
    } else if (auto s = row.labels.find("steps"); s != row.labels.end()) {
      rc.iterations = std::stoul(s->second);
    }
    rc.cost = cost_per_iteration(rc.seconds, rc.nodes, profile, rc.iterations, rate_cents_per_kwh);
    out.push_back(std::move(rc));
  }
  if (out.empty())
    throw std::runtime_error("report '" + r.benchmark + "' has no row with an elapsed_s metric to price");
  return out;
}

report::Json cost_section(const std::vector<RowCost>& costs, const PowerProfile& profile, double rate) {
  report::Json rows = report::Json::array();
  for (const auto& c : costs) {
    rows.push_back({{"labels", c.labels},
                    {"nodes", c.nodes},
                    {"iterations", c.iterations},
                    {"elapsed_s", c.seconds},
                    {"kwh", c.cost.kwh},
                    {"total_cents", c.cost.total_cents},
                    {"cents_per_iteration", c.cost.cents_per_iteration}});
  }
  return {{"profile", profile.model_name},
          {"watts_per_node", profile.watts},
          {"rate_cents_per_kwh", rate},
          {"rows", std::move(rows)}};
}

}  // namespace pibench::energy

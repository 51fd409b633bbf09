#pragma once

// Operating-cost model: constant full-load wattage times runtime times an
// electricity rate.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pibench/report.hpp"

namespace pibench::energy {

constexpr double kDefaultRateCentsPerKwh = 8.2;
constexpr double kJoulesPerKwh = 3'600'000.0;

struct PowerProfile {
  std::string model_name;
  double watts = 0.0;
};

/// Full-load draw of the supported boards.
const std::vector<PowerProfile>& builtin_profiles();

/// Looks up a built-in by name ("pi3b", "pi3bplus", "pi4"). "custom" needs
/// explicit watts. Throws std::invalid_argument on unknown names or watts <= 0.
PowerProfile resolve_profile(const std::string& name, std::optional<double> watts = std::nullopt);

/// watts * seconds / 3.6e6 * rate
double cost_cents(double watts, double seconds, double rate_cents_per_kwh = kDefaultRateCentsPerKwh);

struct CostReport {
  double total_cents = 0.0;
  double cents_per_iteration = 0.0;
  double kwh = 0.0;
  double rate_cents_per_kwh = kDefaultRateCentsPerKwh;
};

/// Cost of `nodes` boards of `profile` running for `seconds`.
CostReport cost_per_iteration(double seconds, std::size_t nodes, const PowerProfile& profile,
                              std::size_t iterations, double rate_cents_per_kwh = kDefaultRateCentsPerKwh);

struct RowCost {
  std::map<std::string, std::string> labels;
  std::size_t nodes = 1;
  std::size_t iterations = 1;
  double seconds = 0.0;
  CostReport cost;
};

/// Prices every successful row carrying an `elapsed_s` metric. The node count
/// comes from the `nodes` label (1 if absent); iterations come from the
/// `steps` label unless `iterations` is given. Throws std::runtime_error when
/// no row has an elapsed time.
std::vector<RowCost> cost_report(const report::BenchReport& r, const PowerProfile& profile,
                                 std::optional<std::size_t> iterations = std::nullopt,
                                 double rate_cents_per_kwh = kDefaultRateCentsPerKwh);

/// The "cost" section appended to a priced report.
report::Json cost_section(const std::vector<RowCost>& costs, const PowerProfile& profile, double rate);

}  // namespace pibench::energy

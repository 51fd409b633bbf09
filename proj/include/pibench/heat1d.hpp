#pragma once

// Distributed 1D heat equation on a periodic ring of localities. Each
// locality owns one contiguous partition and swaps one halo cell per side
// per step; edge cells wait on halo futures while the interior proceeds.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pibench/netlayer.hpp"
#include "pibench/report.hpp"
#include "pibench/taskgraph.hpp"

namespace pibench::heat1d {

struct HeatParams {
  double k = 0.5;
  double dt = 1.0;
  double dx = 1.0;
  std::size_t timesteps = 100;

  double alpha() const { return k * dt / (dx * dx); }
  /// Set when k*dt/dx^2 exceeds 0.5.
  std::optional<std::string> stability_warning() const;
};

inline double heat_update(double left, double mid, double right, double alpha) {
  return mid + alpha * (left - 2.0 * mid + right);
}

inline double heat_update(double left, double mid, double right, const HeatParams& p) {
  return heat_update(left, mid, right, p.alpha());
}

struct PartitionShape {
  int rank = 0;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Contiguous blocks in rank order; the first n_global % n_localities ranks get one extra cell.
std::vector<PartitionShape> partition_global(std::size_t n_global, int n_localities);

struct Partition1D {
  int rank = 0;
  std::size_t offset = 0;
  std::vector<double> local;
  std::vector<double> scratch;  // next-step buffer
  double left_halo = 0.0;
  double right_halo = 0.0;
};

Partition1D make_partition(const PartitionShape& shape, std::span<const double> global_field);

/// u[i] = i mod 10 by default; a seed switches to uniform values in [0, 10).
std::vector<double> initial_field(std::size_t n, std::optional<std::uint64_t> seed = std::nullopt);

struct StepContext {
  const HeatParams& params;
  taskgraph::WorkerPool& pool;
  std::size_t subranges = 1;            // in-process split of the interior
  netlayer::Endpoint* endpoint = nullptr;  // null: no boundary send
  std::uint32_t step = 0;
  bool send_boundaries = true;          // false on the final step
};

/// Advances `p` one step. Interior tasks start immediately; each edge cell is
/// a dataflow task on its halo future. Once all cells are done the buffers
/// swap and the new edge cells go to the neighbours tagged step + 1.
taskgraph::Future<Partition1D*> step_partition(Partition1D& p,
                                               taskgraph::Future<std::vector<double>> left_halo,
                                               taskgraph::Future<std::vector<double>> right_halo,
                                               const StepContext& ctx);

/// Drives one locality for params.timesteps steps over its endpoint, splitting
/// the interior across the pool's workers. Returns elapsed seconds, including
/// the first halo exchange.
double run_locality(Partition1D& p, netlayer::Endpoint& ep, const HeatParams& params,
                    taskgraph::WorkerPool& pool);

enum class TransportKind { inproc, tcp };
std::string to_string(TransportKind t);
TransportKind parse_transport(const std::string& s);

struct HeatRunConfig {
  std::size_t points = 1'000'000;
  HeatParams params;
  int localities = 1;
  std::size_t threads_per_node = 1;
  TransportKind transport = TransportKind::inproc;
  std::optional<std::uint64_t> seed;
};

struct HeatRunResult {
  std::vector<double> field;
  double elapsed = 0.0;
};

/// All localities in this process, each on its own thread and worker pool.
HeatRunResult run_heat(const HeatRunConfig& cfg);

/// Single-threaded periodic reference solver.
std::vector<double> solve_sequential(std::vector<double> field, const HeatParams& params);

/// Sum of cells in index order.
double checksum(std::span<const double> field);

enum class ScalingMode { strong, weak };
std::string to_string(ScalingMode m);
ScalingMode parse_mode(const std::string& s);

struct ScalingConfig {
  ScalingMode mode = ScalingMode::strong;
  std::size_t base_points = 30'000'000;
  std::vector<std::size_t> timesteps = {100};
  std::vector<int> node_counts = {1, 2, 3, 4};
  std::vector<std::size_t> threads_per_node = {1};
  HeatParams params;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> memory_limit_bytes;  // cells needing more are recorded as failed
  bool verify = true;                             // compare each run to the sequential solver
};

/// Points simulated at `nodes` nodes: base for strong scaling, base * nodes for weak.
std::size_t global_points(const ScalingConfig& cfg, int nodes);

/// Bytes held by one run: two buffers of doubles.
std::size_t required_bytes(std::size_t points);

/// One row per (steps, nodes, threads/node). Failures become error rows. The
/// size label is `points` (strong) or `points_per_node` (weak), so each sweep
/// stays one block in dat output; the simulated size is the global_points metric.
report::BenchReport run_scaling(const ScalingConfig& cfg, TransportKind transport);

}  // namespace pibench::heat1d

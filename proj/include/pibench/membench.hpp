#pragma once

// STREAM TRIAD bandwidth probe: a[i] = b[i] + q * c[i].

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pibench/taskgraph.hpp"

namespace pibench::membench {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct StreamConfig {
  std::size_t n_elements = 10'000'000;
  std::size_t n_trials = 10;
  double scalar_q = 3.0;
  std::vector<std::size_t> core_counts;  // empty means 1..hardware cores
};

struct CoreResult {
  double best_bandwidth = 0.0;  // bytes/second
  std::vector<double> all_trials;
};

struct StreamResult {
  std::map<std::size_t, CoreResult> per_cores;
  std::size_t bytes_per_sweep = 0;
  std::vector<std::string> warnings;
};

struct StreamArrays {
  std::vector<double> a, b, c;

  /// Allocates and first-touches all three arrays with deterministic contents.
  explicit StreamArrays(std::size_t n);
  std::size_t size() const { return a.size(); }
};

/// a[i] = b[i] + q * c[i] for i in range. Bounds are the caller's contract.
template <class T>
void triad_kernel(std::span<T> a, std::span<const T> b, std::span<const T> c, T q,
                  IndexRange range) {
  T* __restrict out = a.data();
  const T* __restrict x = b.data();
  const T* __restrict y = c.data();
  for (std::size_t i = range.begin; i < range.end; ++i) out[i] = x[i] + q * y[i];
}

/// Bytes counted per TRIAD sweep (two loads and one store; write-allocate excluded).
constexpr std::uint64_t triad_bytes(std::size_t n_elements, std::size_t element_size = sizeof(double)) {
  return 3ULL * element_size * n_elements;
}

/// Splits [0, n) into `parts` contiguous blocks whose sizes differ by at most one.
std::vector<IndexRange> split_blocks(std::size_t n, std::size_t parts);

/// Normalizes core_counts and warns when the working set is not well beyond the LLC.
StreamConfig materialize(StreamConfig cfg, std::size_t available_workers);
std::optional<std::size_t> last_level_cache_bytes();

/// Throws std::invalid_argument when a core count exceeds the pool size.
StreamResult run_stream(const StreamConfig& cfg, taskgraph::WorkerPool& pool, StreamArrays& arrays);
StreamResult run_stream(const StreamConfig& cfg, taskgraph::WorkerPool& pool);

/// max |a[i] - (b[i] + q c[i])| / |b[i] + q c[i]|
double validate_stream(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, double q);

}  // namespace pibench::membench

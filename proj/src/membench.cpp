#include "pibench/membench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <latch>
#include <new>
#include <stdexcept>

namespace pibench::membench {

StreamArrays::StreamArrays(std::size_t n) {
  try {
    a.assign(n, 0.0);
    b.resize(n);
    c.resize(n);
  } catch (const std::bad_alloc&) {
    throw std::runtime_error("STREAM arrays: cannot allocate " + std::to_string(triad_bytes(n)) +
                             " bytes for 3 x " + std::to_string(n) + " doubles");
  }
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = 1.0 + 0.25 * static_cast<double>(i % 17);
    c[i] = 2.0 + 0.125 * static_cast<double>(i % 13);
  }
}

std::vector<IndexRange> split_blocks(std::size_t n, std::size_t parts) {
  if (parts == 0) throw std::invalid_argument("split_blocks: zero parts");
  std::vector<IndexRange> out;
  out.reserve(parts);
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t len = base + (p < extra ? 1 : 0);
    out.push_back({begin, begin + len});
    begin += len;
  }
  return out;
}

std::optional<std::size_t> last_level_cache_bytes() {
  for (int idx = 4; idx >= 0; --idx) {
    std::ifstream in("/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(idx) + "/size");
    std::string text;
    if (!(in >> text) || text.empty()) continue;
    std::size_t mult = 1;
    switch (text.back()) {
      case 'K': mult = 1024; text.pop_back(); break;
      case 'M': mult = 1024 * 1024; text.pop_back(); break;
      case 'G': mult = 1024ULL * 1024 * 1024; text.pop_back(); break;
      default: break;
    }
    try {
      return static_cast<std::size_t>(std::stoull(text)) * mult;
    } catch (const std::exception&) {
      continue;
    }
  }
  return std::nullopt;
}

StreamConfig materialize(StreamConfig cfg, std::size_t available_workers) {
  if (cfg.n_elements == 0) throw std::invalid_argument("stream: n_elements must be positive");
  if (cfg.n_trials == 0) throw std::invalid_argument("stream: n_trials must be positive");
  if (cfg.core_counts.empty())
    for (std::size_t n = 1; n <= available_workers; ++n) cfg.core_counts.push_back(n);
  for (auto n : cfg.core_counts)
    if (n == 0) throw std::invalid_argument("stream: core counts must be positive");
  return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

double timed_sweep(std::span<const IndexRange> blocks, StreamArrays& arr, double q,
                   taskgraph::WorkerPool& pool) {
  const auto n = static_cast<std::ptrdiff_t>(blocks.size());
  std::latch ready(n);
  std::latch go(1);
  std::vector<taskgraph::Future<taskgraph::Unit>> done;
  done.reserve(blocks.size());
  for (const auto& block : blocks) {
    done.push_back(taskgraph::spawn(pool, [&, block] {
      ready.count_down();
      go.wait();
      triad_kernel<double>(arr.a, arr.b, arr.c, q, block);
    }));
  }
  ready.wait();
  const auto t0 = Clock::now();
  go.count_down();
  taskgraph::wait_all(done);
  const auto t1 = Clock::now();
  return std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9);
}

}  // namespace

StreamResult run_stream(const StreamConfig& raw, taskgraph::WorkerPool& pool, StreamArrays& arrays) {
  const StreamConfig cfg = materialize(raw, pool.size());
  if (arrays.size() != cfg.n_elements)
    throw std::invalid_argument("stream: array length does not match n_elements");

  StreamResult result;
  result.bytes_per_sweep = triad_bytes(cfg.n_elements);
  if (auto llc = last_level_cache_bytes(); llc && result.bytes_per_sweep < 4 * *llc) {
    result.warnings.push_back("working set of " + std::to_string(result.bytes_per_sweep) +
                              " bytes is below 4x the last-level cache (" + std::to_string(*llc) +
                              " bytes); bandwidth will include cache effects");
  }

  for (auto cores : cfg.core_counts) {
    if (cores > pool.size())
      throw std::invalid_argument("stream: core count " + std::to_string(cores) +
                                  " exceeds worker pool size " + std::to_string(pool.size()));
    const auto blocks = split_blocks(cfg.n_elements, cores);
    timed_sweep(blocks, arrays, cfg.scalar_q, pool);  // warm-up

    CoreResult cr;
    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      const double secs = timed_sweep(blocks, arrays, cfg.scalar_q, pool);
      cr.all_trials.push_back(static_cast<double>(result.bytes_per_sweep) / secs);
    }
    cr.best_bandwidth = *std::max_element(cr.all_trials.begin(), cr.all_trials.end());
    result.per_cores[cores] = std::move(cr);
  }
  return result;
}

StreamResult run_stream(const StreamConfig& cfg, taskgraph::WorkerPool& pool) {
  StreamArrays arrays(cfg.n_elements);
  return run_stream(cfg, pool, arrays);
}

double validate_stream(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, double q) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double expected = b[i] + q * c[i];
    const double diff = std::abs(a[i] - expected);
    const double rel = expected != 0.0 ? diff / std::abs(expected) : diff;
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace pibench::membench

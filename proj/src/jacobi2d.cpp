#include "pibench/jacobi2d.hpp"

#include <chrono>
#include <new>
#include <random>

namespace pibench::jacobi2d {

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }
std::string to_string(Kernel k) { return k == Kernel::scalar ? "scalar" : "vector"; }

std::vector<RowRange> strip_ranges(std::size_t rows, std::size_t strips) {
  const std::size_t interior = rows - 2;
  if (strips == 0) throw std::invalid_argument("strip_ranges: zero strips");
  if (strips > interior) strips = interior;
  std::vector<RowRange> out;
  out.reserve(strips);
  const std::size_t base = interior / strips;
  const std::size_t extra = interior % strips;
  std::size_t begin = 1;
  for (std::size_t s = 0; s < strips; ++s) {
    const std::size_t h = base + (s < extra ? 1 : 0);
    out.push_back({begin, begin + h});
    begin += h;
  }
  return out;
}

template <class T>
Grid2D<T> make_initial_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Grid2D<T> g(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<T> dist(T(0), T(1));
  for (std::size_t c = 0; c < cols; ++c) g(0, c) = T(1);
  for (std::size_t r = 1; r + 1 < rows; ++r)
    for (std::size_t c = 1; c + 1 < cols; ++c) g(r, c) = dist(rng);
  return g;
}

template Grid2D<float> make_initial_grid<float>(std::size_t, std::size_t, std::uint64_t);
template Grid2D<double> make_initial_grid<double>(std::size_t, std::size_t, std::uint64_t);

RooflineParams text_roofline(Precision p) { return {p == Precision::f64 ? 24.0 : 12.0, 4.0}; }
RooflineParams figure_roofline(Precision p) { return {p == Precision::f64 ? 16.0 : 8.0, 4.0}; }

double expected_peak(double bandwidth_bytes_per_s, const RooflineParams& params) {
  if (!(bandwidth_bytes_per_s > 0.0)) throw std::invalid_argument("expected_peak: bandwidth must be > 0");
  if (!(params.bytes_per_lup > 0.0)) throw std::invalid_argument("expected_peak: bytes_per_lup must be > 0");
  return bandwidth_bytes_per_s / params.bytes_per_lup;
}

double lups_to_flops(double lups, const RooflineParams& params) { return lups * params.flops_per_lup; }

double mlups(std::size_t interior_rows, std::size_t interior_cols, std::size_t timesteps,
             double elapsed_seconds) {
  return static_cast<double>(interior_rows) * static_cast<double>(interior_cols) *
         static_cast<double>(timesteps) / elapsed_seconds / 1e6;
}

JacobiConfig materialize(JacobiConfig cfg) {
  if (cfg.rows < 3 || cfg.cols < 3) throw std::invalid_argument("jacobi2d: grid must be at least 3x3");
  if (cfg.timesteps == 0) throw std::invalid_argument("jacobi2d: timesteps must be positive");
  if (cfg.strips_per_core == 0) throw std::invalid_argument("jacobi2d: strips_per_core must be positive");
  if (cfg.core_counts.empty())
    for (std::size_t n = 1; n <= taskgraph::hardware_cores(); ++n) cfg.core_counts.push_back(n);
  for (auto n : cfg.core_counts)
    if (n == 0) throw std::invalid_argument("jacobi2d: core counts must be positive");
  if (cfg.lanes == 0)
    cfg.lanes = cfg.precision == Precision::f64 ? default_lanes<double>() : default_lanes<float>();
  if (cfg.kernel == Kernel::vector) {
    if (!supported_lanes(cfg.lanes))
      throw std::invalid_argument("jacobi2d: unsupported lane count " + std::to_string(cfg.lanes));
    const std::size_t n = cfg.cols - 2;
    if (n % cfg.lanes != 0)
      throw std::invalid_argument("jacobi2d: interior width " + std::to_string(n) +
                                  " is not divisible by " + std::to_string(cfg.lanes) +
                                  " lanes; pad columns by " + std::to_string(cfg.lanes - n % cfg.lanes));
  }
  return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class T>
StencilMetrics measure(const JacobiConfig& cfg, std::size_t cores) {
  Grid2D<T> initial = make_initial_grid<T>(cfg.rows, cfg.cols, cfg.seed);

  taskgraph::WorkerPool pool(cores);
  const std::size_t strips = cores * cfg.strips_per_core;
  StencilMetrics m;
  m.core_count = cores;
  m.kernel = cfg.kernel;
  m.precision = cfg.precision;

  Grid2D<T> result;
  if (cfg.kernel == Kernel::scalar) {
    const auto t0 = Clock::now();
    result = iterate_scalar(std::move(initial), cfg.timesteps, strips, pool);
    m.elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  } else {
    auto packed = pack_vns(initial, cfg.lanes);
    initial = Grid2D<T>();
    const auto t0 = Clock::now();
    packed = iterate_vns(std::move(packed), cfg.timesteps, strips, pool);
    m.elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
    result = unpack_vns(packed);
  }
  m.mlups = mlups(cfg.rows - 2, cfg.cols - 2, cfg.timesteps, m.elapsed);
  m.field_hash = field_hash(result);
  return m;
}

}  // namespace

std::vector<StencilMetrics> run_jacobi(const JacobiConfig& raw) {
  const JacobiConfig cfg = materialize(raw);
  std::vector<StencilMetrics> out;
  const std::size_t elem = cfg.precision == Precision::f64 ? sizeof(double) : sizeof(float);
  for (auto cores : cfg.core_counts) {
    try {
      out.push_back(cfg.precision == Precision::f64 ? measure<double>(cfg, cores)
                                                    : measure<float>(cfg, cores));
    } catch (const std::bad_alloc&) {
      throw std::runtime_error("jacobi2d: cannot allocate " +
                               std::to_string(2 * cfg.rows * cfg.cols * elem) + " bytes for two " +
                               std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) + " grids");
    }
  }
  return out;
}

}  // namespace pibench::jacobi2d

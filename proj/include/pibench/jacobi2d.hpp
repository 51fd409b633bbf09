#pragma once

// 2D Jacobi stencil: plain row-major kernel, a lane-interleaved (virtual node)
// kernel vectorized with std::experimental::simd, and the dataflow strip driver.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <experimental/simd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pibench/taskgraph.hpp"

namespace pibench::jacobi2d {

namespace stdx = std::experimental;

enum class Precision { f32, f64 };
enum class Kernel { scalar, vector };

std::string to_string(Precision p);
std::string to_string(Kernel k);

/// Row-major field. The outer frame (first/last row and column) is a fixed
/// Dirichlet boundary; kernels only write interior cells.
template <class T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t rows, std::size_t cols, T fill = T(0)) : rows_(rows), cols_(cols) {
    if (rows < 3 || cols < 3) throw std::invalid_argument("Grid2D: need at least 3x3 cells");
    data_.assign(rows * cols, fill);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  T* row(std::size_t r) { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// True iff shapes match and every cell has the same bit pattern.
template <class T>
bool bit_identical(const Grid2D<T>& a, const Grid2D<T>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

/// Half-open range of interior rows, 1 <= begin <= end <= rows - 1.
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

template <class Grid>
RowRange interior_rows(const Grid& g) {
  return {1, g.rows() - 1};
}

template <class T>
void step_scalar(const Grid2D<T>& src, Grid2D<T>& dst, RowRange range) {
  const std::size_t cols = src.cols();
  const T quarter = T(0.25);
  for (std::size_t i = range.begin; i < range.end; ++i) {
    const T* north = src.row(i - 1);
    const T* mid = src.row(i);
    const T* south = src.row(i + 1);
    T* out = dst.row(i);
    out[0] = mid[0];
    for (std::size_t j = 1; j + 1 < cols; ++j)
      out[j] = quarter * ((north[j] + south[j]) + (mid[j - 1] + mid[j + 1]));
    out[cols - 1] = mid[cols - 1];
  }
}

/// One full step, including the first and last frame rows.
template <class T>
void step_scalar(const Grid2D<T>& src, Grid2D<T>& dst) {
  std::memcpy(dst.row(0), src.row(0), src.cols() * sizeof(T));
  std::memcpy(dst.row(src.rows() - 1), src.row(src.rows() - 1), src.cols() * sizeof(T));
  step_scalar(src, dst, interior_rows(src));
}

class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Widths accepted by the vector kernel.
inline bool supported_lanes(std::size_t w) { return w == 1 || w == 2 || w == 4 || w == 8 || w == 16; }

/// Lane count of a 128-bit register for T.
template <class T>
constexpr std::size_t default_lanes() {
  return 16 / sizeof(T);
}

/// Virtual-node layout. Each interior row of n columns is cut into W
/// contiguous sub-domains of length L = n / W; lane w of lane-group j holds
/// interior column w * L + j. Frame columns live in west/east arrays.
template <class T>
class VnsGrid2D {
 public:
  VnsGrid2D() = default;
  VnsGrid2D(std::size_t rows, std::size_t interior_cols, std::size_t lanes)
      : rows_(rows), lanes_(lanes), chunk_(interior_cols / lanes) {
    data_.assign(rows * chunk_ * lanes_, T(0));
    west_.assign(rows, T(0));
    east_.assign(rows, T(0));
  }

  std::size_t rows() const { return rows_; }
  std::size_t lanes() const { return lanes_; }
  std::size_t chunk_len() const { return chunk_; }
  std::size_t interior_cols() const { return chunk_ * lanes_; }

  T* row(std::size_t r) { return data_.data() + r * chunk_ * lanes_; }
  const T* row(std::size_t r) const { return data_.data() + r * chunk_ * lanes_; }
  T* group(std::size_t r, std::size_t j) { return row(r) + j * lanes_; }
  const T* group(std::size_t r, std::size_t j) const { return row(r) + j * lanes_; }

  T& west(std::size_t r) { return west_[r]; }
  T west(std::size_t r) const { return west_[r]; }
  T& east(std::size_t r) { return east_[r]; }
  T east(std::size_t r) const { return east_[r]; }

 private:
  std::size_t rows_ = 0;
  std::size_t lanes_ = 1;
  std::size_t chunk_ = 0;
  std::vector<T> data_;
  std::vector<T> west_;
  std::vector<T> east_;
};

/// Throws LayoutError if the interior width is not a multiple of `lanes`.
template <class T>
VnsGrid2D<T> pack_vns(const Grid2D<T>& g, std::size_t lanes) {
  if (!supported_lanes(lanes))
    throw LayoutError("VNS pack: unsupported lane count " + std::to_string(lanes) +
                      " (use 1, 2, 4, 8 or 16)");
  const std::size_t n = g.cols() - 2;
  if (n % lanes != 0) {
    const std::size_t pad = lanes - n % lanes;
    throw LayoutError("VNS pack: interior width " + std::to_string(n) + " is not divisible by " +
                      std::to_string(lanes) + " lanes; pad columns by " + std::to_string(pad) +
                      " (to " + std::to_string(g.cols() + pad) + " total)");
  }
  VnsGrid2D<T> v(g.rows(), n, lanes);
  const std::size_t chunk = v.chunk_len();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    v.west(r) = g(r, 0);
    v.east(r) = g(r, g.cols() - 1);
    for (std::size_t j = 0; j < chunk; ++j)
      for (std::size_t w = 0; w < lanes; ++w) v.group(r, j)[w] = g(r, 1 + w * chunk + j);
  }
  return v;
}

template <class T>
Grid2D<T> unpack_vns(const VnsGrid2D<T>& v) {
  Grid2D<T> g(v.rows(), v.interior_cols() + 2);
  const std::size_t chunk = v.chunk_len();
  for (std::size_t r = 0; r < v.rows(); ++r) {
    g(r, 0) = v.west(r);
    g(r, g.cols() - 1) = v.east(r);
    for (std::size_t j = 0; j < chunk; ++j)
      for (std::size_t w = 0; w < v.lanes(); ++w) g(r, 1 + w * chunk + j) = v.group(r, j)[w];
  }
  return g;
}

/// Lane-group whose lane w holds the west neighbour of lane w in group j.
/// At j == 0 the seam rotates lanes up by one and inserts the boundary value.
template <class T>
std::vector<T> gather_west(const VnsGrid2D<T>& v, std::size_t row, std::size_t j) {
  const std::size_t W = v.lanes();
  const std::size_t L = v.chunk_len();
  std::vector<T> out(W);
  if (j > 0) {
    const T* g = v.group(row, j - 1);
    out.assign(g, g + W);
    return out;
  }
  const T* last = v.group(row, L - 1);
  out[0] = v.west(row);
  for (std::size_t w = 1; w < W; ++w) out[w] = last[w - 1];
  return out;
}

/// Mirror of gather_west: at j == L-1, lanes rotate down with the east boundary in the top lane.
template <class T>
std::vector<T> gather_east(const VnsGrid2D<T>& v, std::size_t row, std::size_t j) {
  const std::size_t W = v.lanes();
  const std::size_t L = v.chunk_len();
  std::vector<T> out(W);
  if (j + 1 < L) {
    const T* g = v.group(row, j + 1);
    out.assign(g, g + W);
    return out;
  }
  const T* first = v.group(row, 0);
  for (std::size_t w = 0; w + 1 < W; ++w) out[w] = first[w + 1];
  out[W - 1] = v.east(row);
  return out;
}

namespace detail {

template <class T, std::size_t W>
void step_vns_lanes(const VnsGrid2D<T>& src, VnsGrid2D<T>& dst, RowRange range) {
  using V = stdx::fixed_size_simd<T, W>;
  const std::size_t L = src.chunk_len();
  const V quarter(T(0.25));
  auto load = [](const T* p) { return V(p, stdx::element_aligned); };

  for (std::size_t r = range.begin; r < range.end; ++r) {
    const T* north = src.row(r - 1);
    const T* mid = src.row(r);
    const T* south = src.row(r + 1);
    T* out = dst.row(r);
    const T west_edge = src.west(r);
    const T east_edge = src.east(r);

    for (std::size_t j = 0; j < L; ++j) {
      const V n = load(north + j * W);
      const V s = load(south + j * W);
      const V w = j > 0 ? load(mid + (j - 1) * W) : V([&](auto lane) {
        return lane == 0 ? west_edge : mid[(L - 1) * W + lane - 1];
      });
      const V e = j + 1 < L ? load(mid + (j + 1) * W) : V([&](auto lane) {
        return lane == W - 1 ? east_edge : mid[lane + 1];
      });
      const V res = quarter * ((n + s) + (w + e));
      res.copy_to(out + j * W, stdx::element_aligned);
    }
    dst.west(r) = west_edge;
    dst.east(r) = east_edge;
  }
}

}  // namespace detail

/// Lane-wise 4-neighbour update with the same association order as step_scalar.
template <class T>
void step_vns(const VnsGrid2D<T>& src, VnsGrid2D<T>& dst, RowRange range) {
  switch (src.lanes()) {
    case 1: return detail::step_vns_lanes<T, 1>(src, dst, range);
    case 2: return detail::step_vns_lanes<T, 2>(src, dst, range);
    case 4: return detail::step_vns_lanes<T, 4>(src, dst, range);
    case 8: return detail::step_vns_lanes<T, 8>(src, dst, range);
    case 16: return detail::step_vns_lanes<T, 16>(src, dst, range);
    default: throw LayoutError("step_vns: unsupported lane count");
  }
}

/// Horizontal strips of interior rows, heights differing by at most one.
std::vector<RowRange> strip_ranges(std::size_t rows, std::size_t strips);

/// Runs `steps` double-buffered steps. Each strip's step t+1 is a dataflow
/// task gated on its own and its neighbours' step-t futures.
template <class GridT, class StepFn>
GridT iterate_strips(GridT grid, std::size_t steps, std::size_t strips, taskgraph::WorkerPool& pool,
                     StepFn step) {
  using taskgraph::Future;
  using taskgraph::Unit;

  GridT other = grid;
  GridT* buffers[2] = {&grid, &other};
  const auto ranges = strip_ranges(grid.rows(), strips);
  const std::size_t n = ranges.size();

  std::vector<Future<Unit>> prev(n, taskgraph::make_ready(Unit{}));
  for (std::size_t t = 0; t < steps; ++t) {
    const GridT* src = buffers[t % 2];
    GridT* dst = buffers[(t + 1) % 2];
    std::vector<Future<Unit>> cur;
    cur.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<Future<Unit>> deps;
      if (s > 0) deps.push_back(prev[s - 1]);
      deps.push_back(prev[s]);
      if (s + 1 < n) deps.push_back(prev[s + 1]);
      cur.push_back(taskgraph::dataflow(pool, std::move(deps),
                                        [src, dst, range = ranges[s], &step](const std::vector<Unit>&) {
                                          step(*src, *dst, range);
                                        }));
    }
    prev = std::move(cur);
  }
  taskgraph::wait_all(prev);
  return steps % 2 == 0 ? std::move(grid) : std::move(other);
}

template <class T>
Grid2D<T> iterate_scalar(Grid2D<T> g, std::size_t steps, std::size_t strips, taskgraph::WorkerPool& pool) {
  return iterate_strips(std::move(g), steps, strips, pool,
                        [](const Grid2D<T>& s, Grid2D<T>& d, RowRange r) { step_scalar(s, d, r); });
}

template <class T>
VnsGrid2D<T> iterate_vns(VnsGrid2D<T> g, std::size_t steps, std::size_t strips,
                         taskgraph::WorkerPool& pool) {
  return iterate_strips(std::move(g), steps, strips, pool,
                        [](const VnsGrid2D<T>& s, VnsGrid2D<T>& d, RowRange r) { step_vns(s, d, r); });
}

/// Deterministic start field: top frame row 1, other frame cells 0, interior uniform in [0, 1).
template <class T>
Grid2D<T> make_initial_grid(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// FNV-1a over the raw bytes of the field.
template <class T>
std::uint64_t field_hash(const Grid2D<T>& g) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(g.data().data());
  for (std::size_t i = 0; i < g.data().size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// ---- roofline ---------------------------------------------------------------

struct RooflineParams {
  double bytes_per_lup = 24.0;
  double flops_per_lup = 4.0;
};

/// Three memory transfers per update: 24 B (double) / 12 B (single).
RooflineParams text_roofline(Precision p);
/// The divisors used when plotting expected peak: 16 B (double) / 8 B (single).
RooflineParams figure_roofline(Precision p);

/// Bandwidth-bound ceiling in lattice updates per second.
double expected_peak(double bandwidth_bytes_per_s, const RooflineParams& params);
double lups_to_flops(double lups, const RooflineParams& params = {});

// ---- benchmark driver -------------------------------------------------------

struct JacobiConfig {
  std::size_t rows = 4096;
  std::size_t cols = 4096;
  std::size_t timesteps = 100;
  Kernel kernel = Kernel::scalar;
  Precision precision = Precision::f64;
  std::vector<std::size_t> core_counts;  // empty means 1..hardware cores
  std::size_t lanes = 0;                 // 0 means a 128-bit register's worth
  std::size_t strips_per_core = 1;
  std::uint64_t seed = 42;
};

struct StencilMetrics {
  double mlups = 0.0;
  double elapsed = 0.0;
  std::size_t core_count = 0;
  Kernel kernel = Kernel::scalar;
  Precision precision = Precision::f64;
  std::uint64_t field_hash = 0;
};

double mlups(std::size_t interior_rows, std::size_t interior_cols, std::size_t timesteps,
             double elapsed_seconds);

/// Validates the configuration and fills in defaults.
JacobiConfig materialize(JacobiConfig cfg);

/// One measurement per core count, each on its own pool of that many workers.
std::vector<StencilMetrics> run_jacobi(const JacobiConfig& cfg);

}  // namespace pibench::jacobi2d

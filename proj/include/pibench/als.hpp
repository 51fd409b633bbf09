#pragma once

// Alternating least squares factorization of a sparse ratings matrix R into
// U (users x k) and V (k x items), with MovieLens ratings.csv ingestion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pibench/taskgraph.hpp"

namespace pibench::als {

struct Rating {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double value = 0.0;
};

/// Compressed adjacency: entries of row r are [offsets[r], offsets[r+1]).
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::span<const std::uint32_t> indices(std::size_t r) const {
    return std::span(index).subspan(offsets[r], offsets[r + 1] - offsets[r]);
  }
  std::span<const double> values(std::size_t r) const {
    return std::span(value).subspan(offsets[r], offsets[r + 1] - offsets[r]);
  }
};

struct RatingsMatrix {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<Rating> observations;
  Adjacency by_user;  // item indices per user
  Adjacency by_item;  // user indices per item
  std::vector<std::int64_t> user_ids;  // dense index -> raw id
  std::vector<std::int64_t> item_ids;
  std::unordered_map<std::int64_t, std::uint32_t> user_index;
  std::unordered_map<std::int64_t, std::uint32_t> item_index;
  std::size_t duplicates = 0;  // repeated (user, item) rows overwritten on ingest

  /// Builds the matrix from dense-indexed triples. Later duplicates win.
  static RatingsMatrix from_triples(std::size_t n_users, std::size_t n_items, std::vector<Rating> triples);
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kDefaultMaxLines = 200'000;

/// Reads `userId,movieId,rating,timestamp` rows after the header, at most
/// `max_lines` data rows. Ids are densified in first-appearance order.
RatingsMatrix load_ratings(std::istream& in, std::size_t max_lines = kDefaultMaxLines);
RatingsMatrix load_ratings(const std::filesystem::path& path, std::size_t max_lines = kDefaultMaxLines);

/// Row-major dense matrix.
struct Dense {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Dense() = default;
  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return std::span(data).subspan(r * cols, cols); }
  std::span<const double> row(std::size_t r) const { return std::span(data).subspan(r * cols, cols); }
};

/// U is n_users x k. V is stored item-major (n_items x k), so item j's
/// factor column V[:, j] is the contiguous row `item_factors.row(j)`.
struct AlsModel {
  std::size_t k = 0;
  double lambda = 0.0;
  Dense user_factors;
  Dense item_factors;

  double v(std::size_t factor, std::size_t item) const { return item_factors(item, factor); }
  double predict(std::size_t user, std::size_t item) const;
};

class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimizer of sum_j (r_j - x . f_j)^2 + lambda |x|^2 over the observed
/// partners j, where f_j = factors.row(partner[j]). Solved as the k x k
/// normal equations (F F^T + lambda I) x = F r by Cholesky. An empty
/// observation set yields the zero row. `who` names the row in errors.
std::vector<double> solve_row(const Dense& factors, std::span<const std::uint32_t> partners,
                              std::span<const double> ratings, double lambda, const std::string& who = "row");

/// User-side solve against fixed item factors.
std::vector<double> solve_user_row(std::uint32_t user, const AlsModel& model, const RatingsMatrix& R);

struct FitOptions {
  std::size_t k = 10;
  double lambda = 0.1;
  std::size_t sweeps = 10;
  std::uint64_t seed = 42;
};

struct FitResult {
  AlsModel model;
  std::vector<double> loss_trace;  // regularized loss after every half-sweep
};

/// V starts uniform in [0, 1) from the seed. Each sweep solves all users,
/// then all items. With a pool, rows of a half-sweep run as parallel tasks.
FitResult als_fit(const RatingsMatrix& R, const FitOptions& opts, taskgraph::WorkerPool* pool = nullptr);

/// sum_obs (R - U V)^2 + lambda (|U|^2 + |V|^2)
double regularized_loss(const AlsModel& model, const RatingsMatrix& R);

/// Throws std::invalid_argument on an empty observation set.
double rmse(const AlsModel& model, const RatingsMatrix& R);

}  // namespace pibench::als

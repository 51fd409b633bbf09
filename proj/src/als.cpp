#include "pibench/als.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <string_view>

namespace pibench::als {

namespace {

Adjacency build_adjacency(std::size_t n_rows, const std::vector<Rating>& obs, bool by_user) {
  Adjacency adj;
  adj.offsets.assign(n_rows + 1, 0);
  for (const auto& o : obs) ++adj.offsets[(by_user ? o.user : o.item) + 1];
  for (std::size_t r = 0; r < n_rows; ++r) adj.offsets[r + 1] += adj.offsets[r];
  adj.index.resize(obs.size());
  adj.value.resize(obs.size());
  std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const auto& o : obs) {
    const std::size_t slot = cursor[by_user ? o.user : o.item]++;
    adj.index[slot] = by_user ? o.item : o.user;
    adj.value[slot] = o.value;
  }
  return adj;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

RatingsMatrix RatingsMatrix::from_triples(std::size_t n_users, std::size_t n_items, std::vector<Rating> triples) {
  RatingsMatrix R;
  R.n_users = n_users;
  R.n_items = n_items;
  std::unordered_map<std::uint64_t, std::size_t> seen;
  for (const auto& t : triples) {
    if (t.user >= n_users || t.item >= n_items) throw std::out_of_range("rating index out of range");
    const std::uint64_t key = (static_cast<std::uint64_t>(t.user) << 32) | t.item;
    auto [it, fresh] = seen.emplace(key, R.observations.size());
    if (fresh) {
      R.observations.push_back(t);
    } else {
      R.observations[it->second].value = t.value;
      ++R.duplicates;
    }
  }
  R.by_user = build_adjacency(n_users, R.observations, true);
  R.by_item = build_adjacency(n_items, R.observations, false);
  return R;
}

RatingsMatrix load_ratings(std::istream& in, std::size_t max_lines) {
  std::string line;
  std::size_t line_no = 0;

  auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  if (!std::getline(in, line)) throw FormatError("ratings file is empty; expected header userId,movieId,rating,timestamp");
  ++line_no;
  strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != "userId,movieId,rating,timestamp")
    throw FormatError("line 1: missing header userId,movieId,rating,timestamp (got '" + line + "')");

  std::vector<std::int64_t> user_ids, item_ids;
  std::unordered_map<std::int64_t, std::uint32_t> user_index, item_index;
  std::vector<Rating> triples;
  std::size_t rows_read = 0;

  while (rows_read < max_lines && std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;

    std::string_view fields[4];
    std::size_t count = 0;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      if (count < 4) fields[count] = rest.substr(0, comma);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::int64_t user = 0, item = 0, stamp = 0;
    double rating = 0.0;
    if (count != 4 || !parse_number(fields[0], user) || !parse_number(fields[1], item) ||
        !parse_number(fields[2], rating) || !parse_number(fields[3], stamp) || !std::isfinite(rating))
      throw FormatError("line " + std::to_string(line_no) + ": malformed rating row '" + line + "'");

    auto [u, u_new] = user_index.emplace(user, static_cast<std::uint32_t>(user_ids.size()));
    if (u_new) user_ids.push_back(user);
    auto [i, i_new] = item_index.emplace(item, static_cast<std::uint32_t>(item_ids.size()));
    if (i_new) item_ids.push_back(item);
    triples.push_back({u->second, i->second, rating});
    ++rows_read;
  }

  RatingsMatrix R = RatingsMatrix::from_triples(user_ids.size(), item_ids.size(), std::move(triples));
  R.user_ids = std::move(user_ids);
  R.item_ids = std::move(item_ids);
  R.user_index = std::move(user_index);
  R.item_index = std::move(item_index);
  return R;
}

RatingsMatrix load_ratings(const std::filesystem::path& path, std::size_t max_lines) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings file " + path.string());
  return load_ratings(in, max_lines);
}

double AlsModel::predict(std::size_t user, std::size_t item) const {
  const auto u = user_factors.row(user);
  const auto v = item_factors.row(item);
  double s = 0.0;
  for (std::size_t f = 0; f < k; ++f) s += u[f] * v[f];
  return s;
}

std::vector<double> solve_row(const Dense& factors, std::span<const std::uint32_t> partners,
                              std::span<const double> ratings, double lambda, const std::string& who) {
  const std::size_t k = factors.cols;
  std::vector<double> x(k, 0.0);
  if (partners.empty()) return x;

  // A = F F^T + lambda I, b = F r; F's columns are the partners' factor rows.
  std::vector<double> A(k * k, 0.0);
  for (std::size_t j = 0; j < partners.size(); ++j) {
    const auto f = factors.row(partners[j]);
    for (std::size_t a = 0; a < k; ++a) {
      x[a] += ratings[j] * f[a];
      for (std::size_t b = 0; b <= a; ++b) A[a * k + b] += f[a] * f[b];
    }
  }
  double max_diag = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    A[a * k + a] += lambda;
    max_diag = std::max(max_diag, A[a * k + a]);
  }

  // In-place Cholesky on the lower triangle.
  const double tiny = 1e-13 * max_diag;
  for (std::size_t j = 0; j < k; ++j) {
    double d = A[j * k + j];
    for (std::size_t p = 0; p < j; ++p) d -= A[j * k + p] * A[j * k + p];
    if (!(d > tiny))
      throw SingularSystem(who + ": normal equations are singular (lambda = " + std::to_string(lambda) +
                           ", " + std::to_string(partners.size()) + " observations)");
    const double ljj = std::sqrt(d);
    A[j * k + j] = ljj;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = A[i * k + j];
      for (std::size_t p = 0; p < j; ++p) s -= A[i * k + p] * A[j * k + p];
      A[i * k + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    double s = x[i];
    for (std::size_t p = 0; p < i; ++p) s -= A[i * k + p] * x[p];
    x[i] = s / A[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    double s = x[i];
    for (std::size_t p = i + 1; p < k; ++p) s -= A[p * k + i] * x[p];
    x[i] = s / A[i * k + i];
  }
  return x;
}

std::vector<double> solve_user_row(std::uint32_t user, const AlsModel& model, const RatingsMatrix& R) {
  return solve_row(model.item_factors, R.by_user.indices(user), R.by_user.values(user), model.lambda,
                   "user " + std::to_string(user));
}

namespace {

// Solves every row of `target` against the fixed `factors`.
void half_sweep(Dense& target, const Dense& factors, const Adjacency& adj, double lambda, const char* kind,
                taskgraph::WorkerPool* pool) {
  auto solve_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto x = solve_row(factors, adj.indices(r), adj.values(r), lambda,
                               std::string(kind) + " " + std::to_string(r));
      std::copy(x.begin(), x.end(), target.row(r).begin());
    }
  };
  const std::size_t n = target.rows;
  if (pool == nullptr || pool->size() <= 1 || n < 2) {
    solve_range(0, n);
    return;
  }
  const std::size_t chunks = std::min(n, pool->size() * 4);
  std::vector<taskgraph::Future<taskgraph::Unit>> tasks;
  std::size_t begin = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t end = begin + n / chunks + (c < n % chunks ? 1 : 0);
    tasks.push_back(taskgraph::spawn(*pool, [&solve_range, begin, end] { solve_range(begin, end); }));
    begin = end;
  }
  taskgraph::wait_all(tasks);
}

}  // namespace

FitResult als_fit(const RatingsMatrix& R, const FitOptions& opts, taskgraph::WorkerPool* pool) {
  if (opts.k == 0) throw std::invalid_argument("als: k must be at least 1");
  if (opts.sweeps == 0) throw std::invalid_argument("als: sweeps must be at least 1");
  if (!(opts.lambda >= 0.0)) throw std::invalid_argument("als: lambda must be >= 0");

  FitResult out;
  AlsModel& m = out.model;
  m.k = opts.k;
  m.lambda = opts.lambda;
  m.user_factors = Dense(R.n_users, opts.k);
  m.item_factors = Dense(R.n_items, opts.k);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (auto& v : m.item_factors.data) v = uniform(rng);

  for (std::size_t s = 0; s < opts.sweeps; ++s) {
    half_sweep(m.user_factors, m.item_factors, R.by_user, m.lambda, "user", pool);
    out.loss_trace.push_back(regularized_loss(m, R));
    half_sweep(m.item_factors, m.user_factors, R.by_item, m.lambda, "item", pool);
    out.loss_trace.push_back(regularized_loss(m, R));
  }
  return out;
}

double regularized_loss(const AlsModel& model, const RatingsMatrix& R) {
  double fit = 0.0;
  for (const auto& o : R.observations) {
    const double e = o.value - model.predict(o.user, o.item);
    fit += e * e;
  }
  double norm = 0.0;
  for (double v : model.user_factors.data) norm += v * v;
  for (double v : model.item_factors.data) norm += v * v;
  return fit + model.lambda * norm;
}

double rmse(const AlsModel& model, const RatingsMatrix& R) {
  if (R.observations.empty()) throw std::invalid_argument("rmse: no observations");
  double sum = 0.0;
  for (const auto& o : R.observations) {
    const double e = o.value - model.predict(o.user, o.item);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(R.observations.size()));
}

}  // namespace pibench::als

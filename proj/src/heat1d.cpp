#include "pibench/heat1d.hpp"

#include <chrono>
#include <latch>
#include <map>
#include <new>
#include <random>
#include <thread>

namespace pibench::heat1d {

using taskgraph::Future;
using taskgraph::Unit;
using netlayer::Direction;

std::optional<std::string> HeatParams::stability_warning() const {
  const double a = alpha();
  if (a <= 0.5) return std::nullopt;
  return "k*dt/dx^2 = " + report::format_double(a) + " exceeds 0.5; the explicit scheme is unstable";
}

std::vector<PartitionShape> partition_global(std::size_t n_global, int n_localities) {
  if (n_localities < 1) throw std::invalid_argument("partition_global: need at least one locality");
  const auto n = static_cast<std::size_t>(n_localities);
  if (n > n_global)
    throw std::invalid_argument("partition_global: " + std::to_string(n_localities) + " localities for " +
                                std::to_string(n_global) + " points");
  std::vector<PartitionShape> out;
  const std::size_t base = n_global / n;
  const std::size_t extra = n_global % n;
  std::size_t offset = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t size = base + (r < extra ? 1 : 0);
    out.push_back({static_cast<int>(r), offset, size});
    offset += size;
  }
  return out;
}

Partition1D make_partition(const PartitionShape& shape, std::span<const double> global_field) {
  Partition1D p;
  p.rank = shape.rank;
  p.offset = shape.offset;
  const auto part = global_field.subspan(shape.offset, shape.size);
  p.local.assign(part.begin(), part.end());
  p.scratch.resize(shape.size);
  return p;
}

std::vector<double> initial_field(std::size_t n, std::optional<std::uint64_t> seed) {
  std::vector<double> u(n);
  if (!seed) {
    for (std::size_t i = 0; i < n; ++i) u[i] = static_cast<double>(i % 10);
    return u;
  }
  std::mt19937_64 rng(*seed);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (auto& v : u) v = dist(rng);
  return u;
}

namespace {

double single_cell(const std::vector<double>& halo) {
  if (halo.size() != 1)
    throw netlayer::ProtocolError("halo message carries " + std::to_string(halo.size()) + " cells, expected 1");
  return halo[0];
}

}  // namespace

Future<Partition1D*> step_partition(Partition1D& p, Future<std::vector<double>> left_halo,
                                    Future<std::vector<double>> right_halo, const StepContext& ctx) {
  const std::size_t n = p.local.size();
  if (n == 0) throw std::invalid_argument("step_partition: empty partition");
  p.scratch.resize(n);
  const double a = ctx.params.alpha();
  const double* cur = p.local.data();
  double* next = p.scratch.data();
  auto& pool = ctx.pool;

  std::vector<Future<Unit>> parts;
  if (n >= 3) {
    const std::size_t interior = n - 2;
    const std::size_t pieces = std::max<std::size_t>(1, std::min(ctx.subranges, interior));
    std::size_t begin = 1;
    for (std::size_t s = 0; s < pieces; ++s) {
      const std::size_t len = interior / pieces + (s < interior % pieces ? 1 : 0);
      const std::size_t end = begin + len;
      parts.push_back(taskgraph::spawn(pool, [cur, next, a, begin, end] {
        for (std::size_t i = begin; i < end; ++i) next[i] = heat_update(cur[i - 1], cur[i], cur[i + 1], a);
      }));
      begin = end;
    }
  }

  if (n == 1) {
    parts.push_back(taskgraph::dataflow(
        pool,
        [&p, cur, next, a](const std::vector<double>& l, const std::vector<double>& r) {
          p.left_halo = single_cell(l);
          p.right_halo = single_cell(r);
          next[0] = heat_update(p.left_halo, cur[0], p.right_halo, a);
        },
        std::move(left_halo), std::move(right_halo)));
  } else {
    parts.push_back(taskgraph::dataflow(
        pool,
        [&p, cur, next, a](const std::vector<double>& l) {
          p.left_halo = single_cell(l);
          next[0] = heat_update(p.left_halo, cur[0], cur[1], a);
        },
        std::move(left_halo)));
    parts.push_back(taskgraph::dataflow(
        pool,
        [&p, cur, next, a, n](const std::vector<double>& r) {
          p.right_halo = single_cell(r);
          next[n - 1] = heat_update(cur[n - 2], cur[n - 1], p.right_halo, a);
        },
        std::move(right_halo)));
  }

  netlayer::Endpoint* ep = ctx.endpoint;
  const std::uint32_t next_step = ctx.step + 1;
  const bool send = ctx.send_boundaries && ep != nullptr;
  return taskgraph::dataflow(pool, std::move(parts), [&p, ep, next_step, send](const std::vector<Unit>&) {
    p.local.swap(p.scratch);
    if (send) {
      auto to_left = ep->send_halo(Direction::left, next_step, {p.local.front()});
      auto to_right = ep->send_halo(Direction::right, next_step, {p.local.back()});
      to_left.get();
      to_right.get();
    }
    return &p;
  });
}

double run_locality(Partition1D& p, netlayer::Endpoint& ep, const HeatParams& params,
                    taskgraph::WorkerPool& pool) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const std::size_t steps = params.timesteps;
  if (steps > 0) {
    auto l = ep.send_halo(Direction::left, 0, {p.local.front()});
    auto r = ep.send_halo(Direction::right, 0, {p.local.back()});
    l.get();
    r.get();
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const auto step = static_cast<std::uint32_t>(t);
    StepContext ctx{params, pool, pool.size(), &ep, step, t + 1 < steps};
    step_partition(p, ep.inbox().get({step, Direction::left}), ep.inbox().get({step, Direction::right}), ctx)
        .get();
  }
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string to_string(TransportKind t) { return t == TransportKind::inproc ? "inproc" : "tcp"; }

TransportKind parse_transport(const std::string& s) {
  if (s == "inproc") return TransportKind::inproc;
  if (s == "tcp") return TransportKind::tcp;
  throw std::invalid_argument("unknown transport '" + s + "' (inproc, tcp)");
}

HeatRunResult run_heat(const HeatRunConfig& cfg) {
  if (cfg.threads_per_node == 0) throw std::invalid_argument("heat1d: threads per node must be positive");
  const auto shapes = partition_global(cfg.points, cfg.localities);
  std::vector<double> field = initial_field(cfg.points, cfg.seed);

  auto endpoints = cfg.transport == TransportKind::inproc ? netlayer::make_inproc_ring(cfg.localities)
                                                          : netlayer::make_tcp_loopback_ring(cfg.localities);
  std::vector<Partition1D> parts;
  std::vector<std::unique_ptr<taskgraph::WorkerPool>> pools;
  for (const auto& s : shapes) {
    parts.push_back(make_partition(s, field));
    pools.push_back(std::make_unique<taskgraph::WorkerPool>(cfg.threads_per_node));
  }

  const auto n = static_cast<std::size_t>(cfg.localities);
  std::vector<std::exception_ptr> errors(n);
  std::latch go(1);
  std::vector<std::thread> drivers;
  for (std::size_t r = 0; r < n; ++r) {
    drivers.emplace_back([&, r] {
      go.wait();
      try {
        run_locality(parts[r], *endpoints[r], cfg.params, *pools[r]);
      } catch (...) {
        errors[r] = std::current_exception();
        // Unblock every locality still waiting on a halo.
        for (auto& ep : endpoints) ep->inbox().fail_all(errors[r]);
      }
    });
  }
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  go.count_down();
  for (auto& d : drivers) d.join();
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();

  for (auto& ep : endpoints) ep->close();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  HeatRunResult out;
  out.elapsed = elapsed;
  for (std::size_t r = 0; r < n; ++r)
    std::copy(parts[r].local.begin(), parts[r].local.end(), field.begin() + static_cast<std::ptrdiff_t>(shapes[r].offset));
  out.field = std::move(field);
  return out;
}

std::vector<double> solve_sequential(std::vector<double> field, const HeatParams& params) {
  const std::size_t n = field.size();
  if (n == 0) return field;
  const double a = params.alpha();
  std::vector<double> next(n);
  for (std::size_t t = 0; t < params.timesteps; ++t) {
    for (std::size_t i = 0; i < n; ++i)
      next[i] = heat_update(field[(i + n - 1) % n], field[i], field[(i + 1) % n], a);
    field.swap(next);
  }
  return field;
}

double checksum(std::span<const double> field) {
  double s = 0.0;
  for (double v : field) s += v;
  return s;
}

std::string to_string(ScalingMode m) { return m == ScalingMode::strong ? "strong" : "weak"; }

ScalingMode parse_mode(const std::string& s) {
  if (s == "strong") return ScalingMode::strong;
  if (s == "weak") return ScalingMode::weak;
  throw std::invalid_argument("unknown scaling mode '" + s + "' (strong, weak)");
}

std::size_t global_points(const ScalingConfig& cfg, int nodes) {
  return cfg.mode == ScalingMode::strong ? cfg.base_points : cfg.base_points * static_cast<std::size_t>(nodes);
}

std::size_t required_bytes(std::size_t points) { return 2 * points * sizeof(double); }

report::BenchReport run_scaling(const ScalingConfig& cfg, TransportKind transport) {
  report::BenchReport rep;
  rep.benchmark = "heat1d";
  rep.column_order = {"elapsed_s"};
  rep.config = {
      {"mode", to_string(cfg.mode)},
      {"base_points", cfg.base_points},
      {"timesteps", cfg.timesteps},
      {"nodes", cfg.node_counts},
      {"threads_per_node", cfg.threads_per_node},
      {"k", cfg.params.k},
      {"dt", cfg.params.dt},
      {"dx", cfg.params.dx},
      {"transport", to_string(transport)},
      {"initial_condition", cfg.seed ? "uniform[0,10) seeded" : "i mod 10"},
      {"seed", cfg.seed ? report::Json(*cfg.seed) : report::Json(nullptr)},
      {"memory_limit_bytes", cfg.memory_limit_bytes ? report::Json(*cfg.memory_limit_bytes) : report::Json(nullptr)},
      {"verify", cfg.verify},
  };
  if (auto w = cfg.params.stability_warning()) rep.sections["warnings"].push_back(*w);

  for (auto steps : cfg.timesteps) {
    HeatParams params = cfg.params;
    params.timesteps = steps;
    std::map<std::size_t, double> oracle;

    for (int nodes : cfg.node_counts) {
      const std::size_t points = global_points(cfg, nodes);
      for (auto threads : cfg.threads_per_node) {
        report::Row row;
        row.labels = {{"mode", to_string(cfg.mode)},
                      {"nodes", std::to_string(nodes)},
                      {"threads_per_node", std::to_string(threads)},
                      {cfg.mode == ScalingMode::strong ? "points" : "points_per_node",
                       std::to_string(cfg.base_points)},
                      {"steps", std::to_string(steps)}};
        const std::size_t need = required_bytes(points);
        if (cfg.memory_limit_bytes && need > *cfg.memory_limit_bytes) {
          row.error = "insufficient memory: needs " + std::to_string(need) + " bytes, limit " +
                      std::to_string(*cfg.memory_limit_bytes);
          rep.rows.push_back(std::move(row));
          continue;
        }
        try {
          HeatRunConfig run{points, params, nodes, threads, transport, cfg.seed};
          const auto result = run_heat(run);
          const double sum = checksum(result.field);
          row.metrics["elapsed_s"] = {result.elapsed, "s"};
          row.metrics["global_points"] = {static_cast<double>(points), "cells"};
          row.metrics["checksum"] = {sum, ""};
          if (cfg.verify) {
            auto it = oracle.find(points);
            if (it == oracle.end())
              it = oracle.emplace(points, checksum(solve_sequential(initial_field(points, cfg.seed), params))).first;
            row.metrics["oracle_checksum"] = {it->second, ""};
            row.metrics["checksum_match"] = {sum == it->second ? 1.0 : 0.0, "bool"};
          }
        } catch (const std::bad_alloc&) {
          row.metrics.clear();
          row.error = "insufficient memory: allocation of ~" + std::to_string(need) + " bytes failed";
        } catch (const std::exception& e) {
          row.metrics.clear();
          row.error = e.what();
        }
        rep.rows.push_back(std::move(row));
      }
    }
  }
  return rep;
}

}  // namespace pibench::heat1d

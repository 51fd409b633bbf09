// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. BENCH_EXE is the path of the bench binary.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pibench/als.hpp"
#include "pibench/benchcli.hpp"
#include "pibench/energy.hpp"
#include "pibench/heat1d.hpp"
#include "pibench/jacobi2d.hpp"
#include "pibench/membench.hpp"
#include "pibench/netlayer.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using namespace pibench;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Hand-written periodic update, independent of the library solver.
std::vector<double> heat_oracle(std::vector<double> u, double alpha, std::size_t steps) {
  const std::size_t n = u.size();
  std::vector<double> v(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double l = u[(i + n - 1) % n], r = u[(i + 1) % n];
      v[i] = u[i] + alpha * (l - 2.0 * u[i] + r);
    }
    u.swap(v);
  }
  return u;
}

std::vector<double> i_mod_10(std::size_t n) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = static_cast<double>(i % 10);
  return u;
}

int run_cmd(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint16_t free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  ::close(fd);
  return ntohs(a.sin_port);
}

struct Dat {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t comments = 0;
};

// Minimal gnuplot-style reader: '#' lines are comments, the first names columns.
Dat read_dat(const fs::path& p) {
  Dat d;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (d.header.empty()) {
        std::istringstream h(line.substr(1));
        for (std::string w; h >> w;) d.header.push_back(w);
      } else {
        ++d.comments;
      }
      continue;
    }
    std::istringstream r(line);
    std::vector<double> vals;
    for (std::string w; r >> w;) vals.push_back(std::stod(w));
    d.rows.push_back(vals);
  }
  return d;
}

// ---------------------------------------------------------------------------

template <class T>
bool vns_matches_scalar(std::mt19937_64& rng, std::size_t lanes) {
  const std::size_t rows = 8 + rng() % 121;
  const std::size_t groups = std::max<std::size_t>(1, (6 + rng() % 121) / lanes);
  const std::size_t cols = 2 + groups * lanes;
  const std::size_t steps = 1 + rng() % 100;
  auto g = jacobi2d::make_initial_grid<T>(rows, cols, rng());

  auto a = g, a2 = g;
  auto v = jacobi2d::pack_vns(g, lanes), v2 = v;
  const jacobi2d::RowRange all{1, rows - 1};
  for (std::size_t t = 0; t < steps; ++t) {
    jacobi2d::step_scalar(a, a2, all);
    std::swap(a, a2);
    jacobi2d::step_vns(v, v2, all);
    std::swap(v, v2);
  }
  return jacobi2d::bit_identical(jacobi2d::unpack_vns(v), a);
}

std::string crit1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t lanes = i % 2 ? 4 : 2;
    const bool ok = (i / 2) % 2 ? vns_matches_scalar<float>(rng, lanes) : vns_matches_scalar<double>(rng, lanes);
    expect(ok, "grid " + std::to_string(i) + " differs");
  }
  const double s = seconds_since(t0);
  expect(s < 30, "took " + fmt(s) + " s (limit 30)");
  return "200 grids bit-identical in " + fmt(s) + " s";
}

std::string crit2() {
  const auto t0 = Clock::now();
  // Jacobi: every core count and strip height gives the same bits.
  const auto g = jacobi2d::make_initial_grid<double>(130, 130, 3);
  std::optional<std::uint64_t> ref;
  for (std::size_t cores : {1u, 2u, 4u}) {
    taskgraph::WorkerPool pool(cores);
    for (std::size_t strips : {cores, 2 * cores, 7 * cores}) {
      const auto s = jacobi2d::field_hash(jacobi2d::iterate_scalar(g, 40, strips, pool));
      const auto v = jacobi2d::field_hash(jacobi2d::unpack_vns(jacobi2d::iterate_vns(jacobi2d::pack_vns(g, 2), 40, strips, pool)));
      if (!ref) ref = s;
      expect(s == *ref && v == *ref, "jacobi differs at cores=" + std::to_string(cores) + " strips=" + std::to_string(strips));
    }
  }
  jacobi2d::JacobiConfig jc;
  jc.rows = jc.cols = 66;
  jc.timesteps = 10;
  jc.core_counts = {1, 2, 4};
  for (auto k : {jacobi2d::Kernel::scalar, jacobi2d::Kernel::vector}) {
    jc.kernel = k;
    const auto m = jacobi2d::run_jacobi(jc);
    for (const auto& x : m) expect(x.field_hash == m[0].field_hash, "run_jacobi hash varies with cores");
  }

  // Heat: localities x threads x transports.
  heat1d::HeatParams p;
  p.timesteps = 100;
  const auto oracle = heat_oracle(i_mod_10(100'000), p.alpha(), 100);
  for (int nodes = 1; nodes <= 4; ++nodes)
    for (std::size_t threads : {1u, 4u})
      for (auto t : {heat1d::TransportKind::inproc, heat1d::TransportKind::tcp}) {
        heat1d::HeatRunConfig cfg{100'000, p, nodes, threads, t, std::nullopt};
        expect(same_bits(heat1d::run_heat(cfg).field, oracle),
               "heat differs at nodes=" + std::to_string(nodes) + " threads=" + std::to_string(threads) + " " +
                   heat1d::to_string(t));
      }
  const double s = seconds_since(t0);
  expect(s < 120, "took " + fmt(s) + " s (limit 120)");
  return "jacobi 9 layouts, heat 16 layouts bit-identical in " + fmt(s) + " s";
}

std::string crit3() {
  heat1d::HeatParams p;
  p.timesteps = 100;
  expect(p.alpha() == 0.5, "alpha is not 0.5");

  const std::vector<double> c(10'000, 2.75);
  expect(heat1d::solve_sequential(c, p) == c, "constant field moved (sequential)");
  {
    auto shapes = heat1d::partition_global(c.size(), 4);
    auto ring = netlayer::make_inproc_ring(4);
    std::vector<heat1d::Partition1D> parts;
    for (const auto& s : shapes) parts.push_back(heat1d::make_partition(s, c));
    std::vector<std::thread> th;
    for (int r = 0; r < 4; ++r)
      th.emplace_back([&, r] {
        taskgraph::WorkerPool pool(2);
        heat1d::run_locality(parts[r], *ring[r], p, pool);
      });
    for (auto& t : th) t.join();
    for (const auto& part : parts)
      for (double v : part.local) expect(v == 2.75, "constant field moved (distributed)");
  }

  // Conservation, using long double sums so the check does not depend on the library's checksum.
  auto sum = [](const std::vector<double>& u) {
    long double s = 0;
    for (double v : u) s += v;
    return static_cast<double>(s);
  };
  heat1d::HeatRunConfig big{1'000'000, p, 4, 1, heat1d::TransportKind::inproc, std::nullopt};
  const auto u = heat1d::run_heat(big).field;
  const double s0 = sum(i_mod_10(1'000'000)), s1 = sum(u);
  const double rel = std::abs(s1 - s0) / std::abs(s0);
  expect(rel <= 1e-9, "sum drift " + fmt(rel));

  // Maximum principle on random fields.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-5, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> f(64 + rng() % 200);
    for (auto& v : f) v = dist(rng);
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    const double mn = *lo, mx = *hi;
    heat1d::HeatParams q;
    q.timesteps = 50;
    for (double v : heat_oracle(f, q.alpha(), q.timesteps)) expect(v >= mn && v <= mx, "max principle broken");
    for (double v : heat1d::solve_sequential(f, q)) expect(v >= mn && v <= mx, "max principle broken (solver)");
  }
  return "fixed point exact, sum drift " + fmt(rel) + ", max principle on 1000 fields";
}

std::string crit4() {
  using namespace jacobi2d;
  const auto text = text_roofline(Precision::f64);
  expect(text.bytes_per_lup == 24, "text convention is not 24 B/LUP");
  expect(expected_peak(2.4e9, text) == 1.0e8, "expected_peak(2.4e9, 24) != 1e8");
  expect(lups_to_flops(1.0e8, text) == 4.0e8, "FLOP conversion is not x4");
  expect(text_roofline(Precision::f32).bytes_per_lup == 12, "f32 text convention is not 12");
  expect(figure_roofline(Precision::f64).bytes_per_lup == 16, "figure convention is not 16");
  expect(figure_roofline(Precision::f32).bytes_per_lup == 8, "f32 figure convention is not 8");

  const auto dir = fs::temp_directory_path() / ("pibench_acc4_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto out = dir / "j.json";
  expect(run_cmd(std::string(BENCH_EXE) + " jacobi2d --rows 66 --cols 66 --steps 5 --cores 1 --bandwidth 2.4e9"
                                          " --format json --output " + out.string()) == 0,
         "bench jacobi2d failed");
  const auto j = report::Json::parse(slurp(out));
  fs::remove_all(dir);
  const auto& m = j["rows"][0]["metrics"];
  expect(m["expected_peak_text_mlups"]["value"].get<double>() == 100.0, "text column is not 100 MLUP/s");
  expect(m["expected_peak_figure_mlups"]["value"].get<double>() == 150.0, "figure column is not 150 MLUP/s");
  return "1e8 LUP/s exact, x4 FLOPs, both conventions in jacobi2d output";
}

std::string crit5() {
  membench::StreamConfig cfg;
  cfg.n_elements = 10'000'000;
  cfg.n_trials = 3;
  cfg.core_counts = {1};
  taskgraph::WorkerPool pool(4);
  membench::StreamArrays one(cfg.n_elements);
  const auto r1 = membench::run_stream(cfg, pool, one);
  const double err = membench::validate_stream(one.a, one.b, one.c, cfg.scalar_q);
  expect(err < 1e-13, "max relative error " + fmt(err));
  expect(r1.bytes_per_sweep == 240'000'000, "bytes per sweep " + std::to_string(r1.bytes_per_sweep));

  cfg.core_counts = {4};
  membench::StreamArrays four(cfg.n_elements);
  membench::run_stream(cfg, pool, four);
  expect(one.a == four.a && one.b == four.b && one.c == four.c, "4-core arrays differ from 1-core");
  return "max rel error " + fmt(err) + ", 240000000 B/sweep, 4-core arrays identical";
}

std::string crit6() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.2, 2.0);

  // Noiseless rank 2.
  std::vector<als::Rating> t;
  std::vector<std::array<double, 2>> U(20), V(30);
  for (auto& x : U) x = {u(rng), u(rng)};
  for (auto& x : V) x = {u(rng), u(rng)};
  for (std::uint32_t a = 0; a < 20; ++a)
    for (std::uint32_t b = 0; b < 30; ++b) t.push_back({a, b, U[a][0] * V[b][0] + U[a][1] * V[b][1]});
  const auto R = als::RatingsMatrix::from_triples(20, 30, t);
  const auto fit = als::als_fit(R, {2, 1e-9, 50, 11});
  const double e = als::rmse(fit.model, R);
  expect(e < 1e-6, "rank-2 RMSE " + fmt(e));

  // Monotone loss. Slack of 1e-12 relative absorbs rounding in the loss sum.
  double worst = 0;
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<als::Rating> s;
    for (std::uint32_t a = 0; a < 30; ++a)
      for (std::uint32_t b = 0; b < 40; ++b)
        if (rng() % 5 == 0) s.push_back({a, b, 1.0 + 4.0 * (rng() % 1000) / 1000.0});
    const auto M = als::RatingsMatrix::from_triples(30, 40, s);
    const auto f = als::als_fit(M, {4, 0.1, 10, rng()});
    for (std::size_t i = 1; i < f.loss_trace.size(); ++i) {
      const double rise = (f.loss_trace[i] - f.loss_trace[i - 1]) / f.loss_trace[i - 1];
      worst = std::max(worst, rise);
      expect(rise <= 1e-12, "loss rose by " + fmt(rise) + " relative on instance " + std::to_string(inst));
    }
  }

  // Parallel vs sequential.
  std::vector<als::Rating> s;
  for (std::uint32_t a = 0; a < 60; ++a)
    for (std::uint32_t b = 0; b < 50; ++b)
      if (rng() % 4 == 0) s.push_back({a, b, 1.0 + (rng() % 9) * 0.5});
  const auto M = als::RatingsMatrix::from_triples(60, 50, s);
  const als::FitOptions opts{5, 0.1, 10, 3};
  const auto seq = als::als_fit(M, opts);
  taskgraph::WorkerPool pool(4);
  const auto par = als::als_fit(M, opts, &pool);
  expect(seq.loss_trace.size() == par.loss_trace.size(), "trace lengths differ");
  for (std::size_t i = 0; i < seq.loss_trace.size(); ++i)
    expect(std::abs(seq.loss_trace[i] - par.loss_trace[i]) <= 1e-10 * std::abs(seq.loss_trace[i]),
           "parallel trace differs at " + std::to_string(i));

  const double secs = seconds_since(t0);
  expect(secs < 60, "took " + fmt(secs) + " s (limit 60)");
  return "rank-2 RMSE " + fmt(e) + ", largest loss rise " + fmt(worst) + ", traces agree, " + fmt(secs) + " s";
}

std::string crit7() {
  // 1000 data rows over 50 users x 80 items; every 10th row repeats an earlier pair with a new rating.
  std::mt19937_64 rng(7);
  std::ostringstream csv;
  csv << "userId,movieId,rating,timestamp\n";
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> rows;
  for (int i = 0; i < 1000; ++i) {
    std::int64_t user, item;
    if (i % 10 == 9) {
      std::tie(user, item, std::ignore) = rows[rng() % rows.size()];
    } else {
      user = 1 + static_cast<std::int64_t>(rng() % 50) * 7;
      item = 100 + static_cast<std::int64_t>(rng() % 80) * 3;
    }
    const double rating = 0.5 * (1 + rng() % 10);
    rows.emplace_back(user, item, rating);
    csv << user << ',' << item << ',' << rating << ',' << 1'000'000 + i << '\n';
  }

  auto expected = [&](std::size_t limit) {
    std::map<std::pair<std::int64_t, std::int64_t>, double> last;
    std::map<std::int64_t, int> users, items;
    for (std::size_t i = 0; i < limit; ++i) {
      const auto& [a, b, r] = rows[i];
      last[{a, b}] = r;
      users[a];
      items[b];
    }
    return std::tuple{last, users.size(), items.size(), limit - last.size()};
  };

  for (std::size_t limit : {std::size_t{1000}, std::size_t{437}}) {
    std::istringstream in(csv.str());
    const auto R = als::load_ratings(in, limit);
    const auto [last, nu, ni, dups] = expected(limit);
    expect(R.n_users == nu && R.n_items == ni, "user/item counts wrong at limit " + std::to_string(limit));
    expect(R.observations.size() == last.size(), "observation count wrong at limit " + std::to_string(limit));
    expect(R.duplicates == dups, "duplicate count wrong at limit " + std::to_string(limit));
    for (const auto& o : R.observations) {
      const auto key = std::pair{R.user_ids[o.user], R.item_ids[o.item]};
      expect(last.at(key) == o.value, "rating is not the last one seen");
    }
  }
  return "1000 rows: counts, last-wins duplicates and max_lines=437 exact";
}

std::string crit8() {
  using namespace netlayer;
  const std::vector<std::uint8_t> golden{13, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  expect(encode_frame({0, Direction::left, {1.0}}) == golden, "golden frame mismatch");

  std::mt19937_64 rng(8);
  for (int i = 0; i < 10'000; ++i) {
    Frame f{static_cast<std::uint32_t>(rng()), rng() % 2 ? Direction::right : Direction::left, {}};
    for (std::size_t k = 0, n = 1 + rng() % 16; k < n; ++k) f.payload.push_back(std::bit_cast<double>(rng()));
    const auto bytes = encode_frame(f);
    std::size_t used = 0;
    const auto back = decode_frame(bytes, used);
    expect(back && used == bytes.size() && back->step == f.step && back->direction == f.direction &&
               std::memcmp(back->payload.data(), f.payload.data(), 8 * f.payload.size()) == 0,
           "fuzz frame " + std::to_string(i) + " did not round-trip");
  }

  // Four OS processes on loopback.
  const std::size_t points = 100'000, steps = 100;
  const auto dir = fs::temp_directory_path() / ("pibench_acc8_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<std::string> addrs;
  for (int r = 0; r < 4; ++r) addrs.push_back("127.0.0.1:" + std::to_string(free_port()));
  std::string peers;
  for (const auto& a : addrs) peers += (peers.empty() ? "" : ",") + a;
  std::vector<int> codes(4, -1);
  std::vector<std::thread> procs;
  for (int r = 0; r < 4; ++r)
    procs.emplace_back([&, r] {
      codes[r] = run_cmd(std::string(BENCH_EXE) + " heat1d --listen " + addrs[r] + " --peers " + peers +
                         " --points " + std::to_string(points) + " --steps " + std::to_string(steps) +
                         " --threads 2 --connect-timeout 60 --dump-field " + (dir / "field").string() +
                         " --output " + (dir / ("r" + std::to_string(r) + ".json")).string());
    });
  for (auto& t : procs) t.join();
  std::vector<double> whole;
  for (int r = 0; r < 4; ++r) {
    expect(codes[r] == 0, "rank " + std::to_string(r) + " exited with " + std::to_string(codes[r]));
    const auto part = benchcli::read_field(dir / ("field.r" + std::to_string(r) + ".bin"));
    whole.insert(whole.end(), part.begin(), part.end());
  }
  fs::remove_all(dir);
  expect(same_bits(whole, heat_oracle(i_mod_10(points), 0.5, steps)), "4-process field differs from oracle");
  return "golden 21 bytes, 10000 fuzz frames, 4-process TCP run bit-identical";
}

std::string crit9() {
  expect(energy::cost_cents(1000, 3600, 8.2) == 8.2, "cost_cents(1000, 3600, 8.2) != 8.2");
  const double c = energy::cost_cents(3.7, 100, 8.2);
  const double rel = std::abs(c - 8.4278e-4) / 8.4278e-4;
  char got[160];
  std::snprintf(got, sizeof got, "cost_cents(3.7, 100, 8.2) = %.17g, %.3g relative from 8.4278e-4 (limit 1e-9)", c, rel);
  expect(rel <= 1e-9, got);
  expect(energy::resolve_profile("pi3b").watts == 3.7 && energy::resolve_profile("pi3bplus").watts == 5.1 &&
             energy::resolve_profile("pi4").watts == 6.4,
         "profile wattages");
  return "8.2 exact, 3.7 W x 100 s = " + fmt(c) + " cents, profiles 3.7/5.1/6.4 W";
}

std::string crit10() {
  const auto t0 = Clock::now();
  const auto dir = fs::temp_directory_path() / ("pibench_acc10_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string bench = BENCH_EXE;

  for (std::string mode : {"strong", "weak"}) {
    const auto dat = dir / (mode + ".dat");
    expect(run_cmd(bench + " heat1d --mode " + mode + " --points 1000000 --steps 100 --nodes 1,2,3,4" +
                   " --format dat --output " + dat.string()) == 0,
           mode + " sweep failed");
    const auto d = read_dat(dat);
    expect(!d.header.empty() && d.header[0] == "nodes", mode + ": first column is not nodes");
    expect(std::find(d.header.begin(), d.header.end(), "elapsed_s") != d.header.end(), mode + ": no elapsed_s column");
    expect(d.rows.size() == 4, mode + ": expected 4 rows, got " + std::to_string(d.rows.size()));
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
      expect(d.rows[i].size() == d.header.size(), mode + ": ragged row");
      expect(d.rows[i][0] == static_cast<double>(i + 1), mode + ": node column out of order");
    }
    const auto match = std::find(d.header.begin(), d.header.end(), "checksum_match") - d.header.begin();
    for (const auto& r : d.rows) expect(r[match] == 1.0, mode + ": checksum mismatch");
  }

  const auto jdat = dir / "jacobi.dat";
  expect(run_cmd(bench + " jacobi2d --rows 514 --cols 514 --steps 20 --cores 1,2,4 --stream-elements 4000000" +
                 " --stream-trials 3 --format dat --output " + jdat.string()) == 0,
         "jacobi2d sweep failed");
  const auto j = read_dat(jdat);
  const std::vector<std::string> want{"cores", "mlups", "expected_peak_text_mlups", "expected_peak_figure_mlups"};
  expect(j.header.size() >= 4 && std::equal(want.begin(), want.end(), j.header.begin()), "jacobi2d dat columns");
  expect(j.rows.size() == 3, "jacobi2d: expected 3 rows");
  for (const auto& r : j.rows) expect(r[1] > 0 && r[2] > 0 && r[3] > r[2], "jacobi2d: non-positive or swapped peaks");
  fs::remove_all(dir);

  const double s = seconds_since(t0);
  return "strong/weak nodes vs time, jacobi2d cores vs MLUP/s + 2 peak columns, " + fmt(s) + " s";
}

}  // namespace

int main() {
  const std::vector<std::function<std::string()>> criteria{crit1, crit2, crit3, crit4, crit5,
                                                           crit6, crit7, crit8, crit9, crit10};
  const auto t0 = Clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string line;
    try {
      line = "PASS " + std::to_string(i + 1) + ": " + criteria[i]();
    } catch (const std::exception& e) {
      line = "FAIL " + std::to_string(i + 1) + ": " + e.what();
      ++failed;
    }
    std::cout << line << std::endl;
  }
  std::cout << "total " << fmt(seconds_since(t0)) << " s, " << failed << " failed" << std::endl;
  return failed == 0 ? 0 : 1;
}

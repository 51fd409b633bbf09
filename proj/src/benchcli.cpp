#include "pibench/benchcli.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <sys/utsname.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "pibench/als.hpp"
#include "pibench/energy.hpp"
#include "pibench/heat1d.hpp"
#include "pibench/jacobi2d.hpp"
#include "pibench/membench.hpp"
#include "pibench/netlayer.hpp"
#include "pibench/taskgraph.hpp"

namespace pibench::benchcli {

namespace fs = std::filesystem;
using report::BenchReport;
using report::Json;

report::Json PreflightResult::governor_json() const {
  if (!available()) return "unavailable";
  Json j = Json::object();
  for (const auto& [cpu, g] : governor) j[cpu] = g;
  return j;
}

PreflightResult preflight(const fs::path& sysfs_cpu_root) {
  PreflightResult pf;
  std::error_code ec;
  if (!fs::is_directory(sysfs_cpu_root, ec)) return pf;

  static const std::regex cpu_dir("cpu[0-9]+");
  std::vector<std::pair<int, std::string>> cpus;
  for (const auto& entry : fs::directory_iterator(sysfs_cpu_root, ec)) {
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, cpu_dir)) cpus.emplace_back(std::stoi(name.substr(3)), name);
  }
  std::sort(cpus.begin(), cpus.end());

  for (const auto& [index, name] : cpus) {
    std::ifstream in(sysfs_cpu_root / name / "cpufreq" / "scaling_governor");
    std::string policy;
    if (!in || !std::getline(in, policy)) continue;
    while (!policy.empty() && std::isspace(static_cast<unsigned char>(policy.back()))) policy.pop_back();
    if (policy.empty()) continue;
    pf.governor[name] = policy;
    if (policy != "performance")
      pf.warnings.push_back(name + " scaling governor is '" + policy +
                            "', not 'performance'; timings may include frequency ramp-up");
  }
  return pf;
}

report::Json environment(const PreflightResult& pf) {
  Json env;
  utsname u{};
  if (uname(&u) == 0) {
    env["host"] = u.nodename;
    env["os"] = std::string(u.sysname) + " " + u.release;
    env["machine"] = u.machine;
  } else {
    env["host"] = "unknown";
  }
  env["cores"] = taskgraph::hardware_cores();
  env["governor"] = pf.governor_json();
  env["preflight_warnings"] = pf.warnings;
  return env;
}

std::optional<std::uint64_t> seed_override() {
  const char* raw = std::getenv("BENCH_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = raw + std::strlen(raw);
  auto [ptr, ec] = std::from_chars(raw, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::invalid_argument(std::string("BENCH_SEED must be an unsigned integer, got '") + raw + "'");
  return v;
}

void write_field(const fs::path& path, const std::vector<double>& field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (double v : field) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::vector<double> read_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> field;
  unsigned char b[8];
  while (in.read(reinterpret_cast<char*>(b), 8)) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    field.push_back(std::bit_cast<double>(bits));
  }
  if (in.gcount() != 0) throw std::runtime_error(path.string() + ": trailing partial value");
  return field;
}

namespace {

struct Output {
  std::string path;
  std::string format = "json";
};

void add_output_options(CLI::App* sub, Output& o) {
  sub->add_option("--output", o.path, "Report file (stdout if omitted)");
  sub->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "dat"}))
      ->capture_default_str();
}

void emit(const BenchReport& rep, const Output& o, std::ostream& out) {
  const auto fmt = report::parse_format(o.format);
  if (o.path.empty())
    out << report::render(rep, fmt);
  else
    report::emit_report(rep, fmt, o.path);
}

// ---- stream ------------------------------------------------------------------

struct StreamArgs {
  membench::StreamConfig cfg;
  Output out;
};

BenchReport run_stream_cmd(const StreamArgs& args, std::ostream& err) {
  const std::size_t hw = taskgraph::hardware_cores();
  std::size_t want = hw;
  for (auto c : args.cfg.core_counts) want = std::max(want, c);
  taskgraph::WorkerPool pool(want);
  const auto cfg = membench::materialize(args.cfg, pool.size());

  membench::StreamArrays arrays(cfg.n_elements);
  const auto result = membench::run_stream(cfg, pool, arrays);
  const double error = membench::validate_stream(arrays.a, arrays.b, arrays.c, cfg.scalar_q);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';

  BenchReport rep;
  rep.benchmark = "stream";
  rep.config = {{"elements", cfg.n_elements},
                {"trials", cfg.n_trials},
                {"q", cfg.scalar_q},
                {"cores", cfg.core_counts},
                {"element_bytes", sizeof(double)}};
  rep.column_order = {"best_bandwidth"};
  Json trials = Json::object();
  for (const auto& [cores, r] : result.per_cores) {
    report::Row row;
    row.labels = {{"cores", std::to_string(cores)}};
    row.metrics["best_bandwidth"] = {r.best_bandwidth, "B/s"};
    rep.rows.push_back(std::move(row));
    trials[std::to_string(cores)] = r.all_trials;
  }
  rep.sections["trials_bandwidth"] = std::move(trials);
  rep.sections["bytes_per_sweep"] = result.bytes_per_sweep;
  rep.sections["max_relative_error"] = error;
  rep.sections["warnings"] = result.warnings;
  return rep;
}

// ---- jacobi2d ------------------------------------------------------------------

struct JacobiArgs {
  jacobi2d::JacobiConfig cfg;
  std::string kernel = "scalar";
  std::string precision = "f64";
  std::optional<double> bandwidth;
  std::size_t stream_elements = 10'000'000;
  std::size_t stream_trials = 5;
  Output out;
};

BenchReport run_jacobi_cmd(JacobiArgs args, std::optional<std::uint64_t> seed, std::ostream& err) {
  using namespace jacobi2d;
  args.cfg.kernel = args.kernel == "vector" ? Kernel::vector : Kernel::scalar;
  args.cfg.precision = args.precision == "f32" ? Precision::f32 : Precision::f64;
  if (seed) args.cfg.seed = *seed;
  const JacobiConfig cfg = materialize(args.cfg);

  // Bandwidth per core count: given, or measured with TRIAD on the same core counts.
  std::map<std::size_t, double> bw;
  Json stream_cfg = nullptr;
  if (args.bandwidth) {
    if (!(*args.bandwidth > 0)) throw std::invalid_argument("--bandwidth must be positive");
    for (auto c : cfg.core_counts) bw[c] = *args.bandwidth;
  } else {
    membench::StreamConfig sc;
    sc.n_elements = args.stream_elements;
    sc.n_trials = args.stream_trials;
    sc.core_counts = cfg.core_counts;
    std::size_t want = 1;
    for (auto c : cfg.core_counts) want = std::max(want, c);
    taskgraph::WorkerPool pool(want);
    sc = membench::materialize(sc, pool.size());
    const auto r = membench::run_stream(sc, pool);
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    for (const auto& [c, cr] : r.per_cores) bw[c] = cr.best_bandwidth;
    stream_cfg = {{"elements", sc.n_elements}, {"trials", sc.n_trials}};
  }

  const auto metrics = run_jacobi(cfg);
  const auto text = text_roofline(cfg.precision);
  const auto figure = figure_roofline(cfg.precision);

  BenchReport rep;
  rep.benchmark = "jacobi2d";
  rep.config = {{"rows", cfg.rows},
                {"cols", cfg.cols},
                {"timesteps", cfg.timesteps},
                {"kernel", to_string(cfg.kernel)},
                {"precision", to_string(cfg.precision)},
                {"cores", cfg.core_counts},
                {"lanes", cfg.lanes},
                {"strips_per_core", cfg.strips_per_core},
                {"seed", cfg.seed},
                {"bandwidth_source", args.bandwidth ? "given" : "stream"},
                {"stream", stream_cfg},
                {"bytes_per_lup_text", text.bytes_per_lup},
                {"bytes_per_lup_figure", figure.bytes_per_lup},
                {"flops_per_lup", text.flops_per_lup}};
  rep.column_order = {"mlups", "expected_peak_text_mlups", "expected_peak_figure_mlups"};
  Json hashes = Json::object();
  for (const auto& m : metrics) {
    report::Row row;
    row.labels = {{"cores", std::to_string(m.core_count)},
                  {"kernel", to_string(m.kernel)},
                  {"precision", to_string(m.precision)}};
    const double b = bw.at(m.core_count);
    row.metrics["mlups"] = {m.mlups, "MLUP/s"};
    row.metrics["mflops"] = {lups_to_flops(m.mlups, text), "MFLOP/s"};
    row.metrics["elapsed_s"] = {m.elapsed, "s"};
    row.metrics["bandwidth"] = {b, "B/s"};
    row.metrics["expected_peak_text_mlups"] = {expected_peak(b, text) / 1e6, "MLUP/s"};
    row.metrics["expected_peak_figure_mlups"] = {expected_peak(b, figure) / 1e6, "MLUP/s"};
    rep.rows.push_back(std::move(row));
    std::ostringstream h;
    h << std::hex << m.field_hash;
    hashes[std::to_string(m.core_count)] = h.str();
  }
  rep.sections["field_hash"] = std::move(hashes);
  return rep;
}

// ---- heat1d --------------------------------------------------------------------

struct HeatArgs {
  heat1d::ScalingConfig cfg;
  std::string mode = "strong";
  std::string transport = "inproc";
  std::optional<std::size_t> memory_limit;
  bool no_verify = false;
  // multi-process mode
  std::string listen;
  std::vector<std::string> peers;
  std::string dump_field;
  std::size_t threads = 1;
  double connect_timeout_s = 30.0;
  Output out;
};

BenchReport run_heat_distributed(const HeatArgs& args, std::optional<std::uint64_t> seed) {
  using namespace heat1d;
  std::vector<netlayer::HostPort> addresses;
  for (const auto& p : args.peers) addresses.push_back(netlayer::parse_host_port(p));
  const auto me = netlayer::parse_host_port(args.listen);
  int rank = -1;
  for (std::size_t i = 0; i < addresses.size(); ++i)
    if (addresses[i].host == me.host && addresses[i].port == me.port) rank = static_cast<int>(i);
  if (rank < 0) throw std::invalid_argument("--listen " + args.listen + " does not appear in --peers");
  if (args.cfg.timesteps.size() != 1) throw std::invalid_argument("multi-process mode takes a single --steps value");
  if (args.threads == 0) throw std::invalid_argument("--threads must be positive");

  HeatParams params = args.cfg.params;
  params.timesteps = args.cfg.timesteps.front();
  const std::size_t points = args.cfg.base_points;
  const int nodes = static_cast<int>(addresses.size());
  const auto shapes = partition_global(points, nodes);
  Partition1D part;
  {
    const auto field = initial_field(points, seed);
    part = make_partition(shapes[static_cast<std::size_t>(rank)], field);
  }

  netlayer::TcpListener listener(me);
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(args.connect_timeout_s * 1000));
  auto ep = netlayer::establish_ring(std::move(listener), addresses, rank, timeout);
  taskgraph::WorkerPool pool(args.threads);
  const double elapsed = run_locality(part, *ep, params, pool);
  ep->close();

  if (!args.dump_field.empty()) write_field(args.dump_field + ".r" + std::to_string(rank) + ".bin", part.local);

  BenchReport rep;
  rep.benchmark = "heat1d";
  rep.config = {{"listen", args.listen},
                {"peers", args.peers},
                {"points", points},
                {"timesteps", params.timesteps},
                {"k", params.k},
                {"dt", params.dt},
                {"dx", params.dx},
                {"threads_per_node", args.threads},
                {"transport", "tcp"},
                {"initial_condition", seed ? "uniform[0,10) seeded" : "i mod 10"},
                {"seed", seed ? Json(*seed) : Json(nullptr)}};
  rep.column_order = {"elapsed_s"};
  report::Row row;
  row.labels = {{"rank", std::to_string(rank)},
                {"nodes", std::to_string(nodes)},
                {"threads_per_node", std::to_string(args.threads)},
                {"points", std::to_string(points)},
                {"steps", std::to_string(params.timesteps)}};
  row.metrics["elapsed_s"] = {elapsed, "s"};
  row.metrics["local_checksum"] = {checksum(part.local), ""};
  rep.rows.push_back(std::move(row));
  return rep;
}

BenchReport run_heat_cmd(HeatArgs args, std::optional<std::uint64_t> seed, std::ostream& err) {
  using namespace heat1d;
  if (!seed) seed = args.cfg.seed;
  if (auto w = args.cfg.params.stability_warning()) err << "warning: " << *w << '\n';
  if (!args.listen.empty() || !args.peers.empty()) {
    if (args.listen.empty() || args.peers.empty())
      throw std::invalid_argument("multi-process mode needs both --listen and --peers");
    return run_heat_distributed(args, seed);
  }
  args.cfg.mode = parse_mode(args.mode);
  args.cfg.seed = seed;
  args.cfg.memory_limit_bytes = args.memory_limit;
  args.cfg.verify = !args.no_verify;
  return run_scaling(args.cfg, parse_transport(args.transport));
}

// ---- als -----------------------------------------------------------------------

struct AlsArgs {
  std::string ratings;
  std::size_t max_lines = als::kDefaultMaxLines;
  als::FitOptions fit;
  std::vector<std::size_t> cores;
  Output out;
};

BenchReport run_als_cmd(AlsArgs args, std::optional<std::uint64_t> seed) {
  if (seed) args.fit.seed = *seed;
  if (args.cores.empty())
    for (std::size_t n = 1; n <= taskgraph::hardware_cores(); ++n) args.cores.push_back(n);
  for (auto c : args.cores)
    if (c == 0) throw std::invalid_argument("--cores entries must be positive");

  const auto R = als::load_ratings(fs::path(args.ratings), args.max_lines);

  BenchReport rep;
  rep.benchmark = "als";
  rep.config = {{"ratings", args.ratings},
                {"max_lines", args.max_lines},
                {"k", args.fit.k},
                {"lambda", args.fit.lambda},
                {"sweeps", args.fit.sweeps},
                {"seed", args.fit.seed},
                {"cores", args.cores},
                {"init", "V uniform[0,1)"}};
  rep.column_order = {"elapsed_s"};
  rep.sections["ingest"] = {{"users", R.n_users},
                            {"items", R.n_items},
                            {"observations", R.observations.size()},
                            {"duplicates", R.duplicates}};
  Json traces = Json::object();
  for (auto cores : args.cores) {
    taskgraph::WorkerPool pool(cores);
    const auto t0 = std::chrono::steady_clock::now();
    auto fit = als::als_fit(R, args.fit, &pool);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report::Row row;
    row.labels = {{"cores", std::to_string(cores)}};
    row.metrics["elapsed_s"] = {elapsed, "s"};
    row.metrics["final_loss"] = {fit.loss_trace.back(), ""};
    if (!R.observations.empty()) row.metrics["rmse"] = {als::rmse(fit.model, R), ""};
    rep.rows.push_back(std::move(row));
    traces[std::to_string(cores)] = fit.loss_trace;
  }
  rep.sections["loss_trace"] = std::move(traces);
  return rep;
}

// ---- energy --------------------------------------------------------------------

struct EnergyArgs {
  std::string report_path;
  std::string profile = "pi4";
  std::optional<double> watts;
  double rate = energy::kDefaultRateCentsPerKwh;
  std::optional<std::size_t> iterations;
  Output out;
};

BenchReport run_energy_cmd(const EnergyArgs& args) {
  BenchReport rep = report::load_report(args.report_path);
  if (!(args.rate >= 0)) throw std::invalid_argument("--rate must be >= 0");
  const auto profile = energy::resolve_profile(args.profile, args.watts);
  const auto costs = energy::cost_report(rep, profile, args.iterations, args.rate);
  rep.sections["cost"] = energy::cost_section(costs, profile, args.rate);
  // Mirror the per-row costs as metrics so csv/dat projections carry them.
  std::size_t next = 0;
  for (auto& row : rep.rows) {
    if (next == costs.size()) break;
    if (row.error || row.labels != costs[next].labels || !row.metrics.count("elapsed_s")) continue;
    row.metrics["cost_cents"] = {costs[next].cost.total_cents, "cents"};
    row.metrics["cents_per_iteration"] = {costs[next].cost.cents_per_iteration, "cents"};
    ++next;
  }
  return rep;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-parallel benchmark suite: memory bandwidth, stencils, ALS, energy cost"};
  app.name("bench");
  app.require_subcommand(1);

  StreamArgs stream;
  auto* s = app.add_subcommand("stream", "STREAM TRIAD bandwidth vs core count");
  s->add_option("--elements", stream.cfg.n_elements, "Elements per array")->capture_default_str();
  s->add_option("--trials", stream.cfg.n_trials, "Timed sweeps per core count")->capture_default_str();
  s->add_option("--q", stream.cfg.scalar_q, "TRIAD scalar")->capture_default_str();
  s->add_option("--cores", stream.cfg.core_counts, "Core counts (default 1..hardware)")->delimiter(',');
  add_output_options(s, stream.out);

  JacobiArgs jac;
  auto* j = app.add_subcommand("jacobi2d", "2D Jacobi stencil with roofline expected peak");
  j->add_option("--rows", jac.cfg.rows, "Grid rows including boundary")->capture_default_str();
  j->add_option("--cols", jac.cfg.cols, "Grid columns including boundary")->capture_default_str();
  j->add_option("--steps", jac.cfg.timesteps, "Timesteps")->capture_default_str();
  j->add_option("--kernel", jac.kernel, "scalar or vector")
      ->check(CLI::IsMember({"scalar", "vector"}))
      ->capture_default_str();
  j->add_option("--precision", jac.precision, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}))
      ->capture_default_str();
  j->add_option("--cores", jac.cfg.core_counts, "Core counts (default 1..hardware)")->delimiter(',');
  j->add_option("--lanes", jac.cfg.lanes, "SIMD lanes for the vector kernel (0: one 128-bit register)")
      ->capture_default_str();
  j->add_option("--strips-per-core", jac.cfg.strips_per_core, "Row strips per worker")->capture_default_str();
  j->add_option("--seed", jac.cfg.seed, "Initial grid seed")->capture_default_str();
  j->add_option("--bandwidth", jac.bandwidth, "Memory bandwidth in B/s; measured with TRIAD if omitted");
  j->add_option("--stream-elements", jac.stream_elements, "TRIAD array length for the bandwidth probe")
      ->capture_default_str();
  j->add_option("--stream-trials", jac.stream_trials, "TRIAD trials for the bandwidth probe")
      ->capture_default_str();
  add_output_options(j, jac.out);

  HeatArgs heat;
  heat.cfg.base_points = 1'000'000;
  auto* h = app.add_subcommand("heat1d", "Distributed 1D heat equation, scaling sweep or one rank of a TCP ring");
  h->add_option("--mode", heat.mode, "strong or weak")
      ->check(CLI::IsMember({"strong", "weak"}))
      ->capture_default_str();
  h->add_option("--points", heat.cfg.base_points, "Total points (strong) or points per node (weak)")
      ->capture_default_str();
  h->add_option("--steps", heat.cfg.timesteps, "Timestep counts")->delimiter(',');
  h->add_option("--nodes", heat.cfg.node_counts, "Locality counts")->delimiter(',');
  h->add_option("--threads-per-node", heat.cfg.threads_per_node, "Worker threads per locality")->delimiter(',');
  h->add_option("--transport", heat.transport, "inproc or tcp")
      ->check(CLI::IsMember({"inproc", "tcp"}))
      ->capture_default_str();
  h->add_option("--k", heat.cfg.params.k, "Heat transfer coefficient")->capture_default_str();
  h->add_option("--dt", heat.cfg.params.dt, "Time step")->capture_default_str();
  h->add_option("--dx", heat.cfg.params.dx, "Grid spacing")->capture_default_str();
  h->add_option("--seed", heat.cfg.seed, "Seed for a uniform [0,10) initial field (default i mod 10)");
  h->add_option("--memory-limit", heat.memory_limit, "Bytes per run; larger cells are reported as failed");
  h->add_flag("--no-verify", heat.no_verify, "Skip the sequential-solver comparison");
  h->add_option("--listen", heat.listen, "This rank's host:port (multi-process mode)");
  h->add_option("--peers", heat.peers, "All ranks' host:port in rank order")->delimiter(',');
  h->add_option("--threads", heat.threads, "Worker threads for this rank")->capture_default_str();
  h->add_option("--dump-field", heat.dump_field, "Write this rank's final field to PREFIX.r<rank>.bin");
  h->add_option("--connect-timeout", heat.connect_timeout_s, "Seconds to wait for ring peers")
      ->capture_default_str();
  add_output_options(h, heat.out);

  AlsArgs alsa;
  auto* a = app.add_subcommand("als", "Alternating least squares on MovieLens ratings");
  a->add_option("--ratings", alsa.ratings, "ratings.csv path")->required();
  a->add_option("--max-lines", alsa.max_lines, "Data rows to read")->capture_default_str();
  a->add_option("--k", alsa.fit.k, "Latent factors")->capture_default_str();
  a->add_option("--lambda", alsa.fit.lambda, "Regularization weight")->capture_default_str();
  a->add_option("--sweeps", alsa.fit.sweeps, "Full sweeps")->capture_default_str();
  a->add_option("--seed", alsa.fit.seed, "Initialization seed")->capture_default_str();
  a->add_option("--cores", alsa.cores, "Core counts (default 1..hardware)")->delimiter(',');
  add_output_options(a, alsa.out);

  EnergyArgs en;
  auto* e = app.add_subcommand("energy", "Price a report's runtimes in cents");
  e->add_option("--report", en.report_path, "JSON report to price")->required();
  e->add_option("--profile", en.profile, "Board power profile")
      ->check(CLI::IsMember({"pi3b", "pi3bplus", "pi4", "custom"}))
      ->capture_default_str();
  e->add_option("--watts", en.watts, "Watts per node (required for custom)");
  e->add_option("--rate", en.rate, "Electricity rate in cents per kWh")->capture_default_str();
  e->add_option("--iterations", en.iterations, "Iterations per run (default: the row's steps label, else 1)");
  add_output_options(e, en.out);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kUsage;
  }

  try {
    const auto seed = seed_override();
    const PreflightResult pf = preflight();
    for (const auto& w : pf.warnings) err << "warning: " << w << '\n';

    BenchReport rep;
    const Output* o = nullptr;
    if (s->parsed()) {
      rep = run_stream_cmd(stream, err);
      o = &stream.out;
    } else if (j->parsed()) {
      rep = run_jacobi_cmd(jac, seed, err);
      o = &jac.out;
    } else if (h->parsed()) {
      rep = run_heat_cmd(heat, seed, err);
      o = &heat.out;
    } else if (a->parsed()) {
      rep = run_als_cmd(alsa, seed);
      o = &alsa.out;
    } else {
      // The priced report keeps the environment it was measured in. Without
      // --output a JSON result replaces the input file.
      rep = run_energy_cmd(en);
      Output target = en.out;
      if (target.path.empty() && target.format == "json") target.path = en.report_path;
      emit(rep, target, out);
      return kOk;
    }
    rep.environment = environment(pf);
    emit(rep, *o, out);
    return kOk;
  } catch (const std::invalid_argument& ex) {
    err << "bench: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "bench: " << ex.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace pibench::benchcli

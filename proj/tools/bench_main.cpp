// Benchmark driver. `bench pi|jacobi|nbody` runs every role on threads of
// this process; `bench role ...` runs a single role so a computation can be
// spread over several processes or hosts.
#include "session/algo/jacobi.hpp"
#include "session/algo/nbody.hpp"
#include "session/algo/pi.hpp"
#include "session/bench/bench.hpp"
#include "session/socket.hpp"
#include "session/wire.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace session;
using namespace session::bench;

namespace {

struct CommonOpts {
  int workers = 0;
  std::int64_t scale = 0;
  int steps = 1;
  int iterations = 0;
  std::string transport = "inproc";
  std::string mode = "copy";
  int reps = 100;
  std::uint64_t seed = 0;
  std::string csv;
  std::string host = "127.0.0.1";
  int watchdog_ms = 30000;
  std::string particles;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool nbody, bool jacobi) {
  cmd->add_option("--workers", o.workers, nbody ? "ring units" : "worker count")->check(CLI::Range(1, 1 << 30));
  cmd->add_option("--scale", o.scale, "pi: total trials; jacobi: grid side; nbody: total particles");
  cmd->add_option("--transport", o.transport, "tcp | localhost | inproc")
      ->check(CLI::IsMember({"tcp", "localhost", "localhost-tcp", "inproc"}));
  cmd->add_option("--mode", o.mode, "copy | zerocopy")->check(CLI::IsMember({"copy", "zerocopy", "zero-copy"}));
  cmd->add_option("--reps", o.reps, "repetitions")->check(CLI::Range(1, 1 << 30));
  cmd->add_option("--seed", o.seed, "64-bit seed");
  cmd->add_option("--csv", o.csv, "append a CSV row to this file");
  cmd->add_option("--host", o.host, "host for tcp transport");
  cmd->add_option("--watchdog-ms", o.watchdog_ms, "per-operation timeout")->check(CLI::Range(1, 1 << 30));
  if (nbody) {
    cmd->add_option("--steps", o.steps, "simulation steps")->check(CLI::Range(1, 1 << 30));
    cmd->add_option("--particles", o.particles, "initial state file (x y vx vy mass per line)");
  }
  if (jacobi) cmd->add_option("--iterations", o.iterations, "sweep cap (default 100000)")->check(CLI::Range(0, 1 << 30));
}

int run_suite(Algorithm alg, const CommonOpts& o) {
  BenchConfig cfg;
  cfg.algorithm = alg;
  cfg.workers = o.workers ? o.workers : (alg == Algorithm::Pi ? 1 : 2);
  cfg.scale = o.scale;
  cfg.steps = o.steps;
  cfg.iterations = o.iterations;
  cfg.transport = parse_transport(o.transport);
  cfg.mode = parse_mode(o.mode);
  cfg.reps = o.reps;
  cfg.seed = o.seed;
  cfg.host = o.host;
  cfg.watchdog = std::chrono::milliseconds(o.watchdog_ms);
  cfg.particle_file = o.particles;

  BenchReport r = run_bench(cfg);
  std::printf("%s transport=%s mode=%s workers=%d scale=%lld reps=%zu mean=%.3fms median=%.3fms stddev=%.3fms "
              "checksum=%016llx\n",
              std::string(to_string(alg)).c_str(), std::string(to_string(cfg.transport)).c_str(),
              std::string(to_string(cfg.mode)).c_str(), cfg.workers, static_cast<long long>(r.config.scale),
              r.times_ms.size(), r.mean_ms, r.median_ms, r.stddev_ms, static_cast<unsigned long long>(r.checksum));
  for (const auto& e : r.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  if (!o.csv.empty()) emit_csv(r, o.csv);
  return r.ok() ? 0 : 1;
}

// Single-role mode ------------------------------------------------------------

struct RoleOpts {
  std::string host = "0.0.0.0";
  int port = 0;
  std::vector<std::string> connect;
  std::uint32_t index = 0;
  std::uint64_t seed = 0;
  std::int64_t scale = 0;
  std::string strip = "north";
  int iterations = 0;
  int steps = 1;
  int units = 2;
  bool driver = false;
  std::string particles;
  std::string dump;
  std::string dump_format = "text";
  int watchdog_ms = 30000;
};

RuntimeConfig role_runtime(const RoleOpts& o) {
  RuntimeConfig cfg = RuntimeConfig::from_env();
  cfg.watchdog = std::chrono::milliseconds(o.watchdog_ms);
  return cfg;
}

TcpAddress listen_address(const RoleOpts& o) { return TcpAddress{o.host, static_cast<std::uint16_t>(o.port)}; }

TcpAddress peer(const RoleOpts& o, std::size_t i) {
  if (i >= o.connect.size()) throw std::invalid_argument("missing --connect host:port");
  return parse_endpoint(o.connect[i]);
}

void dump_matrix(const DoubleMatrix& m, const RoleOpts& o) {
  if (o.dump.empty()) return;
  if (o.dump_format == "bin") {
    const wire::Bytes bytes = wire::encode_message(Message{m});
    std::ofstream out(o.dump, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write '" + o.dump + "'");
    return;
  }
  std::ofstream out(o.dump);
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("cannot write '" + o.dump + "'");
}

int run_role(const std::string& name, const RoleOpts& o) {
  const RuntimeConfig rc = role_runtime(o);
  algo::JacobiConfig jcfg;
  if (o.iterations > 0) jcfg.max_iterations = o.iterations;

  if (name == "pi-worker") {
    auto srv = SessionServerSocket::tcp(parse(algo::kPiWorkerProtocol), listen_address(o), rc);
    std::fprintf(stderr, "pi-worker listening on %u\n", srv.port());
    SessionSocket s = srv.accept();
    algo::SplitMix64 rng(algo::partition_seed(o.seed, o.index));
    algo::mc_worker(s, rng);
    return 0;
  }
  if (name == "pi-master") {
    if (o.connect.empty()) throw std::invalid_argument("pi-master needs --connect for every worker");
    SessionScope scope;
    std::vector<SessionSocket> socks;
    for (std::size_t i = 0; i < o.connect.size(); ++i)
      socks.push_back(SessionService::tcp(parse(algo::kPiMasterProtocol), peer(o, i), rc).request(scope));
    std::vector<SessionSocket*> ptrs;
    for (auto& s : socks) ptrs.push_back(&s);
    const auto trials = algo::split_trials(o.scale, socks.size());
    std::printf("%.17g\n", algo::mc_master(ptrs, trials));
    return 0;
  }
  if (name == "jacobi-worker") {
    if (o.strip != "north" && o.strip != "south") throw std::invalid_argument("--strip must be north or south");
    auto srv = SessionServerSocket::tcp(parse(algo::kJacobiWorker), listen_address(o), rc);
    std::fprintf(stderr, "jacobi-worker (%s) listening on %u\n", o.strip.c_str(), srv.port());
    SessionSocket s = srv.accept();
    algo::jacobi_worker(s, o.strip == "north" ? algo::Strip::North : algo::Strip::South, jcfg);
    return 0;
  }
  if (name == "jacobi-master") {
    auto srv = SessionServerSocket::tcp(parse(algo::kJacobiMasterToClient), listen_address(o), rc);
    std::fprintf(stderr, "jacobi-master listening on %u\n", srv.port());
    SessionScope scope;
    SessionSocket cm = srv.accept(scope);
    SessionSocket mn = SessionService::tcp(parse(algo::kJacobiMasterToWorker), peer(o, 0), rc).request(scope);
    SessionSocket ms = SessionService::tcp(parse(algo::kJacobiMasterToWorker), peer(o, 1), rc).request(scope);
    const auto stats = algo::jacobi_master(cm, mn, ms, jcfg);
    std::fprintf(stderr, "iterations: %d\n", stats.iterations);
    return 0;
  }
  if (name == "jacobi-client") {
    SessionSocket s = SessionService::tcp(parse(algo::kJacobiClient), peer(o, 0), rc).request();
    const DoubleMatrix m = algo::jacobi_client(s, static_cast<int>(o.scale));
    dump_matrix(m, o);
    Checksum c;
    c.add_u64(m.rows());
    c.add_u64(m.cols());
    for (double v : m.values()) c.add_double(v);
    std::printf("%016llx\n", static_cast<unsigned long long>(c.value()));
    return 0;
  }
  if (name == "nbody-unit") {
    // Units split the particle set the same way the in-process harness does.
    ParticleArray all = o.particles.empty() ? algo::random_particles(static_cast<std::size_t>(o.scale), o.seed)
                                            : algo::load_particles(o.particles);
    if (o.units < 2 || o.index >= static_cast<std::uint32_t>(o.units)) throw std::invalid_argument("bad --units/--index");
    const std::size_t each = all.size() / static_cast<std::size_t>(o.units);
    const std::size_t from = each * o.index;
    const std::size_t to = o.index + 1 == static_cast<std::uint32_t>(o.units) ? all.size() : from + each;
    ParticleArray own(std::vector<Particle>(all.begin() + static_cast<std::ptrdiff_t>(from),
                                            all.begin() + static_cast<std::ptrdiff_t>(to)));

    auto srv = SessionServerSocket::tcp(parse(algo::kNBodyLeft), listen_address(o), rc);
    std::fprintf(stderr, "nbody-unit %u listening on %u\n", o.index, srv.port());
    auto svc = SessionService::tcp(parse(algo::kNBodyRight), peer(o, 0), rc);
    SessionScope scope;
    SessionSocket left, right;
    if (o.driver) {
      right = svc.request(scope);
      left = srv.accept(scope);
    } else {
      left = srv.accept(scope);
      right = svc.request(scope);
    }
    algo::NBodyConfig ncfg;
    ncfg.steps = o.steps;
    const ParticleArray out =
        algo::nbody_unit(left, right, o.driver ? algo::RingRole::Driver : algo::RingRole::Relay, std::move(own), ncfg);
    for (const Particle& q : out) std::printf("%.17g %.17g %.17g %.17g %.17g\n", q.x, q.y, q.vx, q.vy, q.mass);
    return 0;
  }
  throw std::invalid_argument("unknown role '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Session-typed parallel algorithm benchmarks"};
  app.require_subcommand(1);

  CommonOpts pi_o, jac_o, nb_o;
  auto* pi = app.add_subcommand("pi", "Monte Carlo pi");
  add_common(pi, pi_o, false, false);
  auto* jac = app.add_subcommand("jacobi", "Jacobi solver, master plus 2 workers");
  add_common(jac, jac_o, false, true);
  auto* nb = app.add_subcommand("nbody", "n-body ring pipeline");
  add_common(nb, nb_o, true, false);

  RoleOpts ro;
  std::string role_name;
  auto* role = app.add_subcommand("role", "run one role over TCP");
  role->add_option("name", role_name,
                   "pi-worker | pi-master | jacobi-worker | jacobi-master | jacobi-client | nbody-unit")
      ->required();
  role->add_option("--host", ro.host, "listen address");
  role->add_option("--port", ro.port, "listen port (0 = ephemeral)");
  role->add_option("--connect", ro.connect, "peer host:port; repeat for several peers");
  role->add_option("--index", ro.index, "worker or unit index");
  role->add_option("--seed", ro.seed);
  role->add_option("--scale", ro.scale);
  role->add_option("--strip", ro.strip, "north | south");
  role->add_option("--iterations", ro.iterations);
  role->add_option("--steps", ro.steps);
  role->add_option("--units", ro.units, "ring size");
  role->add_flag("--driver", ro.driver, "this unit seeds the ring token and the loop flags");
  role->add_option("--particles", ro.particles);
  role->add_option("--dump", ro.dump, "jacobi-client: write the result here");
  role->add_option("--dump-format", ro.dump_format, "text | bin (DOUBLE_MATRIX frame)")
      ->check(CLI::IsMember({"text", "bin"}));
  role->add_option("--watchdog-ms", ro.watchdog_ms);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (pi->parsed()) return run_suite(Algorithm::Pi, pi_o);
    if (jac->parsed()) return run_suite(Algorithm::Jacobi, jac_o);
    if (nb->parsed()) return run_suite(Algorithm::NBody, nb_o);
    return run_role(role_name, ro);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 2;
  }
}

#include "session/bench/bench.hpp"

#include "session/algo/jacobi.hpp"
#include "session/algo/nbody.hpp"
#include "session/algo/pi.hpp"
#include "session/socket.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <latch>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace session::bench {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
  case Algorithm::Pi: return "pi";
  case Algorithm::Jacobi: return "jacobi";
  case Algorithm::NBody: return "nbody";
  }
  return "?";
}

std::string_view to_string(Transport t) noexcept {
  switch (t) {
  case Transport::Tcp: return "tcp";
  case Transport::Localhost: return "localhost";
  case Transport::InProc: return "inproc";
  }
  return "?";
}

std::string_view to_string(Mode m) noexcept { return m == Mode::Copy ? "copy" : "zerocopy"; }

Algorithm parse_algorithm(std::string_view s) {
  if (s == "pi") return Algorithm::Pi;
  if (s == "jacobi") return Algorithm::Jacobi;
  if (s == "nbody") return Algorithm::NBody;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

Transport parse_transport(std::string_view s) {
  if (s == "tcp") return Transport::Tcp;
  if (s == "localhost" || s == "localhost-tcp") return Transport::Localhost;
  if (s == "inproc") return Transport::InProc;
  throw std::invalid_argument("unknown transport '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  if (s == "copy") return Mode::Copy;
  if (s == "zerocopy" || s == "zero-copy") return Mode::ZeroCopy;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

void validate(const BenchConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be at least 1");
  if (cfg.scale <= 0 && !(cfg.algorithm == Algorithm::NBody && !cfg.particle_file.empty()))
    throw std::invalid_argument("scale must be positive");
  switch (cfg.algorithm) {
  case Algorithm::Pi:
    if (cfg.workers < 1) throw std::invalid_argument("pi needs at least one worker");
    break;
  case Algorithm::Jacobi:
    if (cfg.workers != 2) throw std::invalid_argument("jacobi always runs a master with 2 workers");
    if (cfg.scale < 3 || cfg.scale % 3 != 0) throw std::invalid_argument("jacobi scale must be a multiple of 3");
    if (cfg.iterations < 0) throw std::invalid_argument("iterations must not be negative");
    break;
  case Algorithm::NBody:
    if (cfg.workers < 2) throw std::invalid_argument("nbody needs a ring of at least 2 units");
    if (cfg.steps < 1) throw std::invalid_argument("steps must be positive");
    break;
  }
}

void Checksum::add_u64(std::uint64_t v) noexcept {
  for (int shift = 56; shift >= 0; shift -= 8) {
    h_ ^= (v >> shift) & 0xff;
    h_ *= 0x100000001b3ULL;
  }
}

void Checksum::add_double(double v) noexcept { add_u64(std::bit_cast<std::uint64_t>(v)); }

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  if (n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Role {
  std::function<void()> setup;
  std::function<void()> body;
  std::function<void()> teardown; // always runs on the role's thread
};

// Runs each role on its own thread. Setup runs before the clock starts
// unless `time_setup` is set.
double run_roles(std::vector<Role>& roles, bool time_setup) {
  const std::size_t n = roles.size();
  std::latch ready(static_cast<std::ptrdiff_t>(n));
  std::latch go(1);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      Role& r = roles[i];
      bool counted = false;
      try {
        if (!time_setup) r.setup();
        ready.count_down();
        counted = true;
        go.wait();
        if (time_setup) r.setup();
        r.body();
      } catch (...) {
        errors[i] = std::current_exception();
        if (!counted) ready.count_down();
      }
      if (r.teardown) r.teardown();
    });
  }
  ready.wait();
  const auto t0 = Clock::now();
  go.count_down();
  for (auto& t : threads) t.join();
  const auto t1 = Clock::now();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

// Builds server sockets and services for one repetition.
class Wiring {
public:
  explicit Wiring(const BenchConfig& cfg) : cfg_(cfg) {
    rcfg_.mode = cfg.mode;
    rcfg_.watchdog = cfg.watchdog;
    if (cfg.transport == Transport::InProc) registry_ = std::make_unique<InProcRegistry>();
  }

  SessionServerSocket server(std::string_view protocol, const std::string& key) {
    if (registry_) return SessionServerSocket::inproc(parse(protocol), *registry_, key, rcfg_);
    return SessionServerSocket::tcp(parse(protocol), TcpAddress{host(), 0}, rcfg_);
  }

  SessionService service(std::string_view protocol, const SessionServerSocket& target, const std::string& key) {
    if (registry_) return SessionService::inproc(parse(protocol), *registry_, key, rcfg_);
    return SessionService::tcp(parse(protocol), TcpAddress{host(), target.port()}, rcfg_);
  }

  bool time_setup() const { return !registry_; }
  std::uint64_t serialized() const { return registry_ ? registry_->copied_elements() : 0; }

private:
  std::string host() const { return cfg_.transport == Transport::Localhost ? "127.0.0.1" : cfg_.host; }

  const BenchConfig& cfg_;
  RuntimeConfig rcfg_;
  std::unique_ptr<InProcRegistry> registry_;
};

struct RepResult {
  double ms = 0.0;
  std::uint64_t checksum = 0;
  std::uint64_t serialized = 0;
};

RepResult run_pi(const BenchConfig& cfg) {
  Wiring wiring(cfg);
  const auto n = static_cast<std::size_t>(cfg.workers);
  std::vector<SessionServerSocket> servers;
  std::vector<SessionService> services;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string key = "pi-worker-" + std::to_string(k);
    servers.push_back(wiring.server(algo::kPiWorkerProtocol, key));
    services.push_back(wiring.service(algo::kPiMasterProtocol, servers.back(), key));
  }
  std::vector<SessionSocket> worker_side(n), master_side(n);
  const std::vector<std::int32_t> trials = algo::split_trials(cfg.scale, n);
  double estimate = 0.0;

  std::vector<Role> roles;
  for (std::size_t k = 0; k < n; ++k) {
    roles.push_back(Role{
        [&, k] { worker_side[k] = servers[k].accept(); },
        [&, k] {
          algo::SplitMix64 rng(algo::partition_seed(cfg.seed, static_cast<std::uint32_t>(k)));
          algo::mc_worker(worker_side[k], rng);
        },
        [&, k] { worker_side[k] = SessionSocket(); }});
  }
  roles.push_back(Role{
      [&] {
        SessionScope scope;
        for (std::size_t k = 0; k < n; ++k) master_side[k] = services[k].request(scope);
      },
      [&] {
        std::vector<SessionSocket*> ptrs;
        for (auto& s : master_side) ptrs.push_back(&s);
        estimate = algo::mc_master(ptrs, trials);
      },
      [&] {
        for (auto& s : master_side) s = SessionSocket();
      }});

  RepResult r;
  r.ms = run_roles(roles, wiring.time_setup());
  Checksum c;
  c.add_double(estimate);
  r.checksum = c.value();
  r.serialized = wiring.serialized();
  return r;
}

RepResult run_jacobi(const BenchConfig& cfg) {
  Wiring wiring(cfg);
  SessionServerSocket master_srv = wiring.server(algo::kJacobiMasterToClient, "jacobi-master");
  SessionServerSocket north_srv = wiring.server(algo::kJacobiWorker, "jacobi-north");
  SessionServerSocket south_srv = wiring.server(algo::kJacobiWorker, "jacobi-south");
  SessionService client_svc = wiring.service(algo::kJacobiClient, master_srv, "jacobi-master");
  SessionService north_svc = wiring.service(algo::kJacobiMasterToWorker, north_srv, "jacobi-north");
  SessionService south_svc = wiring.service(algo::kJacobiMasterToWorker, south_srv, "jacobi-south");

  algo::JacobiConfig jcfg;
  if (cfg.iterations > 0) jcfg.max_iterations = cfg.iterations;
  const int size = static_cast<int>(cfg.scale);

  SessionSocket north_w, south_w, client_m, master_c, master_n, master_s;
  DoubleMatrix result;

  std::vector<Role> roles;
  roles.push_back(Role{[&] { north_w = north_srv.accept(); },
                       [&] { algo::jacobi_worker(north_w, algo::Strip::North, jcfg); },
                       [&] { north_w = SessionSocket(); }});
  roles.push_back(Role{[&] { south_w = south_srv.accept(); },
                       [&] { algo::jacobi_worker(south_w, algo::Strip::South, jcfg); },
                       [&] { south_w = SessionSocket(); }});
  roles.push_back(Role{[&] {
                         SessionScope scope;
                         master_c = master_srv.accept(scope);
                         master_n = north_svc.request(scope);
                         master_s = south_svc.request(scope);
                       },
                       [&] { algo::jacobi_master(master_c, master_n, master_s, jcfg); },
                       [&] {
                         master_c = SessionSocket();
                         master_n = SessionSocket();
                         master_s = SessionSocket();
                       }});
  roles.push_back(Role{[&] { client_m = client_svc.request(); },
                       [&] { result = algo::jacobi_client(client_m, size); },
                       [&] { client_m = SessionSocket(); }});

  RepResult r;
  r.ms = run_roles(roles, wiring.time_setup());
  Checksum c;
  c.add_u64(result.rows());
  c.add_u64(result.cols());
  for (double v : result.values()) c.add_double(v);
  r.checksum = c.value();
  r.serialized = wiring.serialized();
  return r;
}

std::vector<ParticleArray> split_particles(const ParticleArray& all, std::size_t units) {
  if (all.size() < units) throw std::invalid_argument("fewer particles than ring units");
  std::vector<ParticleArray> out;
  const std::size_t each = all.size() / units;
  std::size_t at = 0;
  for (std::size_t u = 0; u < units; ++u) {
    const std::size_t n = u + 1 < units ? each : all.size() - at;
    out.emplace_back(std::vector<Particle>(all.begin() + static_cast<std::ptrdiff_t>(at),
                                           all.begin() + static_cast<std::ptrdiff_t>(at + n)));
    at += n;
  }
  return out;
}

RepResult run_nbody(const BenchConfig& cfg, const ParticleArray& initial) {
  Wiring wiring(cfg);
  const auto p = static_cast<std::size_t>(cfg.workers);
  std::vector<SessionServerSocket> servers;
  for (std::size_t u = 0; u < p; ++u) servers.push_back(wiring.server(algo::kNBodyLeft, "nbody-" + std::to_string(u)));
  std::vector<SessionService> services;
  for (std::size_t u = 0; u < p; ++u) {
    const std::size_t right = (u + 1) % p;
    services.push_back(wiring.service(algo::kNBodyRight, servers[right], "nbody-" + std::to_string(right)));
  }

  std::vector<ParticleArray> parts = split_particles(initial, p);
  std::vector<ParticleArray> results(p);
  std::vector<SessionSocket> left(p), right(p);
  algo::NBodyConfig ncfg;
  ncfg.steps = cfg.steps;

  std::vector<Role> roles;
  for (std::size_t u = 0; u < p; ++u) {
    roles.push_back(Role{
        [&, u] {
          SessionScope scope;
          if (u == 0) {
            right[u] = services[u].request(scope);
            left[u] = servers[u].accept(scope);
          } else {
            left[u] = servers[u].accept(scope);
            right[u] = services[u].request(scope);
          }
        },
        [&, u] {
          results[u] = algo::nbody_unit(left[u], right[u], u == 0 ? algo::RingRole::Driver : algo::RingRole::Relay,
                                        std::move(parts[u]), ncfg);
        },
        [&, u] {
          left[u] = SessionSocket();
          right[u] = SessionSocket();
        }});
  }

  RepResult r;
  r.ms = run_roles(roles, wiring.time_setup());
  Checksum c;
  for (const auto& part : results)
    for (const Particle& q : part) {
      c.add_double(q.x);
      c.add_double(q.y);
      c.add_double(q.vx);
      c.add_double(q.vy);
      c.add_double(q.mass);
    }
  r.checksum = c.value();
  r.serialized = wiring.serialized();
  return r;
}

} // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  validate(cfg);
  BenchReport report;
  report.config = cfg;

  ParticleArray initial;
  if (cfg.algorithm == Algorithm::NBody) {
    initial = cfg.particle_file.empty() ? algo::random_particles(static_cast<std::size_t>(cfg.scale), cfg.seed)
                                        : algo::load_particles(cfg.particle_file);
    report.config.scale = static_cast<std::int64_t>(initial.size());
  }

  const std::uint64_t copies_before = element_copies();
  std::optional<std::uint64_t> checksum;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    try {
      RepResult r;
      switch (cfg.algorithm) {
      case Algorithm::Pi: r = run_pi(cfg); break;
      case Algorithm::Jacobi: r = run_jacobi(cfg); break;
      case Algorithm::NBody: r = run_nbody(cfg, initial); break;
      }
      if (checksum && *checksum != r.checksum)
        throw std::runtime_error("result checksum changed between repetitions");
      checksum = r.checksum;
      report.times_ms.push_back(r.ms);
      report.serialized_elements += r.serialized;
    } catch (const std::exception& e) {
      ++report.failed_reps;
      report.errors.push_back("rep " + std::to_string(rep) + ": " + e.what());
    }
  }
  report.element_copies = element_copies() - copies_before;
  const Summary s = summarize(report.times_ms);
  report.mean_ms = s.mean;
  report.median_ms = s.median;
  report.stddev_ms = s.stddev;
  report.checksum = checksum.value_or(0);
  return report;
}

std::string csv_row(const BenchReport& r) {
  std::ostringstream out;
  out.precision(17);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.checksum));
  out << to_string(r.config.algorithm) << ',' << to_string(r.config.transport) << ',' << to_string(r.config.mode) << ','
      << r.config.workers << ',' << r.config.scale << ',' << r.times_ms.size() << ',' << r.mean_ms << ','
      << r.median_ms << ',' << r.stddev_ms << ',' << hex;
  return out.str();
}

void emit_csv(const BenchReport& report, const std::string& path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (fresh) out << kCsvHeader << '\n';
  out << csv_row(report) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

CsvRecord parse_csv_row(std::string_view line) {
  std::vector<std::string> f;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      f.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != '\n') {
      cur += ch;
    }
  }
  f.push_back(cur);
  if (f.size() != 10) throw std::invalid_argument("csv row must have 10 fields");
  CsvRecord r;
  r.algorithm = f[0];
  r.transport = f[1];
  r.mode = f[2];
  r.workers = std::stoi(f[3]);
  r.scale = std::stoll(f[4]);
  r.reps = std::stoi(f[5]);
  r.mean_ms = std::stod(f[6]);
  r.median_ms = std::stod(f[7]);
  r.stddev_ms = std::stod(f[8]);
  r.checksum = std::stoull(f[9], nullptr, 16);
  return r;
}

} // namespace session::bench

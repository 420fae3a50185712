#pragma once

// Wiring for running algorithm roles on threads of the test process.

#include "session/algo/jacobi.hpp"
#include "session/algo/nbody.hpp"
#include "session/algo/pi.hpp"
#include "session/socket.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <thread>
#include <vector>

namespace testsupport {

using namespace session;

enum class Net { InProcCopy, InProcZeroCopy, Tcp };

inline const char* name(Net n) {
  switch (n) {
  case Net::InProcCopy: return "inproc-copy";
  case Net::InProcZeroCopy: return "inproc-zerocopy";
  case Net::Tcp: return "localhost-tcp";
  }
  return "?";
}

class Wires {
public:
  explicit Wires(Net net, std::chrono::milliseconds watchdog = std::chrono::milliseconds(30000)) : net_(net) {
    cfg_.watchdog = watchdog;
    cfg_.mode = net == Net::InProcZeroCopy ? Mode::ZeroCopy : Mode::Copy;
  }

  SessionServerSocket server(std::string_view type, const std::string& key) {
    if (net_ == Net::Tcp) return SessionServerSocket::tcp(parse(type), TcpAddress{"127.0.0.1", 0}, cfg_);
    return SessionServerSocket::inproc(parse(type), registry_, key, cfg_);
  }

  SessionService service(std::string_view type, const SessionServerSocket& target, const std::string& key) {
    if (net_ == Net::Tcp) return SessionService::tcp(parse(type), TcpAddress{"127.0.0.1", target.port()}, cfg_);
    return SessionService::inproc(parse(type), registry_, key, cfg_);
  }

  InProcRegistry& registry() { return registry_; }

private:
  Net net_;
  RuntimeConfig cfg_;
  InProcRegistry registry_;
};

// Joins every thread, then rethrows the first failure.
class Crew {
public:
  void spawn(std::function<void()> f) {
    errors_.emplace_back();
    const std::size_t i = errors_.size() - 1;
    threads_.emplace_back([this, i, f = std::move(f)] {
      try {
        f();
      } catch (...) {
        errors_[i] = std::current_exception();
      }
    });
  }
  void join() {
    for (auto& t : threads_) t.join();
    threads_.clear();
    for (auto& e : errors_)
      if (e) std::rethrow_exception(e);
  }
  ~Crew() {
    for (auto& t : threads_)
      if (t.joinable()) t.join();
  }

private:
  std::vector<std::thread> threads_;
  std::deque<std::exception_ptr> errors_;
};

inline double run_pi(Net net, const std::vector<std::int32_t>& trials, std::uint64_t seed) {
  Wires w(net);
  const std::size_t n = trials.size();
  std::vector<SessionServerSocket> servers;
  std::vector<SessionService> services;
  for (std::size_t k = 0; k < n; ++k) {
    servers.push_back(w.server(algo::kPiWorkerProtocol, "w" + std::to_string(k)));
    services.push_back(w.service(algo::kPiMasterProtocol, servers.back(), "w" + std::to_string(k)));
  }
  Crew crew;
  for (std::size_t k = 0; k < n; ++k)
    crew.spawn([&, k] {
      SessionSocket s = servers[k].accept();
      algo::SplitMix64 rng(algo::partition_seed(seed, static_cast<std::uint32_t>(k)));
      algo::mc_worker(s, rng);
    });
  double estimate = 0.0;
  crew.spawn([&] {
    SessionScope scope;
    std::vector<SessionSocket> socks;
    for (auto& svc : services) socks.push_back(svc.request(scope));
    std::vector<SessionSocket*> ptrs;
    for (auto& s : socks) ptrs.push_back(&s);
    estimate = algo::mc_master(ptrs, trials);
  });
  crew.join();
  return estimate;
}

struct JacobiRun {
  DoubleMatrix result;
  algo::JacobiStats stats;
};

inline JacobiRun run_jacobi(Net net, int size, const algo::JacobiConfig& cfg, const algo::ProgressFn& progress = {}) {
  Wires w(net);
  auto master_srv = w.server(algo::kJacobiMasterToClient, "master");
  auto north_srv = w.server(algo::kJacobiWorker, "north");
  auto south_srv = w.server(algo::kJacobiWorker, "south");
  auto client_svc = w.service(algo::kJacobiClient, master_srv, "master");
  auto north_svc = w.service(algo::kJacobiMasterToWorker, north_srv, "north");
  auto south_svc = w.service(algo::kJacobiMasterToWorker, south_srv, "south");
  JacobiRun run;
  Crew crew;
  crew.spawn([&] {
    SessionSocket s = north_srv.accept();
    algo::jacobi_worker(s, algo::Strip::North, cfg);
  });
  crew.spawn([&] {
    SessionSocket s = south_srv.accept();
    algo::jacobi_worker(s, algo::Strip::South, cfg);
  });
  crew.spawn([&] {
    SessionScope scope;
    SessionSocket cm = master_srv.accept(scope);
    SessionSocket mn = north_svc.request(scope);
    SessionSocket ms = south_svc.request(scope);
    run.stats = algo::jacobi_master(cm, mn, ms, cfg, progress);
  });
  crew.spawn([&] {
    SessionSocket s = client_svc.request();
    run.result = algo::jacobi_client(s, size);
  });
  crew.join();
  return run;
}

struct RingRun {
  std::vector<ParticleArray> parts;
  std::vector<algo::NBodyStats> stats;
};

inline RingRun run_ring(Net net, std::vector<ParticleArray> parts, const algo::NBodyConfig& cfg,
                        std::chrono::milliseconds watchdog = std::chrono::milliseconds(30000)) {
  Wires w(net, watchdog);
  const std::size_t p = parts.size();
  std::vector<SessionServerSocket> servers;
  std::vector<SessionService> services;
  for (std::size_t u = 0; u < p; ++u) servers.push_back(w.server(algo::kNBodyLeft, "u" + std::to_string(u)));
  for (std::size_t u = 0; u < p; ++u)
    services.push_back(w.service(algo::kNBodyRight, servers[(u + 1) % p], "u" + std::to_string((u + 1) % p)));
  RingRun run;
  run.parts.resize(p);
  run.stats.resize(p);
  Crew crew;
  for (std::size_t u = 0; u < p; ++u)
    crew.spawn([&, u] {
      SessionScope scope;
      SessionSocket left, right;
      if (u == 0) {
        right = services[u].request(scope);
        left = servers[u].accept(scope);
      } else {
        left = servers[u].accept(scope);
        right = services[u].request(scope);
      }
      run.parts[u] = algo::nbody_unit(left, right, u == 0 ? algo::RingRole::Driver : algo::RingRole::Relay,
                                      std::move(parts[u]), cfg, &run.stats[u]);
    });
  crew.join();
  return run;
}

inline std::vector<ParticleArray> chunks(const ParticleArray& all, std::size_t p) {
  std::vector<ParticleArray> out;
  const std::size_t each = all.size() / p;
  for (std::size_t u = 0; u < p; ++u) {
    const std::size_t from = u * each, to = u + 1 == p ? all.size() : from + each;
    out.emplace_back(std::vector<Particle>(all.begin() + static_cast<std::ptrdiff_t>(from),
                                           all.begin() + static_cast<std::ptrdiff_t>(to)));
  }
  return out;
}

inline ParticleArray concat(const std::vector<ParticleArray>& parts) {
  std::vector<Particle> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return ParticleArray(std::move(out));
}

// |a-b| / max(|a|,|b|), with tiny magnitudes compared absolutely.
inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / scale;
}

inline double max_rel_diff(const ParticleArray& a, const ParticleArray& b) {
  double worst = a.size() == b.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    worst = std::max({worst, rel_diff(a[i].x, b[i].x), rel_diff(a[i].y, b[i].y), rel_diff(a[i].vx, b[i].vx),
                      rel_diff(a[i].vy, b[i].vy), rel_diff(a[i].mass, b[i].mass)});
  }
  return worst;
}

} // namespace testsupport

#include "session/algo/nbody.hpp"

#include "session/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace session::algo {

double compute_forces(const ParticleArray& own, const ParticleArray& visiting, std::vector<Force>& acc,
                      const NBodyConfig& cfg, bool same_set) {
  if (acc.size() != own.size()) acc.resize(own.size());
  const double eps2 = cfg.softening * cfg.softening;
  double max_f = 0.0;
  for (std::size_t i = 0; i < own.size(); ++i) {
    const Particle& a = own[i];
    for (std::size_t j = 0; j < visiting.size(); ++j) {
      if (same_set && i == j) continue;
      const Particle& b = visiting[j];
      const double dx = b.x - a.x;
      const double dy = b.y - a.y;
      const double d2 = dx * dx + dy * dy + eps2;
      const double f = cfg.G * a.mass * b.mass / d2;
      const double d = std::sqrt(d2);
      acc[i].fx += f * dx / d;
      acc[i].fy += f * dy / d;
      max_f = std::max(max_f, f);
    }
  }
  return max_f;
}

void compute_new_pos(ParticleArray& own, std::vector<Force>& acc, double dt) {
  if (acc.size() != own.size()) acc.resize(own.size());
  for (std::size_t i = 0; i < own.size(); ++i) {
    Particle& p = own[i];
    p.vx += acc[i].fx / p.mass * dt;
    p.vy += acc[i].fy / p.mass * dt;
    p.x += p.vx * dt;
    p.y += p.vy * dt;
    acc[i] = Force{};
  }
}

namespace {

// Flags sent round the ring must come back unchanged.
void check_returned(bool sent, bool back, SessionSocket& left, SessionSocket& right) {
  if (sent == back) return;
  left.scope().fail();
  right.scope().fail();
  throw FlagDisagreement("iteration flag changed on its way round the ring");
}

ParticleArray own_copy(const ParticleArray& own) {
  return ParticleArray(std::vector<Particle>(own.begin(), own.end()));
}

} // namespace

ParticleArray nbody_unit(SessionSocket& left, SessionSocket& right, RingRole role, ParticleArray own,
                         const NBodyConfig& cfg, NBodyStats* stats) {
  NBodyStats local;
  NBodyStats& st = stats ? *stats : local;
  st = NBodyStats{};
  std::vector<Force> acc(own.size());

  // One inner round: fold what we hold, pass it on, take the next set.
  auto visit = [&](ParticleArray& current, bool own_set) {
    st.max_force = std::max(st.max_force, compute_forces(own, current, acc, cfg, own_set));
    right.send(std::move(current));
    current = left.receive_particles();
  };

  auto finish_step = [&](ParticleArray& current, int inner) {
    st.max_force = std::max(st.max_force, compute_forces(own, current, acc, cfg, inner == 0));
    compute_new_pos(own, acc, cfg.dt);
    st.inner_iterations.push_back(inner);
    ++st.steps;
  };

  if (role == RingRole::Driver) {
    left.send(1);
    const int p = right.receive_int();
    if (p < 2) {
      left.scope().fail();
      right.scope().fail();
      throw SessionFailure("ring token came back with size " + std::to_string(p));
    }
    st.ring_size = p;

    OutLoop out{&right};
    InLoop in{&left};
    for (int step = 0;; ++step) {
      const bool more = step < cfg.steps;
      out.next(more);
      check_returned(more, in.next(), left, right);
      if (!more) break;

      ParticleArray current = own_copy(own);
      OutLoop inner_out{&right};
      InLoop inner_in{&left};
      int k = 0;
      for (;; ++k) {
        const bool again = k < p - 1;
        inner_out.next(again);
        check_returned(again, inner_in.next(), left, right);
        if (!again) break;
        visit(current, k == 0);
      }
      finish_step(current, k);
    }
  } else {
    const int token = right.receive_int();
    left.send(token + 1);

    InLoop in{&left};
    OutLoop out{&right};
    while (out.next(in.next())) {
      ParticleArray current = own_copy(own);
      InLoop inner_in{&left};
      OutLoop inner_out{&right};
      int k = 0;
      while (inner_out.next(inner_in.next())) {
        visit(current, k == 0);
        ++k;
      }
      finish_step(current, k);
    }
  }

  left.close();
  right.close();
  return own;
}

ParticleArray nbody_sequential(ParticleArray all, const NBodyConfig& cfg) {
  std::vector<Force> acc(all.size());
  for (int s = 0; s < cfg.steps; ++s) {
    compute_forces(all, all, acc, cfg, true);
    compute_new_pos(all, acc, cfg.dt);
  }
  return all;
}

ParticleArray parse_particles(std::string_view text) {
  std::vector<Particle> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    Particle p;
    if (!(fields >> p.x)) continue; // blank or comment-only line
    if (!(fields >> p.y >> p.vx >> p.vy >> p.mass))
      throw std::invalid_argument("particle line " + std::to_string(lineno) + ": expected x y vx vy mass");
    std::string extra;
    if (fields >> extra) throw std::invalid_argument("particle line " + std::to_string(lineno) + ": trailing text");
    if (!(p.mass > 0.0)) throw std::invalid_argument("particle line " + std::to_string(lineno) + ": mass must be positive");
    out.push_back(p);
  }
  return ParticleArray(std::move(out));
}

ParticleArray load_particles(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open particle file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_particles(buf.str());
}

ParticleArray random_particles(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Particle> out(n);
  for (auto& p : out) {
    p.x = rng.coordinate();
    p.y = rng.coordinate();
    p.vx = rng.coordinate();
    p.vy = rng.coordinate();
    p.mass = 0.5 + rng.uniform();
  }
  return ParticleArray(std::move(out));
}

Force total_momentum(const ParticleArray& ps) {
  Force m;
  for (const Particle& p : ps) {
    m.fx += p.mass * p.vx;
    m.fy += p.mass * p.vy;
  }
  return m;
}

} // namespace session::algo

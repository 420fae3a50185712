#pragma once

#include "session/algo/rng.hpp"
#include "session/socket.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace session::algo {

// Each unit accepts its left neighbour (server side) and requests its right
// neighbour (client side).
inline constexpr std::string_view kNBodyLeft = "sbegin.!<int>.?[?[?(Particle[])]*]*";
inline constexpr std::string_view kNBodyRight = "cbegin.?(int).![![!<Particle[]>]*]*";

struct NBodyConfig {
  int steps = 1;
  double dt = 0.01;
  double softening = 0.01;
  double G = 1.0;
};

struct Force {
  double fx = 0.0;
  double fy = 0.0;
};

/// Adds the pull of every particle in `visiting` on every particle in `own`
/// to `acc`. With `same_set`, pairs with equal indices are skipped. Returns
/// the largest single-pair force magnitude.
double compute_forces(const ParticleArray& own, const ParticleArray& visiting, std::vector<Force>& acc,
                      const NBodyConfig& cfg, bool same_set);

/// Explicit Euler: v += F/m dt, then x += v dt. Clears `acc`.
void compute_new_pos(ParticleArray& own, std::vector<Force>& acc, double dt);

enum class RingRole { Driver, Relay };

struct NBodyStats {
  int ring_size = 0;
  int steps = 0;
  std::vector<int> inner_iterations; // per step
  double max_force = 0.0;
};

/// One pipeline unit. `left` was accepted from the left neighbour, `right`
/// requested from the right neighbour. Returns this unit's particles after
/// the last step.
ParticleArray nbody_unit(SessionSocket& left, SessionSocket& right, RingRole role, ParticleArray own,
                         const NBodyConfig& cfg, NBodyStats* stats = nullptr);

/// All-pairs oracle over the whole set.
ParticleArray nbody_sequential(ParticleArray all, const NBodyConfig& cfg);

/// Parses `x y vx vy mass` lines; `#` starts a comment.
ParticleArray parse_particles(std::string_view text);
ParticleArray load_particles(const std::string& path);

/// Positions and velocities uniform on [-1, 1], masses on [0.5, 1.5].
ParticleArray random_particles(std::size_t n, std::uint64_t seed);

/// Total momentum (sum of m v).
Force total_momentum(const ParticleArray& ps);

} // namespace session::algo

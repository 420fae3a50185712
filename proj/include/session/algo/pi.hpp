#pragma once

#include "session/algo/rng.hpp"
#include "session/socket.hpp"

#include <concepts>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace session::algo {

// Master drives the workers; each worker serves one request.
inline constexpr std::string_view kPiMasterProtocol = "cbegin.!<int>.?(int)";
inline constexpr std::string_view kPiWorkerProtocol = "sbegin.?(int).!<int>";

/// Anything that yields coordinates on [-1, 1].
template <class R>
concept CoordinateSource = requires(R& r) {
  { r.coordinate() } -> std::convertible_to<double>;
};

/// One dart. Consumes exactly two draws (x then y).
template <CoordinateSource R>
bool mc_hit(R& rng) {
  const double x = rng.coordinate();
  const double y = rng.coordinate();
  return x * x + y * y <= 1.0;
}

template <CoordinateSource R>
std::int64_t mc_count_hits(std::int64_t trials, R& rng) {
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) hits += mc_hit(rng) ? 1 : 0;
  return hits;
}

/// Worker role: receive the trial count, throw darts, reply with the hits.
template <CoordinateSource R>
void mc_worker(SessionSocket& master, R& rng) {
  const std::int32_t trials = master.receive_int();
  if (trials < 0) throw std::invalid_argument("negative trial count");
  master.send(static_cast<std::int32_t>(mc_count_hits(trials, rng)));
  master.close();
}

/// Master role with the same count for every worker.
double mc_master(std::span<SessionSocket* const> workers, std::int32_t trials_per_worker);

/// Master role with individual counts (used when the total does not split
/// evenly). Falls back to a multicast send when all counts agree.
double mc_master(std::span<SessionSocket* const> workers, std::span<const std::int32_t> trials);

/// Even split of `total` over `workers`; the remainder goes to the last one.
std::vector<std::int32_t> split_trials(std::int64_t total, std::size_t workers);

/// Single-threaded estimate from one stream.
double mc_sequential(std::int64_t trials, SplitMix64& rng);

/// Single-threaded estimate that reproduces a parallel run exactly: partition
/// k uses partition_seed(base_seed, k) for trials[k] darts.
double mc_sequential(std::span<const std::int32_t> trials, std::uint64_t base_seed);

} // namespace session::algo

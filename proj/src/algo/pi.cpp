#include "session/algo/pi.hpp"

#include <numeric>
#include <stdexcept>

namespace session::algo {

namespace {

double estimate(std::int64_t hits, std::int64_t trials) {
  return 4.0 * static_cast<double>(hits) / static_cast<double>(trials);
}

} // namespace

double mc_master(std::span<SessionSocket* const> workers, std::int32_t trials_per_worker) {
  if (workers.empty()) throw std::invalid_argument("mc_master needs at least one worker");
  multicast_send(workers, trials_per_worker);
  std::int64_t hits = 0;
  for (SessionSocket* w : workers) hits += w->receive_int();
  for (SessionSocket* w : workers) w->close();
  return estimate(hits, static_cast<std::int64_t>(trials_per_worker) * static_cast<std::int64_t>(workers.size()));
}

double mc_master(std::span<SessionSocket* const> workers, std::span<const std::int32_t> trials) {
  if (workers.empty() || workers.size() != trials.size())
    throw std::invalid_argument("mc_master needs one trial count per worker");
  bool equal = true;
  for (std::int32_t t : trials) equal = equal && t == trials.front();
  if (equal) return mc_master(workers, trials.front());

  for (std::size_t i = 0; i < workers.size(); ++i) workers[i]->send(trials[i]);
  std::int64_t hits = 0;
  for (SessionSocket* w : workers) hits += w->receive_int();
  for (SessionSocket* w : workers) w->close();
  return estimate(hits, std::accumulate(trials.begin(), trials.end(), std::int64_t{0}));
}

std::vector<std::int32_t> split_trials(std::int64_t total, std::size_t workers) {
  if (workers == 0 || total < 0) throw std::invalid_argument("split_trials: bad arguments");
  const std::int64_t each = total / static_cast<std::int64_t>(workers);
  const std::int64_t last = each + total % static_cast<std::int64_t>(workers);
  if (last > INT32_MAX) throw std::invalid_argument("per-worker trial count exceeds int range");
  std::vector<std::int32_t> out(workers, static_cast<std::int32_t>(each));
  out.back() = static_cast<std::int32_t>(last);
  return out;
}

double mc_sequential(std::int64_t trials, SplitMix64& rng) {
  if (trials <= 0) throw std::invalid_argument("mc_sequential needs trials > 0");
  return estimate(mc_count_hits(trials, rng), trials);
}

double mc_sequential(std::span<const std::int32_t> trials, std::uint64_t base_seed) {
  std::int64_t hits = 0;
  std::int64_t total = 0;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    SplitMix64 rng(partition_seed(base_seed, static_cast<std::uint32_t>(k)));
    hits += mc_count_hits(trials[k], rng);
    total += trials[k];
  }
  if (total <= 0) throw std::invalid_argument("mc_sequential needs trials > 0");
  return estimate(hits, total);
}

} // namespace session::algo

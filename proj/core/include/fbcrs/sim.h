#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <utility>
#include <vector>

#include "fbcrs/rng.h"

namespace fbcrs::sim {

inline constexpr double kDefaultConfidence = 0.999;

struct Interval {
  double low = 0.0;
  double high = 1.0;
  double half_width() const { return (high - low) / 2.0; }
};

// Two-sided standard normal quantile z with P(|Z| <= z) = confidence.
double normal_quantile_two_sided(double confidence);

// Wilson score interval for a binomial proportion. Requires
// 0 <= successes <= count and count >= 1.
Interval wilson_interval(std::uint64_t successes, std::uint64_t count,
                         double confidence = kDefaultConfidence);

// Conditional acceptance rate: successes among trials in which the
// conditioning event occurred.
struct RateEstimate {
  std::uint64_t successes = 0;
  std::uint64_t count = 0;

  void record(bool success) {
    ++count;
    successes += success ? 1 : 0;
  }
  void merge(const RateEstimate& other) {
    successes += other.successes;
    count += other.count;
  }
  double point() const {
    return count == 0 ? 0.0 : static_cast<double>(successes) / count;
  }
  Interval interval(double confidence = kDefaultConfidence) const;
};

// Sample mean of a bounded real-valued outcome with a normal-approximation
// interval. Merging is exact in counts and deterministic in sums as long as
// merges happen in a fixed order (run_trials guarantees this).
struct MeanEstimate {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void record(double value) {
    ++count;
    sum += value;
    sum_sq += value * value;
  }
  void merge(const MeanEstimate& other) {
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double point() const { return count == 0 ? 0.0 : sum / count; }
  double half_width(double confidence = kDefaultConfidence) const;
};

struct TrialConfig {
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  // Trials per block. Blocks are the unit of work distribution and of
  // aggregation order, so results do not depend on `workers`.
  std::uint64_t block_size = 4096;
};

// Runs `trial(trial_index, rng, acc)` for every trial index with a private
// stream RngStream(seed, trial_index), accumulating into per-block copies
// of `init` that are merged in block order. Acc must provide
// `void merge(const Acc&)`.
template <typename Acc, typename TrialFn>
Acc run_trials(const TrialConfig& config, const Acc& init, TrialFn&& trial) {
  const std::uint64_t block = std::max<std::uint64_t>(1, config.block_size);
  const std::uint64_t num_blocks = (config.trials + block - 1) / block;
  std::vector<Acc> partial(num_blocks, init);

  auto run_block = [&](std::uint64_t b) {
    const std::uint64_t begin = b * block;
    const std::uint64_t end = std::min(config.trials, begin + block);
    for (std::uint64_t t = begin; t < end; ++t) {
      RngStream rng(config.seed, t);
      trial(t, rng, partial[b]);
    }
  };

  const unsigned workers = std::max(1u, config.workers);
  if (workers == 1 || num_blocks <= 1) {
    for (std::uint64_t b = 0; b < num_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < num_blocks; b = next++) run_block(b);
      });
    }
  }

  Acc total = init;
  for (const Acc& p : partial) total.merge(p);
  return total;
}

}  // namespace fbcrs::sim

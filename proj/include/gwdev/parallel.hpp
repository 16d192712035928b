#pragma once

#include <cstdint>
#include <thread>
#include <vector>

#include "gwdev/rng.hpp"

namespace gwdev {

// Replicate-parallel success counting.  Every replicate i draws from its own
// substream(seed, i, phase), so the reduction is an order-independent integer
// sum and the result is identical for any worker count.
template <class Fn>
std::int64_t count_successes(std::int64_t replicates, std::uint64_t seed,
                             std::uint64_t phase, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  std::vector<std::int64_t> partial(static_cast<std::size_t>(workers), 0);
  auto run = [&](int w) {
    std::int64_t acc = 0;
    for (std::int64_t i = w; i < replicates; i += workers) {
      RngStream rng = substream(seed, static_cast<std::uint64_t>(i), phase);
      if (fn(i, rng)) ++acc;
    }
    partial[static_cast<std::size_t>(w)] = acc;
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  std::int64_t total = 0;
  for (auto c : partial) total += c;
  return total;
}

// As above, with discard accounting: fn returns +1 (success), 0 (failure) or
// -1 (discard, e.g. simulation budget exceeded).
struct Tally {
  std::int64_t successes = 0;
  std::int64_t discards = 0;
};

template <class Fn>
Tally tally_replicates(std::int64_t replicates, std::uint64_t seed,
                       std::uint64_t phase, int workers, Fn&& fn) {
  if (workers < 1) workers = 1;
  std::vector<Tally> partial(static_cast<std::size_t>(workers));
  auto run = [&](int w) {
    Tally t;
    for (std::int64_t i = w; i < replicates; i += workers) {
      RngStream rng = substream(seed, static_cast<std::uint64_t>(i), phase);
      const int r = fn(i, rng);
      if (r > 0)
        ++t.successes;
      else if (r < 0)
        ++t.discards;
    }
    partial[static_cast<std::size_t>(w)] = t;
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& th : pool) th.join();
  }
  Tally total;
  for (const auto& t : partial) {
    total.successes += t.successes;
    total.discards += t.discards;
  }
  return total;
}

}  // namespace gwdev

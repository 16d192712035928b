#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace gwdev {

// SplitMix64 output mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic counter-based random stream.  A stream is identified by
// (master_seed, stream_id); draw i of the stream depends only on that triple,
// so replicate-parallel runs give identical results for any worker count.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : state_(mix64(master_seed ^ mix64(stream_id + 0x9e3779b97f4a7c15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform on the open interval (0,1); never returns an endpoint, so
  // inverse-CDF transforms stay finite.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential() { return -std::log(uniform()); }

 private:
  std::uint64_t state_;
};

// Child-stream derivation for nested parallelism (e.g. one stream per
// replicate, then per-phase substreams inside a replicate).
inline RngStream substream(std::uint64_t master_seed, std::uint64_t stream_id,
                           std::uint64_t phase) {
  return RngStream(master_seed, mix64(stream_id) ^ (phase * 0xd1342543de82ef95ULL));
}

}  // namespace gwdev

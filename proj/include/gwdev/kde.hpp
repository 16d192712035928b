#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/rng.hpp"

namespace gwdev {

// Kernel density estimator on [0, inf) with local-linear boundary correction
// (Epanechnikov kernel).  Samples are binned once; evaluation is a short sum
// over the bins inside the kernel support.
class BoundaryKde {
 public:
  explicit BoundaryKde(const std::vector<double>& samples,
                       double bandwidth = 0.0, std::size_t n_bins = 4096) {
    if (samples.size() < 100)
      throw InsufficientSamples("BoundaryKde: need at least 100 samples");
    n_ = samples.size();
    double hi = 0.0;
    for (double s : samples) hi = std::max(hi, s);
    hi_ = hi * (1.0 + 1e-9) + 1e-12;
    bin_w_ = hi_ / static_cast<double>(n_bins);
    counts_.assign(n_bins, 0.0);
    for (double s : samples) {
      auto idx = static_cast<std::size_t>(s / bin_w_);
      if (idx >= n_bins) idx = n_bins - 1;
      counts_[idx] += 1.0;
    }
    h_ = bandwidth > 0.0 ? bandwidth : plug_in_bandwidth(samples);
  }

  // Rebuild with resampled bin counts (multinomial bootstrap).
  BoundaryKde bootstrap_replicate(RngStream& rng) const {
    BoundaryKde copy(*this);
    std::vector<double> fresh(counts_.size(), 0.0);
    // sequential binomial thinning of the multinomial
    std::int64_t remaining = static_cast<std::int64_t>(n_);
    double mass_left = static_cast<double>(n_);
    for (std::size_t i = 0; i < counts_.size() && remaining > 0; ++i) {
      if (counts_[i] <= 0.0) continue;
      double p = counts_[i] / mass_left;
      std::int64_t draw;
      if (p >= 1.0) {
        draw = remaining;
      } else {
        std::binomial_distribution<std::int64_t> bin(remaining, p);
        draw = bin(rng);
      }
      fresh[i] = static_cast<double>(draw);
      remaining -= draw;
      mass_left -= counts_[i];
    }
    copy.counts_ = std::move(fresh);
    return copy;
  }

  double bandwidth() const { return h_; }

  // Density estimate at u >= 0.
  double operator()(double u) const {
    if (u < 0) return 0.0;
    const double c = std::min(1.0, u / h_);
    // partial Epanechnikov moments over t in [-1, c]
    const double a0 = 0.75 * (c - c * c * c / 3.0) + 0.5;
    const double a1 = 0.75 * (c * c / 2.0 - std::pow(c, 4) / 4.0) - 0.1875;
    const double a2 = 0.75 * (c * c * c / 3.0 - std::pow(c, 5) / 5.0) + 0.1;
    const double denom = a0 * a2 - a1 * a1;
    const double lo = std::max(0.0, u - h_), hi = u + h_ * c + bin_w_;
    auto i0 = static_cast<std::size_t>(std::max(0.0, lo / bin_w_));
    auto i1 = static_cast<std::size_t>(std::min(
        static_cast<double>(counts_.size() - 1), hi / bin_w_));
    double acc = 0.0;
    for (std::size_t i = i0; i <= i1; ++i) {
      if (counts_[i] == 0.0) continue;
      const double x = (static_cast<double>(i) + 0.5) * bin_w_;
      const double t = (u - x) / h_;
      if (t < -1.0 || t > c) continue;
      const double k = 0.75 * (1.0 - t * t);
      acc += counts_[i] * (a2 - a1 * t) * k / denom;
    }
    return acc / (static_cast<double>(n_) * h_);
  }

 private:
  static double plug_in_bandwidth(const std::vector<double>& samples) {
    std::vector<double> s(samples);
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : s) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    const double iqr = s[static_cast<std::size_t>(0.75 * n)] -
                       s[static_cast<std::size_t>(0.25 * n)];
    const double spread = std::min(std::sqrt(var), iqr / 1.34);
    return 0.9 * spread * std::pow(n, -0.2);
  }

  std::size_t n_ = 0;
  double hi_ = 0.0, bin_w_ = 0.0, h_ = 0.0;
  std::vector<double> counts_;
};

}  // namespace gwdev

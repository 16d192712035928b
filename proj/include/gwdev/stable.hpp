#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/norming.hpp"
#include "gwdev/numeric.hpp"
#include "gwdev/rng.hpp"
#include "gwdev/summand.hpp"

namespace gwdev {

// Strictly stable law, scale 1 in the Chambers-Mallows-Stuck parameterization.
// alpha = 1 is restricted to the symmetric (Cauchy) case; a skewed strictly
// 1-stable law would need a drift term this project never exercises.
class StableLaw {
 public:
  StableLaw(double alpha, double skew) : alpha_(alpha), skew_(skew) {
    if (!(alpha > 0 && alpha <= 2))
      throw ConfigError("StableLaw: alpha must lie in (0,2]");
    if (!(skew >= -1 && skew <= 1))
      throw ConfigError("StableLaw: skew must lie in [-1,1]");
    if (alpha == 1.0 && skew != 0.0)
      throw ConfigError("StableLaw: alpha=1 supported only with skew=0");
    theta0_ = (alpha == 1.0)
                  ? 0.0
                  : std::atan(skew * std::tan(M_PI * alpha / 2.0)) / alpha;
  }

  double alpha() const { return alpha_; }
  double skew() const { return skew_; }

  double sample(RngStream& rng) const {
    const double v = M_PI * (rng.uniform() - 0.5);
    if (alpha_ == 1.0) return std::tan(v);  // symmetric Cauchy
    const double w = rng.exponential();
    const double t = alpha_ * (v + theta0_);
    return std::sin(t) /
           std::pow(std::cos(alpha_ * theta0_) * std::cos(v), 1.0 / alpha_) *
           std::pow(std::cos(v - t) / w, (1.0 - alpha_) / alpha_);
  }

  // P(U >= x) from a cached empirical CDF (1e7 draws, thinned order
  // statistics, piecewise-linear interpolation); absolute accuracy ~2e-3.
  double tail_cdf(double x) const {
    const Table& tab = table();
    const auto& q = tab.quantiles;
    if (x <= q.front()) {
      // power-law extrapolation on the heavy side; the remaining mass is
      // below p_step anyway on a thin or bounded side
      if (skew_ < 1.0 - 1e-12 && q.front() < 0.0)
        return 1.0 - tab.p_step * std::pow(x / q.front(), -alpha_);
      return 1.0;
    }
    if (x >= q.back()) {
      if (skew_ > -1.0 + 1e-12 && q.back() > 0.0)
        return tab.p_step * std::pow(x / q.back(), -alpha_);
      return 0.0;
    }
    const auto it = std::upper_bound(q.begin(), q.end(), x);
    const auto j = static_cast<std::size_t>(it - q.begin());  // q[j-1] <= x < q[j]
    const double frac = (x - q[j - 1]) / std::max(q[j] - q[j - 1], 1e-300);
    const double cdf = tab.p_step * (static_cast<double>(j - 1) + frac) +
                       tab.p_step;  // cdf at q.front() is p_step
    return std::min(1.0, std::max(0.0, 1.0 - cdf));
  }

 private:
  struct Table {
    std::vector<double> quantiles;  // order statistics at spacing p_step
    double p_step = 0.0;
  };

  const Table& table() const {
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::shared_ptr<const Table>>
        cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{alpha_, skew_}];
    if (!slot) slot = build_table();
    if (!table_) table_ = slot;
    return *table_;
  }

  std::shared_ptr<const Table> build_table() const {
    constexpr std::size_t kDraws = 10000000;
    constexpr std::size_t kThin = 100;
    std::vector<double> v(kDraws);
    for (std::size_t i = 0; i < kDraws; ++i) {
      RngStream rng = substream(0x57ab1eu, i, 0);
      v[i] = sample(rng);
    }
    std::sort(v.begin(), v.end());
    auto tab = std::make_shared<Table>();
    tab->p_step = static_cast<double>(kThin) / static_cast<double>(kDraws);
    tab->quantiles.reserve(kDraws / kThin);
    for (std::size_t i = kThin; i <= kDraws - kThin; i += kThin)
      tab->quantiles.push_back(v[i]);
    return tab;
  }

  double alpha_, skew_, theta0_;
  mutable std::shared_ptr<const Table> table_;
};

// Stable attractor of the summand law: index alpha, skew from the tail balance.
inline StableLaw stable_attractor(const SummandLaw& law) {
  return StableLaw(law->alpha(), 2.0 * law->p_plus() - 1.0);
}

struct CalibrationResult {
  double scale = 1.0;  // S_k / b(k) ~ scale * U
  double ks = 1.0;     // Kolmogorov-Smirnov distance at the fitted scale
  int k_used = 0;
  std::size_t n_samples = 0;
};

// Fit the scale c so that S_k / b(k) matches c * U in distribution.  One
// sorted sample is drawn once; the golden-section search only re-scales it.
// ks < 0.02 is a clean fit; ks >= 0.05 throws CalibrationFailure.
inline CalibrationResult calibrate_scale(const SummandLaw& law,
                                         const NormingSequence& nseq,
                                         const StableLaw& stable, int k = 2000,
                                         std::size_t n_samples = 20000,
                                         std::uint64_t seed = 0xca11b7u) {
  std::vector<double> xs(n_samples);
  const double bk = nseq.b(static_cast<double>(k));
  for (std::size_t i = 0; i < n_samples; ++i) {
    RngStream rng = substream(seed, i, 0);
    xs[i] = law.sample_S_k(k, rng) / bk;
  }
  std::sort(xs.begin(), xs.end());
  auto ks_at = [&](double c) {
    return ks_distance_sorted(
        xs, [&](double x) { return 1.0 - stable.tail_cdf(x / c); });
  };
  // bracket the scale in log space, then golden-section
  double lo = std::log(1e-3), hi = std::log(1e3);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = ks_at(std::exp(x1)), f2 = ks_at(std::exp(x2));
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = ks_at(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = ks_at(std::exp(x2));
    }
  }
  CalibrationResult out;
  out.scale = std::exp(0.5 * (a + b));
  out.ks = ks_at(out.scale);
  out.k_used = k;
  out.n_samples = n_samples;
  if (out.ks >= 0.05)
    throw CalibrationFailure(
        "calibrate_scale: KS distance " + std::to_string(out.ks) +
        " at best scale " + std::to_string(out.scale) +
        "; the summand is not attracted to this stable law at k=" +
        std::to_string(k));
  return out;
}

// Reference survival tables (x, P(U >= x)) produced by the table generator
// from 1e8 draws; stored as CSV under data/stable/.
struct StableTable {
  std::vector<double> x, sf;
};

inline StableTable load_stable_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_stable_table: cannot open " + path);
  StableTable t;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    t.x.push_back(std::stod(a));
    t.sf.push_back(std::stod(b));
  }
  if (t.x.empty()) throw ConfigError("load_stable_table: empty table " + path);
  return t;
}

inline std::string stable_table_name(double alpha, double skew) {
  std::ostringstream os;
  os << "alpha" << alpha << "_skew" << skew << ".csv";
  return os.str();
}

}  // namespace gwdev

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/parallel.hpp"
#include "gwdev/summand.hpp"

namespace gwdev {

// Evaluable upper bound on P(S_k >= x).  `value` is clamped to [0,1];
// `raw` keeps the unclamped number (raw > 1 means the bound is vacuous but
// still correct).  `valid=false` marks unmet preconditions, never an error.
struct BoundReport {
  enum class Kind { Na3b, Na16, Prokhorov, Na2special };
  Kind kind = Kind::Na3b;
  double value = 1.0;
  double raw = 1.0;
  bool valid = false;
  bool clamped = false;
  std::int64_t k = 0;
  double x = 0.0;
  double r = 0.0, t = 0.0, y = 0.0;  // as applicable
  double c_hat = 0.0;                // Prokhorov only

  static const char* kind_name(Kind kd) {
    switch (kd) {
      case Kind::Na3b: return "Na3b";
      case Kind::Na16: return "Na16";
      case Kind::Prokhorov: return "Prokhorov";
      case Kind::Na2special: return "Na2special";
    }
    return "?";
  }
};

namespace detail {
inline BoundReport clamp_report(BoundReport rep) {
  rep.raw = rep.value;
  rep.clamped = rep.value > 1.0;
  rep.value = std::min(1.0, std::max(0.0, rep.value));
  return rep;
}
// E[X^t 1{X >= 0}] evaluated with a finite cap; the tail above the cap is
// negligible whenever the moment exists at all (t < beta).
inline double at_plus_total(const SummandLaw& law, double t) {
  return law->At_plus(t, 1e30);
}
}  // namespace detail

// P(S_k >= x) <= k P(X >= x/r) + (e E[X^t; 0<=X<=x/r] k / (r^{1-t} x^t))^r
inline BoundReport bound_na3b(const SummandLaw& law, std::int64_t k, double x,
                              double r, double t) {
  if (!(t > 0 && t <= 1)) throw ConfigError("bound_na3b: t must lie in (0,1]");
  if (!(r > 0)) throw ConfigError("bound_na3b: r must be positive");
  if (!(x > 0) || k < 1) throw ConfigError("bound_na3b: need x > 0, k >= 1");
  BoundReport rep;
  rep.kind = BoundReport::Kind::Na3b;
  rep.k = k;
  rep.x = x;
  rep.r = r;
  rep.t = t;
  rep.valid = true;
  const double kd = static_cast<double>(k);
  const double jump = kd * law->sf(x / r);
  const double a = law->At_plus(t, x / r);
  const double trunc = std::pow(
      M_E * a * kd / (std::pow(r, 1.0 - t) * std::pow(x, t)), r);
  rep.value = jump + trunc;
  return detail::clamp_report(rep);
}

// P(S_k >= x) <= k P(X > y) + (e^2 k A_t^+ / (x y^{t-1}))^{x/(2y)}
// requires 1 <= t <= 2, A_t^+ finite, y^t >= 4 k A_t^+ and x > y.
inline BoundReport bound_na16(const SummandLaw& law, std::int64_t k, double x,
                              double y, double t) {
  if (!(t >= 1 && t <= 2)) throw ConfigError("bound_na16: t must lie in [1,2]");
  if (!(x > 0 && y > 0) || k < 1)
    throw ConfigError("bound_na16: need x, y > 0, k >= 1");
  BoundReport rep;
  rep.kind = BoundReport::Kind::Na16;
  rep.k = k;
  rep.x = x;
  rep.y = y;
  rep.t = t;
  if (!law->has_plus_moment(t - 1.0)) return rep;  // A_t^+ infinite
  const double kd = static_cast<double>(k);
  const double at = detail::at_plus_total(law, t);
  if (!(std::pow(y, t) >= 4.0 * kd * at) || !(x > y)) return rep;
  rep.valid = true;
  rep.value = kd * law->sf(y) +
              std::pow(M_E * M_E * kd * at / (x * std::pow(y, t - 1.0)),
                       x / (2.0 * y));
  return detail::clamp_report(rep);
}

// Empirical tail of S_k, replicate-parallel and deterministic in the seed.
struct EmpiricalTail {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  std::int64_t replicates = 0;
};

inline EmpiricalTail empirical_sum_tail(const SummandLaw& law, std::int64_t k,
                                        double x, std::int64_t replicates,
                                        std::uint64_t seed, int workers = 1) {
  const std::int64_t hits = count_successes(
      replicates, seed, 0xb0d1e5u, workers,
      [&](std::int64_t, RngStream& rng) {
        return law.sample_S_k(k, rng) >= x;
      });
  EmpiricalTail out;
  out.replicates = replicates;
  out.p_hat = static_cast<double>(hits) / static_cast<double>(replicates);
  out.stderr_ = std::sqrt(out.p_hat * (1.0 - out.p_hat) /
                          static_cast<double>(replicates));
  return out;
}

// Prokhorov-style bound: shape(k,x) = k (P(|X|>=x) + mu2(x)/x^2 + |mu1(x)|/x).
// The reference constant is unspecified; a fitted C-hat (max over an MC grid,
// with slack) is computed once per law and cached with its fitting grid.
struct ProkhorovFit {
  double c_hat = 1.0;
  struct Cell {
    std::int64_t k;
    double x, p_hat, stderr_, shape;
  };
  std::vector<Cell> grid;
};

inline double prokhorov_shape(const SummandLaw& law, std::int64_t k, double x) {
  const double kd = static_cast<double>(k);
  const double two_sided = law->sf(x) + law->cdf(-x);
  return kd * (two_sided + law->mu2(x) / (x * x) +
               std::fabs(law->mu1(x)) / x);
}

inline const ProkhorovFit& prokhorov_fit(const SummandLaw& law,
                                         std::uint64_t seed = 0x9c0fu) {
  static std::mutex mu;
  static std::map<std::string, ProkhorovFit> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, fresh] = cache.try_emplace(law->describe());
  if (!fresh) return it->second;
  ProkhorovFit fit;
  fit.c_hat = 1.0;
  for (std::int64_t k : {10, 100, 1000}) {
    for (double ratio : {1.0, 2.0, 5.0}) {
      const double x = ratio * static_cast<double>(k);
      const auto emp = empirical_sum_tail(law, k, x, 100000, seed);
      const double shape = prokhorov_shape(law, k, x);
      fit.grid.push_back({k, x, emp.p_hat, emp.stderr_, shape});
      if (shape > 0.0)
        fit.c_hat = std::max(fit.c_hat,
                             (emp.p_hat + 4.0 * emp.stderr_) / shape);
    }
  }
  it->second = std::move(fit);
  return it->second;
}

inline BoundReport bound_prokhorov(const SummandLaw& law, std::int64_t k,
                                   double x) {
  if (!(x > 0) || k < 1) throw ConfigError("bound_prokhorov: need x>0, k>=1");
  BoundReport rep;
  rep.kind = BoundReport::Kind::Prokhorov;
  rep.k = k;
  rep.x = x;
  rep.valid = true;
  rep.c_hat = prokhorov_fit(law).c_hat;
  rep.value = rep.c_hat * prokhorov_shape(law, k, x);
  return detail::clamp_report(rep);
}

// P(S_k >= x) <= k P(X > x) + e k mu2(x) / x^2, for laws with mu1(x) = 0.
inline BoundReport bound_na2_special(const SummandLaw& law, std::int64_t k,
                                     double x) {
  if (!(x > 0) || k < 1) throw ConfigError("bound_na2_special: need x>0, k>=1");
  BoundReport rep;
  rep.kind = BoundReport::Kind::Na2special;
  rep.k = k;
  rep.x = x;
  if (!law->symmetric()) return rep;  // needs mu1 == 0 identically
  rep.valid = true;
  const double kd = static_cast<double>(k);
  rep.value = kd * law->sf(x) + M_E * kd * law->mu2(x) / (x * x);
  return detail::clamp_report(rep);
}

}  // namespace gwdev

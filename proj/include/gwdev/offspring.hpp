#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/rng.hpp"
#include "gwdev/series.hpp"

namespace gwdev {

struct PmfResult {
  std::vector<double> p;  // p[k] = P(Z_n = k), k = 0..K (p[0] == 0)
  double tail_mass = 0.0;
};

struct ExtrapolatedValue {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Reproduction law {p_k} with p_0 = 0, 0 < p_1 < 1 (Schroeder case) and
// m > 1 (supercritical).  Immutable after construction.
class OffspringLaw {
 public:
  enum class Kind { Binary, GeomShift, TwoPoint, ZetaShift };

  // p_1 = p, p_2 = 1-p
  static OffspringLaw binary(double p) {
    if (!(p > 0 && p < 1)) throw ConfigError("Binary: p must lie in (0,1)");
    OffspringLaw law;
    law.kind_ = Kind::Binary;
    law.pmf_ = {0.0, p, 1.0 - p};
    law.finish();
    return law;
  }

  // p_k = (1-a) a^{k-1}, k >= 1
  static OffspringLaw geom_shift(double a) {
    if (!(a > 0 && a < 1)) throw ConfigError("GeomShift: a must lie in (0,1)");
    OffspringLaw law;
    law.kind_ = Kind::GeomShift;
    law.a_ = a;
    law.m_ = 1.0 / (1.0 - a);
    law.p1_ = 1.0 - a;
    law.gamma_ = -std::log(law.p1_) / std::log(law.m_);
    law.d_ = 1;
    return law;
  }

  // support {1, j} with P(=1) = p; i = 1 is forced by the Schroeder condition
  static OffspringLaw two_point(int i, int j, double p) {
    if (i != 1)
      throw ConfigError("TwoPoint: support must contain 1 (p_1 > 0 required)");
    if (j <= i) throw ConfigError("TwoPoint: j must exceed i");
    if (!(p > 0 && p < 1)) throw ConfigError("TwoPoint: p must lie in (0,1)");
    OffspringLaw law;
    law.kind_ = Kind::TwoPoint;
    law.pmf_.assign(static_cast<std::size_t>(j) + 1, 0.0);
    law.pmf_[1] = p;
    law.pmf_[static_cast<std::size_t>(j)] = 1.0 - p;
    law.finish();
    return law;
  }

  // p_k proportional to k^{-(beta_z+1)}, k = 1..k_trunc
  static OffspringLaw zeta_shift(double beta_z, int k_trunc) {
    if (k_trunc < 2) throw ConfigError("ZetaShift: k_trunc must be >= 2");
    if (!(beta_z > 0)) throw ConfigError("ZetaShift: beta_z must be positive");
    OffspringLaw law;
    law.kind_ = Kind::ZetaShift;
    law.beta_z_ = beta_z;
    law.pmf_.assign(static_cast<std::size_t>(k_trunc) + 1, 0.0);
    double z = 0.0;
    for (int k = 1; k <= k_trunc; ++k)
      z += std::pow(static_cast<double>(k), -(beta_z + 1.0));
    for (int k = 1; k <= k_trunc; ++k)
      law.pmf_[static_cast<std::size_t>(k)] =
          std::pow(static_cast<double>(k), -(beta_z + 1.0)) / z;
    law.finish();
    return law;
  }

  Kind kind() const { return kind_; }
  double m() const { return m_; }
  double gamma() const { return gamma_; }
  int d() const { return d_; }
  double p1() const { return p1_; }
  double a() const { return a_; }
  double beta_z() const { return beta_z_; }

  double pmf(std::int64_t k) const {
    if (k < 1) return 0.0;
    if (kind_ == Kind::GeomShift)
      return (1.0 - a_) * std::pow(a_, static_cast<double>(k - 1));
    return k < static_cast<std::int64_t>(pmf_.size())
               ? pmf_[static_cast<std::size_t>(k)]
               : 0.0;
  }

  std::int64_t max_support() const {
    return kind_ == Kind::GeomShift
               ? std::numeric_limits<std::int64_t>::max()
               : static_cast<std::int64_t>(pmf_.size()) - 1;
  }

  // probability generating function f(s) = E[s^{Z_1}]
  double f(double s) const {
    if (kind_ == Kind::GeomShift) return (1.0 - a_) * s / (1.0 - a_ * s);
    double acc = 0.0;
    for (std::size_t k = pmf_.size(); k-- > 1;) acc = acc * s + pmf_[k];
    return acc * s;
  }

  long double f_ld(long double s) const {
    if (kind_ == Kind::GeomShift) {
      const auto a = static_cast<long double>(a_);
      return (1.0L - a) * s / (1.0L - a * s);
    }
    long double acc = 0.0L;
    for (std::size_t k = pmf_.size(); k-- > 1;)
      acc = acc * s + static_cast<long double>(pmf_[k]);
    return acc * s;
  }

  // One offspring draw: alias method for finite support, inverse CDF for the
  // geometric law.
  std::int64_t sample_one(RngStream& rng) const {
    if (kind_ == Kind::GeomShift) {
      return 1 + static_cast<std::int64_t>(std::log(rng.uniform()) /
                                           std::log(a_));
    }
    const double u = rng.uniform() * static_cast<double>(alias_prob_.size());
    auto idx = static_cast<std::size_t>(u);
    if (idx >= alias_prob_.size()) idx = alias_prob_.size() - 1;
    const double frac = u - static_cast<double>(idx);
    return frac < alias_prob_[idx] ? alias_value_[idx] : alias_alias_[idx];
  }

  // Sum of `count` i.i.d. offspring draws in O(support) time, exact in
  // distribution (binomial / negative-binomial / multinomial aggregation).
  std::int64_t sample_sum(std::int64_t count, RngStream& rng) const {
    if (count <= 0) return 0;
    switch (kind_) {
      case Kind::Binary: {
        std::binomial_distribution<std::int64_t> bin(count, pmf_[2]);
        return count + bin(rng);
      }
      case Kind::TwoPoint: {
        const auto j = static_cast<std::int64_t>(pmf_.size()) - 1;
        std::binomial_distribution<std::int64_t> bin(count, pmf_[static_cast<
            std::size_t>(j)]);
        return count + (j - 1) * bin(rng);
      }
      case Kind::GeomShift: {
        // sum of count shifted geometrics = count + NB(count, a), sampled via
        // the gamma-Poisson mixture
        std::gamma_distribution<double> g(static_cast<double>(count),
                                          a_ / (1.0 - a_));
        std::poisson_distribution<std::int64_t> pois(g(rng));
        return count + pois(rng);
      }
      case Kind::ZetaShift: {
        std::int64_t total = 0, remaining = count;
        double mass_left = 1.0;
        for (std::size_t k = 1; k < pmf_.size() && remaining > 0; ++k) {
          const double pk = pmf_[k];
          if (pk <= 0.0) continue;
          std::int64_t nk;
          if (k + 1 == pmf_.size() || pk >= mass_left) {
            nk = remaining;
          } else {
            std::binomial_distribution<std::int64_t> bin(remaining,
                                                         pk / mass_left);
            nk = bin(rng);
          }
          total += nk * static_cast<std::int64_t>(k);
          remaining -= nk;
          mass_left -= pk;
        }
        return total;
      }
    }
    return 0;
  }

  // Exact coefficients of f_n(s) up to s^K.  Low-order coefficients are exact
  // regardless of K because f has valuation 1 and nonnegative coefficients.
  PmfResult pmf_Zn(int n, std::size_t K) const {
    if (n < 0) throw DomainError("pmf_Zn: n must be >= 0");
    if (K < 1 || K > 100000) throw DomainError("pmf_Zn: K must lie in [1,1e5]");
    Series g(K + 1, 0.0L);
    g[1] = 1.0L;  // Z_0 = 1
    for (int step = 0; step < n; ++step) {
      if (kind_ == Kind::GeomShift) {
        g = compose_geometric(static_cast<long double>(a_), g, K);
      } else {
        Series f_coeff(pmf_.size());
        for (std::size_t k = 0; k < pmf_.size(); ++k)
          f_coeff[k] = static_cast<long double>(pmf_[k]);
        g = compose_poly(f_coeff, g, K);
      }
    }
    PmfResult out;
    out.p.resize(K + 1, 0.0);
    long double head = 0.0L;
    for (std::size_t k = 0; k <= K; ++k) {
      out.p[k] = static_cast<double>(g[k]);
      head += g[k];
    }
    out.tail_mass = std::max(0.0, static_cast<double>(1.0L - head));
    return out;
  }

  // Closed-form pmf for the geometric offspring: Z_n is shifted-geometric
  // with parameter a_n = 1 - (1-a)^n.
  double pmf_Zn_geom_closed(int n, std::int64_t k) const {
    if (kind_ != Kind::GeomShift)
      throw DomainError("pmf_Zn_geom_closed: geometric offspring only");
    const double an = 1.0 - std::pow(1.0 - a_, n);
    if (n == 0) return k == 1 ? 1.0 : 0.0;
    if (k < 1) return 0.0;
    return (1.0 - an) * std::pow(an, static_cast<double>(k - 1));
  }

  struct SimResult {
    std::int64_t z = 0;
    bool budget_exceeded = false;
    std::int64_t draws_used = 0;
  };

  // Exact individual-level simulation of Z_n, one offspring draw per
  // individual; `budget` caps the total number of draws.
  SimResult simulate_Zn(int n, RngStream& rng,
                        std::int64_t budget = 100000000) const {
    SimResult r;
    r.z = 1;
    for (int gen = 0; gen < n; ++gen) {
      if (r.draws_used + r.z > budget) {
        r.budget_exceeded = true;
        return r;
      }
      std::int64_t next = 0;
      for (std::int64_t i = 0; i < r.z; ++i) next += sample_one(rng);
      r.draws_used += r.z;
      r.z = next;
    }
    return r;
  }

  // Aggregated simulation: one generation per aggregated draw; identical in
  // distribution to simulate_Zn and O(n * support) per replicate.  Used where
  // Z_n itself is large (martingale-limit sampling).
  std::int64_t simulate_Zn_aggregated(int n, RngStream& rng) const {
    std::int64_t z = 1;
    for (int gen = 0; gen < n; ++gen) z = sample_sum(z, rng);
    return z;
  }

  // q_k = lim_n P(Z_n = k) m^{gn}, via Aitken extrapolation from the last
  // three horizon values (geometric convergence in the Schroeder case).
  ExtrapolatedValue q_k(std::int64_t k, int n_max = 30) const {
    if (k < 1) throw DomainError("q_k: k must be >= 1");
    if (n_max < 3) throw DomainError("q_k: n_max must be >= 3");
    const auto K = static_cast<std::size_t>(std::max<std::int64_t>(k, 1));
    double v[3];
    for (int i = 0; i < 3; ++i) {
      const int n = n_max - 2 + i;
      double pk;
      if (kind_ == Kind::GeomShift) {
        pk = pmf_Zn_geom_closed(n, k);
      } else {
        pk = pmf_Zn(n, K).p[static_cast<std::size_t>(k)];
      }
      v[i] = pk * std::pow(p1_, -n);
    }
    return aitken(v, "q_k");
  }

  // Vectorized q_k for k = 1..K from a single pmf sweep.
  std::vector<ExtrapolatedValue> q_upto(std::size_t K, int n_max = 30) const {
    std::vector<ExtrapolatedValue> out(K + 1);
    std::vector<std::vector<double>> pm(3);
    for (int i = 0; i < 3; ++i) {
      const int n = n_max - 2 + i;
      if (kind_ == Kind::GeomShift) {
        pm[i].resize(K + 1);
        for (std::size_t k = 1; k <= K; ++k)
          pm[i][k] = pmf_Zn_geom_closed(n, static_cast<std::int64_t>(k));
      } else {
        pm[i] = pmf_Zn(n, K).p;
      }
    }
    for (std::size_t k = 1; k <= K; ++k) {
      double v[3];
      for (int i = 0; i < 3; ++i)
        v[i] = pm[i][k] * std::pow(p1_, -(n_max - 2 + i));
      out[k] = aitken(v, "q_upto", /*throw_on_stall=*/false);
    }
    return out;
  }

  // Q(s) = lim f_n(s) m^{gn}, 0 <= s < 1.
  ExtrapolatedValue Q_of(double s, int n_max = 40) const {
    if (!(s >= 0 && s < 1)) throw DomainError("Q_of: s must lie in [0,1)");
    if (n_max < 3) throw DomainError("Q_of: n_max must be >= 3");
    double v[3];
    for (int i = 0; i < 3; ++i) {
      const int n = n_max - 2 + i;
      long double fs = static_cast<long double>(s);
      for (int j = 0; j < n; ++j) fs = f_ld(fs);
      v[i] = static_cast<double>(fs * std::pow(static_cast<long double>(p1_),
                                               static_cast<long double>(-n)));
    }
    return aitken(v, "Q_of");
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Binary:
        return "Binary(p=" + std::to_string(pmf_[1]) + ")";
      case Kind::GeomShift:
        return "GeomShift(a=" + std::to_string(a_) + ")";
      case Kind::TwoPoint:
        return "TwoPoint(1," + std::to_string(pmf_.size() - 1) +
               ",p=" + std::to_string(pmf_[1]) + ")";
      case Kind::ZetaShift:
        return "ZetaShift(beta_z=" + std::to_string(beta_z_) +
               ",K=" + std::to_string(pmf_.size() - 1) + ")";
    }
    return "?";
  }

 private:
  OffspringLaw() = default;

  static ExtrapolatedValue aitken(const double v[3], const char* who,
                                  bool throw_on_stall = true) {
    const double d1 = v[1] - v[0], d2 = v[2] - v[1];
    ExtrapolatedValue out;
    if (d1 == 0.0 && d2 == 0.0) {
      out.value = v[2];
      out.error_estimate = 0.0;
      return out;
    }
    if (std::fabs(d2) > std::fabs(d1) && throw_on_stall)
      throw NonConvergence(std::string(who) +
                           ": increments not decreasing; raise n_max");
    const double dd = d2 - d1;
    out.value = (dd == 0.0) ? v[2] : v[2] - d2 * d2 / dd;
    out.error_estimate = std::fabs(d2);
    return out;
  }

  void finish() {
    if (pmf_[0] != 0.0) throw ConfigError("OffspringLaw: p_0 must be 0");
    p1_ = pmf_[1];
    if (!(p1_ > 0 && p1_ < 1))
      throw ConfigError("OffspringLaw: requires p_0=0, 0<p_1<1");
    m_ = 0.0;
    for (std::size_t k = 1; k < pmf_.size(); ++k)
      m_ += static_cast<double>(k) * pmf_[k];
    if (!(m_ > 1.0)) throw ConfigError("OffspringLaw: requires m > 1");
    gamma_ = -std::log(p1_) / std::log(m_);
    // period: gcd of support differences
    std::vector<std::int64_t> support;
    for (std::size_t k = 1; k < pmf_.size(); ++k)
      if (pmf_[k] > 0) support.push_back(static_cast<std::int64_t>(k));
    std::int64_t g = 0;
    for (std::size_t i = 1; i < support.size(); ++i)
      g = std::gcd(g, support[i] - support[0]);
    d_ = static_cast<int>(std::max<std::int64_t>(1, g));
    build_alias();
  }

  void build_alias() {
    // Walker alias table over the (finite) support
    std::vector<std::int64_t> values;
    std::vector<double> probs;
    for (std::size_t k = 1; k < pmf_.size(); ++k) {
      if (pmf_[k] > 0) {
        values.push_back(static_cast<std::int64_t>(k));
        probs.push_back(pmf_[k]);
      }
    }
    const std::size_t n = values.size();
    alias_value_ = values;
    alias_alias_ = values;
    alias_prob_.assign(n, 1.0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = probs[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      large.pop_back();
      alias_prob_[s] = scaled[s];
      alias_alias_[s] = alias_value_[l];
      scaled[l] -= 1.0 - scaled[s];
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
  }

  Kind kind_ = Kind::Binary;
  std::vector<double> pmf_;  // finite kinds; empty for GeomShift
  double a_ = 0.0;           // GeomShift parameter
  double beta_z_ = 0.0;
  double m_ = 0.0, gamma_ = 0.0, p1_ = 0.0;
  int d_ = 1;
  std::vector<std::int64_t> alias_value_, alias_alias_;
  std::vector<double> alias_prob_;
};

}  // namespace gwdev

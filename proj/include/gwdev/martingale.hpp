#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/kde.hpp"
#include "gwdev/norming.hpp"
#include "gwdev/numeric.hpp"
#include "gwdev/offspring.hpp"
#include "gwdev/rng.hpp"
#include "gwdev/slowly_varying.hpp"

namespace gwdev {

struct WindowEstimate {
  double inf_est = 0.0, sup_est = 0.0;
  double inf_lo = 0.0, inf_hi = 0.0;  // bootstrap CI for the window infimum
  double sup_lo = 0.0, sup_hi = 0.0;
  // Estimate of a liminf/limsup: a heuristic proxy on a finite window, not a
  // consistent estimator of the u->0 limit objects.
  bool heuristic = true;
};

// Numerical model of the martingale limit W = lim Z_n / m^n: Laplace
// transform phi, W_N samples (default N = 18), density estimate omega, moment
// functionals and small-u window bounds.
class MartingaleLimitModel {
 public:
  struct Options {
    int N = 18;                    // approximation horizon W ~ W_N
    std::size_t n_samples = 200000;
    std::uint64_t master_seed = 20240901;
    std::size_t phi_grid_points = 481;  // log grid on [1e-6, 1e6]
  };

  explicit MartingaleLimitModel(const OffspringLaw& off)
      : MartingaleLimitModel(off, Options{}) {}

  MartingaleLimitModel(const OffspringLaw& off, Options opt)
      : off_(off), opt_(opt) {
    if (opt_.n_samples < 1000)
      throw InsufficientSamples("MartingaleLimitModel: n_samples too small");
    draw_samples();
    build_phi_grid();
  }

  const OffspringLaw& offspring() const { return off_; }
  const std::vector<double>& W_samples() const { return w_samples_; }
  int horizon() const { return opt_.N; }

  // phi(lambda) = E[e^{-lambda W}] = lim_n f_n(exp(-lambda/m^n)).  The raw
  // iterates converge geometrically but the forward map amplifies rounding
  // like m^n, so the sequence is Aitken-accelerated and the loop stops at the
  // rounding floor (raw increments turning up again after falling below 1e-5)
  // with the last extrapolated value.
  double laplace(double lambda) const {
    if (lambda < 0) throw DomainError("laplace: lambda must be >= 0");
    if (lambda == 0) return 1.0;
    const long double m = static_cast<long double>(off_.m());
    // start beyond the point where exp(-lambda/m^n) is in (0,1) comfortably
    int n = std::max(4, static_cast<int>(std::ceil(
                            std::log(lambda) / std::log(off_.m()))) + 4);
    const int n_cap = n + 200;
    double v[3] = {0.0, 0.0, 0.0};
    int have = 0;
    double prev_delta = std::numeric_limits<double>::infinity();
    double prev_ait = std::numeric_limits<double>::quiet_NaN();
    for (; n <= n_cap; ++n) {
      long double s = std::exp(-static_cast<long double>(lambda) /
                               std::pow(m, static_cast<long double>(n)));
      for (int j = 0; j < n; ++j) s = off_.f_ld(s);
      v[0] = v[1];
      v[1] = v[2];
      v[2] = static_cast<double>(s);
      if (++have < 3) continue;
      const double delta = std::fabs(v[2] - v[1]);
      if (delta < 1e-12) return v[2];
      const double d1 = v[1] - v[0], dd = (v[2] - v[1]) - d1;
      const double ait =
          dd == 0.0 ? v[2] : v[2] - (v[2] - v[1]) * (v[2] - v[1]) / dd;
      if (std::isfinite(prev_ait) && std::fabs(ait - prev_ait) < 1e-10)
        return ait;
      if (delta > prev_delta && prev_delta < 1e-3)
        return std::isfinite(prev_ait) ? prev_ait : v[1];
      prev_delta = delta;
      prev_ait = ait;
    }
    throw NonConvergence("laplace: iteration did not settle in 200 steps");
  }

  const std::vector<std::pair<double, double>>& phi_grid() const {
    return phi_grid_;
  }

  // E[W^e] with stderr, by sample mean; exponent e in [0,1].
  MeanStderr moment_sample(double e) const {
    if (e < 0.0 || e > 1.0)
      throw DomainError("moment_sample: exponent must lie in [0,1]");
    std::vector<double> xs;
    xs.reserve(w_samples_.size());
    for (double w : w_samples_) xs.push_back(std::pow(w, e));
    return mean_stderr(xs);
  }

  // E[W^e] for e in (-gamma, 0) via the Mellin identity
  //   E[W^{-s}] = (1/Gamma(s)) int_0^inf lambda^{s-1} phi(lambda) dlambda.
  double moment_mellin(double e) const {
    const double g = off_.gamma();
    if (!(e > -g && e < 0.0))
      throw DomainError("moment_mellin: exponent must lie in (-gamma, 0)");
    const double s = -e;
    // substitute lambda = exp(t)
    const double t_lo = -45.0 / s;
    const double t_hi = 45.0 / (g - s) + 10.0;
    auto integrand = [&](double t) {
      return std::exp(s * t) * laplace(std::exp(t));
    };
    // trapezoid with interval halving; each level reuses the previous one and
    // only evaluates the new midpoints
    double step = 0.5;
    auto n_steps = static_cast<std::int64_t>((t_hi - t_lo) / step);
    double sum = 0.5 * (integrand(t_lo) + integrand(t_hi));
    for (std::int64_t i = 1; i < n_steps; ++i)
      sum += integrand(t_lo + step * static_cast<double>(i));
    double prev = sum * step;
    for (int refine = 1; refine < 12; ++refine) {
      for (std::int64_t i = 0; i < n_steps; ++i)
        sum += integrand(t_lo + step * (static_cast<double>(i) + 0.5));
      step *= 0.5;
      n_steps *= 2;
      const double acc = sum * step;
      if (refine > 2 && std::fabs(acc - prev) < 1e-7 * std::fabs(acc))
        return acc / std::tgamma(s);
      prev = acc;
    }
    throw QuadratureError("moment_mellin: refinement stalled");
  }

  // Exponent dispatch; stderr is 0 on the Mellin path.  When the Laplace
  // iteration cannot reach Mellin accuracy (heavy offspring tails), fall back
  // to the sample mean, which has finite variance for 2|e| < gamma.
  MeanStderr moment(double e) const {
    if (e >= 0.0) return moment_sample(e);
    try {
      return {moment_mellin(e), 0.0};
    } catch (const NonConvergence&) {
      if (!(2.0 * -e < off_.gamma())) throw;
    } catch (const QuadratureError&) {
      if (!(2.0 * -e < off_.gamma())) throw;
    }
    std::vector<double> xs;
    xs.reserve(w_samples_.size());
    for (double w : w_samples_) xs.push_back(std::pow(w, e));
    return mean_stderr(xs);
  }

  // I_t = int_0^inf u^{1-t} omega(u) du = E[W^{1-t}], for 0 <= t < gamma+1.
  MeanStderr I(double t) const {
    if (!(t < off_.gamma() + 1.0))
      throw DomainError("I: requires t < gamma + 1");
    return moment(1.0 - t);
  }

  // Window extrema of u^{1-gamma} omega(u) on [u_lo, u_hi] from a
  // boundary-corrected KDE, with bootstrap confidence intervals.
  WindowEstimate omega_window(double u_lo, double u_hi,
                              int bootstrap = 40) const {
    if (!(0 < u_lo && u_lo < u_hi && u_hi <= 0.5))
      throw DomainError("omega_window: need 0 < u_lo < u_hi <= 0.5");
    if (w_samples_.size() < 100000)
      throw InsufficientSamples("omega_window: need at least 1e5 W samples");
    const BoundaryKde kde(w_samples_);
    const double g = off_.gamma();
    auto extrema = [&](const BoundaryKde& k) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (int i = 0; i <= 64; ++i) {
        const double u =
            u_lo * std::pow(u_hi / u_lo, static_cast<double>(i) / 64.0);
        const double v = std::pow(u, 1.0 - g) * k(u);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return std::pair<double, double>(lo, hi);
    };
    WindowEstimate out;
    auto [lo, hi] = extrema(kde);
    out.inf_est = lo;
    out.sup_est = hi;
    std::vector<double> blo, bhi;
    RngStream rng(opt_.master_seed, 0xb007u);
    for (int b = 0; b < bootstrap; ++b) {
      auto rep = kde.bootstrap_replicate(rng);
      auto [l, h] = extrema(rep);
      blo.push_back(l);
      bhi.push_back(h);
    }
    std::sort(blo.begin(), blo.end());
    std::sort(bhi.begin(), bhi.end());
    const auto q = [&](std::vector<double>& v, double p) {
      return v[static_cast<std::size_t>(p * (static_cast<double>(v.size()) - 1))];
    };
    out.inf_lo = q(blo, 0.025);
    out.inf_hi = q(blo, 0.975);
    out.sup_lo = q(bhi, 0.025);
    out.sup_hi = q(bhi, 0.975);
    return out;
  }

  // Empirical constant of the local bound P(Z_n=k) <= C (1/k ^ k^{g-1}/m^{gn}).
  double local_bound_constant(int n_lo, int n_hi, std::size_t K) const {
    double cmax = 0.0;
    const double g = off_.gamma();
    for (int n = n_lo; n <= n_hi; ++n) {
      const auto pr = off_.pmf_Zn(n, K);
      const double mgn = std::pow(off_.m(), g * n);
      for (std::size_t k = 1; k <= K; ++k) {
        if (pr.p[k] <= 0) continue;
        const double env = std::min(1.0 / static_cast<double>(k),
                                    std::pow(static_cast<double>(k), g - 1.0) /
                                        mgn);
        cmax = std::max(cmax, pr.p[k] / env);
      }
    }
    return cmax;
  }

  // Exact E[Z_n^t L(eps_n Z_n)] from the pmf; geometric offspring uses the
  // closed-form pmf so the series truncation never enters.
  double harmonic_moment(double t, const SlowlyVarying& L, double eps_n,
                         int n) const {
    if (off_.kind() == OffspringLaw::Kind::GeomShift) {
      const double an = 1.0 - std::pow(1.0 - off_.a(), n);
      CompensatedSum acc;
      double weight = 1.0 - an;  // P(Z_n = 1)
      for (std::int64_t k = 1; k < (1 << 30); ++k) {
        const double kd = static_cast<double>(k);
        const double term = std::pow(kd, t) * L(eps_n * kd) * weight;
        acc.add(term);
        if (kd > 1.0 / (1.0 - an) &&
            term * kd < 1e-17 * std::max(1e-300, acc.value()))
          break;
        weight *= an;
      }
      return acc.value();
    }
    const std::size_t K = 100000;
    const auto pr = off_.pmf_Zn(n, K);
    CompensatedSum acc;
    for (std::size_t k = 1; k <= K; ++k) {
      if (pr.p[k] == 0.0) continue;
      const double kd = static_cast<double>(k);
      acc.add(std::pow(kd, t) * L(eps_n * kd) * pr.p[k]);
    }
    const double tail_bound =
        pr.tail_mass * std::pow(static_cast<double>(K), std::max(0.0, t)) *
        L(eps_n * static_cast<double>(K));
    if (tail_bound > 0.01 * acc.value())
      throw TruncationError("harmonic_moment: pmf tail mass too heavy at K=1e5");
    return acc.value();
  }

  // Normalized ratio against the limit object:
  //   t in (-gamma, 1): E[Z_n^t L(eps_n Z_n)] / (m^{nt} L(eps_n m^n) E[W^t])
  //   t == -gamma:      E[...] / sum_{k<=m^n} L(eps_n k)/(k m^{gn})
  double harmonic_moment_ratio(double t, const SlowlyVarying& L, double eps_n,
                               int n) const {
    const double g = off_.gamma();
    const double num = harmonic_moment(t, L, eps_n, n);
    const double mn = std::pow(off_.m(), n);
    if (t == -g) {
      const double denom = harmonic_L_sum(L, eps_n, mn) / std::pow(off_.m(), g * n);
      return num / denom;
    }
    if (!(t > -g && t < 1.0 + 1e-12))
      throw DomainError("harmonic_moment_ratio: t outside (-gamma, 1]");
    const double ew = moment(t).mean;
    return num / (std::pow(mn, t) * L(eps_n * mn) * ew);
  }

  // Deterministic W_N sample regeneration (used for persistence tests).
  static std::vector<double> draw_w_samples(const OffspringLaw& off, int N,
                                            std::size_t n_samples,
                                            std::uint64_t master_seed) {
    std::vector<double> out(n_samples);
    const double mn = std::pow(off.m(), N);
    for (std::size_t i = 0; i < n_samples; ++i) {
      RngStream rng = substream(master_seed, i, 0x57a7e5u);
      out[i] = static_cast<double>(off.simulate_Zn_aggregated(N, rng)) / mn;
    }
    return out;
  }

 private:
  void draw_samples() {
    w_samples_ = draw_w_samples(off_, opt_.N, opt_.n_samples, opt_.master_seed);
  }

  void build_phi_grid() {
    phi_grid_.reserve(opt_.phi_grid_points);
    const double lo = 1e-6, hi = 1e6;
    for (std::size_t i = 0; i < opt_.phi_grid_points; ++i) {
      const double u =
          static_cast<double>(i) / static_cast<double>(opt_.phi_grid_points - 1);
      const double lam = lo * std::pow(hi / lo, u);
      phi_grid_.emplace_back(lam, laplace(lam));
    }
  }

  OffspringLaw off_;
  Options opt_;
  std::vector<double> w_samples_;
  std::vector<std::pair<double, double>> phi_grid_;
};

}  // namespace gwdev

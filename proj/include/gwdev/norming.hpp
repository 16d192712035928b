#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "gwdev/errors.hpp"
#include "gwdev/numeric.hpp"
#include "gwdev/slowly_varying.hpp"

namespace gwdev {

// Norming function b(x) = x^{1/alpha} s(x), the ratio J(x) = x / b(x) and its
// asymptotic inverse l(x) = inf{ y >= 0 : J(y) > x }.
class NormingSequence {
 public:
  NormingSequence(double alpha, SlowlyVarying s = SlowlyVarying::constant())
      : alpha_(alpha), s_(s) {
    if (!(alpha > 0 && alpha <= 2))
      throw ConfigError("NormingSequence: alpha must lie in (0,2]");
  }

  double alpha() const { return alpha_; }
  const SlowlyVarying& s() const { return s_; }

  double b(double x) const { return std::pow(x, 1.0 / alpha_) * s_(x); }
  double J(double x) const { return x / b(x); }

  // Monotone bisection on J over [1e-9, 1e30], relative tolerance 1e-10.
  // Only defined for alpha > 1 (J is asymptotically increasing there).
  double l(double x) const {
    if (alpha_ <= 1.0)
      throw DomainError("NormingSequence::l: requires alpha > 1");
    double lo = 1e-9, hi = 1.0;
    if (J(lo) > x) return lo;
    while (J(hi) <= x) {
      lo = hi;
      hi *= 8.0;
      if (hi > 1e30)
        throw BracketError("NormingSequence::l: J never exceeds x on [1e-9,1e30]");
    }
    return bisect_first([&](double y) { return J(y) > x; }, lo, hi, 1e-10);
  }

 private:
  double alpha_;
  SlowlyVarying s_;
};

// Threshold sequences eps_n.  The kind pins the limit of eps_n m^n / b(m^n) in
// closed form for built-in kinds.
struct ThresholdSequence {
  enum class Kind { Constant, GeometricDecay, CLTScale, Diverging };
  enum class DivergingBase { PowerOfM, PowerOfN };

  Kind kind = Kind::Constant;
  double c = 1.0;     // Constant: eps; GeometricDecay/Diverging: prefactor
  double rho = 0.0;   // decay / growth rate
  double x = 0.0;     // CLTScale target
  DivergingBase base = DivergingBase::PowerOfM;

  static ThresholdSequence constant(double eps) {
    ThresholdSequence t;
    t.kind = Kind::Constant;
    t.c = eps;
    return t;
  }
  static ThresholdSequence geometric_decay(double c, double rho) {
    if (rho <= 0) throw ConfigError("GeometricDecay: rho must be positive");
    ThresholdSequence t;
    t.kind = Kind::GeometricDecay;
    t.c = c;
    t.rho = rho;
    return t;
  }
  static ThresholdSequence clt_scale(double x) {
    ThresholdSequence t;
    t.kind = Kind::CLTScale;
    t.x = x;
    return t;
  }
  static ThresholdSequence diverging(double c, double rho,
                                     DivergingBase base = DivergingBase::PowerOfM) {
    if (rho <= 0) throw ConfigError("Diverging: rho must be positive");
    ThresholdSequence t;
    t.kind = Kind::Diverging;
    t.c = c;
    t.rho = rho;
    t.base = base;
    return t;
  }

  double eval(int n, double m, const NormingSequence& nseq) const {
    const double mn = std::pow(m, n);
    switch (kind) {
      case Kind::Constant:
        return c;
      case Kind::GeometricDecay:
        return c * std::pow(m, -rho * n);
      case Kind::CLTScale:
        return x * nseq.b(mn) / mn;
      case Kind::Diverging:
        return base == DivergingBase::PowerOfM
                   ? c * std::pow(m, rho * n)
                   : c * std::pow(static_cast<double>(n), rho);
    }
    return c;
  }

  // Coefficient of n*ln(m) in log eps_n (ignoring slowly varying factors);
  // NaN for CLTScale where the limit is pinned directly.
  double log_m_exponent() const {
    switch (kind) {
      case Kind::Constant:
        return 0.0;
      case Kind::GeometricDecay:
        return -rho;
      case Kind::Diverging:
        return base == DivergingBase::PowerOfM ? rho : 0.0;
      case Kind::CLTScale:
        return std::numeric_limits<double>::quiet_NaN();
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Constant:
        return "Constant(" + std::to_string(c) + ")";
      case Kind::GeometricDecay:
        return "GeometricDecay(c=" + std::to_string(c) +
               ", rho=" + std::to_string(rho) + ")";
      case Kind::CLTScale:
        return "CLTScale(x=" + std::to_string(x) + ")";
      case Kind::Diverging:
        return std::string("Diverging(c=") + std::to_string(c) +
               ", rho=" + std::to_string(rho) + ", base=" +
               (base == DivergingBase::PowerOfM ? "m" : "n") + ")";
    }
    return "?";
  }
};

// Sum_{1<=k<=N} L(eps*k)/k.  Exact below the switch point, integral
// approximation with Euler-Maclaurin boundary correction beyond.
inline double harmonic_L_sum(const SlowlyVarying& L, double eps, double N) {
  constexpr double kSwitch = 1e7;
  const double n_exact = std::min(N, kSwitch);
  double total = 0.0;
  {
    CompensatedSum acc;
    const auto n_int = static_cast<std::int64_t>(n_exact);
    for (std::int64_t k = 1; k <= n_int; ++k)
      acc.add(L(eps * static_cast<double>(k)) / static_cast<double>(k));
    total = acc.value();
  }
  if (N > kSwitch) {
    auto g = [&](double t) {  // substitution k = e^t
      return L(eps * std::exp(t));
    };
    const double t0 = std::log(kSwitch), t1 = std::log(N);
    total += integrate(g, t0, t1, 1e-12);
    // Euler-Maclaurin boundary terms for sum_{k>kSwitch}
    total += 0.5 * (L(eps * N) / N - L(eps * kSwitch) / kSwitch);
  }
  return total;
}

// chi_n, second displayed form: b(l_n)^g / ((eps_n m^n)^{g-b} L(eps_n m^n) m^n)
inline double chi_n(const NormingSequence& nseq, const ThresholdSequence& eps,
                    double m, double gamma, double beta,
                    const SlowlyVarying& L_right, int n) {
  if (!(nseq.alpha() > 1.0 && nseq.alpha() < 2.0))
    throw DomainError("chi_n: requires 1 < alpha < 2");
  if (!(beta > nseq.alpha())) throw DomainError("chi_n: requires alpha < beta");
  const double eps_n = eps.eval(n, m, nseq);
  const double l_n = nseq.l(1.0 / eps_n);
  const double mn = std::pow(m, n);
  const double em = eps_n * mn;
  // evaluate in logs; the factors span many orders of magnitude
  const double log_chi = gamma * std::log(nseq.b(l_n)) -
                         (gamma - beta) * std::log(em) -
                         std::log(L_right(em)) - std::log(mn);
  return std::exp(log_chi);
}

// First displayed form of chi_n; equal to chi_n up to the inversion tolerance
// of l.  Exposed for the algebraic cross-check.
inline double chi_n_first_form(const NormingSequence& nseq,
                               const ThresholdSequence& eps, double m,
                               double gamma, double beta,
                               const SlowlyVarying& L_right, int n) {
  const double eps_n = eps.eval(n, m, nseq);
  const double l_n = nseq.l(1.0 / eps_n);
  const double mn = std::pow(m, n);
  const double log_chi = (gamma - beta) * std::log(l_n) +
                         (beta - 1.0 - gamma) * n * std::log(m) +
                         beta * std::log(nseq.b(l_n)) -
                         std::log(L_right(nseq.b(l_n) * mn / l_n));
  return std::exp(log_chi);
}

// pi_n = l_n^g eps_n^b / sum_{1<=k<=m^n} L(eps_n k)/k
inline double pi_n(const NormingSequence& nseq, const ThresholdSequence& eps,
                   double m, double gamma, double beta,
                   const SlowlyVarying& L_right, int n) {
  if (!(nseq.alpha() > 1.0 && nseq.alpha() < 2.0))
    throw DomainError("pi_n: requires 1 < alpha < 2");
  const double eps_n = eps.eval(n, m, nseq);
  const double l_n = nseq.l(1.0 / eps_n);
  const double mn = std::pow(m, n);
  const double denom = harmonic_L_sum(L_right, eps_n, mn);
  return std::exp(gamma * std::log(l_n) + beta * std::log(eps_n)) / denom;
}

}  // namespace gwdev

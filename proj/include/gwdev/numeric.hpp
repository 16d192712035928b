#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "gwdev/errors.hpp"

namespace gwdev {

// Adaptive Simpson quadrature on a finite interval.
namespace detail {
template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw QuadratureError("adaptive Simpson: depth exhausted");
  if (std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-12,
                 int max_depth = 60) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale = std::max(std::fabs(whole), 1e-300);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol * scale, max_depth);
}

// Integral of f over [a, +inf) assuming f decays at least polynomially.
// Maps to t in (0,1] via x = a + t/(1-t) won't behave for heavy tails; instead
// split into geometric panels until the panel contribution is negligible.
template <typename F>
double integrate_to_inf(const F& f, double a, double tol = 1e-12) {
  double total = 0.0;
  double lo = a;
  double width = std::max(1.0, std::fabs(a));
  for (int panel = 0; panel < 400; ++panel) {
    const double hi = lo + width;
    const double part = integrate(f, lo, hi, tol);
    total += part;
    if (panel > 2 && std::fabs(part) < tol * std::max(1e-300, std::fabs(total)))
      return total;
    lo = hi;
    width *= 2.0;
  }
  throw QuadratureError("integrate_to_inf: tail did not converge");
}

// Bisection for the infimum point where a monotone-in-the-large predicate
// first holds.  pred must be false at lo and true at hi.
template <typename Pred>
double bisect_first(const Pred& pred, double lo, double hi,
                    double rel_tol = 1e-12) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= rel_tol * std::max(1.0, std::fabs(hi))) break;
  }
  return hi;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - mean) * (x - mean);
  v /= static_cast<double>(xs.size()) * std::max<std::size_t>(1, xs.size() - 1);
  return {mean, std::sqrt(v)};
}

// Two-sample Kolmogorov-Smirnov style distance between a sorted sample and a
// CDF functor.
template <typename Cdf>
double ks_distance_sorted(const std::vector<double>& sorted, const Cdf& cdf) {
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double c = cdf(sorted[i]);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - c));
    d = std::max(d, std::fabs(static_cast<double>(i) / n - c));
  }
  return d;
}

// Kahan-compensated accumulator for very long sums.
class CompensatedSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace gwdev

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gwdev/errors.hpp"
#include "gwdev/numeric.hpp"
#include "gwdev/rng.hpp"
#include "gwdev/slowly_varying.hpp"

namespace gwdev {

// Abstract summand distribution for X_1.  Implementations are immutable and
// safe for concurrent reads; samplers take a caller-owned stream.
class SummandImpl {
 public:
  virtual ~SummandImpl() = default;

  virtual double alpha() const = 0;
  // Right-tail index; +inf for laws with a bounded (or exponentially light)
  // right tail.
  virtual double beta() const = 0;
  virtual double p_plus() const = 0;
  virtual const SlowlyVarying& L_right() const = 0;

  virtual double cdf(double x) const = 0;
  virtual double sf(double x) const = 0;  // P(X >= x)
  virtual double sample(RngStream& rng) const = 0;

  virtual double mu1(double x) const = 0;  // int_{-x}^{x} y F(dy)
  virtual double mu2(double x) const = 0;  // int_{-x}^{x} y^2 F(dy)
  // E[X^t 1{0 <= X <= y}]
  virtual double At_plus(double t, double y) const = 0;

  virtual bool symmetric() const = 0;
  virtual bool is_lattice() const { return false; }
  // Exact P(S_k >= x) when available (lattice laws); NaN otherwise.
  virtual double exact_sum_tail(std::int64_t /*k*/, double /*x*/) const {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Finiteness of E[X^{1+g} 1{X>0}] for a given g >= 0.
  virtual bool has_plus_moment(double g) const { return 1.0 + g < beta(); }

  virtual std::string describe() const = 0;
};

// ---------------------------------------------------------------------------
// Two-piece heavy-tailed family: uniform body on (-x0, x0) glued continuously
// to Pareto-type tails
//     P(Y >= x)  = q_right * (x^-beta  L_R(x)) / (x0^-beta  L_R(x0)),  x >= x0
//     P(Y <= -x) = q_left  * (x^-aleft L_L(x)) / (x0^-aleft L_L(x0)),  x >= x0
// and, when alpha > 1, an exact centering shift X = Y - mu_c with
// mu_c = E[Y] so that E[X] = 0.
// ---------------------------------------------------------------------------

struct HeavyTailParams {
  double alpha = 1.5;            // stability index in (0,2)
  double beta = 1.5;             // right tail index
  double p_plus = 0.5;           // limiting tail balance
  SlowlyVarying L_right = SlowlyVarying::constant();
  SlowlyVarying L_left = SlowlyVarying::constant();
  double x0 = 1.0;               // body/tail junction
  double tail_mass = 1.0;        // q_right + q_left; 1 means no body
  double right_frac_when_onesided = 0.25;  // q_right share when p_plus == 0
};

class HeavyTailLaw final : public SummandImpl {
 public:
  explicit HeavyTailLaw(const HeavyTailParams& p) : par_(p) {
    validate();
    // Tail masses.
    if (par_.p_plus > 0.0 && par_.p_plus < 1.0) {
      q_right_ = par_.tail_mass * par_.p_plus;
      q_left_ = par_.tail_mass * (1.0 - par_.p_plus);
      left_index_ = par_.alpha;
    } else if (par_.p_plus == 1.0) {
      q_right_ = par_.tail_mass;
      q_left_ = 0.0;
      left_index_ = std::numeric_limits<double>::infinity();
    } else {  // p_plus == 0: heavy left tail of index alpha, lighter right
      q_left_ = par_.tail_mass * (1.0 - par_.right_frac_when_onesided);
      q_right_ = par_.tail_mass * par_.right_frac_when_onesided;
      left_index_ = par_.alpha;
    }
    body_mass_ = 1.0 - q_right_ - q_left_;
    if (body_mass_ < -1e-15) throw ConfigError("HeavyTailLaw: tail mass > 1");
    body_mass_ = std::max(0.0, body_mass_);
    gR_x0_ = tail_fn(par_.x0, par_.beta, par_.L_right);
    gL_x0_ = q_left_ > 0 ? tail_fn(par_.x0, left_index_, par_.L_left) : 1.0;
    check_tail_monotone();
    if (par_.alpha > 1.0) mu_c_ = raw_mean();
  }

  double alpha() const override { return par_.alpha; }
  double beta() const override { return par_.beta; }
  double p_plus() const override { return par_.p_plus; }
  const SlowlyVarying& L_right() const override { return par_.L_right; }
  double shift() const { return mu_c_; }
  double junction() const { return par_.x0; }
  double right_tail_mass() const { return q_right_; }
  double left_tail_mass() const { return q_left_; }
  double left_index() const { return left_index_; }

  bool symmetric() const override {
    return mu_c_ == 0.0 && q_right_ == q_left_ && left_index_ == par_.beta &&
           par_.L_left.kind == par_.L_right.kind &&
           par_.L_left.c == par_.L_right.c &&
           par_.L_left.delta == par_.L_right.delta;
  }

  // Survival of the uncentered variable Y.
  double sf_raw(double y) const {
    if (y >= par_.x0)
      return q_right_ * tail_fn(y, par_.beta, par_.L_right) / gR_x0_;
    if (y <= -par_.x0) return 1.0 - cdf_left_raw(-y);
    // inside the body
    return q_right_ + body_mass_ * (par_.x0 - y) / (2.0 * par_.x0);
  }

  double cdf_raw(double y) const {
    if (y <= -par_.x0) return cdf_left_raw(-y);
    if (y >= par_.x0) return 1.0 - sf_raw(y);
    return q_left_ + body_mass_ * (y + par_.x0) / (2.0 * par_.x0);
  }

  double sf(double x) const override { return sf_raw(x + mu_c_); }
  double cdf(double x) const override { return cdf_raw(x + mu_c_); }

  double sample(RngStream& rng) const override {
    return quantile_raw(rng.uniform()) - mu_c_;
  }

  // Inverse CDF of Y.  Closed form for constant slowly varying factors,
  // monotone bracketing + bisection (rel. tol 1e-12) otherwise.
  double quantile_raw(double u) const {
    if (u < q_left_) {
      const double v = invert_tail(u, left_index_, par_.L_left, q_left_, gL_x0_);
      return -v;
    }
    if (u > 1.0 - q_right_) {
      return invert_tail(1.0 - u, par_.beta, par_.L_right, q_right_, gR_x0_);
    }
    if (body_mass_ <= 0.0) return 0.0;
    return -par_.x0 + 2.0 * par_.x0 * (u - q_left_) / body_mass_;
  }

  double mu1(double x) const override {
    const double a = mu_c_ - x, b = mu_c_ + x;
    return pm(1, a, b) - mu_c_ * pm(0, a, b);
  }

  double mu2(double x) const override {
    const double a = mu_c_ - x, b = mu_c_ + x;
    return pm(2, a, b) - 2.0 * mu_c_ * pm(1, a, b) + mu_c_ * mu_c_ * pm(0, a, b);
  }

  double At_plus(double t, double y) const override {
    if (y <= 0.0) return 0.0;
    const double a = mu_c_, b = mu_c_ + y;
    if (mu_c_ == 0.0 && par_.L_right.is_constant()) {
      // closed form: body piece + Pareto piece
      double total = 0.0;
      if (body_mass_ > 0.0 && a < par_.x0) {
        const double hi = std::min(b, par_.x0);
        const double rho = body_mass_ / (2.0 * par_.x0);
        total += rho * (std::pow(hi, t + 1.0) - 0.0) / (t + 1.0);
      }
      if (b > par_.x0) {
        total += pareto_moment(t, par_.x0, b, par_.beta, q_right_, par_.x0);
      }
      return total;
    }
    return moment_quadrature([t, this](double yv) {
      const double x = yv - mu_c_;
      return x > 0 ? std::pow(x, t) : 0.0;
    }, std::max(a, lower_support()), b);
  }

  std::string describe() const override {
    return "HeavyTail(alpha=" + std::to_string(par_.alpha) +
           ", beta=" + std::to_string(par_.beta) +
           ", p+=" + std::to_string(par_.p_plus) +
           ", L=" + par_.L_right.describe() + ", x0=" + std::to_string(par_.x0) +
           ", tail_mass=" + std::to_string(par_.tail_mass) + ")";
  }

  // --- named families -----------------------------------------------------

  // Pure two-sided Pareto: P(|X| > x) = (x/x0)^-ab for x >= x0.
  static std::shared_ptr<const HeavyTailLaw> symmetric_pareto(
      double alpha_beta, double x0 = 1.0,
      SlowlyVarying L = SlowlyVarying::constant()) {
    HeavyTailParams p;
    p.alpha = p.beta = alpha_beta;
    p.p_plus = 0.5;
    p.L_right = p.L_left = L;
    p.x0 = x0;
    p.tail_mass = 1.0;
    return std::make_shared<HeavyTailLaw>(p);
  }

  // Right tail only (p_plus = 1), uniform body on the left of the junction.
  static std::shared_ptr<const HeavyTailLaw> one_sided(
      double alpha_beta, SlowlyVarying L = SlowlyVarying::constant(),
      double x0 = 1.0, double tail_mass = 0.5) {
    HeavyTailParams p;
    p.alpha = p.beta = alpha_beta;
    p.p_plus = 1.0;
    p.L_right = L;
    p.x0 = x0;
    p.tail_mass = tail_mass;
    return std::make_shared<HeavyTailLaw>(p);
  }

  // One-sided family with the junction chosen so that
  // P(X >= x) * x^beta / L(x) -> 1.
  static std::shared_ptr<const HeavyTailLaw> one_sided_unit(
      double alpha_beta, SlowlyVarying L = SlowlyVarying::constant(),
      double tail_mass = 0.5) {
    // solve tail_mass * x0^beta / L(x0) = 1 for x0
    double x0 = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double next = std::pow(L(x0) / tail_mass, 1.0 / alpha_beta);
      if (std::fabs(next - x0) < 1e-14 * x0) {
        x0 = next;
        break;
      }
      x0 = next;
    }
    return one_sided(alpha_beta, L, x0, tail_mass);
  }

  // Heavy left tail of index alpha, lighter right tail of index beta > alpha.
  static std::shared_ptr<const HeavyTailLaw> left_heavy(
      double alpha, double beta, double x0 = 1.0, double tail_mass = 0.8) {
    HeavyTailParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.p_plus = 0.0;
    p.x0 = x0;
    p.tail_mass = tail_mass;
    return std::make_shared<HeavyTailLaw>(p);
  }

 private:
  static double tail_fn(double x, double index, const SlowlyVarying& L) {
    return std::pow(x, -index) * L(x);
  }

  double lower_support() const {
    return q_left_ > 0 ? -std::numeric_limits<double>::infinity() : -par_.x0;
  }

  double cdf_left_raw(double v) const {  // P(Y <= -v), v >= x0
    if (q_left_ <= 0) return 0.0;
    return q_left_ * tail_fn(v, left_index_, par_.L_left) / gL_x0_;
  }

  // Tail density of |tail variable| at v >= x0.
  static double tail_density(double v, double index, const SlowlyVarying& L,
                             double mass, double g_x0) {
    const double s = mass * tail_fn(v, index, L) / g_x0;
    return s * (index / v - L.dlog(v));
  }

  double invert_tail(double target, double index, const SlowlyVarying& L,
                     double mass, double g_x0) const {
    // solve mass * g(v)/g(x0) = target for v >= x0
    if (L.is_constant())
      return par_.x0 * std::pow(target / mass, -1.0 / index);
    double lo = par_.x0, hi = 2.0 * par_.x0;
    const auto sf = [&](double v) { return mass * tail_fn(v, index, L) / g_x0; };
    int grow = 0;
    while (sf(hi) > target) {
      lo = hi;
      hi *= 4.0;
      if (++grow > 600) throw BracketError("HeavyTailLaw: quantile bracket");
    }
    return bisect_first([&](double v) { return sf(v) <= target; }, lo, hi,
                        1e-12);
  }

  // int y^j dF_Y(y) over [a, b] (raw variable), j in {0,1,2}.
  double pm(int j, double a, double b) const {
    if (b <= a) return 0.0;
    double total = 0.0;
    // left tail piece: y in [a, min(b, -x0)]
    if (q_left_ > 0 && a < -par_.x0) {
      const double hi_v = -a;                           // largest |y|
      const double lo_v = std::max(par_.x0, -std::min(b, -par_.x0));
      if (hi_v > lo_v) {
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        if (par_.L_left.is_constant()) {
          total += sgn * pareto_moment(static_cast<double>(j), lo_v, hi_v,
                                       left_index_, q_left_, par_.x0);
        } else {
          total += sgn * integrate(
              [&](double v) {
                return std::pow(v, j) *
                       tail_density(v, left_index_, par_.L_left, q_left_, gL_x0_);
              },
              lo_v, hi_v, 1e-13);
        }
      }
    }
    // body piece
    if (body_mass_ > 0) {
      const double lo = std::max(a, -par_.x0), hi = std::min(b, par_.x0);
      if (hi > lo) {
        const double rho = body_mass_ / (2.0 * par_.x0);
        total += rho * (std::pow(hi, j + 1) - std::pow(lo, j + 1)) / (j + 1);
      }
    }
    // right tail piece
    if (q_right_ > 0 && b > par_.x0) {
      const double lo = std::max(a, par_.x0);
      if (par_.L_right.is_constant()) {
        total += pareto_moment(static_cast<double>(j), lo, b, par_.beta,
                               q_right_, par_.x0);
      } else {
        total += integrate(
            [&](double v) {
              return std::pow(v, j) *
                     tail_density(v, par_.beta, par_.L_right, q_right_, gR_x0_);
            },
            lo, b, 1e-13);
      }
    }
    return total;
  }

  // int_{lo}^{hi} v^t * [Pareto(index) tail density with mass q at x0] dv,
  // constant-L closed form.
  static double pareto_moment(double t, double lo, double hi, double index,
                              double mass, double x0) {
    if (hi <= lo) return 0.0;
    const double c = mass * index * std::pow(x0, index);
    const double e = t - index;
    if (std::fabs(e) < 1e-12) return c * std::log(hi / lo);
    if (std::isinf(hi)) {
      if (e >= 0) throw DomainError("pareto_moment: divergent tail moment");
      return -c * std::pow(lo, e) / e;
    }
    return c * (std::pow(hi, e) - std::pow(lo, e)) / e;
  }

  double moment_quadrature(const std::function<double(double)>& w, double a,
                           double b) const {
    // integrate w(y) dF_Y(y) over [a,b] piecewise
    double total = 0.0;
    if (q_left_ > 0 && a < -par_.x0) {
      const double hi_v = std::isinf(a) ? 0.0 : -a;
      const double lo_v = std::max(par_.x0, -std::min(b, -par_.x0));
      auto f = [&](double v) {
        return w(-v) * tail_density(v, left_index_, par_.L_left, q_left_, gL_x0_);
      };
      total += std::isinf(a) ? integrate_to_inf(f, lo_v, 1e-12)
                             : integrate(f, lo_v, hi_v, 1e-12);
    }
    if (body_mass_ > 0) {
      const double lo = std::max(a, -par_.x0), hi = std::min(b, par_.x0);
      if (hi > lo) {
        const double rho = body_mass_ / (2.0 * par_.x0);
        total += integrate([&](double y) { return w(y) * rho; }, lo, hi, 1e-12);
      }
    }
    if (q_right_ > 0 && b > par_.x0) {
      const double lo = std::max(a, par_.x0);
      auto f = [&](double v) {
        return w(v) * tail_density(v, par_.beta, par_.L_right, q_right_, gR_x0_);
      };
      total += std::isinf(b) ? integrate_to_inf(f, lo, 1e-12)
                             : integrate(f, lo, b, 1e-12);
    }
    return total;
  }

  double raw_mean() const {
    if (par_.beta <= 1.0 || left_index_ <= 1.0)
      throw ConfigError("HeavyTailLaw: mean undefined, cannot center");
    double mean = 0.0;  // body is symmetric about 0
    if (q_right_ > 0) {
      if (par_.L_right.is_constant()) {
        mean += pareto_moment(1.0, par_.x0,
                              std::numeric_limits<double>::infinity(), par_.beta,
                              q_right_, par_.x0);
      } else {
        mean += integrate_to_inf(
            [&](double v) {
              return v * tail_density(v, par_.beta, par_.L_right, q_right_,
                                      gR_x0_);
            },
            par_.x0, 1e-13);
      }
    }
    if (q_left_ > 0) {
      if (par_.L_left.is_constant()) {
        mean -= pareto_moment(1.0, par_.x0,
                              std::numeric_limits<double>::infinity(),
                              left_index_, q_left_, par_.x0);
      } else {
        mean -= integrate_to_inf(
            [&](double v) {
              return v * tail_density(v, left_index_, par_.L_left, q_left_,
                                      gL_x0_);
            },
            par_.x0, 1e-13);
      }
    }
    return mean;
  }

  void validate() const {
    if (!(par_.alpha > 0 && par_.alpha < 2))
      throw ConfigError("HeavyTailLaw: alpha must lie in (0,2)");
    if (par_.beta < par_.alpha)
      throw ConfigError("HeavyTailLaw: beta must be >= alpha");
    if (par_.p_plus < 0 || par_.p_plus > 1)
      throw ConfigError("HeavyTailLaw: p_plus must lie in [0,1]");
    if (par_.p_plus > 0 && par_.p_plus < 1 && par_.beta != par_.alpha)
      throw ConfigError(
          "HeavyTailLaw: two-sided tail balance requires beta == alpha");
    if (par_.p_plus == 1.0 && par_.beta != par_.alpha)
      throw ConfigError("HeavyTailLaw: p_plus=1 requires beta == alpha");
    if (par_.p_plus == 0.0 && !(par_.beta > par_.alpha))
      throw ConfigError("HeavyTailLaw: p_plus=0 requires beta > alpha");
    if (par_.x0 <= 0) throw ConfigError("HeavyTailLaw: x0 must be positive");
    if (par_.tail_mass <= 0 || par_.tail_mass > 1)
      throw ConfigError("HeavyTailLaw: tail_mass must lie in (0,1]");
    if (par_.alpha == 1.0) {
      const bool sym = par_.p_plus == 0.5 && par_.beta == 1.0 &&
                       par_.L_right.kind == par_.L_left.kind &&
                       par_.L_right.c == par_.L_left.c &&
                       par_.L_right.delta == par_.L_left.delta;
      if (!sym)
        throw ConfigError(
            "HeavyTailLaw: alpha=1 supports only the symmetric construction "
            "(p+=p-=1/2, identical tails)");
    }
  }

  void check_tail_monotone() const {
    // survival functions must be strictly decreasing on [x0, inf)
    auto check = [&](double index, const SlowlyVarying& L) {
      for (double x = par_.x0; x < 1e12; x *= 1.7) {
        if (index / x - L.dlog(x) <= 0)
          throw ConfigError(
              "HeavyTailLaw: tail x^-idx L(x) is not decreasing near x=" +
              std::to_string(x) + "; malformed family");
      }
    };
    if (q_right_ > 0) check(par_.beta, par_.L_right);
    if (q_left_ > 0) check(left_index_, par_.L_left);
  }

  HeavyTailParams par_;
  double q_right_ = 0, q_left_ = 0, body_mass_ = 0;
  double left_index_ = 0;
  double gR_x0_ = 1, gL_x0_ = 1;
  double mu_c_ = 0.0;
};

// ---------------------------------------------------------------------------
// Two-point lattice law on {a, b} with P(X=b)=p.  Test/support law: all
// moments finite, and P(S_k >= x) is available exactly through the binomial
// distribution of the number of b-outcomes.
// ---------------------------------------------------------------------------
class LatticeLaw final : public SummandImpl {
 public:
  LatticeLaw(double a, double b, double p) : a_(a), b_(b), p_(p) {
    if (!(a < b) || p <= 0 || p >= 1)
      throw ConfigError("LatticeLaw: need a < b and p in (0,1)");
  }

  static std::shared_ptr<const LatticeLaw> rademacher() {
    return std::make_shared<LatticeLaw>(-1.0, 1.0, 0.5);
  }

  double alpha() const override { return 2.0; }
  double beta() const override {
    return std::numeric_limits<double>::infinity();
  }
  double p_plus() const override { return b_ > 0 ? 1.0 : 0.0; }
  const SlowlyVarying& L_right() const override {
    static const SlowlyVarying one = SlowlyVarying::constant();
    return one;
  }

  double cdf(double x) const override {
    if (x < a_) return 0.0;
    if (x < b_) return 1.0 - p_;
    return 1.0;
  }
  double sf(double x) const override {
    if (x <= a_) return 1.0;
    if (x <= b_) return p_;
    return 0.0;
  }

  double sample(RngStream& rng) const override {
    return rng.uniform() < p_ ? b_ : a_;
  }

  double mu1(double x) const override {
    double m = 0.0;
    if (std::fabs(a_) <= x) m += a_ * (1.0 - p_);
    if (std::fabs(b_) <= x) m += b_ * p_;
    return m;
  }
  double mu2(double x) const override {
    double m = 0.0;
    if (std::fabs(a_) <= x) m += a_ * a_ * (1.0 - p_);
    if (std::fabs(b_) <= x) m += b_ * b_ * p_;
    return m;
  }
  double At_plus(double t, double y) const override {
    double m = 0.0;
    if (a_ >= 0 && a_ <= y) m += std::pow(a_, t) * (1.0 - p_);
    if (b_ >= 0 && b_ <= y) m += std::pow(b_, t) * p_;
    return m;
  }

  bool symmetric() const override { return a_ == -b_ && p_ == 0.5; }
  bool is_lattice() const override { return true; }
  bool has_plus_moment(double) const override { return true; }

  // P(S_k >= x) with S_k = a(k-N) + bN, N ~ Binomial(k, p).
  double exact_sum_tail(std::int64_t k, double x) const override {
    const double need = (x - a_ * static_cast<double>(k)) / (b_ - a_);
    const auto n_min = static_cast<std::int64_t>(std::ceil(need - 1e-12));
    if (n_min <= 0) return 1.0;
    if (n_min > k) return 0.0;
    // sum binomial pmf from n_min to k in log space
    double total = 0.0;
    const double lp = std::log(p_), lq = std::log1p(-p_);
    for (std::int64_t n = n_min; n <= k; ++n) {
      const double lg = std::lgamma(static_cast<double>(k) + 1.0) -
                        std::lgamma(static_cast<double>(n) + 1.0) -
                        std::lgamma(static_cast<double>(k - n) + 1.0);
      total += std::exp(lg + lp * static_cast<double>(n) +
                        lq * static_cast<double>(k - n));
    }
    return std::min(1.0, total);
  }

  std::string describe() const override {
    return "Lattice(a=" + std::to_string(a_) + ", b=" + std::to_string(b_) +
           ", p=" + std::to_string(p_) + ")";
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double p() const { return p_; }

 private:
  double a_, b_, p_;
};

// Value-semantics handle.
class SummandLaw {
 public:
  SummandLaw() = default;
  explicit SummandLaw(std::shared_ptr<const SummandImpl> impl)
      : impl_(std::move(impl)) {}

  const SummandImpl& operator*() const { return *impl_; }
  const SummandImpl* operator->() const { return impl_.get(); }
  explicit operator bool() const { return static_cast<bool>(impl_); }

  double tail_right(double x) const {
    if (!(x > 0)) throw DomainError("tail_right: x must be positive");
    return impl_->sf(x);
  }

  double sample(RngStream& rng) const { return impl_->sample(rng); }

  // One draw of S_k = X_1 + ... + X_k.  Compensated summation throughout:
  // cheap relative to the per-draw transform and safe for k > 1e6.
  double sample_S_k(std::int64_t k, RngStream& rng) const {
    CompensatedSum acc;
    for (std::int64_t i = 0; i < k; ++i) acc.add(impl_->sample(rng));
    return acc.value();
  }

 private:
  std::shared_ptr<const SummandImpl> impl_;
};

}  // namespace gwdev

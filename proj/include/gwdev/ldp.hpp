#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gwdev/bounds.hpp"
#include "gwdev/errors.hpp"
#include "gwdev/martingale.hpp"
#include "gwdev/norming.hpp"
#include "gwdev/offspring.hpp"
#include "gwdev/parallel.hpp"
#include "gwdev/stable.hpp"
#include "gwdev/summand.hpp"

namespace gwdev {

enum class TheoremId {
  Main2,
  Main3_i,
  Main3_ii,
  Main3_iii,
  Main3_iv,
  Cmain2,
  Cmain3_i,
  Cmain3_ii,
  Cmain3_iii,
  Cmain3_iv,
  SCmain3,
  MainX,
  None
};

inline const char* theorem_name(TheoremId id) {
  switch (id) {
    case TheoremId::Main2: return "Main2";
    case TheoremId::Main3_i: return "Main3_i";
    case TheoremId::Main3_ii: return "Main3_ii";
    case TheoremId::Main3_iii: return "Main3_iii";
    case TheoremId::Main3_iv: return "Main3_iv";
    case TheoremId::Cmain2: return "Cmain2";
    case TheoremId::Cmain3_i: return "Cmain3_i";
    case TheoremId::Cmain3_ii: return "Cmain3_ii";
    case TheoremId::Cmain3_iii: return "Cmain3_iii";
    case TheoremId::Cmain3_iv: return "Cmain3_iv";
    case TheoremId::SCmain3: return "SCmain3";
    case TheoremId::MainX: return "MainX";
    case TheoremId::None: return "None";
  }
  return "?";
}

struct AssumptionCheck {
  std::string name;
  bool ok = false;
  double evidence = 0.0;
  std::string note;
};

enum class PredictionKind { Value, Bounds, Heuristic };

// A classified regime: which limit theorem applies, the normalizing sequence
// a_n, and the predicted limit (a point value, or window-estimated bounds for
// the liminf/limsup regimes, which are always Heuristic-tagged).
struct RegimePrediction {
  TheoremId theorem_id = TheoremId::None;
  PredictionKind kind = PredictionKind::Value;
  double value = 0.0;            // Value/Heuristic
  double lo = 0.0, hi = 0.0;     // Bounds (and containment targets)
  double value_error = 0.0;      // truncation/MC error on `value` if any
  std::vector<AssumptionCheck> assumptions;
  std::string normalizer_desc;
  std::function<double(int)> normalizer;  // n -> a_n

  double predicted_lo() const {
    return kind == PredictionKind::Value ? value : lo;
  }
  double predicted_hi() const {
    return kind == PredictionKind::Value ? value : hi;
  }
};

struct ClassifyOptions {
  int n_max = 20;                 // numeric-confirmation horizon
  double window_lo = 0.01;        // omega window for V_I / V_S
  double window_hi = 0.1;
  int calib_k = 2000;
  std::size_t calib_samples = 20000;
  std::uint64_t seed = 0xc1a55u;
  std::size_t sc_k_max = 2000;    // truncation cap for the SCmain3 series
  std::int64_t sc_reps_per_k = 4000;
};

namespace detail {

inline void require(std::vector<AssumptionCheck>& acc, const std::string& name,
                    bool ok, double evidence, const std::string& note = "") {
  acc.push_back({name, ok, evidence, note});
}

inline bool all_ok(const std::vector<AssumptionCheck>& acc) {
  for (const auto& a : acc)
    if (!a.ok) return false;
  return true;
}

inline std::string failing(const std::vector<AssumptionCheck>& acc) {
  std::string out;
  for (const auto& a : acc)
    if (!a.ok) out += (out.empty() ? "" : "; ") + a.name;
  return out;
}

// sign of the symbolic n-exponent with numeric confirmation over the last
// few horizons; a sign conflict is a refusal, not a guess.
struct LimitTrend {
  int sign = 0;        // -1 -> 0, +1 -> infinity, 0 -> finite limit
  double limit = 0.0;  // numeric value at n_max when sign == 0
};

template <class SeqFn>
LimitTrend confirm_limit(double symbolic_exponent, SeqFn&& seq, int n_max,
                         const char* what) {
  const double v1 = seq(n_max - 4), v2 = seq(n_max - 2), v3 = seq(n_max);
  const double s1 = 0.5 * std::log(v2 / v1), s2 = 0.5 * std::log(v3 / v2);
  LimitTrend out;
  if (std::fabs(symbolic_exponent) < 1e-12) {
    // symbolic limit finite: slopes must be shrinking toward 0
    if (std::fabs(s2) > 0.05 && std::fabs(s2) > std::fabs(s1))
      throw Unclassifiable(std::string(what) +
                           ": symbolic exponent 0 but numeric trend drifts (" +
                           std::to_string(s2) + " per n)");
    out.sign = 0;
    out.limit = v3;
    return out;
  }
  const double want = symbolic_exponent * std::log(2.0) > 0 ? 1.0 : -1.0;
  // numeric slope must agree in sign with the symbolic exponent
  if (s2 * symbolic_exponent <= 0.0)
    throw Unclassifiable(
        std::string(what) + ": symbolic exponent " +
        std::to_string(symbolic_exponent) + " conflicts with numeric slope " +
        std::to_string(s2));
  out.sign = want > 0 ? 1 : -1;
  return out;
}

// int_0^inf u^{g-1} P(U >= u^{(a-1)/a} / c) du for the calibrated stable law.
inline double stable_tail_integral(const StableLaw& st, double scale,
                                   double alpha, double gamma) {
  const double expo = (alpha - 1.0) / alpha;
  auto f = [&](double u) {
    return std::pow(u, gamma - 1.0) *
           st.tail_cdf(std::pow(u, expo) / scale);
  };
  // integrable at 0 (gamma > 0); the spectrally negative tail kills infinity
  double total = integrate(f, 1e-12, 1.0, 1e-10);
  total += integrate_to_inf(f, 1.0, 1e-10);
  return total;
}

}  // namespace detail

// Regime classification per the gamma vs beta-1 phase diagram.  Hypotheses
// are checked symbolically first (closed-form exponents for the built-in
// threshold kinds), confirmed numerically, and reported; if no theorem's
// hypotheses hold, or symbolic and numeric trends conflict, this throws
// Unclassifiable.
inline RegimePrediction classify_regime(const OffspringLaw& off,
                                        const SummandLaw& law,
                                        const NormingSequence& nseq,
                                        const ThresholdSequence& eps,
                                        const MartingaleLimitModel& W,
                                        ClassifyOptions opt = {}) {
  const double alpha = law->alpha();
  const double beta = law->beta();
  const double gamma = off.gamma();
  const double m = off.m();
  const double p_plus = law->p_plus();
  const SlowlyVarying L = law->L_right();

  if (std::fabs(alpha - nseq.alpha()) > 1e-12)
    throw ConfigError("classify_regime: law alpha != norming alpha");

  RegimePrediction pred;
  auto& A = pred.assumptions;

  // ---- CLT scale: epsilon_n m^n / b(m^n) -> x -------------------------------
  if (eps.kind == ThresholdSequence::Kind::CLTScale) {
    detail::require(A, "alpha in (0,2)", alpha > 0 && alpha < 2, alpha);
    detail::require(A, "eps_n m^n / b(m^n) -> x (CLTScale kind)", true, eps.x);
    if (!detail::all_ok(A))
      throw Unclassifiable("MainX hypotheses fail: " + detail::failing(A));
    const auto st = stable_attractor(law);
    const auto cal = calibrate_scale(law, nseq, st, opt.calib_k,
                                     opt.calib_samples, opt.seed);
    detail::require(A, "S_k/b(k) calibrates to the stable attractor (KS<0.02)",
                    cal.ks < 0.02, cal.ks);
    const double expo = (alpha - 1.0) / alpha;
    // E over omega(u)du realized as the W-sample average
    CompensatedSum acc;
    for (double w : W.W_samples())
      acc.add(st.tail_cdf(std::pow(w, expo) * eps.x / cal.scale));
    pred.theorem_id = TheoremId::MainX;
    pred.kind = PredictionKind::Value;
    pred.value = acc.value() / static_cast<double>(W.W_samples().size());
    pred.normalizer_desc = "1";
    pred.normalizer = [](int) { return 1.0; };
    return pred;
  }

  // ---- symbolic limits of eps_n and eps_n m^n / b(m^n) ----------------------
  const double rho_eps = eps.log_m_exponent();  // log_m eps_n per n
  int eps_sign;  // -1 -> 0, 0 -> constant, +1 -> infinity
  if (eps.kind == ThresholdSequence::Kind::Diverging)
    eps_sign = 1;
  else if (eps.kind == ThresholdSequence::Kind::Constant)
    eps_sign = 0;
  else
    eps_sign = rho_eps < 0 ? -1 : 1;
  const double ratio_expo = rho_eps + 1.0 - 1.0 / alpha;
  const bool ratio_diverges =
      ratio_expo > 1e-12 ||
      (std::fabs(ratio_expo) <= 1e-12 &&
       eps.kind == ThresholdSequence::Kind::Diverging &&
       eps.base == ThresholdSequence::DivergingBase::PowerOfN);
  if (!ratio_diverges && std::fabs(ratio_expo) <= 1e-12 &&
      eps.kind != ThresholdSequence::Kind::CLTScale)
    throw Unclassifiable(
        "eps_n m^n/b(m^n) has a finite nonzero limit but the threshold is "
        "not CLTScale; use the CLTScale kind to pin x explicitly");

  // ---- gamma < beta - 1, or finite plus-moment with constant eps ------------
  const bool plus_moment = law->has_plus_moment(gamma);
  if ((gamma < beta - 1.0 || plus_moment) && eps_sign == 0) {
    detail::require(A, "(1 < alpha < 2 and gamma < beta-1) or "
                       "E[X^{1+gamma};X>0] finite",
                    (alpha > 1 && alpha < 2 && gamma < beta - 1.0) ||
                        plus_moment,
                    alpha);
    detail::require(A, "eps_n -> eps in (0,inf)", eps.c > 0, eps.c);
    if (!detail::all_ok(A))
      throw Unclassifiable("SCmain3 hypotheses fail: " + detail::failing(A));
    const double epsv = eps.c;
    // series over q_k, truncated when the last term is negligible
    const auto q = off.q_upto(opt.sc_k_max, 30);
    CompensatedSum acc;
    double var = 0.0;
    double last_term = 0.0;
    std::size_t K_used = 0;
    for (std::size_t k = 1; k <= opt.sc_k_max; ++k) {
      const auto kk = static_cast<std::int64_t>(k);
      double pk, pk_var = 0.0;
      if (law->is_lattice()) {
        pk = law->exact_sum_tail(kk, epsv * static_cast<double>(k));
      } else {
        const auto emp =
            empirical_sum_tail(law, kk, epsv * static_cast<double>(k),
                               opt.sc_reps_per_k, opt.seed ^ (0xabcd00u + k));
        pk = emp.p_hat;
        pk_var = emp.stderr_ * emp.stderr_;
      }
      last_term = q[k].value * pk;
      acc.add(last_term);
      var += q[k].value * q[k].value * pk_var;
      K_used = k;
      if (k >= 20 && last_term < 1e-3 * acc.value() &&
          (law->is_lattice() || last_term < 3e-3 * acc.value()))
        break;
    }
    if (last_term >= 1e-3 * acc.value() && !law->is_lattice())
      throw TruncationError(
          "SCmain3 series truncation did not reach the 1e-3 criterion by K=" +
          std::to_string(K_used));
    pred.theorem_id = TheoremId::SCmain3;
    pred.kind = PredictionKind::Value;
    pred.value = acc.value();
    pred.value_error = std::sqrt(var) + last_term;
    pred.normalizer_desc = "m^{gamma n}";
    pred.normalizer = [m, gamma](int n) { return std::pow(m, gamma * n); };
    detail::require(A, "series truncated at relative 1e-3", true,
                    static_cast<double>(K_used));
    return pred;
  }

  // remaining regimes all require the ratio to diverge
  detail::require(A, "eps_n m^n / b(m^n) -> infinity", ratio_diverges,
                  ratio_expo);
  if (!ratio_diverges)
    throw Unclassifiable("no theorem covers eps_n m^n/b(m^n) -> 0: " +
                         detail::failing(A));

  const bool critical = std::fabs(gamma - (beta - 1.0)) < 1e-12;
  const bool super = gamma > beta - 1.0 && !critical;

  // shared helpers -----------------------------------------------------------
  auto value_I_beta = [&]() {
    const auto ib = W.I(beta);
    pred.value = ib.mean;
    pred.value_error = 4.0 * ib.stderr_;
  };
  auto main2_normalizer = [&]() {
    pred.normalizer_desc = "m^{(beta-1)n} eps_n^beta / L(eps_n m^n)";
    const auto epsc = eps;
    const auto nseqc = nseq;
    const auto Lc = L;
    pred.normalizer = [m, beta, epsc, nseqc, Lc](int n) {
      const double e = epsc.eval(n, m, nseqc);
      const double mn = std::pow(m, n);
      return std::pow(m, (beta - 1.0) * n) * std::pow(e, beta) / Lc(e * mn);
    };
  };
  auto ln_normalizer = [&]() {
    pred.normalizer_desc = "l_n^{-gamma} m^{gamma n}";
    const auto epsc = eps;
    const auto nseqc = nseq;
    pred.normalizer = [m, gamma, epsc, nseqc](int n) {
      const double e = epsc.eval(n, m, nseqc);
      const double ln = nseqc.l(1.0 / e);
      return std::pow(ln, -gamma) * std::pow(m, gamma * n);
    };
  };
  auto critical_normalizer = [&]() {
    pred.normalizer_desc =
        "eps_n^beta m^{gamma n} / sum_{k<=m^n} L(eps_n k)/k";
    const auto epsc = eps;
    const auto nseqc = nseq;
    const auto Lc = L;
    pred.normalizer = [m, beta, gamma, epsc, nseqc, Lc](int n) {
      const double e = epsc.eval(n, m, nseqc);
      const double mn = std::pow(m, n);
      return std::pow(e, beta) * std::pow(m, gamma * n) /
             harmonic_L_sum(Lc, e, mn);
    };
  };
  auto v_bounds = [&](double y_addend_lo, double y_addend_hi) {
    // V_I/V_S from the window estimate of u^{1-gamma} omega(u) times the
    // stable tail integral; heuristic by construction
    const auto st = stable_attractor(law);
    const auto cal = calibrate_scale(law, nseq, st, opt.calib_k,
                                     opt.calib_samples, opt.seed);
    detail::require(A, "S_k/b(k) calibrates to the stable attractor (KS<0.02)",
                    cal.ks < 0.02, cal.ks);
    const auto win = W.omega_window(opt.window_lo, opt.window_hi);
    const double si = detail::stable_tail_integral(st, cal.scale, alpha, gamma);
    pred.kind = PredictionKind::Heuristic;
    pred.lo = win.inf_est * si + y_addend_lo;
    pred.hi = win.sup_est * si + y_addend_hi;
    pred.value = 0.5 * (pred.lo + pred.hi);
    detail::require(A, "window estimate of u^{1-gamma} omega(u)", true,
                    win.inf_est,
                    "heuristic: liminf/limsup proxied on a finite window");
  };

  if (super) {
    // ---- Theorem for gamma > beta-1, alpha < 1 ------------------------------
    if (alpha < 1.0) {
      detail::require(A, "0 < alpha < 1", alpha > 0 && alpha < 1, alpha);
      detail::require(A, "eps_n -> infinity", eps_sign == 1,
                      static_cast<double>(eps_sign));
      detail::require(A, "gamma > beta - 1", true, gamma - (beta - 1.0));
      if (!detail::all_ok(A))
        throw Unclassifiable("Main2 hypotheses fail: " + detail::failing(A));
      pred.theorem_id = TheoremId::Main2;
      pred.kind = PredictionKind::Value;
      value_I_beta();
      main2_normalizer();
      return pred;
    }
    // ---- 1 < alpha < 2 ------------------------------------------------------
    detail::require(A, "1 < alpha < 2", alpha > 1 && alpha < 2, alpha);
    if (p_plus > 0.0) {
      detail::require(A, "p_+ > 0", true, p_plus);
      detail::require(A, "eps_n -> eps in (0,inf)", eps_sign == 0, eps.c);
      if (!detail::all_ok(A))
        throw Unclassifiable("Main3(iv) hypotheses fail: " +
                             detail::failing(A));
      pred.theorem_id = TheoremId::Main3_iv;
      pred.kind = PredictionKind::Value;
      value_I_beta();
      main2_normalizer();
      return pred;
    }
    detail::require(A, "p_+ = 0", p_plus == 0.0, p_plus);
    detail::require(A, "eps_n -> 0", eps_sign == -1,
                    static_cast<double>(eps_sign));
    detail::require(A, "alpha < beta", alpha < beta, beta - alpha);
    if (!detail::all_ok(A))
      throw Unclassifiable("Main3(i-iii) hypotheses fail: " +
                           detail::failing(A));
    // chi_n exponent: gamma*rho/(alpha-1) - (gamma-beta)(rho_eps+1) - 1
    const double rho = -rho_eps;
    const double chi_expo = gamma * rho / (alpha - 1.0) -
                            (gamma - beta) * (rho_eps + 1.0) - 1.0;
    const auto chi_seq = [&](int n) {
      return chi_n(nseq, eps, m, gamma, beta, L, n);
    };
    const auto trend =
        detail::confirm_limit(chi_expo, chi_seq, opt.n_max, "chi_n");
    detail::require(A, "chi_n trend (symbolic+numeric)", true, chi_expo);
    if (trend.sign < 0) {
      pred.theorem_id = TheoremId::Main3_i;
      pred.kind = PredictionKind::Value;
      value_I_beta();
      main2_normalizer();
    } else if (trend.sign > 0) {
      pred.theorem_id = TheoremId::Main3_ii;
      v_bounds(0.0, 0.0);
      ln_normalizer();
    } else {
      pred.theorem_id = TheoremId::Main3_iii;
      const auto ib = W.I(beta);
      v_bounds(trend.limit * ib.mean, trend.limit * ib.mean);
      pred.value_error = trend.limit * 4.0 * ib.stderr_;
      ln_normalizer();
    }
    return pred;
  }

  if (critical) {
    const int d = off.d();
    auto critical_window = [&]() {
      // bounds d*liminf/limsup of u^{1-gamma} omega(u), window-estimated
      const auto win = W.omega_window(opt.window_lo, opt.window_hi);
      pred.kind = PredictionKind::Heuristic;
      pred.lo = d * win.inf_est;
      pred.hi = d * win.sup_est;
      pred.value = 0.5 * (pred.lo + pred.hi);
      detail::require(A, "window estimate of u^{1-gamma} omega(u)", true,
                      win.inf_est,
                      "heuristic: liminf/limsup proxied on a finite window");
    };
    if (alpha < 1.0) {
      detail::require(A, "0 < alpha < 1", true, alpha);
      detail::require(A, "beta > 1", beta > 1, beta);
      detail::require(A, "eps_n -> infinity", eps_sign == 1,
                      static_cast<double>(eps_sign));
      if (!detail::all_ok(A))
        throw Unclassifiable("Cmain2 hypotheses fail: " + detail::failing(A));
      pred.theorem_id = TheoremId::Cmain2;
      critical_window();
      critical_normalizer();
      return pred;
    }
    detail::require(A, "1 < alpha < 2", alpha > 1 && alpha < 2, alpha);
    if (p_plus > 0.0) {
      detail::require(A, "p_+ > 0", true, p_plus);
      detail::require(A, "eps_n -> eps in (0,inf)", eps_sign == 0, eps.c);
      if (!detail::all_ok(A))
        throw Unclassifiable("Cmain3(iv) hypotheses fail: " +
                             detail::failing(A));
      pred.theorem_id = TheoremId::Cmain3_iv;
      critical_window();
      critical_normalizer();
      return pred;
    }
    detail::require(A, "p_+ = 0", p_plus == 0.0, p_plus);
    detail::require(A, "eps_n -> 0", eps_sign == -1,
                    static_cast<double>(eps_sign));
    if (!detail::all_ok(A))
      throw Unclassifiable("Cmain3(i-iii) hypotheses fail: " +
                           detail::failing(A));
    const double rho = -rho_eps;
    // pi_n exponent: l_n is regularly varying of index alpha/(alpha-1) in
    // 1/eps_n, so log_m l_n^gamma grows at gamma*rho*alpha/(alpha-1) per n;
    // the harmonic sum is slowly varying in n
    const double pi_expo =
        gamma * rho * alpha / (alpha - 1.0) + beta * rho_eps;
    const auto pi_seq = [&](int n) {
      return pi_n(nseq, eps, m, gamma, beta, L, n);
    };
    const auto trend =
        detail::confirm_limit(pi_expo, pi_seq, opt.n_max, "pi_n");
    detail::require(A, "pi_n trend (symbolic+numeric)", true, pi_expo);
    if (trend.sign < 0) {
      pred.theorem_id = TheoremId::Cmain3_i;
      critical_window();
      critical_normalizer();
    } else if (trend.sign > 0) {
      pred.theorem_id = TheoremId::Cmain3_ii;
      v_bounds(0.0, 0.0);
      ln_normalizer();
    } else {
      pred.theorem_id = TheoremId::Cmain3_iii;
      const auto win = W.omega_window(opt.window_lo, opt.window_hi);
      v_bounds(trend.limit * d * win.inf_est, trend.limit * d * win.sup_est);
      ln_normalizer();
    }
    return pred;
  }

  throw Unclassifiable(
      "no theorem covers this configuration (gamma < beta-1 needs a constant "
      "threshold; alpha in (0,1] with eps_n -> 0 is uncovered): gamma=" +
      std::to_string(gamma) + ", beta=" + std::to_string(beta) +
      ", alpha=" + std::to_string(alpha));
}

// Monte Carlo estimate of P(S_{Z_n}/Z_n >= eps_val).
struct MCEstimate {
  double p_hat = 0.0;
  std::int64_t replicates = 0;
  double stderr_ = 0.0;
  double discard_rate = 0.0;
  std::uint64_t master_seed = 0;
  double wall_time = 0.0;  // seconds
  bool unreliable = false;

  void finalize() {
    stderr_ = std::sqrt(p_hat * (1.0 - p_hat) /
                        static_cast<double>(std::max<std::int64_t>(1, replicates)));
    unreliable = p_hat * static_cast<double>(replicates) < 20.0;
  }
};

inline MCEstimate estimate_ldp(const OffspringLaw& off, const SummandLaw& law,
                               double eps_val, int n, std::int64_t replicates,
                               std::uint64_t master_seed, int workers = 1,
                               std::int64_t budget = 100000000) {
  if (n < 0) throw DomainError("estimate_ldp: n must be >= 0");
  if (replicates < 1) throw DomainError("estimate_ldp: replicates >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const auto tly = tally_replicates(
      replicates, master_seed, 0x1d9u, workers,
      [&](std::int64_t, RngStream& rng) -> int {
        const auto sim = off.simulate_Zn(n, rng, budget);
        if (sim.budget_exceeded) return -1;
        const double s =
            law.sample_S_k(sim.z, rng) / static_cast<double>(sim.z);
        return s >= eps_val ? 1 : 0;
      });
  MCEstimate out;
  out.master_seed = master_seed;
  out.replicates = replicates - tly.discards;
  out.p_hat = static_cast<double>(tly.successes) /
              static_cast<double>(std::max<std::int64_t>(1, out.replicates));
  out.discard_rate = static_cast<double>(tly.discards) /
                     static_cast<double>(replicates);
  out.finalize();
  out.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return out;
}

// Semi-exact estimate through the mixture identity
//   P(S_{Z_n}/Z_n >= eps) = sum_k P(Z_n = k) P(S_k >= eps k),
// with the inner tails exact (lattice convolution) or stratified MC.
inline MCEstimate semi_exact(const OffspringLaw& off, const SummandLaw& law,
                             double eps_val, int n, std::size_t K,
                             std::int64_t reps_per_k, std::uint64_t master_seed,
                             int workers = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pr = off.pmf_Zn(n, K);
  if (pr.tail_mass >= 1e-6)
    throw TruncationError("semi_exact: pmf tail mass " +
                          std::to_string(pr.tail_mass) + " at K=" +
                          std::to_string(K));
  CompensatedSum acc;
  double var = 0.0;
  std::int64_t total_reps = 0;
  for (std::size_t k = 1; k <= K; ++k) {
    if (pr.p[k] <= 0.0) continue;
    const auto kk = static_cast<std::int64_t>(k);
    const double x = eps_val * static_cast<double>(k);
    if (law->is_lattice()) {
      acc.add(pr.p[k] * law->exact_sum_tail(kk, x));
    } else {
      const std::int64_t hits = count_successes(
          reps_per_k, master_seed ^ (0x5e00000000ull + k), 0x5eu, workers,
          [&](std::int64_t, RngStream& rng) {
            return law.sample_S_k(kk, rng) >= x;
          });
      const double ph = static_cast<double>(hits) /
                        static_cast<double>(reps_per_k);
      acc.add(pr.p[k] * ph);
      var += pr.p[k] * pr.p[k] * ph * (1.0 - ph) /
             static_cast<double>(reps_per_k);
      total_reps += reps_per_k;
    }
  }
  MCEstimate out;
  out.p_hat = acc.value();
  out.replicates = law->is_lattice() ? 1 : total_reps;
  out.master_seed = master_seed;
  out.stderr_ = std::sqrt(var);
  out.unreliable = false;
  out.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return out;
}

// One normalized-rate sweep over n.
struct SweepRow {
  int n = 0;
  double a_n = 0.0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double normalized = 0.0;     // a_n * p_hat
  double predicted_lo = 0.0;
  double predicted_hi = 0.0;
  double z = 0.0;              // distance to the prediction in stderr units
  std::string flags;
};

struct TrendStat {
  double slope = 0.0;
  double lo = 0.0, hi = 0.0;  // 95% CI
  bool defined = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  TrendStat trend;  // slope of log(a_n p_hat) vs n
  std::string normalizer_desc;
  bool heuristic = false;
  double discard_rate = 0.0;
};

namespace detail {
inline TrendStat log_trend(const std::vector<SweepRow>& rows) {
  TrendStat t;
  std::vector<double> xs, ys;
  for (const auto& r : rows)
    if (r.normalized > 0.0) {
      xs.push_back(static_cast<double>(r.n));
      ys.push_back(std::log(r.normalized));
    }
  const std::size_t n = xs.size();
  if (n < 3) return t;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  t.slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - my - t.slope * (xs[i] - mx);
    ss += e * e;
  }
  const double se =
      std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  t.lo = t.slope - 1.96 * se;
  t.hi = t.slope + 1.96 * se;
  t.defined = true;
  return t;
}
}  // namespace detail

// Summand X = xi - m with xi distributed as Z_1, so that
// S_{Z_n}/Z_n =d Z_{n+1}/Z_n - m.  Effectively finite support: geometric
// offspring is truncated where the tail drops below 1e-16.
class ShiftedOffspringLaw : public SummandImpl {
 public:
  explicit ShiftedOffspringLaw(const OffspringLaw& off) : off_(off) {
    std::int64_t cap = off.max_support();
    if (cap > (1 << 20)) {  // geometric: truncate the far tail
      cap = 2;
      while (off.pmf(cap) > 1e-16) ++cap;
    }
    p_.assign(static_cast<std::size_t>(cap) + 1, 0.0);
    for (std::int64_t k = 1; k <= cap; ++k)
      p_[static_cast<std::size_t>(k)] = off.pmf(k);
    if (off.kind() == OffspringLaw::Kind::ZetaShift) {
      beta_ = off.beta_z();
      // P(xi > x) ~ x^{-beta} / (beta z) with z = 1/p_1
      tail_c_ = off.p1() / beta_;
    } else {
      beta_ = std::numeric_limits<double>::infinity();
      tail_c_ = 0.0;
    }
  }

  double alpha() const override { return std::min(beta_, 2.0); }
  double beta() const override { return beta_; }
  double p_plus() const override { return 1.0; }
  const SlowlyVarying& L_right() const override { return L_; }

  double cdf(double x) const override {
    double acc = 0.0;
    const double m = off_.m();
    for (std::size_t k = 1; k < p_.size(); ++k)
      if (static_cast<double>(k) - m <= x) acc += p_[k];
    return acc;
  }
  double sf(double x) const override {
    double acc = 0.0;
    const double m = off_.m();
    for (std::size_t k = 1; k < p_.size(); ++k)
      if (static_cast<double>(k) - m >= x) acc += p_[k];
    return acc;
  }
  double sample(RngStream& rng) const override {
    return static_cast<double>(off_.sample_one(rng)) - off_.m();
  }
  double mu1(double x) const override { return moment_sum(1, x); }
  double mu2(double x) const override { return moment_sum(2, x); }
  double At_plus(double t, double y) const override {
    double acc = 0.0;
    const double m = off_.m();
    for (std::size_t k = 1; k < p_.size(); ++k) {
      const double v = static_cast<double>(k) - m;
      if (v >= 0.0 && v <= y) acc += std::pow(v, t) * p_[k];
    }
    return acc;
  }
  bool symmetric() const override { return false; }
  bool has_plus_moment(double g) const override { return 1.0 + g < beta_; }
  std::string describe() const override {
    return "ShiftedOffspring(" + off_.describe() + ")";
  }

  double tail_constant() const { return tail_c_; }
  const OffspringLaw& offspring() const { return off_; }

 private:
  double moment_sum(int j, double x) const {
    double acc = 0.0;
    const double m = off_.m();
    for (std::size_t k = 1; k < p_.size(); ++k) {
      const double v = static_cast<double>(k) - m;
      if (std::fabs(v) <= x) acc += std::pow(v, j) * p_[k];
    }
    return acc;
  }
  OffspringLaw off_;
  std::vector<double> p_;
  double beta_ = 0.0, tail_c_ = 0.0;
  SlowlyVarying L_ = SlowlyVarying::constant();
};

inline SummandLaw shifted_offspring_summand(const OffspringLaw& off) {
  return SummandLaw(std::make_shared<const ShiftedOffspringLaw>(off));
}

inline SweepTable run_sweep(const RegimePrediction& pred,
                            const OffspringLaw& off, const SummandLaw& law,
                            const NormingSequence& nseq,
                            const ThresholdSequence& eps, int n_lo, int n_hi,
                            std::int64_t replicates, std::uint64_t master_seed,
                            int workers = 1) {
  if (pred.theorem_id == TheoremId::None)
    throw Unclassifiable("run_sweep: prediction is None");
  SweepTable tab;
  tab.normalizer_desc = pred.normalizer_desc;
  tab.heuristic = pred.kind == PredictionKind::Heuristic;
  double discard_acc = 0.0;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double eps_val = eps.eval(n, off.m(), nseq);
    const auto est = estimate_ldp(off, law, eps_val, n, replicates,
                                  master_seed + static_cast<std::uint64_t>(n),
                                  workers);
    SweepRow row;
    row.n = n;
    row.a_n = pred.normalizer(n);
    row.p_hat = est.p_hat;
    row.stderr_ = est.stderr_;
    row.normalized = row.a_n * est.p_hat;
    row.predicted_lo = pred.predicted_lo();
    row.predicted_hi = pred.predicted_hi();
    const double mid = 0.5 * (row.predicted_lo + row.predicted_hi);
    const double denom = row.a_n * est.stderr_;
    row.z = denom > 0 ? (row.normalized - mid) / denom : 0.0;
    if (est.unreliable) row.flags += "unreliable;";
    if (tab.heuristic) row.flags += "heuristic;";
    discard_acc = std::max(discard_acc, est.discard_rate);
    tab.rows.push_back(row);
  }
  tab.discard_rate = discard_acc;
  tab.trend = detail::log_trend(tab.rows);
  return tab;
}

// Lotka-Nagaev deviations of the offspring-mean estimator Z_{n+1}/Z_n.
enum class LotkaMode { UpperDeviation, AbsoluteDeviation, CLT };

struct LotkaResult {
  RegimePrediction pred;
  SweepTable table;
};

// Simulates the ratio directly (one process, Z_{n+1} = aggregated sum over
// Z_n parents), which equals the S_{Z_n}/Z_n construction in distribution.
inline LotkaResult lotka_nagaev(const OffspringLaw& off, double eps_or_x,
                                LotkaMode mode, int n_lo, int n_hi,
                                std::int64_t replicates,
                                std::uint64_t master_seed, int workers = 1,
                                const MartingaleLimitModel* W_in = nullptr) {
  const auto law = shifted_offspring_summand(off);
  const auto& shifted =
      static_cast<const ShiftedOffspringLaw&>(*law);
  const double beta = law->beta();
  const double gamma = off.gamma();
  const double m = off.m();
  const bool heavy = std::isfinite(beta) && beta > 1.0 && beta < 2.0;

  std::unique_ptr<MartingaleLimitModel> W_own;
  auto get_W = [&]() -> const MartingaleLimitModel& {
    if (W_in) return *W_in;
    if (!W_own) W_own = std::make_unique<MartingaleLimitModel>(off);
    return *W_own;
  };

  LotkaResult out;
  auto& pred = out.pred;

  if (mode == LotkaMode::UpperDeviation) {
    if (!heavy)
      throw DomainError(
          "lotka_nagaev: upper-deviation corollary needs P(Z_1>x) ~ x^{-beta} "
          "with beta in (1,2); this offspring law has a light tail");
    if (!(gamma > beta - 1.0))
      throw DomainError("lotka_nagaev: upper-deviation needs gamma > beta-1");
    const double eps = eps_or_x;
    if (!(eps > 0)) throw DomainError("lotka_nagaev: eps must be positive");
    const auto ib = get_W().I(beta);
    pred.theorem_id = TheoremId::Main3_iv;
    pred.kind = PredictionKind::Value;
    pred.value = ib.mean * std::pow(eps, -beta);
    pred.value_error = 4.0 * ib.stderr_ * std::pow(eps, -beta);
    const double c = shifted.tail_constant();
    pred.normalizer_desc = "m^{(beta-1)n} / L(m^n)";
    pred.normalizer = [m, beta, c](int n) {
      return std::pow(m, (beta - 1.0) * n) / c;
    };
    detail::require(pred.assumptions, "gamma > beta - 1", true,
                    gamma - (beta - 1.0));
  } else if (mode == LotkaMode::AbsoluteDeviation) {
    const bool ok = gamma < beta - 1.0 || law->has_plus_moment(gamma);
    if (!ok)
      throw DomainError(
          "lotka_nagaev: absolute-deviation corollary needs gamma < beta-1 or "
          "E[Z_1^{1+gamma}] < infinity");
    const double eps = eps_or_x;
    if (!(eps > 0)) throw DomainError("lotka_nagaev: eps must be positive");
    // value: sum_k q_k P(|S_k/k| > eps), inner tails by MC
    const std::size_t K = 400;
    const auto q = off.q_upto(K, 30);
    CompensatedSum acc;
    double var = 0.0, last = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      const auto kk = static_cast<std::int64_t>(k);
      const double x = eps * static_cast<double>(k);
      const std::int64_t reps = 4000;
      const std::int64_t hits = count_successes(
          reps, master_seed ^ (0x10caull << 16) ^ k, 0x10cau, workers,
          [&](std::int64_t, RngStream& rng) {
            return std::fabs(law.sample_S_k(kk, rng)) >= x;
          });
      const double ph =
          static_cast<double>(hits) / static_cast<double>(reps);
      last = q[k].value * ph;
      acc.add(last);
      var += q[k].value * q[k].value * ph * (1.0 - ph) /
             static_cast<double>(reps);
      if (k >= 20 && last < 1e-3 * acc.value()) break;
    }
    pred.theorem_id = TheoremId::SCmain3;
    pred.kind = PredictionKind::Value;
    pred.value = acc.value();
    pred.value_error = std::sqrt(var) + last;
    pred.normalizer_desc = "m^{gamma n}";
    pred.normalizer = [m, gamma](int n) { return std::pow(m, gamma * n); };
  } else {  // CLT
    if (!heavy)
      throw DomainError(
          "lotka_nagaev: the CLT-scale corollary needs beta in (1,2)");
    NormingSequence nseq(beta);
    const auto st = stable_attractor(law);
    const auto cal = calibrate_scale(law, nseq, st, 2000, 20000, master_seed);
    const double expo = (beta - 1.0) / beta;
    CompensatedSum acc;
    const auto& ws = get_W().W_samples();
    for (double w : ws)
      acc.add(1.0 -
              st.tail_cdf(std::pow(w, expo) * eps_or_x / cal.scale));
    pred.theorem_id = TheoremId::MainX;
    pred.kind = PredictionKind::Value;
    pred.value = acc.value() / static_cast<double>(ws.size());
    pred.normalizer_desc = "1";
    pred.normalizer = [](int) { return 1.0; };
    detail::require(pred.assumptions, "calibration KS < 0.02", cal.ks < 0.02,
                    cal.ks);
  }

  // ratio sweep
  NormingSequence bseq(heavy ? beta : 1.5);
  auto& tab = out.table;
  tab.normalizer_desc = pred.normalizer_desc;
  for (int n = n_lo; n <= n_hi; ++n) {
    const double bn = heavy ? bseq.b(std::pow(m, n)) : 1.0;
    const auto tly = tally_replicates(
        replicates, master_seed + static_cast<std::uint64_t>(n), 0x10c2u,
        workers, [&](std::int64_t, RngStream& rng) -> int {
          const auto sim = off.simulate_Zn(n, rng);
          if (sim.budget_exceeded) return -1;
          const double ratio =
              static_cast<double>(off.sample_sum(sim.z, rng)) /
              static_cast<double>(sim.z);
          switch (mode) {
            case LotkaMode::UpperDeviation:
              return ratio - m >= eps_or_x ? 1 : 0;
            case LotkaMode::AbsoluteDeviation:
              return std::fabs(ratio - m) >= eps_or_x ? 1 : 0;
            case LotkaMode::CLT:
              return std::pow(m, n) / bn * (ratio - m) <= eps_or_x ? 1 : 0;
          }
          return 0;
        });
    SweepRow row;
    row.n = n;
    const std::int64_t kept = replicates - tly.discards;
    row.p_hat = static_cast<double>(tly.successes) /
                static_cast<double>(std::max<std::int64_t>(1, kept));
    row.stderr_ = std::sqrt(row.p_hat * (1.0 - row.p_hat) /
                            static_cast<double>(std::max<std::int64_t>(1, kept)));
    row.a_n = pred.normalizer(n);
    row.normalized = row.a_n * row.p_hat;
    row.predicted_lo = pred.predicted_lo();
    row.predicted_hi = pred.predicted_hi();
    const double denom = row.a_n * row.stderr_;
    row.z = denom > 0
                ? (row.normalized - 0.5 * (row.predicted_lo + row.predicted_hi)) /
                      denom
                : 0.0;
    tab.discard_rate =
        std::max(tab.discard_rate, static_cast<double>(tly.discards) /
                                       static_cast<double>(replicates));
    tab.rows.push_back(row);
  }
  tab.trend = detail::log_trend(tab.rows);
  return out;
}

}  // namespace gwdev

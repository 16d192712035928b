#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gwdev/ldp.hpp"

using namespace gwdev;

namespace {

SummandLaw sym_pareto(double ab) {
  return SummandLaw(HeavyTailLaw::symmetric_pareto(ab));
}
SummandLaw left_heavy(double a, double b) {
  return SummandLaw(HeavyTailLaw::left_heavy(a, b));
}
SummandLaw rademacher() { return SummandLaw(LatticeLaw::rademacher()); }

const MartingaleLimitModel& geom_W() {
  static const MartingaleLimitModel W(OffspringLaw::geom_shift(0.5));
  return W;
}
const MartingaleLimitModel& binary_W() {
  static const MartingaleLimitModel W(OffspringLaw::binary(0.5));
  return W;
}

MartingaleLimitModel small_W(const OffspringLaw& off) {
  MartingaleLimitModel::Options o;
  o.N = 10;
  o.n_samples = 2000;
  return MartingaleLimitModel(off, o);
}

// Direct one-process ratio simulation, used as an independent oracle for
// both estimate_ldp (via the sum construction) and lotka_nagaev.
MCEstimate ratio_mc(const OffspringLaw& off, double eps, int n,
                    std::int64_t reps, std::uint64_t seed, bool absolute) {
  const double m = off.m();
  const std::int64_t hits = count_successes(
      reps, seed, 0x7e57u, 1, [&](std::int64_t, RngStream& rng) {
        const auto sim = off.simulate_Zn(n, rng);
        const double r = static_cast<double>(off.sample_sum(sim.z, rng)) /
                         static_cast<double>(sim.z);
        const double dev = r - m;
        return (absolute ? std::fabs(dev) : dev) >= eps;
      });
  MCEstimate out;
  out.replicates = reps;
  out.p_hat = static_cast<double>(hits) / static_cast<double>(reps);
  out.finalize();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// estimate_ldp
// ---------------------------------------------------------------------------

TEST_CASE("estimate_ldp: trivial thresholds give p_hat = 1 and ~0") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  const auto est = estimate_ldp(off, law, -1e9, 2, 2000, 42);
  CHECK(est.p_hat == 1.0);
  CHECK(est.discard_rate == 0.0);
  const auto hi = estimate_ldp(off, law, 1e12, 2, 2000, 42);
  CHECK(hi.p_hat == 0.0);
  CHECK(hi.unreliable);
}

TEST_CASE("estimate_ldp: symmetric summand at eps = 0 gives one half") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  const auto est = estimate_ldp(off, law, 0.0, 3, 40000, 7);
  CHECK(std::fabs(est.p_hat - 0.5) <= 4.0 * est.stderr_);
}

TEST_CASE("estimate_ldp: deterministic and worker-count independent") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  const auto a = estimate_ldp(off, law, 0.8, 3, 5000, 99, 1);
  const auto b = estimate_ldp(off, law, 0.8, 3, 5000, 99, 3);
  CHECK(a.p_hat == b.p_hat);
  const auto c = estimate_ldp(off, law, 0.8, 3, 5000, 100, 1);
  CHECK(a.p_hat != c.p_hat);
}

TEST_CASE("estimate_ldp: monotone in eps under common random numbers") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  const auto lo = estimate_ldp(off, law, 0.5, 3, 5000, 11);
  const auto hi = estimate_ldp(off, law, 1.5, 3, 5000, 11);
  CHECK(lo.p_hat >= hi.p_hat);
}

TEST_CASE("estimate_ldp agrees with the direct Z_{n+1}/Z_n ratio simulation") {
  // S_{Z_n}/Z_n with X = xi - m equals Z_{n+1}/Z_n - m in distribution
  const auto off = OffspringLaw::binary(0.5);
  const auto law = shifted_offspring_summand(off);
  const double eps = 0.3;
  const auto a = estimate_ldp(off, law, eps, 3, 40000, 5);
  const auto b = ratio_mc(off, eps, 3, 40000, 6, /*absolute=*/false);
  const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
  CHECK(std::fabs(a.p_hat - b.p_hat) <= 5.0 * se);
}

// ---------------------------------------------------------------------------
// semi_exact
// ---------------------------------------------------------------------------

TEST_CASE("semi_exact: exact hand value for Binary(1/2), n=2, Rademacher") {
  // P(S_{Z_2}/Z_2 >= 0.9) = sum_k P(Z_2=k) 2^{-k} over the Z_2 pmf
  // {1/4, 3/8, 1/4, 1/8} on k=1..4: 33/128.
  const auto off = OffspringLaw::binary(0.5);
  const auto est = semi_exact(off, rademacher(), 0.9, 2, 8, 1, 1);
  CHECK(est.p_hat == doctest::Approx(33.0 / 128.0).epsilon(1e-12));
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("semi_exact: n=0 reduces to a single summand") {
  const auto off = OffspringLaw::binary(0.5);
  const auto est = semi_exact(off, rademacher(), 0.5, 0, 2, 1, 1);
  CHECK(est.p_hat == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("semi_exact: truncation guard fires on undersized support") {
  const auto off = OffspringLaw::geom_shift(0.5);
  CHECK_THROWS_AS(semi_exact(off, rademacher(), 0.5, 10, 4, 1, 1),
                  TruncationError);
}

TEST_CASE("mixture identity: semi_exact matches the direct MC estimate") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  const auto direct = estimate_ldp(off, law, 0.7, 3, 40000, 21);
  const auto mix = semi_exact(off, law, 0.7, 3, 20, 20000, 22);
  const double se = std::sqrt(direct.stderr_ * direct.stderr_ +
                              mix.stderr_ * mix.stderr_);
  CHECK(std::fabs(direct.p_hat - mix.p_hat) <= 4.0 * se);
}

// ---------------------------------------------------------------------------
// classify_regime
// ---------------------------------------------------------------------------

TEST_CASE("classify: alpha mismatch between law and norming is a ConfigError") {
  const auto off = OffspringLaw::binary(0.5);
  CHECK_THROWS_AS(classify_regime(off, sym_pareto(1.5), NormingSequence(1.2),
                                  ThresholdSequence::constant(1.0), binary_W()),
                  ConfigError);
}

TEST_CASE("classify: diverging threshold with alpha < 1 lands on the pure "
          "heavy-tail value regime") {
  const auto off = OffspringLaw::geom_shift(0.5);  // gamma = 1
  const auto law = SummandLaw(HeavyTailLaw::one_sided_unit(0.8));
  const auto eps = ThresholdSequence::diverging(1.0, 0.5);
  const auto pred =
      classify_regime(off, law, NormingSequence(0.8), eps, geom_W());
  CHECK(pred.theorem_id == TheoremId::Main2);
  CHECK(pred.kind == PredictionKind::Value);
  CHECK(pred.value > 0.0);
  CHECK(std::string(theorem_name(pred.theorem_id)) == "Main2");
  // normalizer m^{(b-1)n} eps_n^b / L: decreasing here since eps_n^0.8 m^{-0.2n}
  CHECK(pred.normalizer(4) > 0.0);
  CHECK(std::isfinite(pred.normalizer(10)));
}

TEST_CASE("classify: vanishing-threshold trichotomy on gamma > beta-1") {
  const auto law = left_heavy(1.5, 1.8);  // alpha 1.5, beta 1.8, p_+ = 0
  const NormingSequence nseq(1.5);

  SUBCASE("chi_n -> 0 gives the same value constant as the diverging case") {
    const auto off = OffspringLaw::binary(0.5);  // gamma ~ 1.71
    const auto eps = ThresholdSequence::geometric_decay(1.0, 0.1);
    const auto pred = classify_regime(off, law, nseq, eps, binary_W());
    CHECK(pred.theorem_id == TheoremId::Main3_i);
    CHECK(pred.kind == PredictionKind::Value);
    CHECK(pred.value > 0.0);
  }

  SUBCASE("chi_n -> infinity gives window bounds, tagged heuristic") {
    const auto off = OffspringLaw::geom_shift(0.5);  // gamma = 1
    const auto eps = ThresholdSequence::geometric_decay(1.0, 0.25);
    const auto pred = classify_regime(off, law, nseq, eps, geom_W());
    CHECK(pred.theorem_id == TheoremId::Main3_ii);
    CHECK(pred.kind == PredictionKind::Heuristic);
    CHECK(pred.lo > 0.0);
    CHECK(pred.lo <= pred.hi);
    CHECK(pred.predicted_lo() == pred.lo);
  }

  SUBCASE("chi_n -> y in (0,inf) adds y * I_beta to both window bounds") {
    const auto off = OffspringLaw::geom_shift(0.5);
    const auto eps = ThresholdSequence::geometric_decay(1.0, 1.0 / 6.0);
    const auto pred = classify_regime(off, law, nseq, eps, geom_W());
    CHECK(pred.theorem_id == TheoremId::Main3_iii);
    CHECK(pred.kind == PredictionKind::Heuristic);
    CHECK(pred.lo > 0.0);
    CHECK(pred.lo <= pred.hi);
    // the additive term must push the bounds above the pure window regime
    const auto eps2 = ThresholdSequence::geometric_decay(1.0, 0.25);
    const auto base = classify_regime(off, law, nseq, eps2, geom_W());
    CHECK(pred.lo > base.lo);
  }
}

TEST_CASE("classify: constant threshold with p_+ > 0 keeps the value form") {
  const auto off = OffspringLaw::geom_shift(0.5);
  const auto law = sym_pareto(1.5);  // p_+ = 1/2, gamma=1 > beta-1=0.5
  const auto pred = classify_regime(off, law, NormingSequence(1.5),
                                    ThresholdSequence::constant(2.0), geom_W());
  CHECK(pred.theorem_id == TheoremId::Main3_iv);
  CHECK(pred.kind == PredictionKind::Value);
  CHECK(pred.value > 0.0);
}

TEST_CASE("classify: critical line gamma = beta - 1") {
  SUBCASE("alpha < 1 with diverging threshold: window bounds with the period") {
    const auto off = OffspringLaw::geom_shift(0.5);  // gamma = 1, d = 1
    const auto law = left_heavy(0.8, 2.0);           // beta - 1 = 1 = gamma
    const auto eps = ThresholdSequence::diverging(1.0, 0.5);
    const auto pred =
        classify_regime(off, law, NormingSequence(0.8), eps, geom_W());
    CHECK(pred.theorem_id == TheoremId::Cmain2);
    CHECK(pred.kind == PredictionKind::Heuristic);
    CHECK(pred.lo > 0.0);
    CHECK(pred.lo <= pred.hi);
    CHECK(std::isfinite(pred.normalizer(6)));
  }

  SUBCASE("alpha in (1,2), p_+ = 0, eps -> 0: pi_n diverges for geometric "
          "thresholds (l_n^gamma outruns eps_n^beta on the critical line)") {
    const auto off = OffspringLaw::geom_shift(0.5);
    const auto law = left_heavy(1.5, 2.0);
    const auto eps = ThresholdSequence::geometric_decay(1.0, 0.2);
    const auto pred =
        classify_regime(off, law, NormingSequence(1.5), eps, geom_W());
    CHECK(pred.theorem_id == TheoremId::Cmain3_ii);
    CHECK(pred.kind == PredictionKind::Heuristic);
    CHECK(pred.lo > 0.0);
    CHECK(pred.lo <= pred.hi);
  }
}

TEST_CASE("classify: finite plus-moment summand with constant threshold gives "
          "the series value, cross-checked against semi_exact") {
  const auto off = OffspringLaw::binary(0.5);  // m^gamma = 2 exactly
  const auto law = rademacher();
  const auto pred = classify_regime(off, law, NormingSequence(2.0),
                                    ThresholdSequence::constant(0.9),
                                    binary_W());
  CHECK(pred.theorem_id == TheoremId::SCmain3);
  CHECK(pred.kind == PredictionKind::Value);
  CHECK(pred.value > 0.0);
  // m^{gamma n} P(S_{Z_n}/Z_n >= eps) at n=8 should already sit near the limit
  const auto se = semi_exact(off, law, 0.9, 8, 300, 1, 1);
  const double a_n = pred.normalizer(8);
  CHECK(a_n == doctest::Approx(256.0).epsilon(1e-10));
  CHECK(a_n * se.p_hat == doctest::Approx(pred.value).epsilon(0.05));
}

TEST_CASE("classify: CLT-scale threshold pins x and yields a probability") {
  const auto off = OffspringLaw::geom_shift(0.5);
  const auto law = sym_pareto(1.5);
  const auto pred = classify_regime(off, law, NormingSequence(1.5),
                                    ThresholdSequence::clt_scale(0.0),
                                    geom_W());
  CHECK(pred.theorem_id == TheoremId::MainX);
  CHECK(pred.kind == PredictionKind::Value);
  // symmetric attractor at x = 0: exactly one half up to table resolution
  CHECK(pred.value == doctest::Approx(0.5).epsilon(0.01));
  CHECK(pred.normalizer(7) == 1.0);
}

TEST_CASE("classify: refusals") {
  SUBCASE("alpha < 1 with a vanishing threshold is uncovered") {
    const auto off = OffspringLaw::geom_shift(0.5);
    const auto law = SummandLaw(HeavyTailLaw::one_sided_unit(0.8));
    const auto eps = ThresholdSequence::geometric_decay(1.0, 0.1);
    CHECK_THROWS_AS(
        classify_regime(off, law, NormingSequence(0.8), eps, geom_W()),
        Unclassifiable);
  }
  SUBCASE("finite nonzero ratio limit must be declared via CLTScale") {
    const auto off = OffspringLaw::geom_shift(0.5);
    const auto law = sym_pareto(1.5);
    const auto eps = ThresholdSequence::geometric_decay(1.0, 1.0 / 3.0);
    CHECK_THROWS_AS(
        classify_regime(off, law, NormingSequence(1.5), eps, geom_W()),
        Unclassifiable);
  }
}

// ---------------------------------------------------------------------------
// run_sweep
// ---------------------------------------------------------------------------

TEST_CASE("run_sweep: rows, normalizers and trend bookkeeping") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = left_heavy(1.5, 1.8);
  const NormingSequence nseq(1.5);
  const auto eps = ThresholdSequence::geometric_decay(1.0, 0.1);
  const auto pred = classify_regime(off, law, nseq, eps, binary_W());
  const auto tab = run_sweep(pred, off, law, nseq, eps, 3, 6, 4000, 77);
  REQUIRE(tab.rows.size() == 4);
  CHECK_FALSE(tab.heuristic);
  for (const auto& r : tab.rows) {
    CHECK(r.a_n == doctest::Approx(pred.normalizer(r.n)));
    CHECK(r.p_hat >= 0.0);
    CHECK(r.p_hat <= 1.0);
    CHECK(r.predicted_lo == pred.value);
    CHECK(r.normalized == r.a_n * r.p_hat);
  }
  CHECK(tab.trend.defined);
  CHECK(tab.trend.lo <= tab.trend.slope);
  CHECK(tab.trend.slope <= tab.trend.hi);

  SUBCASE("sweep rows are reproducible under the same master seed") {
    const auto tab2 = run_sweep(pred, off, law, nseq, eps, 3, 6, 4000, 77);
    for (std::size_t i = 0; i < tab.rows.size(); ++i)
      CHECK(tab.rows[i].p_hat == tab2.rows[i].p_hat);
  }
}

TEST_CASE("run_sweep refuses an empty prediction") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = sym_pareto(1.5);
  RegimePrediction none;
  CHECK_THROWS_AS(run_sweep(none, off, law, NormingSequence(1.5),
                            ThresholdSequence::constant(1.0), 1, 2, 10, 1),
                  Unclassifiable);
}

// ---------------------------------------------------------------------------
// shifted offspring summand
// ---------------------------------------------------------------------------

TEST_CASE("shifted offspring summand: centering and tail metadata") {
  const auto off = OffspringLaw::binary(0.5);
  const auto law = shifted_offspring_summand(off);
  CHECK(law->sf(0.5) == doctest::Approx(0.5));   // xi = 2
  CHECK(law->cdf(-0.5) == doctest::Approx(0.5)); // xi = 1
  CHECK(law->mu1(10.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(law->mu2(10.0) == doctest::Approx(0.25));
  CHECK(law->has_plus_moment(5.0));
  CHECK(!std::isfinite(law->beta()));

  const auto zoff = OffspringLaw::zeta_shift(1.2, 50);
  const auto zlaw = shifted_offspring_summand(zoff);
  CHECK(zlaw->beta() == doctest::Approx(1.2));
  CHECK(zlaw->alpha() == doctest::Approx(1.2));
  CHECK(zlaw->p_plus() == 1.0);
  CHECK_FALSE(zlaw->has_plus_moment(zoff.gamma()));
  RngStream rng(1, 2);
  double mean = 0.0;
  const int N = 200000;
  for (int i = 0; i < N; ++i) mean += zlaw->sample(rng);
  mean /= N;
  CHECK(std::fabs(mean) < 0.02);  // centered at zero by construction
}

// ---------------------------------------------------------------------------
// lotka_nagaev
// ---------------------------------------------------------------------------

TEST_CASE("lotka_nagaev: hypothesis gates") {
  const auto bin = OffspringLaw::binary(0.5);
  CHECK_THROWS_AS(lotka_nagaev(bin, 1.0, LotkaMode::UpperDeviation, 2, 3, 100,
                               1),
                  DomainError);
  CHECK_THROWS_AS(lotka_nagaev(bin, 0.0, LotkaMode::CLT, 2, 3, 100, 1),
                  DomainError);
  // heavy tail but gamma < beta - 1: the upper-deviation form does not apply
  const auto z18 = OffspringLaw::zeta_shift(1.8, 100);
  CHECK_THROWS_AS(lotka_nagaev(z18, 1.0, LotkaMode::UpperDeviation, 2, 3, 100,
                               1),
                  DomainError);
  // absolute-deviation needs gamma < beta-1 or the (1+gamma)-moment
  const auto z12 = OffspringLaw::zeta_shift(1.2, 50);
  CHECK_THROWS_AS(lotka_nagaev(z12, 0.5, LotkaMode::AbsoluteDeviation, 2, 3,
                               100, 1),
                  DomainError);
}

TEST_CASE("lotka_nagaev: upper deviations of the ratio estimator") {
  const auto off = OffspringLaw::zeta_shift(1.2, 50);
  REQUIRE(off.gamma() > 0.2);  // gamma > beta - 1 holds for this truncation
  const auto W = small_W(off);
  const auto res = lotka_nagaev(off, 1.0, LotkaMode::UpperDeviation, 3, 3,
                                30000, 31, 1, &W);
  CHECK(res.pred.theorem_id == TheoremId::Main3_iv);
  CHECK(res.pred.value > 0.0);
  REQUIRE(res.table.rows.size() == 1);
  const auto& row = res.table.rows[0];
  CHECK(row.p_hat > 0.0);
  // the ratio sweep must agree with the equivalent sum construction
  const auto sum_form =
      estimate_ldp(off, shifted_offspring_summand(off), 1.0, 3, 30000, 32);
  const double se = std::sqrt(row.stderr_ * row.stderr_ +
                              sum_form.stderr_ * sum_form.stderr_);
  CHECK(std::fabs(row.p_hat - sum_form.p_hat) <= 5.0 * se);
}

TEST_CASE("lotka_nagaev: absolute deviations against an independent MC") {
  const auto off = OffspringLaw::binary(0.5);
  const auto res = lotka_nagaev(off, 0.4, LotkaMode::AbsoluteDeviation, 2, 4,
                                30000, 41);
  CHECK(res.pred.theorem_id == TheoremId::SCmain3);
  CHECK(res.pred.value > 0.0);
  REQUIRE(res.table.rows.size() == 3);
  const auto& row = res.table.rows[1];  // n = 3
  const auto ref = ratio_mc(off, 0.4, 3, 30000, 42, /*absolute=*/true);
  const double se =
      std::sqrt(row.stderr_ * row.stderr_ + ref.stderr_ * ref.stderr_);
  CHECK(std::fabs(row.p_hat - ref.p_hat) <= 5.0 * se);
  // normalizer is m^{gamma n}
  CHECK(row.a_n == doctest::Approx(std::pow(off.m(), off.gamma() * 3)));
}

TEST_CASE("lotka_nagaev: CLT scale is monotone in x and probability-valued") {
  // Truncating the offspring tail at k_trunc and recentering biases every
  // summand by about p1/(beta-1) * k_trunc^(1-beta), and the bias in the
  // normalized sum grows like k^(1-1/beta); k_trunc must be large enough to
  // keep that below the calibration tolerance at the calibration horizon.
  const auto off = OffspringLaw::zeta_shift(1.5, 200000);
  MartingaleLimitModel::Options wo;
  wo.N = 8;
  wo.n_samples = 2000;
  wo.phi_grid_points = 2;  // only the W samples are needed here
  const MartingaleLimitModel W(off, wo);
  const auto lo = lotka_nagaev(off, -1.0, LotkaMode::CLT, 4, 4, 20000, 51, 1,
                               &W);
  const auto hi = lotka_nagaev(off, 1.0, LotkaMode::CLT, 4, 4, 20000, 51, 1,
                               &W);
  CHECK(lo.pred.theorem_id == TheoremId::MainX);
  CHECK(lo.pred.value > 0.0);
  CHECK(hi.pred.value < 1.0);
  CHECK(lo.pred.value < hi.pred.value);
  REQUIRE(lo.table.rows.size() == 1);
  CHECK(lo.table.rows[0].p_hat < hi.table.rows[0].p_hat);
}

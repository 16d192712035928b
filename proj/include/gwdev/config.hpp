#pragma once

// Experiment configuration: JSON -> library objects, with every default
// materialized into a resolved echo so a run can be reproduced from its own
// output.  The grammar is documented in schema/config.schema.json.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwdev/errors.hpp"
#include "gwdev/ldp.hpp"
#include "gwdev/martingale.hpp"
#include "gwdev/norming.hpp"
#include "gwdev/offspring.hpp"
#include "gwdev/slowly_varying.hpp"
#include "gwdev/summand.hpp"

namespace gwdev {

using json = nlohmann::json;

namespace cfg_detail {

inline const json& need(const json& j, const std::string& key,
                        const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(where + ": missing required field '" + key + "'");
  return *it;
}

inline double num(const json& j, const std::string& key,
                  const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number())
    throw ConfigError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double def) {
  const auto it = j.find(key);
  if (it == j.end()) return def;
  if (!it->is_number())
    throw ConfigError("field '" + key + "' must be a number");
  return it->get<double>();
}

inline std::string str(const json& j, const std::string& key,
                       const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string())
    throw ConfigError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace cfg_detail

// --- piecewise builders -----------------------------------------------------

inline SlowlyVarying make_slowly_varying(const json& j) {
  if (j.is_null()) return SlowlyVarying::constant();
  const std::string kind = cfg_detail::str(j, "kind", "L");
  const double c = cfg_detail::num_or(j, "c", 1.0);
  const double delta = cfg_detail::num_or(j, "delta", 0.0);
  if (kind == "constant") return SlowlyVarying::constant(c);
  if (kind == "log_power") return SlowlyVarying::log_power(c, delta);
  if (kind == "log_log_power") return SlowlyVarying::log_log_power(c, delta);
  throw ConfigError("L: unknown kind '" + kind +
                    "' (expected constant | log_power | log_log_power)");
}

inline json echo_slowly_varying(const SlowlyVarying& L) {
  json j;
  switch (L.kind) {
    case SlowlyVarying::Kind::Constant: j["kind"] = "constant"; break;
    case SlowlyVarying::Kind::LogPower: j["kind"] = "log_power"; break;
    case SlowlyVarying::Kind::LogLogPower: j["kind"] = "log_log_power"; break;
  }
  j["c"] = L.c;
  j["delta"] = L.delta;
  return j;
}

inline OffspringLaw make_offspring(const json& j) {
  using namespace cfg_detail;
  const std::string kind = str(j, "kind", "offspring");
  if (kind == "binary") return OffspringLaw::binary(num(j, "p", "offspring"));
  if (kind == "geom_shift")
    return OffspringLaw::geom_shift(num(j, "a", "offspring"));
  if (kind == "two_point") {
    const int i = static_cast<int>(num_or(j, "i", 1.0));
    const int jj = static_cast<int>(num(j, "j", "offspring"));
    if (i < 1)
      throw ConfigError(
          "offspring: supercritical Schroeder laws require p0 = 0 and "
          "0 < p1 < 1; two_point support must start at i = 1");
    return OffspringLaw::two_point(i, jj, num(j, "p", "offspring"));
  }
  if (kind == "zeta_shift")
    return OffspringLaw::zeta_shift(num(j, "beta", "offspring"),
                                    static_cast<int>(num(j, "k_trunc",
                                                         "offspring")));
  throw ConfigError("offspring: unknown kind '" + kind +
                    "' (expected binary | geom_shift | two_point | "
                    "zeta_shift)");
}

inline json echo_offspring(const json& j) {
  using namespace cfg_detail;
  json out;
  const std::string kind = str(j, "kind", "offspring");
  out["kind"] = kind;
  if (kind == "binary") out["p"] = num(j, "p", "offspring");
  if (kind == "geom_shift") out["a"] = num(j, "a", "offspring");
  if (kind == "two_point") {
    out["i"] = static_cast<int>(num_or(j, "i", 1.0));
    out["j"] = static_cast<int>(num(j, "j", "offspring"));
    out["p"] = num(j, "p", "offspring");
  }
  if (kind == "zeta_shift") {
    out["beta"] = num(j, "beta", "offspring");
    out["k_trunc"] = static_cast<int>(num(j, "k_trunc", "offspring"));
  }
  return out;
}

inline bool is_lotka_marker(const json& j) {
  return j.is_object() && j.contains("kind") && j["kind"].is_string() &&
         j["kind"].get<std::string>() == "lotka-nagaev";
}

inline SummandLaw make_summand(const json& j) {
  using namespace cfg_detail;
  const std::string kind = str(j, "kind", "summand");
  const SlowlyVarying L =
      make_slowly_varying(j.contains("L") ? j["L"] : json());
  if (kind == "symmetric_pareto")
    return SummandLaw(HeavyTailLaw::symmetric_pareto(
        num(j, "alpha", "summand"), num_or(j, "x0", 1.0), L));
  if (kind == "one_sided")
    return SummandLaw(HeavyTailLaw::one_sided(num(j, "beta", "summand"), L,
                                              num_or(j, "x0", 1.0),
                                              num_or(j, "tail_mass", 0.5)));
  if (kind == "one_sided_unit")
    return SummandLaw(HeavyTailLaw::one_sided_unit(
        num(j, "beta", "summand"), L, num_or(j, "tail_mass", 0.5)));
  if (kind == "left_heavy")
    return SummandLaw(HeavyTailLaw::left_heavy(
        num(j, "alpha", "summand"), num(j, "beta", "summand"),
        num_or(j, "x0", 1.0), num_or(j, "tail_mass", 0.8)));
  if (kind == "lattice")
    return SummandLaw(std::make_shared<const LatticeLaw>(
        num(j, "a", "summand"), num(j, "b", "summand"),
        num(j, "p", "summand")));
  if (kind == "rademacher") return SummandLaw(LatticeLaw::rademacher());
  throw ConfigError("summand: unknown kind '" + kind +
                    "' (expected symmetric_pareto | one_sided | "
                    "one_sided_unit | left_heavy | lattice | rademacher | "
                    "lotka-nagaev)");
}

inline json echo_summand(const json& j) {
  using namespace cfg_detail;
  json out;
  const std::string kind = str(j, "kind", "summand");
  out["kind"] = kind;
  if (kind == "lotka-nagaev") return out;
  if (kind == "symmetric_pareto") {
    out["alpha"] = num(j, "alpha", "summand");
    out["x0"] = num_or(j, "x0", 1.0);
  }
  if (kind == "one_sided") {
    out["beta"] = num(j, "beta", "summand");
    out["x0"] = num_or(j, "x0", 1.0);
    out["tail_mass"] = num_or(j, "tail_mass", 0.5);
  }
  if (kind == "one_sided_unit") {
    out["beta"] = num(j, "beta", "summand");
    out["tail_mass"] = num_or(j, "tail_mass", 0.5);
  }
  if (kind == "left_heavy") {
    out["alpha"] = num(j, "alpha", "summand");
    out["beta"] = num(j, "beta", "summand");
    out["x0"] = num_or(j, "x0", 1.0);
    out["tail_mass"] = num_or(j, "tail_mass", 0.8);
  }
  if (kind == "lattice") {
    out["a"] = num(j, "a", "summand");
    out["b"] = num(j, "b", "summand");
    out["p"] = num(j, "p", "summand");
  }
  if (kind != "lattice" && kind != "rademacher")
    out["L"] = echo_slowly_varying(
        make_slowly_varying(j.contains("L") ? j["L"] : json()));
  return out;
}

inline ThresholdSequence make_threshold(const json& j) {
  using namespace cfg_detail;
  const std::string kind = str(j, "kind", "threshold");
  if (kind == "constant")
    return ThresholdSequence::constant(num(j, "eps", "threshold"));
  if (kind == "geometric_decay")
    return ThresholdSequence::geometric_decay(num_or(j, "c", 1.0),
                                              num(j, "rho", "threshold"));
  if (kind == "clt_scale")
    return ThresholdSequence::clt_scale(num(j, "x", "threshold"));
  if (kind == "diverging") {
    const std::string base = j.contains("base")
                                 ? j["base"].get<std::string>()
                                 : std::string("m");
    if (base != "m" && base != "n")
      throw ConfigError("threshold: diverging base must be 'm' or 'n'");
    return ThresholdSequence::diverging(
        num_or(j, "c", 1.0), num(j, "rho", "threshold"),
        base == "m" ? ThresholdSequence::DivergingBase::PowerOfM
                    : ThresholdSequence::DivergingBase::PowerOfN);
  }
  throw ConfigError("threshold: unknown kind '" + kind +
                    "' (expected constant | geometric_decay | clt_scale | "
                    "diverging)");
}

inline json echo_threshold(const json& j) {
  using namespace cfg_detail;
  json out;
  const std::string kind = str(j, "kind", "threshold");
  out["kind"] = kind;
  if (kind == "constant") out["eps"] = num(j, "eps", "threshold");
  if (kind == "geometric_decay") {
    out["c"] = num_or(j, "c", 1.0);
    out["rho"] = num(j, "rho", "threshold");
  }
  if (kind == "clt_scale") out["x"] = num(j, "x", "threshold");
  if (kind == "diverging") {
    out["c"] = num_or(j, "c", 1.0);
    out["rho"] = num(j, "rho", "threshold");
    out["base"] =
        j.contains("base") ? j["base"].get<std::string>() : std::string("m");
  }
  return out;
}

// --- the experiment config ---------------------------------------------------

struct ExperimentConfig {
  std::string mode;
  json offspring_spec, summand_spec, threshold_spec;
  bool lotka = false;  // summand carries the lotka-nagaev marker

  double norming_alpha = 0.0;  // 0 = derive from the summand law
  json norming_s;              // slowly varying factor of b

  int n_lo = 1, n_hi = 4;
  std::int64_t replicates = 100000;
  std::uint64_t master_seed = 20240901;
  int workers = 1;
  std::string out_dir = "out";
  std::string format = "both";  // csv | json | both

  // W model knobs
  int w_N = 18;
  std::int64_t w_samples = 200000;
  std::int64_t w_phi_grid = 481;

  ClassifyOptions classify;

  // mode-specific blocks, kept as raw JSON with defaults applied at use site
  json lotka_spec;           // {"mode": upper|absolute|clt, "x": double}
  json bounds_spec;          // {"kinds": [...], "ks": [...], "x_over_k": [...],
                             //  "r": 2.0, "t": 0.9, "y_over_x": 0.5}
  json verify_moments_spec;  // {"ts": [...], "eps": 1.0, "n": 12,
                             //  "tol": 0.02, "tol_critical": 0.05,
                             //  "include_critical": bool, "n_critical": 14}

  json resolved;  // full echo with every default materialized

  static const std::vector<std::string>& modes() {
    static const std::vector<std::string> m = {
        "predict", "simulate",       "sweep",
        "bounds",  "verify-moments", "lotka-nagaev"};
    return m;
  }

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::string& path);

  OffspringLaw offspring() const { return make_offspring(offspring_spec); }
  SummandLaw summand() const {
    if (lotka)
      return shifted_offspring_summand(offspring());
    return make_summand(summand_spec);
  }
  ThresholdSequence threshold() const {
    return make_threshold(threshold_spec);
  }
  NormingSequence norming() const {
    double a = norming_alpha;
    if (a == 0.0) a = summand()->alpha();
    return NormingSequence(a, make_slowly_varying(norming_s));
  }
  MartingaleLimitModel::Options w_options() const {
    MartingaleLimitModel::Options o;
    o.N = w_N;
    o.n_samples = static_cast<std::size_t>(w_samples);
    o.master_seed = master_seed;
    o.phi_grid_points = static_cast<std::size_t>(w_phi_grid);
    return o;
  }
};

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
  using namespace cfg_detail;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig c;
  c.mode = str(j, "mode", "config");
  bool known = false;
  for (const auto& m : modes()) known = known || m == c.mode;
  if (!known)
    throw ConfigError("config: unknown mode '" + c.mode +
                      "' (expected predict | simulate | sweep | bounds | "
                      "verify-moments | lotka-nagaev)");

  c.offspring_spec = need(j, "offspring", "config");
  c.offspring();  // validate eagerly

  const bool needs_summand =
      c.mode != "verify-moments" && c.mode != "lotka-nagaev";
  if (j.contains("summand")) {
    c.summand_spec = j["summand"];
    c.lotka = is_lotka_marker(c.summand_spec);
    if (!c.lotka) make_summand(c.summand_spec);  // validate
  } else if (needs_summand) {
    throw ConfigError("config: missing required field 'summand' for mode " +
                      c.mode);
  } else {
    c.summand_spec = json{{"kind", "lotka-nagaev"}};
    c.lotka = true;
  }
  if (c.mode == "lotka-nagaev" && !c.lotka)
    throw ConfigError(
        "config: mode lotka-nagaev requires summand kind 'lotka-nagaev'");

  const bool needs_threshold =
      c.mode == "predict" || c.mode == "simulate" || c.mode == "sweep";
  if (j.contains("threshold")) {
    c.threshold_spec = j["threshold"];
    make_threshold(c.threshold_spec);  // validate
  } else if (needs_threshold) {
    throw ConfigError("config: missing required field 'threshold' for mode " +
                      c.mode);
  }

  if (j.contains("norming")) {
    const json& nj = j["norming"];
    c.norming_alpha = num_or(nj, "alpha", 0.0);
    if (nj.contains("s")) c.norming_s = nj["s"];
  }

  if (j.contains("n_range")) {
    const json& r = j["n_range"];
    if (!r.is_array() || r.size() != 2)
      throw ConfigError("config: n_range must be [lo, hi]");
    c.n_lo = r[0].get<int>();
    c.n_hi = r[1].get<int>();
    if (c.n_lo < 0 || c.n_hi < c.n_lo)
      throw ConfigError("config: n_range must satisfy 0 <= lo <= hi");
  }
  c.replicates =
      static_cast<std::int64_t>(num_or(j, "replicates", 100000.0));
  if (c.replicates < 1)
    throw ConfigError("config: replicates must be >= 1");
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_unsigned() &&
        !j["master_seed"].is_number_integer())
      throw ConfigError("config: master_seed must be an unsigned integer");
    c.master_seed = j["master_seed"].get<std::uint64_t>();
  }
  c.workers = static_cast<int>(num_or(j, "workers", 1.0));
  if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  if (j.contains("format")) c.format = j["format"].get<std::string>();
  if (c.format != "csv" && c.format != "json" && c.format != "both")
    throw ConfigError("config: format must be csv | json | both");

  if (j.contains("w_model")) {
    const json& w = j["w_model"];
    c.w_N = static_cast<int>(num_or(w, "N", 18.0));
    c.w_samples =
        static_cast<std::int64_t>(num_or(w, "n_samples", 200000.0));
    c.w_phi_grid =
        static_cast<std::int64_t>(num_or(w, "phi_grid_points", 481.0));
  }

  if (j.contains("classify")) {
    const json& cl = j["classify"];
    c.classify.n_max = static_cast<int>(num_or(cl, "n_max", 20.0));
    c.classify.window_lo = num_or(cl, "window_lo", 0.01);
    c.classify.window_hi = num_or(cl, "window_hi", 0.1);
    c.classify.calib_k = static_cast<int>(num_or(cl, "calib_k", 2000.0));
    c.classify.calib_samples = static_cast<std::size_t>(
        num_or(cl, "calib_samples", 20000.0));
    c.classify.sc_k_max =
        static_cast<std::size_t>(num_or(cl, "sc_k_max", 2000.0));
    c.classify.sc_reps_per_k = static_cast<std::int64_t>(
        num_or(cl, "sc_reps_per_k", 4000.0));
  }
  c.classify.seed = c.master_seed;

  if (c.mode == "lotka-nagaev") {
    const json lj = j.contains("lotka") ? j["lotka"] : json::object();
    const std::string lm = lj.contains("mode")
                               ? lj["mode"].get<std::string>()
                               : std::string("upper");
    if (lm != "upper" && lm != "absolute" && lm != "clt")
      throw ConfigError("config: lotka.mode must be upper | absolute | clt");
    c.lotka_spec = json{{"mode", lm}, {"x", num_or(lj, "x", 1.0)}};
  }
  if (c.mode == "bounds") {
    const json bj = j.contains("bounds") ? j["bounds"] : json::object();
    json kinds = bj.contains("kinds")
                     ? bj["kinds"]
                     : json::array({"na3b", "na16", "prokhorov",
                                    "na2special"});
    json ks = bj.contains("ks") ? bj["ks"] : json::array({10, 100, 1000});
    json xok = bj.contains("x_over_k") ? bj["x_over_k"]
                                       : json::array({1.0, 2.0, 5.0});
    c.bounds_spec = json{{"kinds", kinds},
                         {"ks", ks},
                         {"x_over_k", xok},
                         {"r", num_or(bj, "r", 2.0)},
                         {"t", num_or(bj, "t", 0.9)},
                         {"y_over_x", num_or(bj, "y_over_x", 0.5)}};
  }
  if (c.mode == "verify-moments") {
    const json vj =
        j.contains("verify_moments") ? j["verify_moments"] : json::object();
    json ts = vj.contains("ts") ? vj["ts"] : json::array({-0.5, 0.5});
    bool inc = vj.contains("include_critical")
                   ? vj["include_critical"].get<bool>()
                   : true;
    c.verify_moments_spec =
        json{{"ts", ts},
             {"eps", num_or(vj, "eps", 1.0)},
             {"n", static_cast<int>(num_or(vj, "n", 12.0))},
             {"n_critical", static_cast<int>(num_or(vj, "n_critical", 14.0))},
             {"tol", num_or(vj, "tol", 0.02)},
             {"tol_critical", num_or(vj, "tol_critical", 0.05)},
             {"include_critical", inc},
             {"L", vj.contains("L") ? vj["L"]
                                    : echo_slowly_varying(
                                          SlowlyVarying::constant())}};
  }

  // resolved echo: every default materialized, keys in canonical (sorted)
  // order so identical resolved configs serialize identically
  json r;
  r["mode"] = c.mode;
  r["offspring"] = echo_offspring(c.offspring_spec);
  r["summand"] = c.lotka ? json{{"kind", "lotka-nagaev"}}
                         : echo_summand(c.summand_spec);
  if (!c.threshold_spec.is_null())
    r["threshold"] = echo_threshold(c.threshold_spec);
  {
    json nj;
    nj["alpha"] = c.norming_alpha;
    nj["s"] = echo_slowly_varying(make_slowly_varying(c.norming_s));
    r["norming"] = nj;
  }
  r["n_range"] = json::array({c.n_lo, c.n_hi});
  r["replicates"] = c.replicates;
  r["master_seed"] = c.master_seed;
  r["workers"] = c.workers;
  r["out"] = c.out_dir;
  r["format"] = c.format;
  r["w_model"] = json{{"N", c.w_N},
                      {"n_samples", c.w_samples},
                      {"phi_grid_points", c.w_phi_grid}};
  r["classify"] = json{{"n_max", c.classify.n_max},
                       {"window_lo", c.classify.window_lo},
                       {"window_hi", c.classify.window_hi},
                       {"calib_k", c.classify.calib_k},
                       {"calib_samples", c.classify.calib_samples},
                       {"sc_k_max", c.classify.sc_k_max},
                       {"sc_reps_per_k", c.classify.sc_reps_per_k}};
  if (!c.lotka_spec.is_null()) r["lotka"] = c.lotka_spec;
  if (!c.bounds_spec.is_null()) r["bounds"] = c.bounds_spec;
  if (!c.verify_moments_spec.is_null())
    r["verify_moments"] = c.verify_moments_spec;
  c.resolved = std::move(r);
  return c;
}

inline ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: JSON parse error in '" + path +
                      "': " + e.what());
  }
  return from_json(j);
}

}  // namespace gwdev

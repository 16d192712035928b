#pragma once

// Result emission: CSV and JSON renderings of sweep tables, predictions,
// bound grids and moment tables.  Numbers are printed with %.17g so that a
// re-run from the resolved config reproduces output files byte for byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwdev/bounds.hpp"
#include "gwdev/errors.hpp"
#include "gwdev/ldp.hpp"

namespace gwdev {

namespace io_detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace io_detail

// --- predictions -------------------------------------------------------------

inline nlohmann::json prediction_to_json(const RegimePrediction& pred) {
  nlohmann::json j;
  j["theorem_id"] = theorem_name(pred.theorem_id);
  switch (pred.kind) {
    case PredictionKind::Value: j["kind"] = "value"; break;
    case PredictionKind::Bounds: j["kind"] = "bounds"; break;
    case PredictionKind::Heuristic: j["kind"] = "heuristic"; break;
  }
  j["value"] = pred.value;
  j["lo"] = pred.lo;
  j["hi"] = pred.hi;
  j["value_error"] = pred.value_error;
  j["normalizer"] = pred.normalizer_desc;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& a : pred.assumptions) {
    checks.push_back(nlohmann::json{{"name", a.name},
                                    {"ok", a.ok},
                                    {"evidence", a.evidence},
                                    {"note", a.note}});
  }
  j["assumptions"] = checks;
  return j;
}

inline std::string prediction_to_csv(const RegimePrediction& pred) {
  using io_detail::fmt;
  std::string out =
      "theorem_id,kind,value,lo,hi,value_error,normalizer\n";
  const char* kind = pred.kind == PredictionKind::Value      ? "value"
                     : pred.kind == PredictionKind::Bounds   ? "bounds"
                                                             : "heuristic";
  out += std::string(theorem_name(pred.theorem_id)) + "," + kind + "," +
         fmt(pred.value) + "," + fmt(pred.lo) + "," + fmt(pred.hi) + "," +
         fmt(pred.value_error) + ",\"" + pred.normalizer_desc + "\"\n";
  return out;
}

// --- sweep tables -------------------------------------------------------------

inline std::string sweep_to_csv(const SweepTable& tab) {
  using io_detail::fmt;
  std::string out =
      "n,a_n,p_hat,stderr,normalized,predicted_lo,predicted_hi,z,flags\n";
  for (const auto& r : tab.rows) {
    out += std::to_string(r.n) + "," + fmt(r.a_n) + "," + fmt(r.p_hat) + "," +
           fmt(r.stderr_) + "," + fmt(r.normalized) + "," +
           fmt(r.predicted_lo) + "," + fmt(r.predicted_hi) + "," + fmt(r.z) +
           "," + r.flags + "\n";
  }
  return out;
}

inline nlohmann::json sweep_to_json(const SweepTable& tab) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : tab.rows) {
    rows.push_back(nlohmann::json{{"n", r.n},
                                  {"a_n", r.a_n},
                                  {"p_hat", r.p_hat},
                                  {"stderr", r.stderr_},
                                  {"normalized", r.normalized},
                                  {"predicted_lo", r.predicted_lo},
                                  {"predicted_hi", r.predicted_hi},
                                  {"z", r.z},
                                  {"flags", r.flags}});
  }
  nlohmann::json j;
  j["rows"] = rows;
  j["normalizer"] = tab.normalizer_desc;
  j["heuristic"] = tab.heuristic;
  j["discard_rate"] = tab.discard_rate;
  if (tab.trend.defined)
    j["trend"] = nlohmann::json{{"slope", tab.trend.slope},
                                {"ci_lo", tab.trend.lo},
                                {"ci_hi", tab.trend.hi}};
  return j;
}

// --- simulate rows -------------------------------------------------------------

struct SimRow {
  int n = 0;
  double eps = 0.0;
  MCEstimate est;
};

inline std::string sim_to_csv(const std::vector<SimRow>& rows) {
  using io_detail::fmt;
  std::string out = "n,eps,p_hat,stderr,discard_rate,unreliable\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + fmt(r.eps) + "," + fmt(r.est.p_hat) +
           "," + fmt(r.est.stderr_) + "," + fmt(r.est.discard_rate) + "," +
           (r.est.unreliable ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json sim_to_json(const std::vector<SimRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back(nlohmann::json{{"n", r.n},
                                 {"eps", r.eps},
                                 {"p_hat", r.est.p_hat},
                                 {"stderr", r.est.stderr_},
                                 {"replicates", r.est.replicates},
                                 {"discard_rate", r.est.discard_rate},
                                 {"unreliable", r.est.unreliable}});
  }
  return nlohmann::json{{"rows", arr}};
}

// --- bound grids ---------------------------------------------------------------

struct BoundRow {
  std::string law_id;
  std::string kind;
  std::int64_t k = 0;
  double x = 0.0;
  double bound = 1.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

inline std::string bounds_to_csv(const std::vector<BoundRow>& rows) {
  using io_detail::fmt;
  std::string out = "law_id,kind,k,x,bound,empirical,stderr,pass\n";
  for (const auto& r : rows) {
    out += "\"" + r.law_id + "\"," + r.kind + "," + std::to_string(r.k) +
           "," + fmt(r.x) + "," + fmt(r.bound) + "," + fmt(r.empirical) +
           "," + fmt(r.stderr_) + "," + (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json bounds_to_json(const std::vector<BoundRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back(nlohmann::json{{"law_id", r.law_id},
                                 {"kind", r.kind},
                                 {"k", r.k},
                                 {"x", r.x},
                                 {"bound", r.bound},
                                 {"empirical", r.empirical},
                                 {"stderr", r.stderr_},
                                 {"pass", r.pass}});
  }
  return nlohmann::json{{"rows", arr}};
}

// --- moment tables --------------------------------------------------------------

struct MomentRow {
  double t = 0.0;
  double ratio = 0.0;
  double expected = 0.0;
  bool pass = false;
};

inline std::string moments_to_csv(const std::vector<MomentRow>& rows) {
  using io_detail::fmt;
  std::string out = "t,ratio,expected,pass\n";
  for (const auto& r : rows) {
    out += fmt(r.t) + "," + fmt(r.ratio) + "," + fmt(r.expected) + "," +
           (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json moments_to_json(const std::vector<MomentRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back(nlohmann::json{{"t", r.t},
                                 {"ratio", r.ratio},
                                 {"expected", r.expected},
                                 {"pass", r.pass}});
  }
  return nlohmann::json{{"rows", arr}};
}

// --- file plumbing ----------------------------------------------------------------

inline void write_text(const std::filesystem::path& path,
                       const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  out << content;
}

}  // namespace gwdev

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gwdev/config.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr combined
};

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "gwdev_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

RunResult run_cli(const std::string& args) {
  const fs::path log = scratch() / "last_run.log";
  const std::string cmd = std::string(GWDEV_CLI_PATH) + " " + args + " > " +
                          log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ostringstream ss;
  ss << std::ifstream(log).rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ostringstream ss;
  ss << std::ifstream(p).rdbuf();
  return ss.str();
}

json base_sim_config(const std::string& out) {
  return json{{"mode", "simulate"},
              {"offspring", {{"kind", "binary"}, {"p", 0.5}}},
              {"summand", {{"kind", "rademacher"}}},
              {"threshold", {{"kind", "constant"}, {"eps", 0.3}}},
              {"n_range", {1, 3}},
              {"replicates", 20000},
              {"master_seed", 777},
              {"out", (scratch() / out).string()}};
}

}  // namespace

TEST_CASE("config: defaults materialize and round-trip through the echo") {
  json j = base_sim_config("cfgout");
  const auto cfg = gwdev::ExperimentConfig::from_json(j);
  CHECK(cfg.replicates == 20000);
  CHECK(cfg.workers == 1);
  CHECK(cfg.format == "both");
  CHECK(cfg.w_N == 18);
  CHECK(cfg.classify.n_max == 20);
  // re-ingesting the resolved echo yields an identical resolved echo
  const auto cfg2 = gwdev::ExperimentConfig::from_json(cfg.resolved);
  CHECK(cfg.resolved.dump() == cfg2.resolved.dump());
}

TEST_CASE("config: validation errors name the violated constraint") {
  json j = base_sim_config("x");
  j["offspring"] = {{"kind", "two_point"}, {"i", 0}, {"j", 3}, {"p", 0.4}};
  CHECK_THROWS_WITH_AS(gwdev::ExperimentConfig::from_json(j),
                       doctest::Contains("p0 = 0 and 0 < p1 < 1"),
                       gwdev::ConfigError);

  j = base_sim_config("x");
  j["mode"] = "frobnicate";
  CHECK_THROWS_AS(gwdev::ExperimentConfig::from_json(j), gwdev::ConfigError);

  j = base_sim_config("x");
  j.erase("threshold");
  CHECK_THROWS_WITH_AS(gwdev::ExperimentConfig::from_json(j),
                       doctest::Contains("threshold"), gwdev::ConfigError);

  j = base_sim_config("x");
  j["format"] = "xml";
  CHECK_THROWS_AS(gwdev::ExperimentConfig::from_json(j), gwdev::ConfigError);
}

TEST_CASE("cli: malformed config exits 1 with the constraint in the message") {
  const json bad = {{"mode", "predict"},
                    {"offspring",
                     {{"kind", "two_point"}, {"i", 0}, {"j", 3}, {"p", 0.4}}},
                    {"summand", {{"kind", "rademacher"}}},
                    {"threshold", {{"kind", "constant"}, {"eps", 0.5}}}};
  const auto p = write_config("bad.json", bad);
  const auto r = run_cli("predict --config " + p.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("p0 = 0 and 0 < p1 < 1") != std::string::npos);
}

TEST_CASE("cli: missing config file exits 1") {
  const auto r = run_cli("predict --config /nonexistent/nope.json");
  CHECK(r.exit_code == 1);
}

TEST_CASE("cli: refused classification exits 2 with a JSON diagnostic") {
  json j = {{"mode", "predict"},
            {"offspring", {{"kind", "geom_shift"}, {"a", 0.5}}},
            {"summand", {{"kind", "one_sided_unit"}, {"beta", 0.8}}},
            {"threshold", {{"kind", "geometric_decay"}, {"rho", 0.5}}},
            {"w_model",
             {{"N", 10}, {"n_samples", 2000}, {"phi_grid_points", 2}}},
            {"out", (scratch() / "unclass").string()}};
  const auto p = write_config("unclass.json", j);
  const auto r = run_cli("predict --config " + p.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("Unclassifiable") != std::string::npos);
  const json diag = json::parse(slurp(scratch() / "unclass" / "error.json"));
  CHECK(diag["exit_code"] == 2);
}

TEST_CASE("cli: predict emits the theorem id, normalizer and value") {
  json j = {{"mode", "predict"},
            {"offspring", {{"kind", "geom_shift"}, {"a", 0.5}}},
            {"summand", {{"kind", "one_sided_unit"}, {"beta", 0.8}}},
            {"threshold", {{"kind", "diverging"}, {"c", 1.0}, {"rho", 0.5}}},
            {"w_model",
             {{"N", 12}, {"n_samples", 20000}, {"phi_grid_points", 2}}},
            {"out", (scratch() / "predict").string()}};
  const auto p = write_config("predict.json", j);
  const auto r = run_cli("predict --config " + p.string());
  REQUIRE(r.exit_code == 0);
  const json out = json::parse(slurp(scratch() / "predict" / "predict.json"));
  CHECK(out["prediction"]["theorem_id"] == "Main2");
  CHECK(out["prediction"]["normalizer"].get<std::string>().find("m^{") !=
        std::string::npos);
  // I_beta = E[W^{1-0.8}] = Gamma(1.2) for exponential W
  CHECK(out["prediction"]["value"].get<double>() ==
        doctest::Approx(std::tgamma(1.2)).epsilon(0.02));
  CHECK(out["config"]["replicates"] == 100000);  // default materialized
}

TEST_CASE("cli: identical configs give byte-identical CSV; resolved config "
          "round-trips") {
  const auto p1 = write_config("sim1.json", base_sim_config("sim1"));
  const auto r1 = run_cli("simulate --config " + p1.string());
  REQUIRE(r1.exit_code == 0);
  const std::string csv1 = slurp(scratch() / "sim1" / "simulate.csv");
  CHECK(csv1.find("n,eps,p_hat,stderr") == 0);

  // determinism: same config, fresh out dir
  json j2 = base_sim_config("sim2");
  const auto p2 = write_config("sim2.json", j2);
  REQUIRE(run_cli("simulate --config " + p2.string()).exit_code == 0);
  CHECK(csv1 == slurp(scratch() / "sim2" / "simulate.csv"));

  // round-trip: re-ingest the resolved config, redirect output, same bytes
  const auto resolved = scratch() / "sim1" / "resolved_config.json";
  const auto r3 = run_cli("simulate --config " + resolved.string() +
                          " --out " + (scratch() / "sim3").string());
  REQUIRE(r3.exit_code == 0);
  CHECK(csv1 == slurp(scratch() / "sim3" / "simulate.csv"));
}

TEST_CASE("cli: seed and replicates overrides change the resolved config") {
  json j = base_sim_config("ovr");
  const auto p = write_config("ovr.json", j);
  const auto r = run_cli("simulate --config " + p.string() +
                         " --seed 123 --replicates 5000 --format json");
  REQUIRE(r.exit_code == 0);
  CHECK(!fs::exists(scratch() / "ovr" / "simulate.csv"));
  const json out = json::parse(slurp(scratch() / "ovr" / "simulate.json"));
  CHECK(out["config"]["master_seed"] == 123);
  CHECK(out["config"]["replicates"] == 5000);
  CHECK(out["rows"].size() == 3);
}

TEST_CASE("cli: subcommand and config mode must agree") {
  const auto p = write_config("mode.json", base_sim_config("mode"));
  const auto r = run_cli("sweep --config " + p.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("does not match subcommand") != std::string::npos);
}

TEST_CASE("cli: verify-moments emits the Gamma oracle table") {
  json j = {{"mode", "verify-moments"},
            {"offspring", {{"kind", "geom_shift"}, {"a", 0.5}}},
            {"w_model",
             {{"N", 12}, {"n_samples", 20000}, {"phi_grid_points", 2}}},
            {"verify_moments", {{"include_critical", false}}},
            {"out", (scratch() / "vm").string()}};
  const auto p = write_config("vm.json", j);
  const auto r = run_cli("verify-moments --config " + p.string());
  REQUIRE(r.exit_code == 0);
  const json out = json::parse(slurp(scratch() / "vm" / "verify-moments.json"));
  REQUIRE(out["rows"].size() == 2);
  // E[W^{-1/2}] = Gamma(1/2), E[W^{1/2}] = Gamma(3/2) for exponential W
  CHECK(out["rows"][0]["expected"].get<double>() ==
        doctest::Approx(std::tgamma(0.5)).epsilon(1e-12));
  CHECK(out["rows"][1]["expected"].get<double>() ==
        doctest::Approx(std::tgamma(1.5)).epsilon(1e-12));
  for (const auto& row : out["rows"]) CHECK(row["pass"].get<bool>());
}

TEST_CASE("cli: bounds grid has zero violations on a symmetric Pareto law") {
  json j = {{"mode", "bounds"},
            {"offspring", {{"kind", "binary"}, {"p", 0.5}}},
            {"summand", {{"kind", "symmetric_pareto"}, {"alpha", 1.5}}},
            {"replicates", 20000},
            {"bounds", {{"ks", {10, 100}}, {"x_over_k", {2.0, 5.0}}}},
            {"out", (scratch() / "bnd").string()}};
  const auto p = write_config("bnd.json", j);
  const auto r = run_cli("bounds --config " + p.string());
  REQUIRE(r.exit_code == 0);
  const json out = json::parse(slurp(scratch() / "bnd" / "bounds.json"));
  CHECK(out["rows"].size() >= 8);
  for (const auto& row : out["rows"]) CHECK(row["pass"].get<bool>());
}

TEST_CASE("cli: lotka-nagaev absolute mode produces a sweep table") {
  json j = {{"mode", "lotka-nagaev"},
            {"offspring", {{"kind", "binary"}, {"p", 0.5}}},
            {"lotka", {{"mode", "absolute"}, {"x", 0.4}}},
            {"n_range", {2, 3}},
            {"replicates", 20000},
            {"out", (scratch() / "lk").string()}};
  const auto p = write_config("lk.json", j);
  const auto r = run_cli("lotka-nagaev --config " + p.string());
  REQUIRE(r.exit_code == 0);
  const json out = json::parse(slurp(scratch() / "lk" / "lotka-nagaev.json"));
  CHECK(out["prediction"]["theorem_id"] == "SCmain3");
  CHECK(out["sweep"]["rows"].size() == 2);
}

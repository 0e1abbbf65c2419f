#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "negotiator/config.hpp"
#include "negotiator/experiment.hpp"

using namespace negotiator;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSmall{"topology.tors=16", "topology.ports=4", "epoch.propagation_ns=500",
                                      "duration_ns=200000", "workload.load=0.5"};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("negotiator_test_" + name);
  fs::remove_all(p);
  return p;
}

Json small_json() {
  Json j = default_config_json();
  for (const auto& o : kSmall) apply_override(j, o);
  return j;
}

}  // namespace

TEST_CASE("defaults reproduce the main setup") {
  ExperimentConfig c = build_config(default_config_json());
  CHECK(c.system == SystemKind::Negotiator);
  CHECK(c.topology.tors == 128);
  CHECK(c.topology.ports == 8);
  CHECK(c.epoch.epoch_ns() == 3660);
  CHECK(c.epoch.guard_fraction() == doctest::Approx(160.0 / 3660));
  CHECK(c.workload.cdf.name() == "hadoop-like");
  CHECK(c.negotiator.piggyback);
  CHECK(c.negotiator.priority_queues);
  EpochReport r = validate(c);
  CHECK(r.errors.empty());
  CHECK(r.warnings.empty());
}

TEST_CASE("config keys are checked") {
  CHECK_THROWS_AS(config_from_overrides({"topology.nope=1"}), ConfigError);
  CHECK_THROWS_AS(config_from_overrides({"speedup=1"}), ConfigError);
  CHECK_THROWS_AS(config_from_overrides({"novalue"}), ConfigError);
  CHECK_THROWS_AS(config_from_overrides({"topology.kind=ring"}), ConfigError);
  CHECK_THROWS_AS(config_from_overrides({"matching.variant=magic"}), ConfigError);
  CHECK_THROWS_AS(config_from_overrides({"topology.tors=\"many\""}), ConfigError);
  Json j = default_config_json();
  CHECK_THROWS_AS(merge_config(j, Json::parse(R"({"epoch": {"guard": 3}})")), ConfigError);
}

TEST_CASE("overrides and files") {
  ExperimentConfig c = config_from_overrides({"topology.kind=thinclos", "seed=9", "features.piggyback=false"});
  CHECK(c.topology.kind == TopologyKind::ThinClos);
  CHECK(c.seed == 9);
  CHECK_FALSE(c.negotiator.piggyback);

  fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << "{\n  // comments are allowed\n  \"workload\": {\"load\": 0.25},\n"
                                   "  \"topology\": {\"tors\": 32}\n}\n";
  ExperimentConfig f = load_config((dir / "c.json").string(), {"workload.load=0.5"});
  CHECK(f.topology.tors == 32);
  CHECK(f.workload.load == 0.5);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string(), {}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("validation") {
  SUBCASE("guard overhead") {
    auto heavy = config_from_overrides({"epoch.guard_ns=100"});
    CHECK_FALSE(validate(heavy).warnings.empty());
    auto scaled = config_from_overrides({"epoch.guard_ns=100", "epoch.scheduled_slots=300"});
    EpochReport r = validate(scaled);
    CHECK(r.warnings.empty());
    CHECK(r.guard_fraction <= 0.10);
  }
  SUBCASE("pipeline depth") {
    auto bad = config_from_overrides({"epoch.propagation_ns=5000"});
    REQUIRE_FALSE(validate(bad).errors.empty());
    CHECK_THROWS_AS(Simulation{bad}, ConfigError);
    auto ok = config_from_overrides({"epoch.propagation_ns=5000", "epoch.pipeline_depth=2"});
    CHECK(validate(ok).errors.empty());
  }
  SUBCASE("relay needs thin-clos") {
    CHECK_FALSE(validate(config_from_overrides({"matching.variant=relay"})).errors.empty());
  }
  SUBCASE("oblivious runs only warn about the epoch") {
    auto o = config_from_overrides({"system=oblivious", "epoch.propagation_ns=5000"});
    EpochReport r = validate(o);
    CHECK(r.errors.empty());
    CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("same config and seed give identical output files") {
  fs::path a = scratch("det_a"), b = scratch("det_b");
  Json j = small_json();
  j["out_dir"] = a.string();
  run_experiment(build_config(j));
  j["out_dir"] = b.string();
  run_experiment(build_config(j));
  for (const char* f : {"flows.csv", "timeseries.csv", "match.csv", "summary.txt"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "flows.csv").rfind("flow_id,src,dst,size_bytes,arrival_ns,completion_ns,is_mice\n", 0) == 0);
  CHECK(slurp(a / "timeseries.csv").rfind("t_ns,tor_id,wanted_bps,transit_bps\n", 0) == 0);
  CHECK(slurp(a / "match.csv").rfind("epoch,grants,accepts\n", 0) == 0);

  // Another seed changes the run.
  j["seed"] = 2;
  j["out_dir"] = b.string();
  run_experiment(build_config(j));
  CHECK(slurp(a / "flows.csv") != slurp(b / "flows.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("unfinished flows carry an explicit marker") {
  fs::path d = scratch("na");
  Json j = small_json();
  apply_override(j, "workload.kind=incast");
  apply_override(j, "workload.incast_degree=1");
  apply_override(j, "workload.incast_size_bytes=100000000");
  apply_override(j, "duration_ns=20000");
  j["out_dir"] = d.string();
  RunSummary s = run_experiment(build_config(j));
  CHECK(s.completed == 0);
  CHECK_FALSE(s.fct_p99_ns);
  std::string flows = slurp(d / "flows.csv");
  CHECK(flows.find(",NA,") != std::string::npos);
  CHECK(slurp(d / "summary.txt").find("NA") != std::string::npos);
  fs::remove_all(d);
}

TEST_CASE("sweeps") {
  SUBCASE("serial and threaded agree") {
    fs::path d1 = scratch("sweep1"), d2 = scratch("sweep2");
    std::vector<std::string> loads{"0.1", "0.25", "0.5", "0.75", "1.0"};
    auto serial = sweep(small_json(), "workload.load", loads, 1, d1.string());
    auto threaded = sweep(small_json(), "workload.load", loads, 3, d2.string());
    REQUIRE(serial.size() == 5);
    CHECK(sweep_csv("workload.load", serial) == sweep_csv("workload.load", threaded));
    CHECK(slurp(d1 / "sweep.csv") == slurp(d2 / "sweep.csv"));
    CHECK(slurp(d1 / "point_3" / "flows.csv") == slurp(d2 / "point_3" / "flows.csv"));
    CHECK(serial[0].summary.load == doctest::Approx(0.1));
    CHECK(serial[4].summary.flows > serial[0].summary.flows);
    fs::remove_all(d1);
    fs::remove_all(d2);
  }
  SUBCASE("empty axis runs nothing") {
    auto pts = sweep(small_json(), "workload.load", {}, 2, "");
    CHECK(pts.empty());
    std::string csv = sweep_csv("workload.load", pts);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
  }
  SUBCASE("a bad value fails before any run") {
    CHECK_THROWS_AS(sweep(small_json(), "workload.load", {"0.5", "\"high\""}, 1, ""), ConfigError);
  }
}

TEST_CASE("summary of an oblivious run has no match ratio") {
  Json j = small_json();
  apply_override(j, "system=oblivious");
  RunSummary s = run_experiment(build_config(j));
  CHECK_FALSE(s.match_ratio);
  CHECK(format_summary(s).find("match_ratio") != std::string::npos);
}

// Command-line front end: run, sweep, validate, oracle.

#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "negotiator/analysis.hpp"
#include "negotiator/config.hpp"
#include "negotiator/experiment.hpp"

using namespace negotiator;

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  long long duration_ns = -1;
  std::string out;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--config", a.config, "JSON config file (defaults apply to missing keys)");
  app->add_option("--override", a.overrides, "key=value, repeatable (e.g. workload.load=0.5)");
  app->add_option("--seed", a.seed, "RNG seed");
  app->add_option("--duration-ns", a.duration_ns, "simulated time");
  app->add_option("--out", a.out, "output directory");
}

Json merged_json(const CommonArgs& a) {
  std::vector<std::string> ov = a.overrides;
  if (a.seed >= 0) ov.push_back("seed=" + std::to_string(a.seed));
  if (a.duration_ns >= 0) ov.push_back("duration_ns=" + std::to_string(a.duration_ns));
  if (!a.out.empty()) ov.push_back("out_dir=" + Json(a.out).dump());
  return load_config(a.config, ov).raw;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void print_report(const EpochReport& r) {
  std::cout << fmt::format("predefined_phase_ns {}\nscheduled_phase_ns {}\nepoch_ns {}\nguard_fraction {:.4f}\n"
                           "pipeline_feasible {}\n",
                           r.predefined_phase_ns, r.scheduled_phase_ns, r.epoch_ns, r.guard_fraction,
                           r.pipeline_feasible ? "yes" : "no");
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& e : r.errors) std::cout << "error: " << e << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level simulator of on-demand optical datacenter fabrics"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, validate_args;
  auto* run = app.add_subcommand("run", "run one experiment");
  add_common(run, run_args);

  auto* sw = app.add_subcommand("sweep", "run one experiment per value of a config key");
  add_common(sw, sweep_args);
  std::string sweep_key, sweep_values;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  sw->add_option("--key", sweep_key, "config key to vary (e.g. workload.load)")->required();
  sw->add_option("--values", sweep_values, "comma-separated values")->required();
  sw->add_option("--threads", threads, "concurrent points");

  auto* val = app.add_subcommand("validate", "check a config and print the epoch report");
  add_common(val, validate_args);

  auto* orc = app.add_subcommand("oracle", "closed-form vs Monte Carlo matching efficiency as CSV");
  std::string ns = "2,4,8,16,32,128", ms = "1,4,8";
  std::uint64_t trials = 1000000, oseed = 1;
  orc->add_option("--n", ns, "comma-separated competitor counts");
  orc->add_option("--m", ms, "comma-separated port counts");
  orc->add_option("--trials", trials, "Monte Carlo trials per row");
  orc->add_option("--seed", oseed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ExperimentConfig cfg = build_config(merged_json(run_args));
      EpochReport rep = validate(cfg);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
      if (!rep.errors.empty()) {
        for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
        return 2;
      }
      Simulation sim(cfg);
      sim.run();
      if (!cfg.out_dir.empty()) write_outputs(sim, cfg.out_dir);
      RunSummary s = sim.summary();
      std::cout << format_summary(s);
      std::cout << fmt::format("wall_seconds {:.2f}\n", s.wall_seconds);
    } else if (*sw) {
      Json base = merged_json(sweep_args);
      auto pts = sweep(base, sweep_key, split(sweep_values), threads, sweep_args.out);
      std::cout << sweep_csv(sweep_key, pts);
    } else if (*val) {
      ExperimentConfig cfg = build_config(merged_json(validate_args));
      EpochReport rep = validate(cfg);
      print_report(rep);
      return rep.errors.empty() ? 0 : 2;
    } else if (*orc) {
      std::vector<std::uint32_t> nv, mv;
      for (const auto& s : split(ns)) nv.push_back(static_cast<std::uint32_t>(std::stoul(s)));
      for (const auto& s : split(ms)) mv.push_back(static_cast<std::uint32_t>(std::stoul(s)));
      std::cout << efficiency_csv(efficiency_table(nv, mv, trials, oseed));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const ProtocolViolation& e) {
    std::cerr << "protocol violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

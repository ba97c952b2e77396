// SPDX-License-Identifier: Apache-2.0
//
// specscan: spectrum occupancy scanning from the command line.
//
//   specscan calibrate --scenario s.yaml --out dir
//   specscan simulate  --scenario s.yaml --out dir [--seed N] [--workers N]
//   specscan analyze   --scenario s.yaml --iq x.iq --meta x.iq.meta [--center-mhz F] --out dir
//   specscan report    --records dir/records.csv --bins 3600 --out dir
//   specscan eval      --scenario s.yaml --out dir

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "specscan/commands.hpp"

namespace {

struct Args {
  std::string scenario;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> bins;
  std::optional<unsigned> workers;
  std::string iq;
  std::string meta;
  std::optional<double> center_mhz;
  std::string records;
};

void add_common(CLI::App* cmd, Args& a, bool needs_scenario) {
  auto* opt = cmd->add_option("--scenario", a.scenario, "scenario file (YAML)");
  if (needs_scenario) opt->required();
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", a.seed, "override the scenario's master seed");
  cmd->add_option("--bins", a.bins, "occupancy bin length in seconds");
  cmd->add_option("--workers", a.workers, "worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);
}

specscan::Scenario scenario_from(const Args& a) {
  auto s = a.scenario.empty() ? specscan::Scenario{} : specscan::load_scenario(a.scenario);
  if (a.seed) s.master_seed = *a.seed;
  if (a.bins) s.bin_len_s = *a.bins;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum occupancy scanner: energy, ACF(1) and correlation-distance detectors"};
  app.require_subcommand(1);
  Args a;

  auto* calibrate = app.add_subcommand("calibrate", "calibrate the reference ACF vector and thresholds");
  add_common(calibrate, a, true);
  auto* simulate = app.add_subcommand("simulate", "sweep a synthetic scenario, write record and truth CSVs");
  add_common(simulate, a, true);
  auto* analyze = app.add_subcommand("analyze", "scan an IQ recording");
  add_common(analyze, a, true);
  analyze->add_option("--iq", a.iq, "payload file (<name>.iq)")->required();
  analyze->add_option("--meta", a.meta, "sidecar file (<name>.iq.meta)")->required();
  analyze->add_option("--center-mhz", a.center_mhz, "channel center frequency in MHz");
  auto* report = app.add_subcommand("report", "aggregate a record CSV into occupancy tables");
  add_common(report, a, false);
  report->add_option("--records", a.records, "record CSV produced by simulate or analyze")->required();
  auto* eval = app.add_subcommand("eval", "Monte Carlo Pd/Pfa and ROC evaluation");
  add_common(eval, a, true);

  CLI11_PARSE(app, argc, argv);

  try {
    specscan::CommandOptions opt;
    opt.out_dir = a.out;
    opt.workers = a.workers;
    if (*calibrate) {
      specscan::cmd_calibrate(scenario_from(a), opt, std::cout);
    } else if (*simulate) {
      specscan::cmd_simulate(scenario_from(a), opt, std::cout);
    } else if (*analyze) {
      specscan::cmd_analyze(scenario_from(a), a.iq, a.meta, a.center_mhz, opt, std::cout);
    } else if (*report) {
      const double bins = a.bins ? *a.bins : scenario_from(a).bin_len_s;
      specscan::cmd_report(a.records, bins, opt, std::cout);
    } else if (*eval) {
      specscan::cmd_eval(scenario_from(a), opt, std::cout);
    }
  } catch (const specscan::Error& e) {
    std::cerr << "specscan: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "specscan: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

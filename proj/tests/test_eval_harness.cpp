// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "specscan/eval_harness.hpp"

using namespace specscan;

namespace {

const SignalSpec kTone{SignalKind::tone, 0.05, 1, 1.0, 0.0, 0};

DetectorConfig base_config() {
  DetectorConfig cfg;
  cfg.lambda_ed = oracle::kGamma1024Q95;
  cfg.lambda_acf = 0.2;
  cfg.gamma = 0.5;
  cfg.acf_lags = 8;
  cfg.reference = AcfVector(oracle::tone_acf_vector(1024, 8));
  return cfg;
}

TrialScenario scenario(double snr_db, std::size_t trials, std::uint64_t seed) {
  return {kTone, NoiseSpec{1.0, 0}, snr_db, 1024, trials, seed};
}

double binomial_sd(double p, std::size_t n) { return std::sqrt(p * (1 - p) / static_cast<double>(n)); }

}  // namespace

TEST_CASE("calibrated energy threshold holds its false-alarm rate") {
  std::vector<ComplexFrame> cal;
  for (std::uint64_t k = 0; k < 5000; ++k) cal.push_back(gen_noise_frame(1024, NoiseSpec{1.0, 100}, k));
  auto cfg = base_config();
  cfg.lambda_ed = calibrate_ed_threshold(std::span<const ComplexFrame>(cal), 0.05);

  const auto p = measure_pd_pfa(Detector::ed, cfg, scenario(20.0, 10000, 7), 2);
  CHECK(p.trials == 10000);
  CHECK(p.pfa >= 0.04);
  CHECK(p.pfa <= 0.06);
  // quantile estimated from 5000 frames adds its own spread on top of the
  // binomial one; 3 sd of the combined error
  CHECK(std::abs(p.pfa - 0.05) <= 3.0 * std::sqrt(2.0) * binomial_sd(0.05, 5000));
  CHECK(p.pd >= 0.999);
}

TEST_CASE("thresholds that admit everything give pd = pfa = 1") {
  const auto trials = run_trials(scenario(0.0, 500, 3), base_config());
  for (auto d : kAllDetectors) {
    const auto p = operating_point(trials, d, admit_all_threshold(d));
    CHECK(p.pd == 1.0);
    CHECK(p.pfa == 1.0);
    const auto q = operating_point(trials, d, reject_all_threshold(d));
    CHECK(q.pd == 0.0);
    CHECK(q.pfa == 0.0);
  }
}

TEST_CASE("ROC curves are monotone on shared trials") {
  const auto trials = run_trials(scenario(-5.0, 2000, 11), base_config(), 3);
  for (auto d : kAllDetectors) {
    std::vector<double> thr;
    for (int i = 0; i <= 40; ++i) thr.push_back(d == Detector::ed ? 0.8 + i * 0.02 : 0.0001 + i * 0.0249);
    const auto roc = roc_curve(trials, d, thr);
    REQUIRE(roc.size() == thr.size());
    for (std::size_t i = 1; i < roc.size(); ++i) {
      if (present_when_above(d)) {
        CHECK(roc[i].pd <= roc[i - 1].pd);
        CHECK(roc[i].pfa <= roc[i - 1].pfa);
      } else {
        CHECK(roc[i].pd >= roc[i - 1].pd);
        CHECK(roc[i].pfa >= roc[i - 1].pfa);
      }
    }
  }
  const std::vector<double> ends{admit_all_threshold(Detector::ed), reject_all_threshold(Detector::cdist),
                                 admit_all_threshold(Detector::cdist)};
  const std::vector<double> cdist_ends{ends[1], ends[2]};
  const auto roc = roc_curve(trials, Detector::cdist, cdist_ends);
  CHECK(roc[0].pd == 0.0);
  CHECK(roc[0].pfa == 0.0);
  CHECK(roc[1].pd == 1.0);
  CHECK(roc[1].pfa == 1.0);

  const std::vector<double> unsorted{0.5, 0.2};
  CHECK_THROWS_AS(roc_curve(trials, Detector::cdist, unsorted), ArgumentError);
  const std::vector<double> single{0.5};
  CHECK_THROWS_AS(roc_curve(trials, Detector::cdist, single), ArgumentError);
}

TEST_CASE("cdist reaches pd >= 0.95 at pfa <= 0.05 for a 5 dB tone") {
  const auto trials = run_trials(scenario(5.0, 2000, 21), base_config(), 2);
  std::vector<double> grid;
  for (int i = 1; i < 100; ++i) grid.push_back(i / 100.0);
  bool found = false;
  double best_gamma = 0.0;
  for (const auto& p : roc_curve(trials, Detector::cdist, grid)) {
    if (p.pd >= 0.95 && p.pfa <= 0.05) {
      found = true;
      best_gamma = p.threshold;
      break;
    }
  }
  CHECK(found);
  INFO("smallest qualifying gamma " << best_gamma);
  CHECK(best_gamma > 0.0);
}

TEST_CASE("trial sets are reproducible and independent of worker count") {
  const auto a = run_trials(scenario(3.0, 300, 99), base_config(), 1);
  const auto b = run_trials(scenario(3.0, 300, 99), base_config(), 4);
  for (std::size_t d = 0; d < 3; ++d) {
    CHECK(a.h0[d] == b.h0[d]);
    CHECK(a.h1[d] == b.h1[d]);
  }
  const auto c = run_trials(scenario(3.0, 300, 100), base_config(), 1);
  CHECK(a.h0[0] != c.h0[0]);
}

TEST_CASE("matched false-alarm rate: cdist dominates acf1, fixed low energy threshold saturates") {
  const auto trials = run_trials(scenario(5.0, 4000, 5), base_config(), 2);
  const auto cd = operating_point(trials, Detector::cdist, matched_threshold(trials, Detector::cdist, 0.05));
  const auto a1 = operating_point(trials, Detector::acf1, matched_threshold(trials, Detector::acf1, 0.05));
  CHECK(cd.pfa <= 0.05 + 1.0 / 4000);
  CHECK(a1.pfa <= 0.05 + 1.0 / 4000);
  CHECK(cd.pd >= a1.pd);

  const auto ed = operating_point(trials, Detector::ed, 0.5);
  CHECK(ed.pfa >= 0.999);
  CHECK(cd.pfa <= 0.05 + 1.0 / 4000);
}

TEST_CASE("occupancy recovery against ground truth") {
  auto cfg = base_config();
  const auto cal = run_trials(scenario(10.0, 2000, 8), cfg);
  cfg.gamma = matched_threshold(cal, Detector::cdist, 0.01);
  cfg.lambda_ed = matched_threshold(cal, Detector::ed, 0.05);
  const ChannelTimeline::Timing timing{1024, 0.1, 100.0, 0.0, 1e6, 2412e6};

  SECTION("duty 0 measures the false-alarm rate") {
    const auto r = occupancy_recovery(OccupancySchedule::always_off(10.0), Detector::ed, cfg, kTone,
                                      NoiseSpec{1.0, 1}, 10.0, timing);
    CHECK(r.scans == 1000);
    CHECK(r.true_duty == 0.0);
    CHECK(r.measured == Catch::Approx(0.05).margin(3 * binomial_sd(0.05, 1000) + 0.01));
  }
  SECTION("duty 1 measures the detection rate") {
    const auto r = occupancy_recovery(OccupancySchedule::always_on(10.0), Detector::cdist, cfg, kTone,
                                      NoiseSpec{1.0, 2}, 10.0, timing);
    CHECK(r.label_fraction == 1.0);
    CHECK(r.measured >= 0.999);
  }
  SECTION("duty 0.30 at 10 dB") {
    const auto r = occupancy_recovery({10.0, {{0.0, 3.0}}}, Detector::cdist, cfg, kTone, NoiseSpec{1.0, 3}, 10.0,
                                      timing, 2);
    CHECK(r.true_duty == Catch::Approx(0.3));
    CHECK(r.label_fraction == Catch::Approx(0.3));
    CHECK(r.abs_error <= 0.05);
  }
}

TEST_CASE("eval CSV layout") {
  std::ostringstream os;
  const std::vector<EvalRow> rows{{"matched_pfa", {Detector::acf1, 5.0, 0.0625, 0.97, 0.05, 10000}}};
  write_eval_csv(os, rows);
  CHECK(os.str() == "detector,scenario,snr_db,threshold,trials,pd,pfa\nacf1,matched_pfa,5,0.0625,10000,0.97,0.05\n");
}

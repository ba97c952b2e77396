// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "specscan/detectors.hpp"
#include "specscan/errors.hpp"
#include "specscan/scan_engine.hpp"
#include "specscan/seeding.hpp"
#include "specscan/signal_synth.hpp"

namespace specscan {

/// One Monte Carlo setting: trial i draws a signal+noise frame (H1) and an
/// independent noise-only frame (H0), both seeded from (seed, i).
struct TrialScenario {
  SignalSpec signal;
  NoiseSpec noise;
  double snr_db = 0.0;
  std::size_t frame_len = 1024;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
};

struct OperatingPoint {
  Detector detector = Detector::ed;
  double snr_db = 0.0;
  double threshold = 0.0;
  double pd = 0.0;
  double pfa = 0.0;
  std::size_t trials = 0;
};

/// Statistics of every detector on one shared trial set, so that points
/// for different thresholds and detectors use common random numbers.
struct SharedTrials {
  TrialScenario scenario;
  std::array<std::vector<double>, 3> h1;  // indexed like kAllDetectors
  std::array<std::vector<double>, 3> h0;

  const std::vector<double>& signal_stats(Detector d) const { return h1[static_cast<std::size_t>(d)]; }
  const std::vector<double>& noise_stats(Detector d) const { return h0[static_cast<std::size_t>(d)]; }
};

namespace detail {
inline double safe_statistic(Detector d, const ComplexFrame& f, const DetectorConfig& config) {
  try {
    return detector_statistic(d, f, config);
  } catch (const DegenerateInputError&) {
    return std::numeric_limits<double>::quiet_NaN();  // never decides present
  }
}
}  // namespace detail

/// `config` supplies the reference vector and lag count for cdist; its
/// thresholds are not used here.
inline SharedTrials run_trials(const TrialScenario& scenario, const DetectorConfig& config, unsigned workers = 1) {
  if (scenario.trials == 0) throw ConfigError("trials must be >= 1");
  if (scenario.frame_len == 0) throw ConfigError("frame_len must be >= 1");
  scenario.signal.validate();
  scenario.noise.validate();
  if (config.reference.size() != config.acf_lags)
    throw ConfigError("reference vector length does not match acf_lags");

  SharedTrials out;
  out.scenario = scenario;
  for (std::size_t d = 0; d < 3; ++d) {
    out.h1[d].resize(scenario.trials);
    out.h0[d].resize(scenario.trials);
  }
  SignalSpec signal = scenario.signal;
  signal.seed = derive_seed(scenario.seed, "trial-signal");
  NoiseSpec h1_noise{scenario.noise.total_power, derive_seed(scenario.seed, "trial-h1-noise")};
  NoiseSpec h0_noise{scenario.noise.total_power, derive_seed(scenario.seed, "trial-h0-noise")};

  parallel_for(scenario.trials, workers, [&](std::size_t i) {
    const auto noise = gen_noise_frame(scenario.frame_len, h1_noise, i);
    const auto present = signal.kind == SignalKind::none
                             ? noise
                             : mix_at_snr(gen_signal_frame(scenario.frame_len, signal, i), noise, scenario.snr_db,
                                          signal, h1_noise);
    const auto absent = gen_noise_frame(scenario.frame_len, h0_noise, i);
    for (std::size_t d = 0; d < 3; ++d) {
      out.h1[d][i] = detail::safe_statistic(kAllDetectors[d], present, config);
      out.h0[d][i] = detail::safe_statistic(kAllDetectors[d], absent, config);
    }
  });
  return out;
}

inline OperatingPoint operating_point(const SharedTrials& trials, Detector d, double threshold) {
  auto rate = [&](const std::vector<double>& stats) {
    std::size_t hits = 0;
    for (double s : stats) hits += decide(d, s, threshold).present ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(stats.size());
  };
  return {d, trials.scenario.snr_db, threshold, rate(trials.signal_stats(d)), rate(trials.noise_stats(d)),
          trials.scenario.trials};
}

/// Pd and Pfa of `detector` at the threshold held in `config`.
inline OperatingPoint measure_pd_pfa(Detector detector, const DetectorConfig& config, const TrialScenario& scenario,
                                     unsigned workers = 1) {
  config.validate();
  return operating_point(run_trials(scenario, config, workers), detector, config.threshold(detector));
}

/// Threshold reaching `target_pfa` on the trial set's own noise-only draws.
inline double matched_threshold(const SharedTrials& trials, Detector d, double target_pfa) {
  return threshold_for_pfa(d, trials.noise_stats(d), target_pfa);
}

inline std::vector<OperatingPoint> roc_curve(const SharedTrials& trials, Detector d,
                                             std::span<const double> thresholds) {
  if (thresholds.size() < 2) throw ArgumentError("ROC needs at least 2 thresholds");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ArgumentError("ROC thresholds must be sorted ascending");
  std::vector<OperatingPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(operating_point(trials, d, t));
  return out;
}

inline std::vector<OperatingPoint> roc_curve(Detector d, const DetectorConfig& config, const TrialScenario& scenario,
                                             std::span<const double> thresholds, unsigned workers = 1) {
  if (thresholds.size() < 2) throw ArgumentError("ROC needs at least 2 thresholds");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ArgumentError("ROC thresholds must be sorted ascending");
  return roc_curve(run_trials(scenario, config, workers), d, thresholds);
}

/// Threshold at which every finite statistic decides present.
inline double admit_all_threshold(Detector d) {
  switch (d) {
    case Detector::ed:
    case Detector::acf1: return std::numeric_limits<double>::denorm_min();
    case Detector::cdist: return std::nextafter(1.0, 0.0);
  }
  return 0.0;
}

/// Threshold at which (almost) nothing decides present.
inline double reject_all_threshold(Detector d) {
  switch (d) {
    case Detector::ed: return std::numeric_limits<double>::max();
    case Detector::acf1: return std::nextafter(1.0, 0.0);
    case Detector::cdist: return std::numeric_limits<double>::denorm_min();
  }
  return 0.0;
}

struct RecoveryResult {
  double true_duty = 0.0;       // schedule duty cycle
  double label_fraction = 0.0;  // fraction of scans labeled present
  double measured = 0.0;        // N_detected / N_total
  double abs_error = 0.0;       // |measured - true_duty|
  std::size_t scans = 0;
};

/// Runs `detector` over a synthetic channel timeline and compares its
/// occupancy with the schedule's duty cycle.
inline RecoveryResult occupancy_recovery(const OccupancySchedule& schedule, Detector detector,
                                         const DetectorConfig& config, const SignalSpec& signal,
                                         const NoiseSpec& noise, double snr_db,
                                         const ChannelTimeline::Timing& timing, unsigned workers = 1) {
  config.validate();
  const auto timeline = gen_channel_timeline(schedule, signal, noise, snr_db, timing);
  std::vector<char> labels(timeline.size()), hits(timeline.size());
  parallel_for(timeline.size(), workers, [&](std::size_t k) {
    const auto item = timeline[k];
    labels[k] = item.present;
    hits[k] = decide(detector, detail::safe_statistic(detector, item.frame, config), config.threshold(detector)).present;
  });
  RecoveryResult r;
  r.scans = timeline.size();
  r.true_duty = schedule.duty_cycle();
  if (r.scans > 0) {
    r.label_fraction = static_cast<double>(std::count(labels.begin(), labels.end(), 1)) / static_cast<double>(r.scans);
    r.measured = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(r.scans);
  }
  r.abs_error = std::abs(r.measured - r.true_duty);
  return r;
}

inline constexpr std::string_view kEvalCsvHeader = "detector,scenario,snr_db,threshold,trials,pd,pfa";

struct EvalRow {
  std::string scenario;
  OperatingPoint point;
};

inline void write_eval_csv(std::ostream& out, std::span<const EvalRow> rows) {
  out << kEvalCsvHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.point.detector) << ',' << r.scenario << ',' << detail::fmt9(r.point.snr_db) << ','
        << detail::fmt9(r.point.threshold) << ',' << r.point.trials << ',' << detail::fmt9(r.point.pd) << ','
        << detail::fmt9(r.point.pfa) << '\n';
  }
}

}  // namespace specscan

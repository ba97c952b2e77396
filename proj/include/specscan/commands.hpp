// SPDX-License-Identifier: Apache-2.0
#pragma once

// The five CLI subcommands as library calls. tools/specscan.cpp only parses
// arguments and forwards here, which lets the tests drive the commands
// in-process.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specscan/detectors.hpp"
#include "specscan/eval_harness.hpp"
#include "specscan/iq_model.hpp"
#include "specscan/occupancy_report.hpp"
#include "specscan/scan_engine.hpp"
#include "specscan/scenario.hpp"

namespace specscan {

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  std::optional<unsigned> workers;  // overrides the scenario's value
};

inline unsigned worker_count(const Scenario& s, const CommandOptions& opt) {
  return std::max(1u, opt.workers.value_or(s.workers));
}

/// Writes reference.txt and thresholds.txt; prints the thresholds.
inline CalibrationResult cmd_calibrate(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const auto cal = calibrate(s, worker_count(s, opt));
  const auto ref_path = opt.out_dir / "reference.txt";
  std::filesystem::create_directories(opt.out_dir);
  write_reference(cal.reference, ref_path);

  const auto thr_path = opt.out_dir / "thresholds.txt";
  auto thr = detail::open_output(thr_path);
  thr << "target_pfa=" << detail::fmt9(cal.target_pfa) << '\n'
      << "lambda_ed=" << detail::fmt9(cal.lambda_ed) << '\n'
      << "lambda_acf=" << detail::fmt9(cal.lambda_acf) << '\n'
      << "gamma=" << detail::fmt9(cal.gamma) << '\n';
  detail::finish(thr, thr_path);

  log << "reference=" << ref_path.string() << '\n'
      << "target_pfa=" << detail::fmt9(cal.target_pfa) << '\n'
      << "lambda_ed=" << detail::fmt9(cal.lambda_ed) << '\n'
      << "lambda_acf=" << detail::fmt9(cal.lambda_acf) << '\n'
      << "gamma=" << detail::fmt9(cal.gamma) << '\n';
  return cal;
}

struct SimulateSummary {
  std::size_t channels = 0;
  std::size_t scans = 0;
  std::size_t records = 0;
  DetectorConfig config;
};

/// Sweeps the scenario's plan and writes records.csv, truth.csv and plan.csv.
inline SimulateSummary cmd_simulate(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const unsigned workers = worker_count(s, opt);
  const auto plan = s.plan();
  SimulateSummary sum;
  sum.config = resolve_detector(s, workers);
  const auto sources = channel_sources(s);
  const auto sweep = run_sweep(sources, sum.config, plan, workers);
  sum.channels = plan.size();
  sum.scans = sweep.truth.size();
  sum.records = sweep.records.size();

  const auto rec_path = opt.out_dir / "records.csv";
  auto rec = detail::open_output(rec_path);
  write_record_csv(rec, sweep.records);
  detail::finish(rec, rec_path);

  const auto truth_path = opt.out_dir / "truth.csv";
  auto truth = detail::open_output(truth_path);
  write_truth_csv(truth, sweep.truth);
  detail::finish(truth, truth_path);

  const auto plan_path = opt.out_dir / "plan.csv";
  auto plan_out = detail::open_output(plan_path);
  write_plan_csv(plan_out, plan);
  detail::finish(plan_out, plan_path);

  log << "channels=" << sum.channels << " scans=" << sum.scans << " records=" << sum.records << '\n'
      << "lambda_ed=" << detail::fmt9(sum.config.lambda_ed) << " lambda_acf=" << detail::fmt9(sum.config.lambda_acf)
      << " gamma=" << detail::fmt9(sum.config.gamma) << '\n';
  return sum;
}

/// Channel used for an offline recording: the plan channel whose routing
/// window holds `center_mhz`, or a stand-alone channel spanning the capture
/// bandwidth.
inline Channel channel_for_recording(const Scenario& s, double center_mhz, double sample_rate_hz) {
  for (const auto& c : s.plan())
    if (std::abs(c.center_freq_mhz - center_mhz) <= c.spacing_mhz / 2.0) return c;
  return Channel{"recording", 0, center_mhz, sample_rate_hz / 1e6};
}

struct AnalyzeSummary {
  Channel channel;
  std::size_t frames = 0;
  std::size_t discarded_samples = 0;
  std::size_t records = 0;
};

/// Frames a recording, scans every frame and writes records.csv.
inline AnalyzeSummary cmd_analyze(const Scenario& s, const std::filesystem::path& iq_path,
                                  const std::filesystem::path& meta_path, std::optional<double> center_mhz,
                                  const CommandOptions& opt, std::ostream& log) {
  const auto config = resolve_detector(s, worker_count(s, opt));
  const auto rec = read_recording(iq_path, meta_path, s.frame_len);
  const double center = center_mhz.value_or(rec.meta.center_freq_hz / 1e6);
  AnalyzeSummary sum;
  sum.channel = channel_for_recording(s, center, rec.meta.sample_rate_hz);
  sum.frames = rec.frames.size();
  sum.discarded_samples = rec.discarded_samples;

  std::vector<ScanRecord> records;
  records.reserve(3 * rec.frames.size());
  for (const auto& f : rec.frames)
    for (auto& r : scan_channel(f, sum.channel, config)) records.push_back(std::move(r));
  sum.records = records.size();

  const auto path = opt.out_dir / "records.csv";
  auto out = detail::open_output(path);
  write_record_csv(out, records);
  detail::finish(out, path);
  log << "channel=" << sum.channel.band << '#' << sum.channel.index_in_band << " frames=" << sum.frames
      << " discarded_samples=" << sum.discarded_samples << " records=" << sum.records << '\n';
  return sum;
}

struct ReportSummary {
  std::size_t records = 0;
  std::size_t cells = 0;
  std::vector<std::filesystem::path> plot_files;
};

/// Aggregates a record CSV into occupancy.csv plus plot/<channel>.dat files.
inline ReportSummary cmd_report(const std::filesystem::path& records_path, double bin_len_s,
                                const CommandOptions& opt, std::ostream& log) {
  std::ifstream in(records_path);
  if (!in) throw IoError("cannot open " + records_path.string());
  std::vector<ScanRecord> records;
  try {
    records = read_record_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line, records_path.string() + ": " + e.reason);
  }
  const auto cells = aggregate(records, bin_len_s);
  ReportSummary sum;
  sum.records = records.size();
  sum.cells = cells.size();

  const auto occ_path = opt.out_dir / "occupancy.csv";
  auto occ = detail::open_output(occ_path);
  write_occupancy_csv(occ, cells);
  detail::finish(occ, occ_path);

  const auto channels = channels_of(cells);
  for (const auto& c : channels) {
    const auto path = opt.out_dir / "plot" / plot_file_name(c);
    auto out = detail::open_output(path);
    write_plot_data(out, report_matrix(cells, c, channels));
    detail::finish(out, path);
    sum.plot_files.push_back(path);
  }
  log << "records=" << sum.records << " cells=" << sum.cells << " channels=" << channels.size() << '\n';
  return sum;
}

/// Thresholds spread evenly over the pooled statistics of a trial set.
inline std::vector<double> roc_thresholds(const SharedTrials& trials, Detector d, std::size_t points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* v : {&trials.signal_stats(d), &trials.noise_stats(d)})
    for (double x : *v)
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  if (!(lo < hi)) {
    lo = admit_all_threshold(d);
    hi = std::max(lo, std::isfinite(hi) ? hi : 1.0);
  }
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  // Keep every threshold inside the decision rule's legal range.
  for (auto& t : out) {
    if (d != Detector::ed) t = std::clamp(t, admit_all_threshold(Detector::acf1), std::nextafter(1.0, 0.0));
    else t = std::max(t, admit_all_threshold(Detector::ed));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Per SNR point and detector: the configured threshold, the threshold
/// matched to the target false-alarm rate, a ROC sweep and the degenerate
/// endpoints, all on one shared trial set. Writes eval.csv.
inline std::vector<EvalRow> cmd_eval(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const unsigned workers = worker_count(s, opt);
  const auto config = resolve_detector(s, workers);
  std::vector<EvalRow> rows;
  for (std::size_t k = 0; k < s.eval.snr_db.size(); ++k) {
    TrialScenario ts;
    ts.signal = s.eval.signal;
    ts.noise = {s.eval.noise_power, 0};
    ts.snr_db = s.eval.snr_db[k];
    ts.frame_len = s.frame_len;
    ts.trials = s.eval.trials;
    ts.seed = derive_seed(s.master_seed, "eval", k);
    const auto trials = run_trials(ts, config, workers);
    for (auto d : kAllDetectors) {
      rows.push_back({"configured", operating_point(trials, d, config.threshold(d))});
      rows.push_back({"matched_pfa", operating_point(trials, d, matched_threshold(trials, d, s.eval.target_pfa))});
      for (const auto& p : roc_curve(trials, d, roc_thresholds(trials, d, s.eval.roc_points)))
        rows.push_back({"roc", p});
      rows.push_back({"admit_all", operating_point(trials, d, admit_all_threshold(d))});
      rows.push_back({"reject_all", operating_point(trials, d, reject_all_threshold(d))});
    }
    log << "snr_db=" << detail::fmt9(ts.snr_db) << " trials=" << ts.trials << '\n';
  }
  const auto path = opt.out_dir / "eval.csv";
  auto out = detail::open_output(path);
  write_eval_csv(out, rows);
  detail::finish(out, path);
  log << "rows=" << rows.size() << '\n';
  return rows;
}

}  // namespace specscan

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files: one YAML document describing a simulated campaign.
// The grammar is documented in docs/scenario.md. Needs yaml-cpp.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "specscan/detectors.hpp"
#include "specscan/errors.hpp"
#include "specscan/scan_engine.hpp"
#include "specscan/seeding.hpp"
#include "specscan/signal_synth.hpp"

namespace specscan {

/// Synthetic source parameters for one channel. Seeds are not part of the
/// file; they are derived from the master seed and the channel's position.
struct ChannelSetup {
  SignalSpec signal;
  double noise_power = 1.0;
  double snr_db = 10.0;
  OccupancySchedule schedule = OccupancySchedule::always_on();
};

struct CalibrationSetup {
  SignalSpec signal;
  double noise_power = 1.0;
  double snr_db = 20.0;
  std::size_t signal_frames = 100;
  std::size_t noise_frames = 1000;
  double target_pfa = 0.05;
};

struct EvalSetup {
  SignalSpec signal;
  double noise_power = 1.0;
  std::vector<double> snr_db{0.0, 5.0, 10.0, 20.0};
  std::size_t trials = 1000;
  double target_pfa = 0.05;
  std::size_t roc_points = 21;
};

struct Scenario {
  std::vector<BandSpec> bands = builtin_bands();
  ChannelSetup defaults;
  std::map<ChannelKey, ChannelSetup> channels;  // per-channel overrides, fully resolved

  std::size_t frame_len = 1024;
  double frame_interval_s = 1.0;
  double total_s = 0.0;
  double start_time = 0.0;
  double sample_rate_hz = 1.0e6;

  // Thresholds marked `auto` (or a missing reference) are filled from the
  // calibration section at run time.
  DetectorConfig detector;
  bool auto_lambda_ed = false;
  bool auto_lambda_acf = false;
  bool auto_gamma = false;
  std::optional<std::filesystem::path> reference_path;

  CalibrationSetup calibration;
  EvalSetup eval;

  std::uint64_t master_seed = 0;
  double bin_len_s = 3600.0;
  unsigned workers = 1;

  std::vector<Channel> plan() const { return build_channel_plan(bands); }

  const ChannelSetup& setup_for(const Channel& c) const {
    auto it = channels.find(key_of(c));
    return it == channels.end() ? defaults : it->second;
  }
};

namespace detail {

class ScenarioReader {
 public:
  explicit ScenarioReader(std::filesystem::path base) : base_(std::move(base)) {}

  Scenario read(const YAML::Node& root) {
    if (!root.IsMap()) fail(root, "", "top level must be a mapping");
    Scenario s;
    check_keys(root, "", {"seed", "plan", "frame_len", "frame_interval_s", "total_s", "start_time_unix",
                          "sample_rate_hz", "detector", "channel_defaults", "channels", "calibration", "eval",
                          "bin_len_s", "workers"});
    if (auto n = root["seed"]) s.master_seed = as<std::uint64_t>(n, "seed");
    if (auto n = root["plan"]) s.bands = read_plan(n);
    if (auto n = root["frame_len"]) s.frame_len = as<std::size_t>(n, "frame_len");
    if (auto n = root["frame_interval_s"]) s.frame_interval_s = as<double>(n, "frame_interval_s");
    if (auto n = root["total_s"]) s.total_s = as<double>(n, "total_s");
    if (auto n = root["start_time_unix"]) s.start_time = as<double>(n, "start_time_unix");
    if (auto n = root["sample_rate_hz"]) s.sample_rate_hz = as<double>(n, "sample_rate_hz");
    if (auto n = root["bin_len_s"]) s.bin_len_s = as<double>(n, "bin_len_s");
    if (auto n = root["workers"]) s.workers = as<unsigned>(n, "workers");

    if (s.frame_len == 0) fail(root["frame_len"], "frame_len", "must be >= 1");
    if (!(s.frame_interval_s > 0.0)) fail(root["frame_interval_s"], "frame_interval_s", "must be > 0");
    if (!(s.total_s >= 0.0)) fail(root["total_s"], "total_s", "must be >= 0");
    if (!(s.sample_rate_hz > 0.0)) fail(root["sample_rate_hz"], "sample_rate_hz", "must be > 0");
    if (!(s.bin_len_s > 0.0)) fail(root["bin_len_s"], "bin_len_s", "must be > 0");

    try {
      (void)s.plan();
    } catch (const PlanError& e) {
      fail(root["plan"], "plan", e.what());
    }

    if (auto n = root["detector"]) read_detector(n, s);
    if (auto n = root["channel_defaults"]) s.defaults = read_channel(n, "channel_defaults", s.defaults);
    if (auto n = root["channels"]) read_overrides(n, s);
    if (auto n = root["calibration"]) read_calibration(n, s.calibration);
    if (auto n = root["eval"]) read_eval(n, s.eval);
    return s;
  }

 private:
  std::filesystem::path base_;

  [[noreturn]] static void fail(const YAML::Node& node, const std::string& field, const std::string& msg) {
    const std::size_t line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    throw ParseError(line, (field.empty() ? "" : "field '" + field + "': ") + msg);
  }

  static void check_keys(const YAML::Node& map, const std::string& where, std::set<std::string> allowed) {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        fail(kv.first, where.empty() ? key : where + "." + key, "unknown key");
    }
  }

  template <class T>
  static T as(const YAML::Node& node, const std::string& field) {
    try {
      if (!node.IsScalar()) fail(node, field, "expected a scalar");
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, field, "invalid value '" + (node.IsScalar() ? node.Scalar() : std::string("?")) + "'");
    }
  }

  std::vector<BandSpec> read_plan(const YAML::Node& n) {
    if (n.IsScalar()) {
      if (n.Scalar() == "builtin") return builtin_bands();
      fail(n, "plan", "expected 'builtin' or a list of bands");
    }
    if (!n.IsSequence()) fail(n, "plan", "expected 'builtin' or a list of bands");
    std::vector<BandSpec> bands;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const auto b = n[i];
      const auto where = "plan[" + std::to_string(i) + "]";
      if (!b.IsMap()) fail(b, where, "expected a mapping");
      check_keys(b, where, {"name", "start_mhz", "stop_mhz", "spacing_mhz", "channels"});
      for (const char* req : {"name", "start_mhz", "stop_mhz", "spacing_mhz", "channels"})
        if (!b[req]) fail(b, where + "." + req, "missing");
      BandSpec spec;
      spec.name = as<std::string>(b["name"], where + ".name");
      if (spec.name.find(',') != std::string::npos) fail(b["name"], where + ".name", "band names cannot contain ','");
      spec.start_mhz = as<double>(b["start_mhz"], where + ".start_mhz");
      spec.stop_mhz = as<double>(b["stop_mhz"], where + ".stop_mhz");
      spec.spacing_mhz = real_list(b["spacing_mhz"], where + ".spacing_mhz");
      spec.expected_channels = as<std::size_t>(b["channels"], where + ".channels");
      bands.push_back(std::move(spec));
    }
    return bands;
  }

  std::vector<double> real_list(const YAML::Node& n, const std::string& field) {
    if (n.IsScalar()) return {as<double>(n, field)};
    if (!n.IsSequence()) fail(n, field, "expected a number or a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(as<double>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  template <class Fn>
  void guarded(const YAML::Node& n, const std::string& field, Fn&& fn) {
    try {
      fn();
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      fail(n, field, e.what());
    }
  }

  SignalSpec read_signal(const YAML::Node& n, const std::string& where, SignalSpec base) {
    if (!n.IsMap()) fail(n, where, "expected a mapping");
    check_keys(n, where, {"kind", "normalized_freq", "symbol_rate_divisor", "amplitude", "phase"});
    if (auto k = n["kind"]) guarded(k, where + ".kind", [&] { base.kind = parse_signal_kind(as<std::string>(k, where)); });
    if (auto k = n["normalized_freq"]) base.normalized_freq = as<double>(k, where + ".normalized_freq");
    if (auto k = n["symbol_rate_divisor"]) base.symbol_rate_divisor = as<std::uint32_t>(k, where + ".symbol_rate_divisor");
    if (auto k = n["amplitude"]) base.amplitude = as<double>(k, where + ".amplitude");
    if (auto k = n["phase"]) base.phase = as<double>(k, where + ".phase");
    guarded(n, where, [&] { base.validate(); });
    return base;
  }

  OccupancySchedule read_schedule(const YAML::Node& n, const std::string& where) {
    if (!n.IsMap()) fail(n, where, "expected a mapping");
    check_keys(n, where, {"period_s", "on"});
    OccupancySchedule s;
    if (!n["period_s"]) fail(n, where + ".period_s", "missing");
    s.period_s = as<double>(n["period_s"], where + ".period_s");
    if (auto on = n["on"]) {
      if (!on.IsSequence()) fail(on, where + ".on", "expected a list of [start, end] pairs");
      for (std::size_t i = 0; i < on.size(); ++i) {
        const auto field = where + ".on[" + std::to_string(i) + "]";
        if (!on[i].IsSequence() || on[i].size() != 2) fail(on[i], field, "expected [start, end]");
        s.on_intervals.emplace_back(as<double>(on[i][0], field), as<double>(on[i][1], field));
      }
    }
    guarded(n, where, [&] { s.validate(); });
    return s;
  }

  ChannelSetup read_channel(const YAML::Node& n, const std::string& where, ChannelSetup base,
                            std::set<std::string> extra_keys = {}) {
    if (!n.IsMap()) fail(n, where, "expected a mapping");
    extra_keys.insert({"signal", "noise_power", "snr_db", "schedule"});
    check_keys(n, where, extra_keys);
    if (auto k = n["signal"]) base.signal = read_signal(k, where + ".signal", base.signal);
    if (auto k = n["noise_power"]) base.noise_power = positive(k, where + ".noise_power");
    if (auto k = n["snr_db"]) base.snr_db = as<double>(k, where + ".snr_db");
    if (auto k = n["schedule"]) base.schedule = read_schedule(k, where + ".schedule");
    return base;
  }

  double positive(const YAML::Node& n, const std::string& field) {
    const double v = as<double>(n, field);
    if (!(v > 0.0)) fail(n, field, "must be > 0");
    return v;
  }

  void read_overrides(const YAML::Node& n, Scenario& s) {
    if (!n.IsSequence()) fail(n, "channels", "expected a list");
    const auto plan = s.plan();
    for (std::size_t i = 0; i < n.size(); ++i) {
      const auto where = "channels[" + std::to_string(i) + "]";
      const auto c = n[i];
      if (!c.IsMap()) fail(c, where, "expected a mapping");
      if (!c["band"] || !c["index"]) fail(c, where, "needs 'band' and 'index'");
      const ChannelKey key{as<std::string>(c["band"], where + ".band"), as<std::size_t>(c["index"], where + ".index")};
      if (std::none_of(plan.begin(), plan.end(), [&](const Channel& ch) { return key_of(ch) == key; }))
        fail(c, where, "channel " + key.first + "#" + std::to_string(key.second) + " is not in the plan");
      s.channels[key] = read_channel(c, where, s.defaults, {"band", "index"});
    }
  }

  void read_detector(const YAML::Node& n, Scenario& s) {
    if (!n.IsMap()) fail(n, "detector", "expected a mapping");
    check_keys(n, "detector", {"lambda_ed", "lambda_acf", "gamma", "acf_lags", "reference"});
    auto threshold = [&](const char* key, double& value, bool& is_auto) {
      if (auto k = n[key]) {
        if (k.IsScalar() && k.Scalar() == "auto") {
          is_auto = true;
        } else {
          value = as<double>(k, std::string("detector.") + key);
        }
      }
    };
    threshold("lambda_ed", s.detector.lambda_ed, s.auto_lambda_ed);
    threshold("lambda_acf", s.detector.lambda_acf, s.auto_lambda_acf);
    threshold("gamma", s.detector.gamma, s.auto_gamma);
    if (auto k = n["acf_lags"]) s.detector.acf_lags = as<std::size_t>(k, "detector.acf_lags");
    if (s.detector.acf_lags < 2 || s.detector.acf_lags > s.frame_len)
      fail(n["acf_lags"] ? n["acf_lags"] : n, "detector.acf_lags", "must lie in [2, frame_len]");
    if (!s.auto_lambda_ed && !(s.detector.lambda_ed > 0.0)) fail(n["lambda_ed"], "detector.lambda_ed", "must be > 0");
    if (!s.auto_lambda_acf && !(s.detector.lambda_acf > 0.0 && s.detector.lambda_acf < 1.0))
      fail(n["lambda_acf"], "detector.lambda_acf", "must lie in (0, 1)");
    if (!s.auto_gamma && !(s.detector.gamma > 0.0 && s.detector.gamma < 1.0))
      fail(n["gamma"], "detector.gamma", "must lie in (0, 1)");
    if (auto k = n["reference"]) {
      std::filesystem::path p = as<std::string>(k, "detector.reference");
      s.reference_path = p.is_absolute() ? p : base_ / p;
    }
  }

  void read_calibration(const YAML::Node& n, CalibrationSetup& c) {
    if (!n.IsMap()) fail(n, "calibration", "expected a mapping");
    check_keys(n, "calibration", {"signal", "noise_power", "snr_db", "signal_frames", "noise_frames", "target_pfa"});
    if (auto k = n["signal"]) c.signal = read_signal(k, "calibration.signal", c.signal);
    if (auto k = n["noise_power"]) c.noise_power = positive(k, "calibration.noise_power");
    if (auto k = n["snr_db"]) c.snr_db = as<double>(k, "calibration.snr_db");
    if (auto k = n["signal_frames"]) c.signal_frames = as<std::size_t>(k, "calibration.signal_frames");
    if (auto k = n["noise_frames"]) c.noise_frames = as<std::size_t>(k, "calibration.noise_frames");
    if (auto k = n["target_pfa"]) c.target_pfa = as<double>(k, "calibration.target_pfa");
    if (c.signal_frames < 1) fail(n["signal_frames"], "calibration.signal_frames", "must be >= 1");
    if (c.noise_frames < kMinCalibrationFrames)
      fail(n["noise_frames"], "calibration.noise_frames", "must be >= " + std::to_string(kMinCalibrationFrames));
    if (!(c.target_pfa > 0.0 && c.target_pfa < 1.0)) fail(n["target_pfa"], "calibration.target_pfa", "must lie in (0, 1)");
    if (c.signal.kind == SignalKind::none) fail(n["signal"] ? n["signal"] : n, "calibration.signal", "kind must not be none");
  }

  void read_eval(const YAML::Node& n, EvalSetup& e) {
    if (!n.IsMap()) fail(n, "eval", "expected a mapping");
    check_keys(n, "eval", {"signal", "noise_power", "snr_db", "trials", "target_pfa", "roc_points"});
    if (auto k = n["signal"]) e.signal = read_signal(k, "eval.signal", e.signal);
    if (auto k = n["noise_power"]) e.noise_power = positive(k, "eval.noise_power");
    if (auto k = n["snr_db"]) e.snr_db = real_list(k, "eval.snr_db");
    if (auto k = n["trials"]) e.trials = as<std::size_t>(k, "eval.trials");
    if (auto k = n["target_pfa"]) e.target_pfa = as<double>(k, "eval.target_pfa");
    if (auto k = n["roc_points"]) e.roc_points = as<std::size_t>(k, "eval.roc_points");
    if (e.trials < 1) fail(n["trials"], "eval.trials", "must be >= 1");
    if (!(e.target_pfa > 0.0 && e.target_pfa < 1.0)) fail(n["target_pfa"], "eval.target_pfa", "must lie in (0, 1)");
    if (e.roc_points < 2) fail(n["roc_points"], "eval.roc_points", "must be >= 2");
  }
};

}  // namespace detail

/// Parses scenario text. Relative paths inside it resolve against `base_dir`.
inline Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = ".") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(static_cast<std::size_t>(e.mark.line + 1), e.msg);
  }
  if (root.IsNull()) return Scenario{};
  return detail::ScenarioReader(base_dir).read(root);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(e.line, path.string() + ": " + e.reason);
  }
}

// ---- seed derivation -----------------------------------------------------
// Every stream below is derive_seed(master_seed, <purpose>, <index>).

/// Lazy per-channel sources for run_sweep, keyed by channel.
inline std::map<ChannelKey, ChannelTimeline> channel_sources(const Scenario& s) {
  std::map<ChannelKey, ChannelTimeline> out;
  const auto plan = s.plan();
  for (std::size_t c = 0; c < plan.size(); ++c) {
    const auto& setup = s.setup_for(plan[c]);
    SignalSpec signal = setup.signal;
    signal.seed = derive_seed(s.master_seed, "channel-signal", c);
    const NoiseSpec noise{setup.noise_power, derive_seed(s.master_seed, "channel-noise", c)};
    ChannelTimeline::Timing timing{s.frame_len,     s.frame_interval_s,          s.total_s,
                                   s.start_time,    s.sample_rate_hz,            plan[c].center_freq_mhz * 1e6};
    out.emplace(key_of(plan[c]), ChannelTimeline(setup.schedule, signal, noise, setup.snr_db, timing));
  }
  return out;
}

struct CalibrationResult {
  AcfVector reference;
  double lambda_ed = 0.0;
  double lambda_acf = 0.0;
  double gamma = 0.0;
  double target_pfa = 0.0;
};

/// Reference vector from high-SNR known-present frames, then per-detector
/// thresholds at the target false-alarm rate from noise-only frames.
inline CalibrationResult calibrate(const Scenario& s, unsigned workers = 1) {
  const auto& c = s.calibration;
  SignalSpec signal = c.signal;
  signal.seed = derive_seed(s.master_seed, "calibration-signal");
  const NoiseSpec mix_noise{c.noise_power, derive_seed(s.master_seed, "calibration-mix-noise")};
  const NoiseSpec h0_noise{c.noise_power, derive_seed(s.master_seed, "calibration-noise")};

  std::vector<std::optional<ComplexFrame>> training(c.signal_frames);
  parallel_for(c.signal_frames, workers, [&](std::size_t i) {
    training[i] = mix_at_snr(gen_signal_frame(s.frame_len, signal, i), gen_noise_frame(s.frame_len, mix_noise, i),
                             c.snr_db, signal, mix_noise);
  });
  std::vector<ComplexFrame> frames;
  frames.reserve(training.size());
  for (auto& f : training) frames.push_back(std::move(*f));

  CalibrationResult out;
  out.target_pfa = c.target_pfa;
  out.reference = calibrate_reference(std::span<const ComplexFrame>(frames), s.detector.acf_lags);

  DetectorConfig probe = s.detector;
  probe.reference = out.reference;
  std::array<std::vector<double>, 3> stats;
  for (auto& v : stats) v.resize(c.noise_frames);
  parallel_for(c.noise_frames, workers, [&](std::size_t i) {
    const auto f = gen_noise_frame(s.frame_len, h0_noise, i);
    for (std::size_t d = 0; d < 3; ++d) stats[d][i] = detector_statistic(kAllDetectors[d], f, probe);
  });
  if (c.noise_frames < kMinCalibrationFrames) throw CalibrationError("too few calibration noise frames");
  out.lambda_ed = threshold_for_pfa(Detector::ed, stats[0], c.target_pfa);
  out.lambda_acf = threshold_for_pfa(Detector::acf1, stats[1], c.target_pfa);
  out.gamma = threshold_for_pfa(Detector::cdist, stats[2], c.target_pfa);
  return out;
}

/// The detector configuration a run should use: file reference if given,
/// calibration results for anything marked auto.
inline DetectorConfig resolve_detector(const Scenario& s, unsigned workers = 1) {
  DetectorConfig cfg = s.detector;
  const bool need_cal = !s.reference_path || s.auto_lambda_ed || s.auto_lambda_acf || s.auto_gamma;
  std::optional<CalibrationResult> cal;
  if (need_cal) cal = calibrate(s, workers);
  cfg.reference = s.reference_path ? read_reference(*s.reference_path) : cal->reference;
  if (s.reference_path && need_cal && cfg.reference != cal->reference && s.auto_gamma) {
    // gamma must be calibrated against the reference actually in use
    DetectorConfig probe = cfg;
    const NoiseSpec h0_noise{s.calibration.noise_power, derive_seed(s.master_seed, "calibration-noise")};
    std::vector<double> d(s.calibration.noise_frames);
    parallel_for(d.size(), workers, [&](std::size_t i) {
      d[i] = detector_statistic(Detector::cdist, gen_noise_frame(s.frame_len, h0_noise, i), probe);
    });
    cal->gamma = threshold_for_pfa(Detector::cdist, std::move(d), s.calibration.target_pfa);
  }
  if (s.auto_lambda_ed) cfg.lambda_ed = cal->lambda_ed;
  if (s.auto_lambda_acf) cfg.lambda_acf = cal->lambda_acf;
  if (s.auto_gamma) cfg.gamma = cal->gamma;
  cfg.validate();
  return cfg;
}

}  // namespace specscan

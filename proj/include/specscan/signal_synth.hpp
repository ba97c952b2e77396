// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "specscan/errors.hpp"
#include "specscan/iq_model.hpp"
#include "specscan/seeding.hpp"

namespace specscan {

/// Circularly symmetric complex white Gaussian noise.
struct NoiseSpec {
  double total_power = 1.0;  // E[|y|^2] per complex sample
  std::uint64_t seed = 0;

  void validate() const {
    if (!(total_power > 0.0) || !std::isfinite(total_power))
      throw ConfigError("noise total_power must be > 0");
  }
};

enum class SignalKind { none, tone, bpsk };

inline std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::tone: return "tone";
    case SignalKind::bpsk: return "bpsk";
    case SignalKind::none: break;
  }
  return "none";
}

inline SignalKind parse_signal_kind(std::string_view s) {
  if (s == "tone") return SignalKind::tone;
  if (s == "bpsk") return SignalKind::bpsk;
  if (s == "none") return SignalKind::none;
  throw ConfigError("unknown signal kind '" + std::string(s) + "'");
}

struct SignalSpec {
  SignalKind kind = SignalKind::tone;
  double normalized_freq = 0.05;  // cycles/sample, tone only
  std::uint32_t symbol_rate_divisor = 8;  // samples per symbol, bpsk only
  double amplitude = 1.0;
  double phase = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw ConfigError("signal amplitude must be >= 0");
    if (!std::isfinite(phase)) throw ConfigError("signal phase must be finite");
    if (kind == SignalKind::tone && !(normalized_freq > -0.5 && normalized_freq < 0.5))
      throw ConfigError("tone normalized_freq must lie in (-0.5, 0.5)");
    if (kind == SignalKind::bpsk && symbol_rate_divisor < 1)
      throw ConfigError("bpsk symbol_rate_divisor must be >= 1");
  }

  /// Nominal mean power per sample; exact for both waveforms.
  double power() const noexcept { return kind == SignalKind::none ? 0.0 : amplitude * amplitude; }
};

/// On/off ground truth repeating with period `period_s`.
struct OccupancySchedule {
  double period_s = 1.0;
  std::vector<std::pair<double, double>> on_intervals;  // [start, end) within one period

  void validate() const {
    if (!(period_s > 0.0) || !std::isfinite(period_s)) throw ScheduleError("period_s must be > 0");
    double prev_end = 0.0;
    for (std::size_t i = 0; i < on_intervals.size(); ++i) {
      const auto [a, b] = on_intervals[i];
      if (!(a >= 0.0) || !(b <= period_s) || !(a < b))
        throw ScheduleError("on interval " + std::to_string(i) + " must satisfy 0 <= start < end <= period_s");
      if (i > 0 && a < prev_end)
        throw ScheduleError("on interval " + std::to_string(i) + " overlaps or is out of order");
      prev_end = b;
    }
  }

  double duty_cycle() const noexcept {
    double on = 0.0;
    for (const auto& [a, b] : on_intervals) on += b - a;
    return on / period_s;
  }

  bool is_on(double t) const noexcept {
    double phase = std::fmod(t, period_s);
    if (phase < 0.0) phase += period_s;
    for (const auto& [a, b] : on_intervals)
      if (phase >= a && phase < b) return true;
    return false;
  }

  static OccupancySchedule always_on(double period_s = 1.0) { return {period_s, {{0.0, period_s}}}; }
  static OccupancySchedule always_off(double period_s = 1.0) { return {period_s, {}}; }
};

/// White Gaussian noise frame. A pure function of (seed, frame_index).
inline ComplexFrame gen_noise_frame(std::size_t n, const NoiseSpec& spec, std::uint64_t frame_index,
                                    const FrameInfo& info = {}) {
  spec.validate();
  if (n == 0) throw DimensionError("noise frame length must be >= 1");
  auto rng = make_rng(derive_seed(spec.seed, "noise", frame_index));
  std::normal_distribution<double> gauss(0.0, std::sqrt(spec.total_power / 2.0));
  std::vector<std::complex<double>> samples(n);
  for (auto& s : samples) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    s = {re, im};
  }
  return ComplexFrame(std::move(samples), info);
}

/// Noiseless signal frame. Tone phase restarts at every frame (m counts
/// from 0 within the frame); bpsk symbols are drawn per frame from
/// (seed, frame_index).
inline ComplexFrame gen_signal_frame(std::size_t n, const SignalSpec& spec, std::uint64_t frame_index,
                                     const FrameInfo& info = {}) {
  spec.validate();
  if (n == 0) throw DimensionError("signal frame length must be >= 1");
  std::vector<std::complex<double>> samples(n, {0.0, 0.0});
  switch (spec.kind) {
    case SignalKind::none:
      break;
    case SignalKind::tone: {
      const double w = 2.0 * std::numbers::pi * spec.normalized_freq;
      for (std::size_t m = 0; m < n; ++m)
        samples[m] = std::polar(spec.amplitude, w * static_cast<double>(m) + spec.phase);
      break;
    }
    case SignalKind::bpsk: {
      auto rng = make_rng(derive_seed(spec.seed, "bpsk", frame_index));
      std::bernoulli_distribution coin(0.5);
      const auto carrier = std::polar(spec.amplitude, spec.phase);
      std::complex<double> symbol = carrier;
      for (std::size_t m = 0; m < n; ++m) {
        if (m % spec.symbol_rate_divisor == 0) symbol = coin(rng) ? carrier : -carrier;
        samples[m] = symbol;
      }
      break;
    }
  }
  return ComplexFrame(std::move(samples), info);
}

/// Scale applied to the signal so that alpha^2 * signal_power / noise_power
/// equals 10^(snr_db/10). Nominal powers, never measured ones.
inline double snr_scale(double snr_db, double signal_power, double noise_power) {
  if (snr_db == -std::numeric_limits<double>::infinity()) return 0.0;
  if (std::isnan(snr_db) || std::isinf(snr_db)) throw ArgumentError("snr_db must be finite or -inf");
  if (!(signal_power > 0.0))
    throw DegenerateInputError("cannot scale a zero-power signal to a finite SNR");
  if (!(noise_power > 0.0)) throw ArgumentError("noise power must be > 0");
  return std::sqrt(std::pow(10.0, snr_db / 10.0) * noise_power / signal_power);
}

/// alpha * signal + noise, with alpha from snr_scale. snr_db = -inf returns
/// the noise frame unchanged. Metadata is taken from the noise frame.
inline ComplexFrame mix_at_snr(const ComplexFrame& signal, const ComplexFrame& noise, double snr_db,
                               double signal_power, double noise_power) {
  if (signal.size() != noise.size())
    throw DimensionError("signal and noise frames differ in length");
  const double alpha = snr_scale(snr_db, signal_power, noise_power);
  if (alpha == 0.0) return noise;
  std::vector<std::complex<double>> out(noise.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * signal[i] + noise[i];
  return ComplexFrame(std::move(out), noise.info());
}

inline ComplexFrame mix_at_snr(const ComplexFrame& signal, const ComplexFrame& noise, double snr_db,
                               const SignalSpec& signal_spec, const NoiseSpec& noise_spec) {
  if (signal_spec.kind == SignalKind::none) return noise;
  return mix_at_snr(signal, noise, snr_db, signal_spec.power(), noise_spec.total_power);
}

struct LabeledFrame {
  ComplexFrame frame;
  bool present;
};

/// Lazily generated, random-access frame sequence for one channel: frame k is
/// captured at start_time + k * frame_interval_s and labeled present iff that
/// time falls in an on-interval of the schedule. Present frames are
/// signal + noise at snr_db; absent frames are the noise alone. Frames are
/// regenerated on every access, so the object is cheap to copy and share.
class ChannelTimeline {
 public:
  struct Timing {
    std::size_t frame_len = 1024;
    double frame_interval_s = 1.0;
    double total_s = 0.0;
    double start_time = 0.0;
    double sample_rate_hz = 1.0e6;
    double center_freq_hz = 1.0e9;
  };

  ChannelTimeline(OccupancySchedule schedule, SignalSpec signal, NoiseSpec noise, double snr_db, Timing timing)
      : schedule_(std::move(schedule)), signal_(signal), noise_(noise), snr_db_(snr_db), timing_(timing) {
    schedule_.validate();
    signal_.validate();
    noise_.validate();
    if (timing_.frame_len == 0) throw ConfigError("frame_len must be >= 1");
    if (!(timing_.frame_interval_s > 0.0)) throw ConfigError("frame_interval_s must be > 0");
    if (!(timing_.total_s >= 0.0) || !std::isfinite(timing_.total_s)) throw ConfigError("total_s must be >= 0");
    if (signal_.kind != SignalKind::none) snr_scale(snr_db_, signal_.power(), noise_.total_power);
    // Small slack so that e.g. 0.3 / 0.1 still yields 3 frames.
    count_ = static_cast<std::size_t>(std::floor(timing_.total_s / timing_.frame_interval_s + 1e-9));
  }

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  double capture_time(std::size_t k) const noexcept {
    return timing_.start_time + static_cast<double>(k) * timing_.frame_interval_s;
  }
  bool label(std::size_t k) const noexcept {
    return signal_.kind != SignalKind::none && schedule_.is_on(capture_time(k));
  }

  LabeledFrame operator[](std::size_t k) const {
    const FrameInfo info{timing_.sample_rate_hz, timing_.center_freq_hz, capture_time(k)};
    auto noise = gen_noise_frame(timing_.frame_len, noise_, k, info);
    if (!label(k)) return {std::move(noise), false};
    const auto signal = gen_signal_frame(timing_.frame_len, signal_, k, info);
    return {mix_at_snr(signal, noise, snr_db_, signal_, noise_), true};
  }

  std::vector<LabeledFrame> materialize() const {
    std::vector<LabeledFrame> out;
    out.reserve(count_);
    for (std::size_t k = 0; k < count_; ++k) out.push_back((*this)[k]);
    return out;
  }

  const OccupancySchedule& schedule() const noexcept { return schedule_; }
  const Timing& timing() const noexcept { return timing_; }

 private:
  OccupancySchedule schedule_;
  SignalSpec signal_;
  NoiseSpec noise_;
  double snr_db_;
  Timing timing_;
  std::size_t count_ = 0;
};

inline ChannelTimeline gen_channel_timeline(const OccupancySchedule& schedule, const SignalSpec& signal,
                                            const NoiseSpec& noise, double snr_db,
                                            const ChannelTimeline::Timing& timing) {
  return ChannelTimeline(schedule, signal, noise, snr_db, timing);
}

}  // namespace specscan

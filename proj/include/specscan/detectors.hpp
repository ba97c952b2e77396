// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specscan/errors.hpp"
#include "specscan/iq_model.hpp"

namespace specscan {

enum class Detector { ed, acf1, cdist };

inline constexpr Detector kAllDetectors[] = {Detector::ed, Detector::acf1, Detector::cdist};

inline std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::ed: return "ed";
    case Detector::acf1: return "acf1";
    case Detector::cdist: return "cdist";
  }
  return "?";
}

inline Detector parse_detector(std::string_view s) {
  if (s == "ed") return Detector::ed;
  if (s == "acf1") return Detector::acf1;
  if (s == "cdist") return Detector::cdist;
  throw ArgumentError("unknown detector '" + std::string(s) + "'");
}

/// Whether a large statistic means "present" (ed, acf1) or a small one does
/// (cdist).
inline constexpr bool present_when_above(Detector d) noexcept { return d != Detector::cdist; }

struct Decision {
  double statistic = 0.0;
  double threshold = 0.0;
  bool present = false;
  bool degenerate = false;  // statistic undefined for this frame (zero energy)
};

// Ties always resolve to absent.
inline Decision energy_decide(double statistic, double lambda_ed) {
  return {statistic, lambda_ed, statistic > lambda_ed};
}

inline Decision acf1_decide(double statistic, double lambda_acf) {
  return {statistic, lambda_acf, statistic > lambda_acf};
}

inline Decision distance_decide(double distance, double gamma) {
  return {distance, gamma, distance < gamma};
}

inline Decision decide(Detector d, double statistic, double threshold) {
  switch (d) {
    case Detector::ed: return energy_decide(statistic, threshold);
    case Detector::acf1: return acf1_decide(statistic, threshold);
    case Detector::cdist: return distance_decide(statistic, threshold);
  }
  return {};
}

/// Mean sample power (1/N) * sum |y(n)|^2.
template <class Real>
double energy_statistic(const BasicFrame<Real>& frame) {
  double acc = 0.0;
  for (const auto& s : frame.samples()) {
    const double re = s.real();
    const double im = s.imag();
    acc += re * re + im * im;
  }
  return acc / static_cast<double>(frame.size());
}

/// Linear autocorrelation sum_{m=lag}^{N-1} x(m) conj(x(m-lag)). Terms that
/// would index before the start of the frame are omitted, not wrapped.
template <class Real>
std::complex<double> acf(const BasicFrame<Real>& frame, std::size_t lag) {
  const auto x = frame.samples();
  if (lag >= x.size())
    throw RangeError("acf lag " + std::to_string(lag) + " >= frame length " + std::to_string(x.size()));
  if (lag == 0) {
    double acc = 0.0;
    for (const auto& s : x) acc += static_cast<double>(s.real()) * s.real() + static_cast<double>(s.imag()) * s.imag();
    return {acc, 0.0};
  }
  double re = 0.0;
  double im = 0.0;
  for (std::size_t m = lag; m < x.size(); ++m) {
    const double ar = x[m].real(), ai = x[m].imag();
    const double br = x[m - lag].real(), bi = x[m - lag].imag();
    re += ar * br + ai * bi;
    im += ai * br - ar * bi;
  }
  return {re, im};
}

namespace detail {
template <class Real>
double checked_energy(const BasicFrame<Real>& frame) {
  const double e0 = acf(frame, 0).real();
  if (!(e0 > 0.0)) throw DegenerateInputError("zero-energy frame has no normalized autocorrelation");
  return e0;
}
}  // namespace detail

/// |acf(1)| / acf(0), in [0, 1]. Unchanged by any global complex gain.
template <class Real>
double acf1_statistic(const BasicFrame<Real>& frame) {
  const double e0 = detail::checked_energy(frame);
  if (frame.size() < 2) return 0.0;
  return std::min(1.0, std::abs(acf(frame, 1)) / e0);
}

/// Lag-0-normalized autocorrelation magnitudes at lags 0..L-1.
class AcfVector {
 public:
  AcfVector() = default;
  explicit AcfVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw DimensionError("ACF vector needs at least 2 lags");
    if (values_[0] != 1.0) throw ArgumentError("ACF vector must have values[0] == 1");
    for (std::size_t l = 0; l < values_.size(); ++l) {
      if (!(values_[l] >= 0.0 && values_[l] <= 1.0))
        throw ArgumentError("ACF vector entry " + std::to_string(l) + " outside [0, 1]");
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t l) const noexcept { return values_[l]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const AcfVector&, const AcfVector&) = default;

 private:
  std::vector<double> values_;
};

template <class Real>
AcfVector acf_vector(const BasicFrame<Real>& frame, std::size_t lags) {
  if (lags < 2 || lags > frame.size())
    throw RangeError("acf_vector needs 2 <= lags <= frame length, got " + std::to_string(lags));
  const double e0 = detail::checked_energy(frame);
  std::vector<double> values(lags);
  values[0] = 1.0;
  for (std::size_t l = 1; l < lags; ++l) values[l] = std::min(1.0, std::abs(acf(frame, l)) / e0);
  return AcfVector(std::move(values));
}

/// Entry-wise mean of the training frames' ACF vectors, with lag 0 pinned
/// to exactly 1.
template <class Frame>
AcfVector calibrate_reference(std::span<const Frame> training, std::size_t lags) {
  if (training.empty()) throw CalibrationError("reference calibration needs at least one training frame");
  std::vector<double> sum(lags, 0.0);
  for (const auto& frame : training) {
    const auto v = acf_vector(frame, lags);
    for (std::size_t l = 0; l < lags; ++l) sum[l] += v[l];
  }
  for (auto& s : sum) s = std::clamp(s / static_cast<double>(training.size()), 0.0, 1.0);
  sum[0] = 1.0;
  return AcfVector(std::move(sum));
}

/// Euclidean distance between two ACF vectors, divided by sqrt(L) so the
/// result stays in [0, 1].
inline double correlation_distance(const AcfVector& reference, const AcfVector& observed) {
  if (reference.size() != observed.size())
    throw DimensionError("ACF vector length mismatch: " + std::to_string(reference.size()) + " vs " +
                         std::to_string(observed.size()));
  double acc = 0.0;
  for (std::size_t l = 0; l < reference.size(); ++l) {
    const double d = reference[l] - observed[l];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(reference.size()));
}

/// Same distance without the 1/sqrt(L) normalization.
inline double raw_correlation_distance(const AcfVector& reference, const AcfVector& observed) {
  return correlation_distance(reference, observed) * std::sqrt(static_cast<double>(reference.size()));
}

/// Empirical q-quantile, linear interpolation between order statistics
/// (position q * (n - 1)).
inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw CalibrationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo == hi) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Threshold giving false-alarm rate `target_pfa` on noise-only statistics:
/// the (1 - pfa) quantile for detectors that fire above threshold, the pfa
/// quantile for cdist.
inline double threshold_for_pfa(Detector d, std::vector<double> noise_statistics, double target_pfa) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw ArgumentError("target_pfa must lie in (0, 1)");
  return empirical_quantile(std::move(noise_statistics), present_when_above(d) ? 1.0 - target_pfa : target_pfa);
}

inline constexpr std::size_t kMinCalibrationFrames = 100;

template <class Frame>
double calibrate_ed_threshold(std::span<const Frame> noise_frames, double target_pfa) {
  if (noise_frames.size() < kMinCalibrationFrames)
    throw CalibrationError("energy threshold calibration needs >= " + std::to_string(kMinCalibrationFrames) +
                           " noise frames, got " + std::to_string(noise_frames.size()));
  std::vector<double> stats;
  stats.reserve(noise_frames.size());
  for (const auto& f : noise_frames) stats.push_back(energy_statistic(f));
  return threshold_for_pfa(Detector::ed, std::move(stats), target_pfa);
}

struct DetectorConfig {
  double lambda_ed = 1.0;
  double lambda_acf = 0.5;
  double gamma = 0.5;
  std::size_t acf_lags = 8;
  AcfVector reference;

  double threshold(Detector d) const noexcept {
    switch (d) {
      case Detector::ed: return lambda_ed;
      case Detector::acf1: return lambda_acf;
      case Detector::cdist: return gamma;
    }
    return 0.0;
  }

  void validate() const {
    if (!(lambda_ed > 0.0) || !std::isfinite(lambda_ed)) throw ConfigError("lambda_ed must be > 0");
    if (!(lambda_acf > 0.0 && lambda_acf < 1.0)) throw ConfigError("lambda_acf must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (acf_lags < 2) throw ConfigError("acf_lags must be >= 2");
    if (reference.size() != acf_lags)
      throw ConfigError("reference vector has " + std::to_string(reference.size()) + " lags, acf_lags is " +
                        std::to_string(acf_lags));
  }
};

/// Statistic of one detector on one frame. Throws DegenerateInputError for
/// the ACF-based detectors on zero-energy frames.
template <class Real>
double detector_statistic(Detector d, const BasicFrame<Real>& frame, const DetectorConfig& config) {
  switch (d) {
    case Detector::ed: return energy_statistic(frame);
    case Detector::acf1: return acf1_statistic(frame);
    case Detector::cdist: return correlation_distance(config.reference, acf_vector(frame, config.acf_lags));
  }
  return 0.0;
}

// Reference-vector file: "lags=<L>" then one value per line.

inline void write_reference(const AcfVector& ref, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write reference file " + path.string());
  out << "lags=" << ref.size() << '\n';
  for (double v : ref.values()) out << detail::format_double(v) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline AcfVector read_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty reference file");
  const auto header = detail::trim(line);
  if (header.rfind("lags=", 0) != 0) throw FormatError(path.string() + ": line 1: expected lags=<L>");
  const auto lags = detail::parse_number<std::size_t>(std::string_view(header).substr(5));
  if (!lags || *lags < 2) throw FormatError(path.string() + ": line 1: bad lag count");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto v = detail::parse_number<double>(text);
    if (!v) throw FormatError(path.string() + ": line " + std::to_string(line_no) + ": not a number");
    values.push_back(*v);
  }
  if (values.size() != *lags)
    throw FormatError(path.string() + ": header says " + std::to_string(*lags) + " lags, found " +
                      std::to_string(values.size()) + " values");
  try {
    return AcfVector(std::move(values));
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace specscan

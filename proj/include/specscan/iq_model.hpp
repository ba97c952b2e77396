// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "specscan/errors.hpp"

namespace specscan {

/// Capture metadata attached to every frame.
struct FrameInfo {
  double sample_rate_hz = 1.0e6;
  double center_freq_hz = 1.0e9;
  double capture_time = 0.0;  // seconds, UTC epoch
};

/// A fixed-length block of complex baseband samples: the unit every detector
/// consumes. Frames are immutable after construction and validate on entry,
/// so downstream math never sees an empty frame or a non-finite sample.
///
/// `Real` is the component type. Recordings on disk are float32, so frames
/// read from files are `BasicFrame<float>`; synthesis and the evaluation
/// harness work in double.
template <class Real>
class BasicFrame {
 public:
  using value_type = Real;
  using sample_type = std::complex<Real>;

  BasicFrame(std::vector<sample_type> samples, FrameInfo info)
      : samples_(std::move(samples)), info_(info) {
    if (samples_.empty()) throw DimensionError("frame must hold at least one sample");
    if (!(info_.sample_rate_hz > 0.0) || !std::isfinite(info_.sample_rate_hz))
      throw ConfigError("frame sample_rate_hz must be > 0");
    if (!(info_.center_freq_hz > 0.0) || !std::isfinite(info_.center_freq_hz))
      throw ConfigError("frame center_freq_hz must be > 0");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!std::isfinite(samples_[i].real()) || !std::isfinite(samples_[i].imag()))
        throw DataError(i, "non-finite sample");
    }
  }

  std::span<const sample_type> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const sample_type& operator[](std::size_t i) const noexcept { return samples_[i]; }

  const FrameInfo& info() const noexcept { return info_; }
  double sample_rate_hz() const noexcept { return info_.sample_rate_hz; }
  double center_freq_hz() const noexcept { return info_.center_freq_hz; }
  double capture_time() const noexcept { return info_.capture_time; }

  friend bool operator==(const BasicFrame& a, const BasicFrame& b) {
    return a.samples_ == b.samples_ && a.info_.sample_rate_hz == b.info_.sample_rate_hz &&
           a.info_.center_freq_hz == b.info_.center_freq_hz &&
           a.info_.capture_time == b.info_.capture_time;
  }

 private:
  std::vector<sample_type> samples_;
  FrameInfo info_;
};

using ComplexFrame = BasicFrame<double>;
using ComplexFrameF = BasicFrame<float>;

template <class To, class From>
BasicFrame<To> frame_cast(const BasicFrame<From>& frame) {
  std::vector<std::complex<To>> out;
  out.reserve(frame.size());
  for (const auto& s : frame.samples())
    out.emplace_back(static_cast<To>(s.real()), static_cast<To>(s.imag()));
  return BasicFrame<To>(std::move(out), frame.info());
}

/// Contents of the `<name>.iq.meta` sidecar.
struct RecordingMeta {
  double sample_rate_hz = 0.0;
  double center_freq_hz = 0.0;
  double start_time = 0.0;
  std::uint64_t num_samples = 0;
};

struct Recording {
  RecordingMeta meta;
  std::vector<ComplexFrameF> frames;
  std::size_t discarded_samples = 0;  // trailing partial block
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

inline std::string format_double(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::uint32_t to_little_endian(std::uint32_t v) noexcept {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace detail

inline RecordingMeta read_meta(const std::filesystem::path& meta_path) {
  std::ifstream in(meta_path);
  if (!in) throw IoError("cannot open meta file " + meta_path.string());
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw FormatError(meta_path.string() + ": line " + std::to_string(line_no) +
                        ": expected key=value");
    kv[detail::trim(std::string_view(text).substr(0, eq))] = {
        detail::trim(std::string_view(text).substr(eq + 1)), line_no};
  }

  auto field = [&](const char* key) -> const std::pair<std::string, std::size_t>& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw FormatError(meta_path.string() + ": missing key '" + key + "'");
    return it->second;
  };
  auto real_field = [&](const char* key) {
    const auto& [value, where] = field(key);
    auto v = detail::parse_number<double>(value);
    if (!v || !std::isfinite(*v))
      throw FormatError(meta_path.string() + ": line " + std::to_string(where) + ": bad value for '" +
                        key + "'");
    return *v;
  };

  RecordingMeta meta;
  meta.sample_rate_hz = real_field("sample_rate_hz");
  meta.center_freq_hz = real_field("center_freq_hz");
  meta.start_time = real_field("start_time_unix");
  const auto& [count_text, count_line] = field("num_samples");
  auto count = detail::parse_number<std::uint64_t>(count_text);
  if (!count)
    throw FormatError(meta_path.string() + ": line " + std::to_string(count_line) +
                      ": bad value for 'num_samples'");
  meta.num_samples = *count;
  if (!(meta.sample_rate_hz > 0.0)) throw FormatError(meta_path.string() + ": sample_rate_hz must be > 0");
  if (!(meta.center_freq_hz > 0.0)) throw FormatError(meta_path.string() + ": center_freq_hz must be > 0");
  return meta;
}

inline void write_meta(const RecordingMeta& meta, const std::filesystem::path& meta_path) {
  std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write meta file " + meta_path.string());
  out << "sample_rate_hz=" << detail::format_double(meta.sample_rate_hz) << '\n'
      << "center_freq_hz=" << detail::format_double(meta.center_freq_hz) << '\n'
      << "start_time_unix=" << detail::format_double(meta.start_time) << '\n'
      << "num_samples=" << meta.num_samples << '\n';
  if (!out) throw IoError("failed writing " + meta_path.string());
}

/// Reads a raw interleaved little-endian float32 I/Q payload plus its sidecar
/// and cuts it into frames of `frame_len` samples. A trailing block shorter
/// than `frame_len` is dropped and counted in `discarded_samples`.
/// Frame k is stamped start_time + k * frame_len / sample_rate.
inline Recording read_recording(const std::filesystem::path& payload_path,
                                const std::filesystem::path& meta_path, std::size_t frame_len) {
  if (frame_len == 0) throw ArgumentError("frame length must be >= 1");
  Recording rec;
  rec.meta = read_meta(meta_path);

  std::ifstream in(payload_path, std::ios::binary);
  if (!in) throw IoError("cannot open payload " + payload_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0)
    throw TruncationError(payload_path.string() + ": payload length " + std::to_string(bytes.size()) +
                          " is not a multiple of 8 bytes");
  const std::size_t n_samples = bytes.size() / 8;
  if (n_samples != rec.meta.num_samples)
    throw FormatError(meta_path.string() + ": num_samples=" + std::to_string(rec.meta.num_samples) +
                      " but payload holds " + std::to_string(n_samples));

  auto component = [&](std::size_t word) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + 4 * word, 4);
    return std::bit_cast<float>(detail::to_little_endian(raw));
  };
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!std::isfinite(component(2 * i)) || !std::isfinite(component(2 * i + 1)))
      throw DataError(i, payload_path.string() + ": non-finite sample");
  }

  const std::size_t n_frames = n_samples / frame_len;
  rec.discarded_samples = n_samples - n_frames * frame_len;
  rec.frames.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::vector<std::complex<float>> samples(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i) {
      const std::size_t s = f * frame_len + i;
      samples[i] = {component(2 * s), component(2 * s + 1)};
    }
    const double t = rec.meta.start_time +
                     static_cast<double>(f * frame_len) / rec.meta.sample_rate_hz;
    rec.frames.emplace_back(std::move(samples),
                            FrameInfo{rec.meta.sample_rate_hz, rec.meta.center_freq_hz, t});
  }
  return rec;
}

/// Writes frames back-to-back as one recording. All frames must share
/// sample rate and center frequency; the first frame's capture time becomes
/// start_time_unix. An empty sequence writes an empty payload, taking the
/// meta fields from `empty_meta`.
inline void write_recording(std::span<const ComplexFrameF> frames,
                            const std::filesystem::path& payload_path,
                            const std::filesystem::path& meta_path,
                            const RecordingMeta& empty_meta = {1.0, 1.0, 0.0, 0}) {
  RecordingMeta meta = empty_meta;
  meta.num_samples = 0;
  if (!frames.empty()) {
    const auto& first = frames.front().info();
    meta.sample_rate_hz = first.sample_rate_hz;
    meta.center_freq_hz = first.center_freq_hz;
    meta.start_time = first.capture_time;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& info = frames[k].info();
      if (info.sample_rate_hz != first.sample_rate_hz || info.center_freq_hz != first.center_freq_hz)
        throw ConsistencyError("frame " + std::to_string(k) +
                               " has different sample rate or center frequency than frame 0");
      meta.num_samples += frames[k].size();
    }
  }

  std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write payload " + payload_path.string());
  std::vector<char> buffer;
  for (const auto& frame : frames) {
    buffer.resize(frame.size() * 8);
    std::size_t pos = 0;
    for (const auto& s : frame.samples()) {
      for (float c : {s.real(), s.imag()}) {
        const auto word = detail::to_little_endian(std::bit_cast<std::uint32_t>(c));
        std::memcpy(buffer.data() + pos, &word, 4);
        pos += 4;
      }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  }
  if (!out) throw IoError("failed writing " + payload_path.string());
  out.close();
  write_meta(meta, meta_path);
}

}  // namespace specscan

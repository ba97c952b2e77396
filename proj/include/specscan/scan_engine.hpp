// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "specscan/detectors.hpp"
#include "specscan/errors.hpp"
#include "specscan/iq_model.hpp"
#include "specscan/seeding.hpp"

namespace specscan {

struct BandSpec {
  std::string name;
  double start_mhz = 0.0;
  double stop_mhz = 0.0;
  std::vector<double> spacing_mhz;  // applied cyclically
  std::size_t expected_channels = 0;
};

struct Channel {
  std::string band;
  std::size_t index_in_band = 0;
  double center_freq_mhz = 0.0;
  double spacing_mhz = 0.0;  // smallest gap to a neighbouring channel

  friend bool operator==(const Channel& a, const Channel& b) {
    return a.band == b.band && a.index_in_band == b.index_in_band && a.center_freq_mhz == b.center_freq_mhz;
  }
};

using ChannelKey = std::pair<std::string, std::size_t>;

inline ChannelKey key_of(const Channel& c) { return {c.band, c.index_in_band}; }

inline constexpr double kPlanToleranceMhz = 1e-9;

/// Expands band specs into channels: start, then cumulative sums of the
/// spacing list applied cyclically. Each band must land on its stop
/// frequency with exactly the expected channel count.
inline std::vector<Channel> build_channel_plan(std::span<const BandSpec> specs) {
  std::vector<Channel> plan;
  for (const auto& b : specs) {
    if (b.expected_channels == 0) throw PlanError("band " + b.name + ": expected_channels must be >= 1");
    if (b.spacing_mhz.empty() && b.expected_channels > 1) throw PlanError("band " + b.name + ": empty spacing list");
    for (double s : b.spacing_mhz)
      if (!(s > 0.0)) throw PlanError("band " + b.name + ": spacings must be > 0");

    std::vector<double> freqs;
    double f = b.start_mhz;
    for (std::size_t i = 0; i < b.expected_channels; ++i) {
      if (i > 0) f += b.spacing_mhz[(i - 1) % b.spacing_mhz.size()];
      freqs.push_back(f);
    }
    if (std::abs(freqs.back() - b.stop_mhz) > kPlanToleranceMhz)
      throw PlanError("band " + b.name + ": " + std::to_string(b.expected_channels) + " channels end at " +
                      detail::format_double(freqs.back(), 12) + " MHz, expected " +
                      detail::format_double(b.stop_mhz, 12));
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      double gap = b.spacing_mhz.empty() ? 1.0 : b.spacing_mhz.front();
      if (freqs.size() > 1) {
        gap = std::numeric_limits<double>::infinity();
        if (i > 0) gap = std::min(gap, freqs[i] - freqs[i - 1]);
        if (i + 1 < freqs.size()) gap = std::min(gap, freqs[i + 1] - freqs[i]);
      }
      plan.push_back({b.name, i, freqs[i], gap});
    }
  }
  return plan;
}

inline std::vector<BandSpec> builtin_bands() {
  return {
      {"GSM-850-UL", 824.0, 849.0, {3.0, 2.0}, 11},
      {"GSM-850-DL", 869.0, 894.0, {3.0, 2.0}, 11},
      {"GSM-1900-UL", 1850.0, 1910.0, {3.0, 2.0}, 25},
      {"GSM-1900-DL", 1930.0, 1990.0, {3.0, 2.0}, 25},
      {"WiFi-2.4GHz", 2402.0, 2497.0, {5.0}, 20},
      {"WiFi-5.8GHz", 5725.0, 5875.0, {5.0}, 31},
  };
}

/// The six scanned bands, 123 channels.
inline std::vector<Channel> builtin_plan() {
  const auto bands = builtin_bands();
  return build_channel_plan(bands);
}

struct ScanRecord {
  double capture_time = 0.0;
  Channel channel;
  Detector detector = Detector::ed;
  double statistic = 0.0;
  double threshold = 0.0;
  bool present = false;
  bool degenerate = false;  // ACF statistic undefined (zero-energy frame); statistic is NaN
};

/// Runs all three detectors on one frame. Zero-energy frames yield a normal
/// ed record and absent acf1/cdist records marked degenerate.
template <class Real>
std::array<ScanRecord, 3> scan_channel(const BasicFrame<Real>& frame, const Channel& channel,
                                       const DetectorConfig& config) {
  const double offset_mhz = std::abs(frame.center_freq_hz() / 1e6 - channel.center_freq_mhz);
  if (offset_mhz > channel.spacing_mhz / 2.0)
    throw RoutingError("frame at " + detail::format_double(frame.center_freq_hz() / 1e6, 12) +
                       " MHz does not belong to channel " + channel.band + "#" +
                       std::to_string(channel.index_in_band) + " (" +
                       detail::format_double(channel.center_freq_mhz, 12) + " MHz)");
  std::array<ScanRecord, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto d = kAllDetectors[i];
    auto& r = out[i];
    r.capture_time = frame.capture_time();
    r.channel = channel;
    r.detector = d;
    r.threshold = config.threshold(d);
    try {
      const auto decision = decide(d, detector_statistic(d, frame, config), r.threshold);
      r.statistic = decision.statistic;
      r.present = decision.present;
    } catch (const DegenerateInputError&) {
      r.statistic = std::numeric_limits<double>::quiet_NaN();
      r.present = false;
      r.degenerate = true;
    }
  }
  return out;
}

struct TruthRecord {
  double capture_time = 0.0;
  Channel channel;
  bool present = false;
};

struct SweepLog {
  std::vector<ScanRecord> records;
  std::vector<TruthRecord> truth;
};

/// Canonical order: (capture_time, band position in plan, index_in_band, detector).
inline void sort_records(std::vector<ScanRecord>& records, const std::vector<Channel>& plan) {
  std::map<std::string, std::size_t> band_rank;
  for (const auto& c : plan) band_rank.emplace(c.band, band_rank.size());
  auto rank = [&](const std::string& band) {
    auto it = band_rank.find(band);
    return it == band_rank.end() ? band_rank.size() : it->second;
  };
  std::stable_sort(records.begin(), records.end(), [&](const ScanRecord& a, const ScanRecord& b) {
    return std::make_tuple(a.capture_time, rank(a.channel.band), a.channel.index_in_band, a.detector) <
           std::make_tuple(b.capture_time, rank(b.channel.band), b.channel.index_in_band, b.detector);
  });
}

/// Sweeps every plan channel over its frame source. `Source` is any
/// random-access sequence of LabeledFrame-like values (`size()` and
/// `operator[]` returning something with `.frame` and `.present`), e.g.
/// ChannelTimeline. Channels are scanned on up to `workers` threads; the
/// merged log is sorted canonically so the output never depends on the
/// worker count.
template <class Source>
SweepLog run_sweep(const std::map<ChannelKey, Source>& sources, const DetectorConfig& config,
                   const std::vector<Channel>& plan, unsigned workers = 1) {
  config.validate();
  std::vector<const Source*> per_channel;
  per_channel.reserve(plan.size());
  for (const auto& c : plan) {
    auto it = sources.find(key_of(c));
    if (it == sources.end())
      throw ConfigError("no frame source for channel " + c.band + "#" + std::to_string(c.index_in_band));
    per_channel.push_back(&it->second);
  }

  std::vector<SweepLog> partial(plan.size());
  parallel_for(plan.size(), workers, [&](std::size_t ci) {
    const auto& src = *per_channel[ci];
    auto& log = partial[ci];
    log.records.reserve(3 * src.size());
    log.truth.reserve(src.size());
    for (std::size_t k = 0; k < src.size(); ++k) {
      const auto item = src[k];
      for (auto& r : scan_channel(item.frame, plan[ci], config)) log.records.push_back(std::move(r));
      log.truth.push_back({item.frame.capture_time(), plan[ci], item.present});
    }
  });

  SweepLog out;
  for (auto& p : partial) {
    out.records.insert(out.records.end(), std::make_move_iterator(p.records.begin()),
                       std::make_move_iterator(p.records.end()));
    out.truth.insert(out.truth.end(), std::make_move_iterator(p.truth.begin()),
                     std::make_move_iterator(p.truth.end()));
  }
  sort_records(out.records, plan);
  std::map<std::string, std::size_t> band_rank;
  for (const auto& c : plan) band_rank.emplace(c.band, band_rank.size());
  std::stable_sort(out.truth.begin(), out.truth.end(), [&](const TruthRecord& a, const TruthRecord& b) {
    return std::make_tuple(a.capture_time, band_rank.at(a.channel.band), a.channel.index_in_band) <
           std::make_tuple(b.capture_time, band_rank.at(b.channel.band), b.channel.index_in_band);
  });
  return out;
}

// ---- CSV surfaces --------------------------------------------------------

inline constexpr std::string_view kRecordCsvHeader =
    "time_unix,band,channel_index,center_freq_mhz,detector,statistic,threshold,present";
inline constexpr std::string_view kTruthCsvHeader = "time_unix,band,channel_index,center_freq_mhz,present";
inline constexpr std::string_view kPlanCsvHeader = "band,channel_index,center_freq_mhz";

namespace detail {

inline std::string fmt_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

inline std::string fmt9(double v) { return format_double(v, 9); }

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline void write_record_csv(std::ostream& out, std::span<const ScanRecord> records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    out << detail::fmt_time(r.capture_time) << ',' << r.channel.band << ',' << r.channel.index_in_band << ','
        << detail::fmt9(r.channel.center_freq_mhz) << ',' << to_string(r.detector) << ','
        << detail::fmt9(r.statistic) << ',' << detail::fmt9(r.threshold) << ',' << (r.present ? '1' : '0')
        << '\n';
  }
}

inline void write_truth_csv(std::ostream& out, std::span<const TruthRecord> truth) {
  out << kTruthCsvHeader << '\n';
  for (const auto& t : truth) {
    out << detail::fmt_time(t.capture_time) << ',' << t.channel.band << ',' << t.channel.index_in_band << ','
        << detail::fmt9(t.channel.center_freq_mhz) << ',' << (t.present ? '1' : '0') << '\n';
  }
}

inline void write_plan_csv(std::ostream& out, std::span<const Channel> plan) {
  out << kPlanCsvHeader << '\n';
  for (const auto& c : plan)
    out << c.band << ',' << c.index_in_band << ',' << detail::fmt9(c.center_freq_mhz) << '\n';
}

/// Parses a record CSV. Row errors carry the 1-based line number. A NaN
/// statistic marks a degenerate record.
inline std::vector<ScanRecord> read_record_csv(std::istream& in) {
  std::vector<ScanRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  ++line_no;
  if (detail::trim(line) != kRecordCsvHeader) throw ParseError(1, "unexpected header '" + detail::trim(line) + "'");
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto f = detail::split_csv(text);
    if (f.size() != 8) throw ParseError(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    auto real = [&](std::size_t i, const char* name) {
      if (f[i] == "nan") return std::numeric_limits<double>::quiet_NaN();
      auto v = detail::parse_number<double>(f[i]);
      if (!v) throw ParseError(line_no, std::string("bad ") + name + " '" + f[i] + "'");
      return *v;
    };
    ScanRecord r;
    r.capture_time = real(0, "time_unix");
    r.channel.band = f[1];
    if (r.channel.band.empty()) throw ParseError(line_no, "empty band");
    auto idx = detail::parse_number<std::size_t>(f[2]);
    if (!idx) throw ParseError(line_no, "bad channel_index '" + f[2] + "'");
    r.channel.index_in_band = *idx;
    r.channel.center_freq_mhz = real(3, "center_freq_mhz");
    try {
      r.detector = parse_detector(f[4]);
    } catch (const ArgumentError& e) {
      throw ParseError(line_no, e.what());
    }
    r.statistic = real(5, "statistic");
    r.threshold = real(6, "threshold");
    if (f[7] != "0" && f[7] != "1") throw ParseError(line_no, "present must be 0 or 1");
    r.present = f[7] == "1";
    r.degenerate = std::isnan(r.statistic);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace specscan

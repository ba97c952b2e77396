// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "specscan/detectors.hpp"
#include "specscan/errors.hpp"
#include "specscan/scan_engine.hpp"

namespace specscan {

/// Occupancy N_detected / N_total for one (channel, detector, time bin).
struct OccupancyCell {
  Channel channel;
  Detector detector = Detector::ed;
  double bin_start = 0.0;
  double bin_len_s = 0.0;
  std::uint64_t n_detected = 0;
  std::uint64_t n_total = 0;
  double occupancy = 0.0;
};

/// Groups records by (channel, detector, floor((t - epoch) / bin_len_s)).
/// Bins are half-open and epoch-aligned; bins without records are omitted.
/// Output is ordered by (center frequency, band, channel index, detector, bin).
inline std::vector<OccupancyCell> aggregate(std::span<const ScanRecord> records, double bin_len_s,
                                            double epoch = 0.0) {
  if (!(bin_len_s > 0.0) || !std::isfinite(bin_len_s)) throw ArgumentError("bin_len_s must be > 0");
  using Key = std::tuple<double, std::string, std::size_t, Detector, std::int64_t>;
  struct Acc {
    Channel channel;
    std::uint64_t detected = 0;
    std::uint64_t total = 0;
  };
  std::map<Key, Acc> bins;
  for (const auto& r : records) {
    const auto bin = static_cast<std::int64_t>(std::floor((r.capture_time - epoch) / bin_len_s));
    auto& acc = bins[Key{r.channel.center_freq_mhz, r.channel.band, r.channel.index_in_band, r.detector, bin}];
    if (acc.total == 0) acc.channel = r.channel;
    acc.total += 1;
    acc.detected += r.present ? 1 : 0;
  }
  std::vector<OccupancyCell> cells;
  cells.reserve(bins.size());
  for (const auto& [key, acc] : bins) {
    OccupancyCell c;
    c.channel = acc.channel;
    c.detector = std::get<3>(key);
    c.bin_start = epoch + static_cast<double>(std::get<4>(key)) * bin_len_s;
    c.bin_len_s = bin_len_s;
    c.n_detected = acc.detected;
    c.n_total = acc.total;
    c.occupancy = static_cast<double>(acc.detected) / static_cast<double>(acc.total);
    cells.push_back(std::move(c));
  }
  return cells;
}

/// Aligned per-detector series for one channel; a bin with no records for a
/// detector is std::nullopt.
struct ChannelSeries {
  Channel channel;
  std::vector<double> bin_starts;
  std::array<std::vector<std::optional<double>>, 3> occupancy;  // indexed like kAllDetectors

  bool empty() const noexcept { return bin_starts.empty(); }
  const std::vector<std::optional<double>>& series(Detector d) const {
    return occupancy[static_cast<std::size_t>(d)];
  }
};

/// `known` lists the channels that may be asked for; anything else is a
/// lookup error. A known channel without cells gives an empty series.
inline ChannelSeries report_matrix(std::span<const OccupancyCell> cells, const Channel& channel,
                                   std::span<const Channel> known) {
  if (std::none_of(known.begin(), known.end(), [&](const Channel& c) { return key_of(c) == key_of(channel); }))
    throw LookupError("unknown channel " + channel.band + "#" + std::to_string(channel.index_in_band));
  ChannelSeries out;
  out.channel = channel;
  std::map<double, std::array<std::optional<double>, 3>> rows;
  for (const auto& c : cells) {
    if (key_of(c.channel) != key_of(channel)) continue;
    rows[c.bin_start][static_cast<std::size_t>(c.detector)] = c.occupancy;
  }
  for (const auto& [start, row] : rows) {
    out.bin_starts.push_back(start);
    for (std::size_t d = 0; d < 3; ++d) out.occupancy[d].push_back(row[d]);
  }
  return out;
}

/// Distinct channels present in a set of cells, in cell order.
inline std::vector<Channel> channels_of(std::span<const OccupancyCell> cells) {
  std::vector<Channel> out;
  for (const auto& c : cells) {
    if (std::none_of(out.begin(), out.end(), [&](const Channel& o) { return key_of(o) == key_of(c.channel); }))
      out.push_back(c.channel);
  }
  return out;
}

inline constexpr std::string_view kOccupancyCsvHeader =
    "band,channel_index,center_freq_mhz,detector,bin_start_unix,bin_len_s,n_detected,n_total,occupancy";

inline void write_occupancy_csv(std::ostream& out, std::span<const OccupancyCell> cells) {
  out << kOccupancyCsvHeader << '\n';
  for (const auto& c : cells) {
    out << c.channel.band << ',' << c.channel.index_in_band << ',' << detail::fmt9(c.channel.center_freq_mhz) << ','
        << to_string(c.detector) << ',' << detail::fmt_time(c.bin_start) << ',' << detail::fmt9(c.bin_len_s) << ','
        << c.n_detected << ',' << c.n_total << ',' << detail::fmt9(c.occupancy) << '\n';
  }
}

/// Whitespace-delimited `bin_start ed acf1 cdist` table; gaps are `nan`.
inline void write_plot_data(std::ostream& out, const ChannelSeries& s) {
  out << "# " << s.channel.band << " channel " << s.channel.index_in_band << " ("
      << detail::fmt9(s.channel.center_freq_mhz) << " MHz)\n";
  out << "# bin_start ed acf1 cdist\n";
  for (std::size_t i = 0; i < s.bin_starts.size(); ++i) {
    out << detail::fmt_time(s.bin_starts[i]);
    for (std::size_t d = 0; d < 3; ++d) {
      const auto& v = s.occupancy[d][i];
      out << ' ' << (v ? detail::fmt9(*v) : std::string("nan"));
    }
    out << '\n';
  }
}

/// File name used for a channel's plot data.
inline std::string plot_file_name(const Channel& c) {
  std::string band;
  for (char ch : c.band) band += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') ? ch : '_';
  return band + "_" + std::to_string(c.index_in_band) + ".dat";
}

}  // namespace specscan

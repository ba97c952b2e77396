// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace specscan {

// Base for every error raised by the toolkit. Subclasses name the failure
// category so callers (and the CLI) can react to each one separately.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SPECSCAN_DEFINE_ERROR(Name)        \
  struct Name : Error {                    \
    using Error::Error;                    \
  }

SPECSCAN_DEFINE_ERROR(FormatError);
SPECSCAN_DEFINE_ERROR(TruncationError);
SPECSCAN_DEFINE_ERROR(ConsistencyError);
SPECSCAN_DEFINE_ERROR(RangeError);
SPECSCAN_DEFINE_ERROR(DimensionError);
SPECSCAN_DEFINE_ERROR(DegenerateInputError);
SPECSCAN_DEFINE_ERROR(CalibrationError);
SPECSCAN_DEFINE_ERROR(ScheduleError);
SPECSCAN_DEFINE_ERROR(PlanError);
SPECSCAN_DEFINE_ERROR(RoutingError);
SPECSCAN_DEFINE_ERROR(ConfigError);
SPECSCAN_DEFINE_ERROR(ArgumentError);
SPECSCAN_DEFINE_ERROR(LookupError);
SPECSCAN_DEFINE_ERROR(IoError);

#undef SPECSCAN_DEFINE_ERROR

// Non-finite sample found while ingesting data.
struct DataError : Error {
  DataError(std::size_t index, const std::string& what)
      : Error("sample " + std::to_string(index) + ": " + what), sample_index(index) {}
  std::size_t sample_index;
};

// Malformed text input; carries the 1-based line number.
struct ParseError : Error {
  ParseError(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what), line(line_no), reason(what) {}
  std::size_t line;
  std::string reason;  // message without the line prefix
};

}  // namespace specscan

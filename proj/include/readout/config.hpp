// Sectioned key-value configuration files with unit-suffixed keys.
//
//   # comment
//   [trap]
//   depth_mK = 1.4
//   probe.duration_ms = 1.5     # dotted keys work outside sections too
//
// Unknown keys, duplicates and malformed numbers are errors that carry the
// line and column of the offending token. Values are converted to SI here.
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "readout/montecarlo.hpp"
#include "readout/sweep.hpp"

namespace readout {

class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(std::string source, std::size_t line, std::size_t column,
                   const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct RunConfig {
  ExperimentConfig experiment;
  /// Present when the file has a [sweep] section.
  std::optional<SweepSpec> sweep;
};

RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Every effective setting as (key, value) in config-file units, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& config);

/// Doubles in every output file use 17 significant digits.
std::string format_double(double v);

}  // namespace readout

// Command implementations behind the atomreadout CLI. Each returns a process
// exit code: 0 success, 2 input error, 3 insufficient data.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace readout {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNoData = 3;

inline constexpr const char* kToolName = "atomreadout";
inline constexpr const char* kToolVersion = "0.1.0";

enum class TableFormat { Csv, Json };

struct CommandOptions {
  std::string config_path;
  std::string input_path;  // scan-threshold only
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  TableFormat format = TableFormat::Csv;
  unsigned threads = 0;
  bool plot = false;
  std::vector<std::string> command_line;
};

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_scan_threshold(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_budget(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace readout

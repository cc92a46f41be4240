// File formats: histogram / scan / sweep CSV, JSON text, SVG line plots.
// CSV is LF-terminated with '.' decimals; doubles use 17 significant digits.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "readout/discrimination.hpp"
#include "readout/histogram.hpp"
#include "readout/sweep.hpp"

namespace readout {

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kHistogramHeader = "n,count_dark,count_bright";
inline constexpr const char* kScanHeader = "n_c,epsilon_B,epsilon_D,epsilon,is_optimal";
inline constexpr const char* kSweepHeader =
    "depth_mK,duration_ms,saturation,mean_bright,mean_dark,threshold,fidelity,probe_loss";

void write_histogram_csv(std::ostream& out, const CountHistogram& dark,
                         const CountHistogram& bright);

struct HistogramPair {
  CountHistogram dark{AtomState::Dark};
  CountHistogram bright{AtomState::Bright};
};

/// Parses the format written by write_histogram_csv. Throws CsvError.
HistogramPair read_histogram_csv(std::istream& in);

void write_scan_csv(std::ostream& out, const ThresholdScan& scan);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

nlohmann::ordered_json scan_to_json(const ThresholdScan& scan);
nlohmann::ordered_json sweep_to_json(const std::vector<SweepRow>& rows);

/// Pretty JSON text in which every floating-point number carries 17 significant digits.
std::string json_text(const nlohmann::ordered_json& value);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;
};

/// Minimal standalone SVG line/marker plot.
std::string svg_plot(const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace readout

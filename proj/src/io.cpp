#include "readout/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "readout/config.hpp"

namespace readout {

void write_histogram_csv(std::ostream& out, const CountHistogram& dark,
                         const CountHistogram& bright) {
  out << kHistogramHeader << '\n';
  const std::uint32_t last = std::max(dark.max_count(), bright.max_count());
  for (std::uint32_t n = 0; n <= last; ++n) {
    out << n << ',' << dark.frequency(n) << ',' << bright.frequency(n) << '\n';
  }
}

HistogramPair read_histogram_csv(std::istream& in) {
  HistogramPair pair;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kHistogramHeader) {
        throw CsvError(line_no, std::string("expected header '") + kHistogramHeader + "'");
      }
      header = true;
      continue;
    }
    std::uint64_t fields[3];
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const auto comma = line.find(',', start);
      if ((i < 2) == (comma == std::string::npos)) throw CsvError(line_no, "expected 3 columns");
      const auto end = i < 2 ? comma : line.size();
      const char* first = line.data() + start;
      const char* last = line.data() + end;
      const auto [ptr, ec] = std::from_chars(first, last, fields[i]);
      if (ec != std::errc() || ptr != last || first == last) {
        throw CsvError(line_no, "column " + std::to_string(i + 1) + " is not a non-negative integer");
      }
      start = end + 1;
    }
    if (fields[0] > 0xffffffffULL) throw CsvError(line_no, "photon number out of range");
    const auto n = static_cast<std::uint32_t>(fields[0]);
    if (pair.dark.frequency(n) != 0 || pair.bright.frequency(n) != 0) {
      throw CsvError(line_no, "duplicate photon number " + std::to_string(n));
    }
    pair.dark.add(n, fields[1]);
    pair.bright.add(n, fields[2]);
  }
  if (!header) throw CsvError(line_no, "missing header");
  return pair;
}

void write_scan_csv(std::ostream& out, const ThresholdScan& scan) {
  out << kScanHeader << '\n';
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const ScanPoint& p = scan.points[i];
    out << p.threshold << ',' << format_double(p.epsilon_bright) << ','
        << format_double(p.epsilon_dark) << ',' << format_double(p.epsilon) << ','
        << (i == scan.best ? 1 : 0) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << format_double(r.depth * 1e3) << ',' << format_double(r.probe.duration * 1e3) << ','
        << format_double(r.probe.saturation) << ',' << format_double(r.mean_bright) << ','
        << format_double(r.mean_dark) << ',' << r.threshold << ',' << format_double(r.fidelity)
        << ',' << format_double(r.probe_loss) << '\n';
  }
}

nlohmann::ordered_json scan_to_json(const ThresholdScan& scan) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const ScanPoint& p = scan.points[i];
    rows.push_back({{"n_c", p.threshold},
                    {"epsilon_B", p.epsilon_bright},
                    {"epsilon_D", p.epsilon_dark},
                    {"epsilon", p.epsilon},
                    {"is_optimal", i == scan.best}});
  }
  return rows;
}

nlohmann::ordered_json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const SweepRow& r : rows) {
    out.push_back({{"depth_mK", r.depth * 1e3},
                   {"duration_ms", r.probe.duration * 1e3},
                   {"saturation", r.probe.saturation},
                   {"mean_bright", r.mean_bright},
                   {"mean_dark", r.mean_dark},
                   {"threshold", r.threshold},
                   {"fidelity", r.fidelity},
                   {"probe_loss", r.probe_loss}});
  }
  return out;
}

namespace {

void emit(std::string& out, const nlohmann::ordered_json& v, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner + nlohmann::json(key).dump() + ": ";
        emit(out, item, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        emit(out, v[i], indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

std::string svg_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '&': r += "&amp;"; break;
      default: r += c;
    }
  }
  return r;
}

}  // namespace

std::string json_text(const nlohmann::ordered_json& value) {
  std::string out;
  emit(out, value, 0);
  out += '\n';
  return out;
}

std::string svg_plot(const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << svg_escape(title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", xv);
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << buf
      << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", yv);
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << buf
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << svg_escape(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << svg_escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 5];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    o << "\"/>\n";
    if (s.markers) {
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << c
          << "\"/>\n";
      }
    }
    o << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << c << "\">"
      << svg_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace readout

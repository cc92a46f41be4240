#include "readout/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace readout {

namespace {

constexpr double kMilli = 1e-3;
constexpr double kMicro = 1e-6;
constexpr double kNano = 1e-9;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Location-aware value being parsed.
struct Token {
  std::string_view text;
  std::size_t line;
  std::size_t column;
};

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ConfigParseError(source_, t.line, t.column, msg);
  }

  double number(const Token& t) const {
    double v = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.text.empty() || !std::isfinite(v)) {
      fail(t, "expected a number, got '" + std::string(t.text) + "'");
    }
    return v;
  }

  std::uint64_t integer(const Token& t) const {
    std::uint64_t v = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.text.empty()) {
      fail(t, "expected a non-negative integer, got '" + std::string(t.text) + "'");
    }
    return v;
  }

  std::vector<double> list(const Token& t) const {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= t.text.size()) {
      const auto comma = t.text.find(',', start);
      const auto end = comma == std::string_view::npos ? t.text.size() : comma;
      const auto item = trim(t.text.substr(start, end - start));
      const std::size_t offset =
          item.empty() ? start : static_cast<std::size_t>(item.data() - t.text.data());
      out.push_back(number({item, t.line, t.column + offset}));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }

 private:
  std::string source_;
};

struct SweepDraft {
  bool present = false;
  std::vector<double> depths;
  std::optional<std::vector<double>> durations;
  std::optional<std::vector<double>> saturations;
  bool optimize = false;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  Token anchor{};
};

using Handler = std::function<void(const Parser&, const Token&, RunConfig&, SweepDraft&)>;

template <typename Field>
Handler set_number(Field field, double scale) {
  return [field, scale](const Parser& p, const Token& t, RunConfig& c, SweepDraft&) {
    field(c) = p.number(t) * scale;
  };
}

const std::map<std::string, Handler, std::less<>>& handlers() {
  static const std::map<std::string, Handler, std::less<>> table = [] {
    std::map<std::string, Handler, std::less<>> h;
    auto num = [&](const char* key, auto field, double scale = 1.0) {
      h[key] = set_number(field, scale);
    };
    num("constants.linewidth_MHz",
        [](RunConfig& c) -> double& { return c.experiment.constants.gamma; },
        2.0 * std::numbers::pi * 1e6);
    // mW/cm^2 -> W/m^2
    num("constants.saturation_intensity_mW_per_cm2",
        [](RunConfig& c) -> double& { return c.experiment.constants.i_sat; }, 10.0);
    num("constants.wavelength_nm",
        [](RunConfig& c) -> double& { return c.experiment.constants.lambda; }, kNano);
    num("constants.mass_amu", [](RunConfig& c) -> double& { return c.experiment.constants.mass; },
        si::atomic_mass);

    num("trap.depth_mK", [](RunConfig& c) -> double& { return c.experiment.trap.depth; }, kMilli);
    num("trap.temperature_uK",
        [](RunConfig& c) -> double& { return c.experiment.trap.atom_temperature; }, kMicro);
    num("trap.reference_depth_mK",
        [](RunConfig& c) -> double& { return c.experiment.trap.reference_depth; }, kMilli);
    num("trap.heating_per_scatter",
        [](RunConfig& c) -> double& { return c.experiment.trap.heating_per_scatter; });

    num("probe.saturation", [](RunConfig& c) -> double& { return c.experiment.probe.saturation; });
    num("probe.duration_ms", [](RunConfig& c) -> double& { return c.experiment.probe.duration; },
        kMilli);

    num("detector.collection_efficiency",
        [](RunConfig& c) -> double& { return c.experiment.detector.collection_efficiency; });
    num("detector.dark_count_rate_per_s",
        [](RunConfig& c) -> double& { return c.experiment.detector.dark_count_rate; });

    num("noise.hyperfine_prep_fidelity",
        [](RunConfig& c) -> double& { return c.experiment.noise.hyperfine_prep_fidelity; });
    num("noise.zeeman_prep_fidelity",
        [](RunConfig& c) -> double& { return c.experiment.noise.zeeman_prep_fidelity; });
    num("noise.raman_flip_probability",
        [](RunConfig& c) -> double& { return c.experiment.noise.raman_flip_probability; });
    num("noise.presence_test_error",
        [](RunConfig& c) -> double& { return c.experiment.noise.presence_test_error; });
    num("noise.vacuum_lifetime_s",
        [](RunConfig& c) -> double& { return c.experiment.noise.vacuum_lifetime; });
    num("noise.sequence_wall_time_ms",
        [](RunConfig& c) -> double& { return c.experiment.noise.sequence_wall_time; }, kMilli);
    num("noise.depump_probability_per_scatter",
        [](RunConfig& c) -> double& { return c.experiment.noise.depump_probability_per_scatter; });

    h["run.trials"] = [](const Parser& p, const Token& t, RunConfig& c, SweepDraft&) {
      c.experiment.trials = p.integer(t);
    };
    h["run.seed"] = [](const Parser& p, const Token& t, RunConfig& c, SweepDraft&) {
      c.experiment.seed = p.integer(t);
    };

    auto constraint = [&](const char* key, auto field, double scale = 1.0) {
      h[key] = [field, scale](const Parser& p, const Token& t, RunConfig& c, SweepDraft& s) {
        s.present = true;
        if (!c.sweep) c.sweep.emplace();
        field(c.sweep->constraints) = p.number(t) * scale;
      };
    };
    constraint("optimize.max_probe_loss",
               [](OptimizationConstraints& o) -> double& { return o.max_probe_loss; });
    constraint("optimize.max_saturation",
               [](OptimizationConstraints& o) -> double& { return o.max_saturation; });
    constraint("optimize.min_saturation",
               [](OptimizationConstraints& o) -> double& { return o.min_saturation; });
    constraint("optimize.min_duration_ms",
               [](OptimizationConstraints& o) -> double& { return o.min_duration; }, kMilli);
    constraint("optimize.max_duration_ms",
               [](OptimizationConstraints& o) -> double& { return o.max_duration; }, kMilli);
    auto count = [&](const char* key, auto field) {
      h[key] = [field](const Parser& p, const Token& t, RunConfig& c, SweepDraft& s) {
        s.present = true;
        if (!c.sweep) c.sweep.emplace();
        field(c.sweep->constraints) = p.integer(t);
      };
    };
    count("optimize.duration_points",
          [](OptimizationConstraints& o) -> std::size_t& { return o.duration_points; });
    count("optimize.saturation_points",
          [](OptimizationConstraints& o) -> std::size_t& { return o.saturation_points; });
    count("optimize.loss_trials",
          [](OptimizationConstraints& o) -> std::uint64_t& { return o.loss_trials; });

    h["sweep.depths_mK"] = [](const Parser& p, const Token& t, RunConfig&, SweepDraft& s) {
      s.present = true;
      s.anchor = t;
      s.depths = p.list(t);
      for (double& d : s.depths) d *= kMilli;
    };
    auto directive_or_list = [](std::optional<std::vector<double>> SweepDraft::*field,
                                double scale) -> Handler {
      return [field, scale](const Parser& p, const Token& t, RunConfig&, SweepDraft& s) {
        s.present = true;
        if (t.text == "optimize") {
          s.optimize = true;
          return;
        }
        auto values = p.list(t);
        for (double& v : values) v *= scale;
        s.*field = std::move(values);
      };
    };
    h["sweep.durations_ms"] = directive_or_list(&SweepDraft::durations, kMilli);
    h["sweep.saturations"] = directive_or_list(&SweepDraft::saturations, 1.0);
    h["sweep.schedule"] = [](const Parser& p, const Token& t, RunConfig&, SweepDraft& s) {
      s.present = true;
      if (t.text != "optimize") p.fail(t, "sweep.schedule only accepts 'optimize'");
      s.optimize = true;
    };
    h["sweep.trials"] = [](const Parser& p, const Token& t, RunConfig&, SweepDraft& s) {
      s.present = true;
      s.trials = p.integer(t);
    };
    h["sweep.seed"] = [](const Parser& p, const Token& t, RunConfig&, SweepDraft& s) {
      s.present = true;
      s.seed = p.integer(t);
    };
    return h;
  }();
  return table;
}

void finish_sweep(const Parser& p, SweepDraft& d, RunConfig& c) {
  if (!d.present) {
    c.sweep.reset();
    return;
  }
  if (!c.sweep) c.sweep.emplace();
  SweepSpec& spec = *c.sweep;
  if (d.depths.empty()) throw InvalidConfig("sweep.depths_mK", "is required in a sweep");
  spec.depths = d.depths;
  spec.trials = d.trials.value_or(c.experiment.trials);
  spec.seed = d.seed.value_or(c.experiment.seed);
  spec.schedule.clear();
  if (d.optimize) {
    if (d.durations || d.saturations) {
      p.fail(d.anchor, "an optimized sweep takes no durations_ms or saturations list");
    }
    spec.schedule.assign(spec.depths.size(), std::nullopt);
    return;
  }
  if (!d.durations || !d.saturations) {
    throw InvalidConfig("sweep.durations_ms", "durations_ms and saturations are both required "
                                              "unless the schedule is 'optimize'");
  }
  if (d.durations->size() != spec.depths.size() || d.saturations->size() != spec.depths.size()) {
    throw InvalidConfig("sweep.durations_ms",
                        "durations_ms and saturations need one entry per depth");
  }
  for (std::size_t i = 0; i < spec.depths.size(); ++i) {
    spec.schedule.push_back(ProbeConfig{(*d.saturations)[i], (*d.durations)[i]});
  }
}

}  // namespace

ConfigParseError::ConfigParseError(std::string source, std::size_t line, std::size_t column,
                                   const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                         ": " + message),
      line_(line),
      column_(column) {}

RunConfig parse_config(std::string_view text, const std::string& source) {
  const Parser parser(source);
  RunConfig config;
  SweepDraft sweep;
  std::string section;
  std::set<std::string, std::less<>> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::size_t line_start = pos;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const std::size_t col = static_cast<std::size_t>(body.data() - text.data()) - line_start + 1;

    if (body.front() == '[') {
      if (body.back() != ']') parser.fail({body, line_no, col}, "unterminated section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      if (section.empty()) parser.fail({body, line_no, col}, "empty section name");
      continue;
    }

    const auto eq = body.find('=');
    if (eq == std::string_view::npos) parser.fail({body, line_no, col}, "expected 'key = value'");
    const std::string_view key = trim(body.substr(0, eq));
    const std::string_view raw_value = body.substr(eq + 1);
    const std::string_view value = trim(raw_value);
    const std::size_t value_col =
        value.empty() ? col + eq + 1
                      : static_cast<std::size_t>(value.data() - text.data()) - line_start + 1;
    if (key.empty()) parser.fail({body, line_no, col}, "missing key");

    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    const Token key_token{key, line_no, col};
    const auto it = handlers().find(full);
    if (it == handlers().end()) parser.fail(key_token, "unknown key '" + full + "'");
    if (!seen.insert(full).second) parser.fail(key_token, "duplicate key '" + full + "'");
    if (value.empty()) parser.fail({value, line_no, value_col}, "missing value for '" + full + "'");
    it->second(parser, {value, line_no, value_col}, config, sweep);
  }

  finish_sweep(parser, sweep, config);
  config.experiment.validate();
  if (config.sweep) config.sweep->validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError(path, 0, 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> config_snapshot(const RunConfig& config) {
  const ExperimentConfig& e = config.experiment;
  std::vector<std::pair<std::string, std::string>> out;
  auto put = [&](const char* k, double v) { out.emplace_back(k, format_double(v)); };
  put("constants.linewidth_MHz", e.constants.gamma / (2.0 * std::numbers::pi * 1e6));
  put("constants.saturation_intensity_mW_per_cm2", e.constants.i_sat / 10.0);
  put("constants.wavelength_nm", e.constants.lambda / kNano);
  put("constants.mass_amu", e.constants.mass / si::atomic_mass);
  put("trap.depth_mK", e.trap.depth / kMilli);
  put("trap.temperature_uK", e.trap.atom_temperature / kMicro);
  put("trap.reference_depth_mK", e.trap.reference_depth / kMilli);
  put("trap.heating_per_scatter", e.trap.heating_per_scatter);
  put("probe.saturation", e.probe.saturation);
  put("probe.duration_ms", e.probe.duration / kMilli);
  put("detector.collection_efficiency", e.detector.collection_efficiency);
  put("detector.dark_count_rate_per_s", e.detector.dark_count_rate);
  put("noise.hyperfine_prep_fidelity", e.noise.hyperfine_prep_fidelity);
  put("noise.zeeman_prep_fidelity", e.noise.zeeman_prep_fidelity);
  put("noise.raman_flip_probability", e.noise.raman_flip_probability);
  put("noise.presence_test_error", e.noise.presence_test_error);
  put("noise.vacuum_lifetime_s", e.noise.vacuum_lifetime);
  put("noise.sequence_wall_time_ms", e.noise.sequence_wall_time / kMilli);
  put("noise.depump_probability_per_scatter", e.noise.depump_probability_per_scatter);
  out.emplace_back("run.trials", std::to_string(e.trials));
  out.emplace_back("run.seed", std::to_string(e.seed));
  if (config.sweep) {
    const SweepSpec& s = *config.sweep;
    auto join = [](const std::vector<double>& v, double scale) {
      std::string r;
      for (std::size_t i = 0; i < v.size(); ++i) r += (i ? ", " : "") + format_double(v[i] / scale);
      return r;
    };
    out.emplace_back("sweep.depths_mK", join(s.depths, kMilli));
    const bool optimize = !s.schedule.empty() && !s.schedule.front();
    if (optimize) {
      out.emplace_back("sweep.schedule", "optimize");
    } else {
      std::vector<double> dt, sat;
      for (const auto& p : s.schedule) {
        dt.push_back(p->duration);
        sat.push_back(p->saturation);
      }
      out.emplace_back("sweep.durations_ms", join(dt, kMilli));
      out.emplace_back("sweep.saturations", join(sat, 1.0));
    }
    out.emplace_back("sweep.trials", std::to_string(s.trials));
    out.emplace_back("sweep.seed", std::to_string(s.seed));
    const OptimizationConstraints& o = s.constraints;
    put("optimize.max_probe_loss", o.max_probe_loss);
    put("optimize.max_saturation", o.max_saturation);
    put("optimize.min_saturation", o.min_saturation);
    put("optimize.min_duration_ms", o.min_duration / kMilli);
    put("optimize.max_duration_ms", o.max_duration / kMilli);
    out.emplace_back("optimize.duration_points", std::to_string(o.duration_points));
    out.emplace_back("optimize.saturation_points", std::to_string(o.saturation_points));
    out.emplace_back("optimize.loss_trials", std::to_string(o.loss_trials));
  }
  return out;
}

}  // namespace readout

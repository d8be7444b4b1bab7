// Experiment configuration and its flat "section.key = value" text format.
//
// Every key is optional; omitted keys keep the defaults below, which describe
// a 50 x 50 region split into 3 x 3 clusters, sensor intensity 2 per unit
// area, local false-alarm probability 0.01, a unit-power target at (4, 5),
// unit SN and CH powers and 5 dB on both hops. Unknown keys are rejected.
//
//   key                      unit / meaning
//   seed                     u64, root of every random substream
//   trials                   Monte Carlo trials per hypothesis
//   intensity                sensors per unit area
//   sample_count             L, decisions per sensor per trial
//   paired                   true: H0/H1 trials share deployment and noise
//   rules                    comma list of CR, CR-Z, OCR, LLR, LFR, LFR-aML, LFR-PA
//   region.width/.height     length units
//   region.rows/.cols        cluster grid
//   target.power             P_t (signal power)
//   target.x/.y              target position, length units
//   sensing.noise_std        sigma_s (amplitude units)
//   sensing.ref_distance     d_0, length units
//   sensing.local_pfa        per-sensor false-alarm probability
//   channel.sn_power         P_0
//   channel.ch_power         P_m, one value or one per cluster
//   channel.snr_c_db         SN->CH SNR = P_0 / sigma_c^2 in dB (one or per cluster)
//   channel.snr_f_db         CH->FC SNR = P_m P_0 / sigma_f^2 in dB
//   channel.snch_noise_var   explicit sigma_c^2 list (overrides snr_c_db)
//   channel.chfc_noise_var   explicit sigma_f^2 list (overrides snr_f_db)
//   roc.threshold_points     grid size; 0 sweeps every distinct statistic value
//   roc.thresholds           explicit threshold list (overrides the grid)
//   llr.tolerance            relative truncation tolerance of likelihood series
//   bounds.points            z-grid size above each hypothesis mean
//   bounds.span              grid extent in standard deviations
//   power.md_floor           D_0 used by LFR-PA and the estimation loop
//   power.d1_sweep           D_1 = D_0 / P_0 values for the power table
//   power.literal_saving     true: report the literal per-cluster saving formula
//   aml.rounds               rounds of the estimation/detection/allocation loop
//   aml.threshold            Gamma for the loop's detection decision
//   aml.target_present       simulate the loop under H1 (true) or H0
#pragma once

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wsnfuse/channel.hpp"
#include "wsnfuse/deployment.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/sensing.hpp"

namespace wsnfuse {

enum class Rule { kCR, kCRNoisy, kOCR, kLLR, kLFR, kLFRaML, kLFRPA };

inline std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::kCR: return "CR";
    case Rule::kCRNoisy: return "CR-Z";
    case Rule::kOCR: return "OCR";
    case Rule::kLLR: return "LLR";
    case Rule::kLFR: return "LFR";
    case Rule::kLFRaML: return "LFR-aML";
    case Rule::kLFRPA: return "LFR-PA";
  }
  return "?";
}

inline std::optional<Rule> parse_rule(std::string_view name) {
  for (Rule r : {Rule::kCR, Rule::kCRNoisy, Rule::kOCR, Rule::kLLR, Rule::kLFR,
                 Rule::kLFRaML, Rule::kLFRPA}) {
    if (rule_name(r) == name) return r;
  }
  return std::nullopt;
}

inline std::vector<Rule> all_rules() {
  return {Rule::kCR, Rule::kCRNoisy, Rule::kOCR, Rule::kLLR,
          Rule::kLFR, Rule::kLFRaML, Rule::kLFRPA};
}

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t trials = 10000;
  double intensity = 2.0;
  std::size_t sample_count = 1;
  bool paired = true;
  std::vector<Rule> rules = all_rules();

  double region_width = 50.0;
  double region_height = 50.0;
  std::size_t grid_rows = 3;
  std::size_t grid_cols = 3;

  double target_power = 1.0;
  double target_x = 4.0;
  double target_y = 5.0;

  double noise_std = 1.0;
  double ref_distance = 1.0;
  double local_pfa = 0.01;

  double sn_power = 1.0;
  std::vector<double> ch_power{1.0};
  std::vector<double> snr_c_db{5.0};
  std::vector<double> snr_f_db{5.0};
  std::vector<double> snch_noise_var;  // empty: derived from snr_c_db
  std::vector<double> chfc_noise_var;  // empty: derived from snr_f_db

  std::size_t threshold_points = 200;
  std::vector<double> thresholds;

  double llr_tolerance = 1e-12;

  std::size_t bound_points = 50;
  double bound_span = 5.0;

  double md_floor = 5.5;
  std::vector<double> d1_sweep{1.0, 2.0, 3.0, 4.0, 5.0, 5.5};
  bool literal_saving = false;

  std::size_t aml_rounds = 10;
  double aml_threshold = 0.0;
  bool aml_target_present = true;

  bool operator==(const ExperimentConfig&) const = default;

  [[nodiscard]] RegionLayout region() const {
    return RegionLayout(region_width, region_height, grid_rows, grid_cols);
  }
  [[nodiscard]] TargetParams target() const {
    return {target_power, {target_x, target_y}};
  }
  [[nodiscard]] SensingConfig sensing() const {
    return SensingConfig::from_pfa(local_pfa, noise_std, ref_distance);
  }
  [[nodiscard]] std::size_t cluster_count() const { return grid_rows * grid_cols; }

  /// Channel with the configured (baseline) CH powers.
  [[nodiscard]] ChannelConfig channel() const {
    const std::size_t m = cluster_count();
    auto expand = [m](const std::vector<double>& v, const char* key) {
      if (v.size() == 1) return std::vector<double>(m, v[0]);
      if (v.size() != m) {
        throw ConfigError(std::string(key) + ": expected 1 or " +
                          std::to_string(m) + " values, got " +
                          std::to_string(v.size()));
      }
      return v;
    };
    ChannelConfig cfg{sn_power, expand(ch_power, "channel.ch_power"), {}, {}};
    auto [c, f] = noise_vars_from_snr(snr_c_db, snr_f_db, cfg);
    cfg.snch_noise_vars =
        snch_noise_var.empty() ? c : expand(snch_noise_var, "channel.snch_noise_var");
    cfg.chfc_noise_vars =
        chfc_noise_var.empty() ? f : expand(chfc_noise_var, "channel.chfc_noise_var");
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
    if (!(intensity >= 0.0)) throw ConfigError("intensity must be >= 0");
    if (rules.empty()) throw ConfigError("rules must name at least one rule");
    if (!(target_power >= 0.0)) throw ConfigError("target.power must be >= 0");
    try {
      (void)region();
      (void)sensing();
      (void)channel();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

struct ParseContext {
  std::string key;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line) + ", key '" + key + "': " + what);
  }

  double to_double(const std::string& text) const {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE) {
      fail("expected a number, got '" + text + "'");
    }
    return v;
  }

  template <typename Int>
  Int to_int(const std::string& text) const {
    Int v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
      fail("expected a non-negative integer, got '" + text + "'");
    }
    return v;
  }

  bool to_bool(const std::string& text) const {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    fail("expected true or false, got '" + text + "'");
  }

  std::vector<std::string> split(const std::string& text) const {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    if (parts.empty() || (parts.size() == 1 && parts[0].empty())) {
      fail("empty list");
    }
    return parts;
  }

  std::vector<double> to_list(const std::string& text) const {
    std::vector<double> out;
    for (const auto& p : split(text)) out.push_back(to_double(p));
    return out;
  }
};

}  // namespace detail

/// Parses configuration text. Errors carry the line number and key.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  std::map<std::string, std::size_t> seen;
  detail::ParseContext ctx;
  while (std::getline(in, raw)) {
    ++ctx.line;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(ctx.line) +
                        ": expected 'key = value'");
    }
    ctx.key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(ctx.key, ctx.line); !fresh) {
      ctx.fail("duplicate key (first set on line " + std::to_string(it->second) + ")");
    }
    if (value.empty()) ctx.fail("missing value");
    const std::string& k = ctx.key;

    if (k == "seed") cfg.seed = ctx.to_int<std::uint64_t>(value);
    else if (k == "trials") cfg.trials = ctx.to_int<std::size_t>(value);
    else if (k == "intensity") cfg.intensity = ctx.to_double(value);
    else if (k == "sample_count") cfg.sample_count = ctx.to_int<std::size_t>(value);
    else if (k == "paired") cfg.paired = ctx.to_bool(value);
    else if (k == "rules") {
      cfg.rules.clear();
      for (const auto& name : ctx.split(value)) {
        auto r = parse_rule(name);
        if (!r) ctx.fail("unknown rule '" + name + "'");
        cfg.rules.push_back(*r);
      }
    }
    else if (k == "region.width") cfg.region_width = ctx.to_double(value);
    else if (k == "region.height") cfg.region_height = ctx.to_double(value);
    else if (k == "region.rows") cfg.grid_rows = ctx.to_int<std::size_t>(value);
    else if (k == "region.cols") cfg.grid_cols = ctx.to_int<std::size_t>(value);
    else if (k == "target.power") cfg.target_power = ctx.to_double(value);
    else if (k == "target.x") cfg.target_x = ctx.to_double(value);
    else if (k == "target.y") cfg.target_y = ctx.to_double(value);
    else if (k == "sensing.noise_std") cfg.noise_std = ctx.to_double(value);
    else if (k == "sensing.ref_distance") cfg.ref_distance = ctx.to_double(value);
    else if (k == "sensing.local_pfa") cfg.local_pfa = ctx.to_double(value);
    else if (k == "channel.sn_power") cfg.sn_power = ctx.to_double(value);
    else if (k == "channel.ch_power") cfg.ch_power = ctx.to_list(value);
    else if (k == "channel.snr_c_db") cfg.snr_c_db = ctx.to_list(value);
    else if (k == "channel.snr_f_db") cfg.snr_f_db = ctx.to_list(value);
    else if (k == "channel.snch_noise_var") cfg.snch_noise_var = ctx.to_list(value);
    else if (k == "channel.chfc_noise_var") cfg.chfc_noise_var = ctx.to_list(value);
    else if (k == "roc.threshold_points") cfg.threshold_points = ctx.to_int<std::size_t>(value);
    else if (k == "roc.thresholds") cfg.thresholds = ctx.to_list(value);
    else if (k == "llr.tolerance") cfg.llr_tolerance = ctx.to_double(value);
    else if (k == "bounds.points") cfg.bound_points = ctx.to_int<std::size_t>(value);
    else if (k == "bounds.span") cfg.bound_span = ctx.to_double(value);
    else if (k == "power.md_floor") cfg.md_floor = ctx.to_double(value);
    else if (k == "power.d1_sweep") cfg.d1_sweep = ctx.to_list(value);
    else if (k == "power.literal_saving") cfg.literal_saving = ctx.to_bool(value);
    else if (k == "aml.rounds") cfg.aml_rounds = ctx.to_int<std::size_t>(value);
    else if (k == "aml.threshold") cfg.aml_threshold = ctx.to_double(value);
    else if (k == "aml.target_present") cfg.aml_target_present = ctx.to_bool(value);
    else ctx.fail("unknown key");
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Text form accepted by parse_config; every key is written.
inline std::string format_config(const ExperimentConfig& c) {
  using detail::format_double;
  using detail::join;
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "seed = " << c.seed << '\n'
    << "trials = " << c.trials << '\n'
    << "intensity = " << format_double(c.intensity) << '\n'
    << "sample_count = " << c.sample_count << '\n'
    << "paired = " << b(c.paired) << '\n'
    << "rules = ";
  for (std::size_t i = 0; i < c.rules.size(); ++i) {
    o << (i ? "," : "") << rule_name(c.rules[i]);
  }
  o << '\n'
    << "region.width = " << format_double(c.region_width) << '\n'
    << "region.height = " << format_double(c.region_height) << '\n'
    << "region.rows = " << c.grid_rows << '\n'
    << "region.cols = " << c.grid_cols << '\n'
    << "target.power = " << format_double(c.target_power) << '\n'
    << "target.x = " << format_double(c.target_x) << '\n'
    << "target.y = " << format_double(c.target_y) << '\n'
    << "sensing.noise_std = " << format_double(c.noise_std) << '\n'
    << "sensing.ref_distance = " << format_double(c.ref_distance) << '\n'
    << "sensing.local_pfa = " << format_double(c.local_pfa) << '\n'
    << "channel.sn_power = " << format_double(c.sn_power) << '\n'
    << "channel.ch_power = " << join(c.ch_power) << '\n'
    << "channel.snr_c_db = " << join(c.snr_c_db) << '\n'
    << "channel.snr_f_db = " << join(c.snr_f_db) << '\n';
  if (!c.snch_noise_var.empty()) {
    o << "channel.snch_noise_var = " << join(c.snch_noise_var) << '\n';
  }
  if (!c.chfc_noise_var.empty()) {
    o << "channel.chfc_noise_var = " << join(c.chfc_noise_var) << '\n';
  }
  o << "roc.threshold_points = " << c.threshold_points << '\n';
  if (!c.thresholds.empty()) o << "roc.thresholds = " << join(c.thresholds) << '\n';
  o << "llr.tolerance = " << format_double(c.llr_tolerance) << '\n'
    << "bounds.points = " << c.bound_points << '\n'
    << "bounds.span = " << format_double(c.bound_span) << '\n'
    << "power.md_floor = " << format_double(c.md_floor) << '\n'
    << "power.d1_sweep = " << join(c.d1_sweep) << '\n'
    << "power.literal_saving = " << b(c.literal_saving) << '\n'
    << "aml.rounds = " << c.aml_rounds << '\n'
    << "aml.threshold = " << format_double(c.aml_threshold) << '\n'
    << "aml.target_present = " << b(c.aml_target_present) << '\n';
  return o.str();
}

}  // namespace wsnfuse

// CLI subcommands as library calls, so tests can drive them directly.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wsnfuse/channel.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/harness/config.hpp"
#include "wsnfuse/harness/experiments.hpp"
#include "wsnfuse/harness/properties.hpp"

namespace wsnfuse {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInfeasible = 3,
  kExitNumeric = 4,
};

struct CommandOptions {
  std::string config_path;  // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string rules;  // comma-separated; empty keeps the config's list
  std::string out_dir = ".";
  std::size_t threads = 1;
};

/// Loads the config file (or defaults) and applies command-line overrides.
inline ExperimentConfig resolve_config(const CommandOptions& opts) {
  ExperimentConfig cfg = opts.config_path.empty() ? ExperimentConfig{}
                                                  : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.trials) cfg.trials = *opts.trials;
  if (!opts.rules.empty()) {
    cfg.rules.clear();
    std::stringstream ss(opts.rules);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto r = parse_rule(detail::trim(item));
      if (!r) throw ConfigError("--rules: unknown rule '" + detail::trim(item) + "'");
      cfg.rules.push_back(*r);
    }
  }
  cfg.validate();
  return cfg;
}

namespace detail {

inline std::filesystem::path output_path(const CommandOptions& opts, const char* name) {
  std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);
  return dir / name;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  return f;
}

/// `<csv>.meta`: notes, then the full resolved config.
inline void write_meta(const std::filesystem::path& csv, const ExperimentConfig& cfg,
                       const std::vector<std::string>& notes) {
  auto f = open_output(csv.string() + ".meta");
  f << "# snr convention: " << kSnrConventionNote << '\n';
  for (const auto& n : notes) f << "# " << n << '\n';
  f << format_config(cfg);
}

}  // namespace detail

inline int cmd_roc(const CommandOptions& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts);
  const auto result = estimate_roc(cfg, opts.threads);
  const auto path = detail::output_path(opts, "roc.csv");
  auto f = detail::open_output(path);
  write_roc_csv(f, result.curves);
  std::vector<std::string> notes{kNoisyCrNote,
                                 "decide H1 when the statistic exceeds gamma"};
  if (uses_rule(cfg, Rule::kLFRPA)) {
    notes.emplace_back("LFR-PA uses the optimal allocation for md_floor computed from the "
                       "true intensities");
  }
  detail::write_meta(path, cfg, notes);
  for (const auto& c : result.curves) {
    log << c.rule;
    try {
      log << ": P_D at P_FA=0.1 is " << pd_at_pfa(c, 0.1) << '\n';
    } catch (const std::out_of_range&) {
      log << ": P_FA=0.1 not covered by the threshold grid\n";
    }
  }
  log << "wrote " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_bounds(const CommandOptions& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts);
  const auto result = tail_bound_experiment(cfg, opts.threads);
  const auto path = detail::output_path(opts, "bounds.csv");
  auto f = detail::open_output(path);
  write_bounds_csv(f, result);
  detail::write_meta(path, cfg, {"statistic: LFR with equal CH powers"});
  std::size_t violations = 0;
  for (const auto& r : result.rows) {
    const double se = binomial_se(r.empirical_tail, r.trials);
    if (r.empirical_tail - 3.0 * se > r.bound) ++violations;
  }
  log << violations << " of " << result.rows.size()
      << " grid points with the empirical tail above the bound by more than 3 SE\n"
      << "wrote " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_power(const CommandOptions& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts);
  const auto result = power_sweep(cfg);
  const auto path = detail::output_path(opts, "power.csv");
  auto f = detail::open_output(path);
  write_power_csv(f, result);
  std::vector<std::string> notes{
      "reference total = sum of baseline CH powers = " +
          detail::format_double(result.reference_total),
      cfg.literal_saving ? "saving_pct uses the per-cluster literal formula"
                         : "saving_pct = (reference - sum P_m) / reference * 100"};
  for (const auto& row : result.rows) {
    if (!row.allocation) {
      notes.push_back("d1 = " + detail::format_double(row.d1) +
                      " infeasible: supremum of P0 * sum lambda_d^2 / sigma_c^2 is " +
                      detail::format_double(row.supremum));
    }
  }
  detail::write_meta(path, cfg, notes);
  for (const auto& row : result.rows) {
    log << "d1=" << row.d1 << ": ";
    if (row.allocation) {
      log << "total " << row.allocation->total() << ", saving " << row.saving_pct << "%\n";
    } else {
      log << "infeasible\n";
    }
  }
  log << "wrote " << path.string() << '\n';
  return result.all_feasible() ? kExitOk : kExitInfeasible;
}

inline int cmd_aml_loop(const CommandOptions& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts);
  const auto result = run_lfr_aml_loop(cfg);
  const auto path = detail::output_path(opts, "aml.csv");
  auto f = detail::open_output(path);
  write_aml_csv(f, result);
  std::vector<std::string> notes{
      "p_m is the allocation computed from the round's estimates and used in the next round",
      "CH-side estimation from y / sqrt(P0) at SNR P0 / sigma_c^2",
      "reference total = M x initial equal power = " +
          detail::format_double(result.reference_total)};
  for (const auto& r : result.rounds) {
    if (r.fallback) {
      notes.push_back("round " + std::to_string(r.round) +
                      ": allocation infeasible, fell back to equal powers");
    }
  }
  if (!result.rounds.empty()) {
    notes.push_back("final power saving % = " + detail::format_double(result.final_saving_pct()));
  }
  detail::write_meta(path, cfg, notes);
  log << result.rounds.size() << " rounds, final saving " << result.final_saving_pct()
      << "%\nwrote " << path.string() << '\n';
  return kExitOk;
}

inline int cmd_validate(const CommandOptions& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts);
  return report_properties(check_properties(cfg), log) ? kExitOk : kExitNumeric;
}

/// Runs `fn`, mapping library exceptions onto exit codes.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    err << "infeasible allocation: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DegenerateChannelError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace wsnfuse

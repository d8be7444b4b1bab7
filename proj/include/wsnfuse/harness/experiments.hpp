// Experiment drivers behind the CLI: ROC estimation, tail-bound check,
// power-allocation sweep and the estimate/detect/allocate loop.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "wsnfuse/bounds.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/harness/config.hpp"
#include "wsnfuse/harness/roc.hpp"
#include "wsnfuse/harness/simulation.hpp"
#include "wsnfuse/power.hpp"

namespace wsnfuse {

inline constexpr const char* kSnrConventionNote =
    "snr_c = P0 / sigma_c^2 and snr_f = P_m * P0 / sigma_f^2 (per detecting "
    "node, per hop)";
inline constexpr const char* kNoisyCrNote =
    "CR-Z is the unweighted sum of normalised receptions z_m / sqrt(P0 * P_m); "
    "CR is the sum of the true counts";

// ---------------------------------------------------------------- ROC

struct RocResult {
  std::vector<RocCurve> curves;
  TrialBatch batch;
};

inline RocResult estimate_roc(const ExperimentModel& model, std::size_t threads = 1) {
  RocResult out;
  out.batch = run_trials(model, threads);
  const auto& cfg = model.config;
  for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
    const std::string name(rule_name(cfg.rules[r]));
    const auto& h0 = out.batch.h0[r];
    const auto& h1 = out.batch.h1[r];
    out.curves.push_back(cfg.thresholds.empty()
                             ? build_roc(name, h0, h1, cfg.threshold_points)
                             : build_roc(name, h0, h1, cfg.thresholds));
  }
  return out;
}

inline RocResult estimate_roc(const ExperimentConfig& config, std::size_t threads = 1) {
  return estimate_roc(build_model(config), threads);
}

// ---------------------------------------------------------------- bounds

struct TailBoundRow {
  Hypothesis hypothesis = Hypothesis::kH0;
  double z = 0.0;
  double empirical_tail = 0.0;
  double bound = 0.0;
  std::size_t trials = 0;
};

struct TailBoundResult {
  TailBoundParams params;
  std::vector<TailBoundRow> rows;
};

/// Empirical LFR tail frequencies against the Gaussian-tail bound on
/// `bound_points` thresholds z_i = mean + i / points * span * sd, i = 1..points,
/// for each hypothesis.
inline TailBoundResult tail_bound_experiment(const ExperimentConfig& config,
                                             std::size_t threads = 1) {
  ExperimentConfig cfg = config;
  cfg.rules = {Rule::kLFR};
  const auto model = build_model(cfg);
  const auto batch = run_trials(model, threads);
  TailBoundResult out;
  out.params = bound_params(model.context);
  for (Hypothesis h : {Hypothesis::kH0, Hypothesis::kH1}) {
    auto samples = h == Hypothesis::kH0 ? batch.h0[0] : batch.h1[0];
    std::sort(samples.begin(), samples.end());
    const double mean = out.params.mean_of(h);
    const double sd = std::sqrt(out.params.variance_of(h));
    for (std::size_t i = 1; i <= cfg.bound_points; ++i) {
      const double z = mean + static_cast<double>(i) / static_cast<double>(cfg.bound_points) *
                                  cfg.bound_span * sd;
      out.rows.push_back({h, z, exceedance(samples, z), tail_bound(z, out.params, h),
                          samples.size()});
    }
  }
  return out;
}

// ---------------------------------------------------------------- power

struct PowerSweepRow {
  double d1 = 0.0;
  std::optional<PowerAllocation> allocation;  // empty when infeasible
  double saving_pct = 0.0;
  double supremum = 0.0;
};

struct PowerSweepResult {
  double reference_total = 0.0;
  std::vector<double> reference_powers;
  std::vector<PowerSweepRow> rows;

  [[nodiscard]] bool all_feasible() const {
    for (const auto& r : rows) {
      if (!r.allocation) return false;
    }
    return true;
  }
};

/// Allocation for each D1 in the sweep, using the true cluster intensities.
/// Noise variances come from the configured (baseline) channel and stay fixed;
/// savings are relative to the baseline total CH power.
inline PowerSweepResult power_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto intensities = cluster_intensities(config.intensity, config.target(),
                                               config.region(), config.sensing());
  const auto channel = config.channel();
  PowerSweepResult out;
  out.reference_powers = channel.ch_powers;
  for (double p : channel.ch_powers) out.reference_total += p;
  if (!(out.reference_total > 0.0)) {
    throw ConfigError("power sweep needs a positive baseline CH power");
  }
  for (double d1 : config.d1_sweep) {
    auto problem = allocation_problem(intensities, channel, d1 * channel.sn_power);
    PowerSweepRow row;
    row.d1 = d1;
    row.supremum = problem.md_supremum();
    try {
      row.allocation = allocate(problem);
      row.saving_pct =
          config.literal_saving
              ? power_saving_literal(row.allocation->powers, out.reference_total /
                                                                 static_cast<double>(problem.size()))
              : power_saving(row.allocation->powers, out.reference_total);
    } catch (const InfeasibleError&) {
      row.allocation.reset();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------- estimate/detect/allocate loop

struct AmlRound {
  std::size_t round = 0;
  std::vector<double> lambda1_hat;
  std::vector<double> powers_used;  // CH powers during this round
  std::vector<double> powers_next;  // allocation computed from this round's estimates
  double statistic = 0.0;
  bool decision = false;
  bool fallback = false;  // allocation infeasible, equal powers kept
};

struct AmlLoopResult {
  std::vector<double> initial_powers;
  double reference_total = 0.0;
  std::vector<AmlRound> rounds;

  /// Saving of the last round's allocation relative to M x initial power.
  [[nodiscard]] double final_saving_pct() const {
    if (rounds.empty()) return 0.0;
    return power_saving(rounds.back().powers_next, reference_total);
  }
};

/// Repeated estimation, detection and power allocation over one fixed
/// deployment. Each round draws L fresh decision and channel samples. The
/// CHs estimate lambda1 from their own receptions y / sqrt(P0) (SNR
/// P0 / sigma_c^2); the FC detects with the estimated weights under the
/// current CH powers; the next round uses the allocation computed from the
/// estimates, or the initial equal powers when that allocation is infeasible.
inline AmlLoopResult run_lfr_aml_loop(const ExperimentConfig& config) {
  config.validate();
  const auto region = config.region();
  const auto sensing = config.sensing();
  const auto lambda0_value = lambda0(config.intensity, sensing.local_pfa, region.cluster_area());
  const ChannelConfig base = config.channel();
  const std::size_t M = region.cluster_count();
  const std::size_t L = config.sample_count;

  AmlLoopResult out;
  out.initial_powers = base.ch_powers;
  for (double p : base.ch_powers) out.reference_total += p;

  auto deploy_rng = make_stream(config.seed, 0, Lane::kDeployment);
  const auto field = sample_ppp(config.intensity, region, deploy_rng);
  const std::optional<TargetParams> target =
      config.aml_target_present ? std::optional{config.target()} : std::nullopt;

  std::vector<double> snr_c(M);
  for (std::size_t m = 0; m < M; ++m) snr_c[m] = base.sn_power / base.snch_noise_vars[m];

  ChannelConfig current = base;
  for (std::size_t r = 0; r < config.aml_rounds; ++r) {
    auto decide_rng = make_stream(config.seed, r, Lane::kDecisions);
    auto channel_rng = make_stream(config.seed, r, Lane::kChannel);
    std::normal_distribution<double> n01;
    Matrix<double> y_norm(L, M);
    Matrix<double> z(L, M);
    for (std::size_t l = 0; l < L; ++l) {
      const auto counts = simulate_decisions(field, target, sensing, decide_rng);
      for (std::size_t m = 0; m < M; ++m) {
        const double y = sn_ch_transmit(counts[m], current.sn_power,
                                        current.snch_noise_vars[m], n01(channel_rng));
        z(l, m) = ch_fc_relay(y, current.ch_powers[m], current.chfc_noise_vars[m],
                              n01(channel_rng));
        y_norm(l, m) = y / std::sqrt(current.sn_power);
      }
    }
    const auto derived = derive(current);
    const auto est = estimate(y_norm, snr_c, lambda0_value, derived, config.llr_tolerance);
    const auto obs = make_observation(z, derived);
    std::vector<double> z_hat(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t l = 0; l < L; ++l) z_hat[m] += obs.normalized(l, m);
      z_hat[m] /= static_cast<double>(L);
    }

    AmlRound round;
    round.round = r;
    round.lambda1_hat = est.lambda1_hat;
    round.powers_used = current.ch_powers;
    round.statistic = detail::dot<double, double>(est.weights_aml, z_hat);
    round.decision = round.statistic > config.aml_threshold;

    ClusterIntensities estimated{lambda0_value, est.lambda1_hat};
    try {
      round.powers_next = allocate(allocation_problem(estimated, base, config.md_floor)).powers;
    } catch (const InfeasibleError&) {
      round.powers_next = base.ch_powers;
      round.fallback = true;
    }
    current.ch_powers = round.powers_next;
    out.rounds.push_back(std::move(round));
  }
  return out;
}

// ---------------------------------------------------------------- CSV

inline void write_bounds_csv(std::ostream& out, const TailBoundResult& result) {
  out << "hypothesis,z,empirical_tail,bound\n";
  for (const auto& r : result.rows) {
    out << (r.hypothesis == Hypothesis::kH0 ? "H0" : "H1") << ','
        << detail::format_double(r.z) << ',' << detail::format_double(r.empirical_tail) << ','
        << detail::format_double(r.bound) << '\n';
  }
}

/// One row per (D1, cluster). Infeasible sweep points are omitted here and
/// listed in the metadata instead.
inline void write_power_csv(std::ostream& out, const PowerSweepResult& result) {
  using detail::format_double;
  out << "d1,cluster,p_m,achieved_md,saving_pct\n";
  for (const auto& row : result.rows) {
    if (!row.allocation) continue;
    for (std::size_t m = 0; m < row.allocation->powers.size(); ++m) {
      out << format_double(row.d1) << ',' << m << ','
          << format_double(row.allocation->powers[m]) << ','
          << format_double(row.allocation->achieved_md) << ','
          << format_double(row.saving_pct) << '\n';
    }
  }
}

/// p_m is the allocation computed at the end of the round.
inline void write_aml_csv(std::ostream& out, const AmlLoopResult& result) {
  using detail::format_double;
  out << "round,cluster,lambda1_hat,p_m,statistic,decision\n";
  for (const auto& r : result.rounds) {
    for (std::size_t m = 0; m < r.lambda1_hat.size(); ++m) {
      out << r.round << ',' << m << ',' << format_double(r.lambda1_hat[m]) << ','
          << format_double(r.powers_next[m]) << ',' << format_double(r.statistic) << ','
          << (r.decision ? 1 : 0) << '\n';
    }
  }
}

}  // namespace wsnfuse

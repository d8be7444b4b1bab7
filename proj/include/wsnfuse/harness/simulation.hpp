// Monte Carlo trials: one deployment, L decision/channel samples, every
// enabled rule evaluated on the same draws.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "wsnfuse/bounds.hpp"
#include "wsnfuse/channel.hpp"
#include "wsnfuse/deployment.hpp"
#include "wsnfuse/fusion.hpp"
#include "wsnfuse/harness/config.hpp"
#include "wsnfuse/matrix.hpp"
#include "wsnfuse/power.hpp"
#include "wsnfuse/rng.hpp"
#include "wsnfuse/sensing.hpp"

namespace wsnfuse {

/// Runs fn(i) for i in [0, n) on `threads` workers. Callers write results
/// into slot i, so output does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Raw draws of one trial: detecting counts and the standard normals that
/// drive both channel hops (L x M each).
struct TrialDraw {
  Matrix<std::int64_t> counts;
  Matrix<double> snch_noise;
  Matrix<double> chfc_noise;
};

/// FC receptions z_{l,m} for a given channel configuration.
inline Matrix<double> receptions(const TrialDraw& draw, const ChannelConfig& ch) {
  Matrix<double> z(draw.counts.rows(), draw.counts.cols());
  for (std::size_t l = 0; l < z.rows(); ++l) {
    for (std::size_t m = 0; m < z.cols(); ++m) {
      const double y = sn_ch_transmit(draw.counts(l, m), ch.sn_power,
                                      ch.snch_noise_vars[m], draw.snch_noise(l, m));
      z(l, m) = ch_fc_relay(y, ch.ch_powers[m], ch.chfc_noise_vars[m],
                            draw.chfc_noise(l, m));
    }
  }
  return z;
}

/// Everything that is fixed across trials of one experiment.
struct ExperimentModel {
  ExperimentConfig config;
  RegionLayout region;
  SensingConfig sensing;
  TargetParams target;
  ClusterIntensities intensities;  // true lambda1 for the configured target
  ChannelConfig channel;           // baseline (configured) CH powers
  FusionContext context;
  std::optional<PowerAllocation> allocation;  // for LFR-PA
  ChannelConfig pa_channel;
  FusionContext pa_context;

  [[nodiscard]] std::size_t cluster_count() const { return region.cluster_count(); }
};

inline bool uses_rule(const ExperimentConfig& c, Rule r) {
  return std::find(c.rules.begin(), c.rules.end(), r) != c.rules.end();
}

inline AllocationProblem allocation_problem(const ClusterIntensities& in,
                                            const ChannelConfig& ch, double md_floor) {
  AllocationProblem p;
  p.lambda_d.resize(in.size());
  for (std::size_t m = 0; m < in.size(); ++m) {
    p.lambda_d[m] = std::max(0.0, in.lambda1[m] - in.lambda0);
  }
  p.snch_noise_vars = ch.snch_noise_vars;
  p.chfc_noise_vars = ch.chfc_noise_vars;
  p.sn_power = ch.sn_power;
  p.md_floor = md_floor;
  return p;
}

/// Precomputes intensities, channels, weights and (when LFR-PA is enabled)
/// the optimal power allocation. Throws InfeasibleError for an unreachable
/// md_floor.
inline ExperimentModel build_model(const ExperimentConfig& config) {
  config.validate();
  ExperimentModel m;
  m.config = config;
  m.region = config.region();
  m.sensing = config.sensing();
  m.target = config.target();
  m.intensities = cluster_intensities(config.intensity, m.target, m.region, m.sensing);
  m.channel = config.channel();
  m.context = make_fusion_context(m.intensities, derive(m.channel));
  if (uses_rule(config, Rule::kLFRPA)) {
    m.allocation = allocate(allocation_problem(m.intensities, m.channel, config.md_floor));
    m.pa_channel = m.channel;
    m.pa_channel.ch_powers = m.allocation->powers;
    m.pa_context = make_fusion_context(m.intensities, derive(m.pa_channel));
  }
  return m;
}

/// Random draws of trial `index` under `hypothesis`. With pairing on, H0 and
/// H1 trials of the same index share deployment, sensing noise and channel
/// noise; otherwise H1 uses separate lanes.
inline TrialDraw draw_trial(const ExperimentModel& model, Hypothesis hypothesis,
                            std::size_t index) {
  const auto& cfg = model.config;
  const bool alt = !cfg.paired && hypothesis == Hypothesis::kH1;
  auto deploy_rng = make_stream(cfg.seed, index, alt ? Lane::kDeploymentAlt : Lane::kDeployment);
  auto decide_rng = make_stream(cfg.seed, index, alt ? Lane::kDecisionsAlt : Lane::kDecisions);
  auto channel_rng = make_stream(cfg.seed, index, alt ? Lane::kChannelAlt : Lane::kChannel);

  const auto field = sample_ppp(cfg.intensity, model.region, deploy_rng);
  const std::optional<TargetParams> target =
      hypothesis == Hypothesis::kH1 ? std::optional{model.target} : std::nullopt;

  const std::size_t L = cfg.sample_count;
  const std::size_t M = model.cluster_count();
  TrialDraw draw{Matrix<std::int64_t>(L, M), Matrix<double>(L, M), Matrix<double>(L, M)};
  for (std::size_t l = 0; l < L; ++l) {
    const auto counts = simulate_decisions(field, target, model.sensing, decide_rng);
    std::copy(counts.begin(), counts.end(), draw.counts.row(l).begin());
  }
  std::normal_distribution<double> n01;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = 0; m < M; ++m) {
      draw.snch_noise(l, m) = n01(channel_rng);
      draw.chfc_noise(l, m) = n01(channel_rng);
    }
  }
  return draw;
}

namespace detail {

inline std::vector<double> column_means(const Matrix<double>& x) {
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t l = 0; l < x.rows(); ++l) {
    for (std::size_t m = 0; m < x.cols(); ++m) out[m] += x(l, m);
  }
  for (auto& v : out) v /= static_cast<double>(x.rows());
  return out;
}

inline std::vector<double> count_means(const Matrix<std::int64_t>& x) {
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t l = 0; l < x.rows(); ++l) {
    for (std::size_t m = 0; m < x.cols(); ++m) out[m] += static_cast<double>(x(l, m));
  }
  for (auto& v : out) v /= static_cast<double>(x.rows());
  return out;
}

}  // namespace detail

/// Statistics of every configured rule, in config.rules order.
///
/// With L > 1 samples: CR and OCR use per-cluster mean counts, LFR and CR-Z
/// use per-cluster mean receptions, and LLR is the exact likelihood ratio of
/// the per-cluster sum of normalised receptions (Pois(L lambda) plus
/// N(0, L / s_m)).
inline std::vector<double> evaluate_rules(const ExperimentModel& model,
                                          const TrialDraw& draw) {
  const auto& cfg = model.config;
  const auto& ctx = model.context;
  const std::size_t M = model.cluster_count();
  const double L = static_cast<double>(draw.counts.rows());

  std::optional<MultiSampleObservation> obs;
  auto observation = [&]() -> const MultiSampleObservation& {
    if (!obs) obs = make_observation(receptions(draw, model.channel), ctx.channels);
    return *obs;
  };
  const auto mean_counts = detail::count_means(draw.counts);

  std::vector<double> out;
  out.reserve(cfg.rules.size());
  for (Rule r : cfg.rules) {
    switch (r) {
      case Rule::kCR: {
        double s = 0.0;
        for (double v : mean_counts) s += v;
        out.push_back(s);
        break;
      }
      case Rule::kOCR:
        out.push_back(detail::dot<double, double>(ctx.weights_ocr, mean_counts));
        break;
      case Rule::kCRNoisy: {
        const auto zt = detail::column_means(observation().normalized);
        double s = 0.0;
        for (double v : zt) s += v;
        out.push_back(s);
        break;
      }
      case Rule::kLFR:
        out.push_back(lfr_statistic(detail::column_means(observation().samples),
                                    ctx.weights_lfr));
        break;
      case Rule::kLLR: {
        const auto zt = detail::column_means(observation().normalized);
        double s = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
          if (ctx.channels.p_tilde[m] == 0.0) continue;
          s += llr_term(zt[m] * L, L * ctx.intensities.lambda1[m],
                        L * ctx.intensities.lambda0, ctx.channels.snr[m] / L,
                        cfg.llr_tolerance);
        }
        out.push_back(s);
        break;
      }
      case Rule::kLFRaML: {
        const auto est = estimate(observation(), ctx.intensities.lambda0,
                                  ctx.channels, cfg.llr_tolerance);
        out.push_back(lfr_aml_statistic(observation(), est));
        break;
      }
      case Rule::kLFRPA: {
        const auto z = receptions(draw, model.pa_channel);
        out.push_back(lfr_statistic(detail::column_means(z),
                                    model.pa_context.weights_lfr));
        break;
      }
    }
  }
  return out;
}

/// Deterministic given (seed, index): one deployment, L samples, all rules.
inline std::vector<double> run_trial(const ExperimentModel& model,
                                     Hypothesis hypothesis, std::size_t index) {
  return evaluate_rules(model, draw_trial(model, hypothesis, index));
}

/// Per-rule statistic samples under both hypotheses, indexed [rule][trial].
struct TrialBatch {
  std::vector<std::vector<double>> h0;
  std::vector<std::vector<double>> h1;
};

inline TrialBatch run_trials(const ExperimentModel& model, std::size_t threads) {
  const std::size_t n = model.config.trials;
  const std::size_t R = model.config.rules.size();
  TrialBatch batch{std::vector<std::vector<double>>(R, std::vector<double>(n)),
                   std::vector<std::vector<double>>(R, std::vector<double>(n))};
  parallel_for(2 * n, threads, [&](std::size_t job) {
    const bool h1 = job >= n;
    const std::size_t i = h1 ? job - n : job;
    const auto stats = run_trial(model, h1 ? Hypothesis::kH1 : Hypothesis::kH0, i);
    auto& dest = h1 ? batch.h1 : batch.h0;
    for (std::size_t r = 0; r < R; ++r) dest[r][i] = stats[r];
  });
  return batch;
}

}  // namespace wsnfuse

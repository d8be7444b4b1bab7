// Fusion statistics (CR, OCR, exact LLR, LFR, LFR-aML) and the
// posterior-mean / constrained-ML estimation machinery behind LFR-aML.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "wsnfuse/channel.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/matrix.hpp"
#include "wsnfuse/sensing.hpp"

namespace wsnfuse {

inline constexpr double kDefaultSeriesTolerance = 1e-12;
inline constexpr std::size_t kSeriesTermCap = 100000;

namespace detail {

/// log(k!) for k < kSeriesTermCap, built once.
inline double log_factorial(std::size_t k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kSeriesTermCap + 1, 0.0);
    for (std::size_t i = 2; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    }
    return t;
  }();
  return table[k];
}

/// Streaming log-sum-exp accumulator.
class LogSumExp {
 public:
  void add(double log_term) noexcept {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  void merge(const LogSumExp& other) noexcept {
    if (other.sum_ == 0.0) return;
    if (other.max_ <= max_) {
      sum_ += other.sum_ * std::exp(other.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - other.max_) + other.sum_;
      max_ = other.max_;
    }
  }
  [[nodiscard]] double value() const noexcept {
    return sum_ == 0.0 ? -std::numeric_limits<double>::infinity()
                       : max_ + std::log(sum_);
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// Initial truncation point for sums over k >= 0 that mix a Poisson(mean)
/// factor with a Gaussian kernel of precision `snr` centred at `center`.
inline std::size_t initial_terms(double mean, double center, double snr) {
  const double hi = std::max(mean, center);
  const double k = hi + 12.0 * std::sqrt(std::max({mean, center, 1.0})) +
                   12.0 / std::sqrt(snr);
  return static_cast<std::size_t>(std::ceil(std::max(k, 1.0))) + 1;
}

/// Sums exp(log_term(k)) over k = 0, 1, ... in the log domain: first up to
/// `initial`, then in doubling blocks until the newest block adds less than
/// `tolerance` relative. Visits each k exactly once through `visit`, which
/// returns the log term.
template <typename Visit>
std::size_t truncated_series(std::size_t initial, double tolerance, Visit&& visit,
                             const char* what) {
  const double log_tol = std::log(tolerance);
  LogSumExp total;
  std::size_t end = std::min(initial, kSeriesTermCap);
  for (std::size_t k = 0; k < end; ++k) total.add(visit(k));
  while (true) {
    if (end >= kSeriesTermCap) {
      std::ostringstream msg;
      msg << what << ": series not converged within " << kSeriesTermCap
          << " terms";
      throw NumericError(msg.str());
    }
    const std::size_t next = std::min(2 * end, kSeriesTermCap);
    LogSumExp block;
    for (std::size_t k = end; k < next; ++k) block.add(visit(k));
    total.merge(block);
    end = next;
    if (block.value() - total.value() <= log_tol) break;
  }
  return end;
}

}  // namespace detail

/// Rule weights derived from intensities and channels.
struct FusionContext {
  ClusterIntensities intensities;
  ChannelDerived channels;
  std::vector<double> weights_ocr;  // c_m = log(lambda1 / lambda0)
  std::vector<double> weights_lfr;  // d_m

  [[nodiscard]] std::size_t size() const noexcept {
    return intensities.size();
  }
};

/// d_m = sqrt(P~_m) (lambda1_m - lambda0) / sigma~^2_m. Silent clusters
/// (P~_m = sigma~^2_m = 0) get zero weight.
inline std::vector<double> lfr_weights(const ClusterIntensities& intensities,
                                       const ChannelDerived& channels) {
  if (intensities.size() != channels.size()) {
    throw std::invalid_argument("intensities and channels disagree on cluster count");
  }
  std::vector<double> d(intensities.size(), 0.0);
  for (std::size_t m = 0; m < d.size(); ++m) {
    const double var = channels.sigma_tilde_sq[m];
    if (var > 0.0) {
      d[m] = std::sqrt(channels.p_tilde[m]) *
             (intensities.lambda1[m] - intensities.lambda0) / var;
    } else if (channels.p_tilde[m] > 0.0) {
      throw DegenerateChannelError("LFR weight undefined for a noiseless channel");
    }
  }
  return d;
}

inline std::vector<double> ocr_weights(const ClusterIntensities& intensities) {
  if (!(intensities.lambda0 > 0.0)) {
    throw std::invalid_argument("lambda0 must be positive for OCR weights");
  }
  std::vector<double> c(intensities.size());
  for (std::size_t m = 0; m < c.size(); ++m) {
    c[m] = std::log(intensities.lambda1[m] / intensities.lambda0);
  }
  return c;
}

inline FusionContext make_fusion_context(ClusterIntensities intensities,
                                         ChannelDerived channels) {
  FusionContext ctx{std::move(intensities), std::move(channels), {}, {}};
  ctx.weights_ocr = ocr_weights(ctx.intensities);
  ctx.weights_lfr = lfr_weights(ctx.intensities, ctx.channels);
  return ctx;
}

namespace detail {

template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("weight and observation lengths differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

}  // namespace detail

/// Counting rule: total number of positive decisions.
inline double cr_statistic(std::span<const std::int64_t> counts) {
  double s = 0.0;
  for (auto c : counts) s += static_cast<double>(c);
  return s;
}

/// Optimal cluster rule over ideal channels: sum c_m Lambda_m.
inline double ocr_statistic(std::span<const std::int64_t> counts,
                            const FusionContext& ctx) {
  return detail::dot<double, std::int64_t>(ctx.weights_ocr, counts);
}

/// Log of sum_k Pois(k; mean) exp(-snr (z - k)^2 / 2). Only differences of
/// this quantity are meaningful (the Gaussian normaliser is omitted).
inline double log_poisson_gauss_mixture(double z_tilde, double mean, double snr,
                                        double tolerance = kDefaultSeriesTolerance) {
  const double log_mean = std::log(mean);
  detail::LogSumExp acc;
  detail::truncated_series(
      detail::initial_terms(mean, z_tilde, snr), tolerance,
      [&](std::size_t k) {
        const double dk = static_cast<double>(k);
        const double r = z_tilde - dk;
        const double poisson =
            (k == 0 ? 0.0 : dk * log_mean) - mean - detail::log_factorial(k);
        const double t = poisson - 0.5 * snr * r * r;
        acc.add(t);
        return t;
      },
      "log_poisson_gauss_mixture");
  return acc.value();
}

/// One cluster's exact LLR term for a normalised observation.
inline double llr_term(double z_tilde, double lambda1, double lambda0, double snr,
                       double tolerance = kDefaultSeriesTolerance) {
  if (snr == 0.0 || lambda1 == lambda0) return 0.0;
  if (!(snr > 0.0)) throw std::invalid_argument("snr must be >= 0");
  return log_poisson_gauss_mixture(z_tilde, lambda1, snr, tolerance) -
         log_poisson_gauss_mixture(z_tilde, lambda0, snr, tolerance);
}

/// Exact log-likelihood ratio of raw FC receptions z_m. Clusters whose CH is
/// silent (P~_m = 0) carry no information and contribute zero.
inline double llr_statistic(std::span<const double> observations,
                            const FusionContext& ctx,
                            double tolerance = kDefaultSeriesTolerance) {
  if (observations.size() != ctx.size()) {
    throw std::invalid_argument("one observation per cluster expected");
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < observations.size(); ++m) {
    const double p = ctx.channels.p_tilde[m];
    if (p == 0.0) continue;
    sum += llr_term(observations[m] / std::sqrt(p), ctx.intensities.lambda1[m],
                    ctx.intensities.lambda0, ctx.channels.snr[m], tolerance);
  }
  return sum;
}

/// Linear fusion rule: sum d_m z_m.
inline double lfr_statistic(std::span<const double> observations,
                            std::span<const double> weights) {
  return detail::dot<double, double>(weights, observations);
}

/// Gaussian-approximated LLR in its printed sign convention:
///   sum_m [(z - l1 sqrt(P~))^2 - (z - l0 sqrt(P~))^2] / (2 sigma~^2).
inline double approx_llr(std::span<const double> observations,
                         const FusionContext& ctx) {
  if (observations.size() != ctx.size()) {
    throw std::invalid_argument("one observation per cluster expected");
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < observations.size(); ++m) {
    const double var = ctx.channels.sigma_tilde_sq[m];
    if (var == 0.0) continue;
    const double sp = std::sqrt(ctx.channels.p_tilde[m]);
    const double a = observations[m] - ctx.intensities.lambda1[m] * sp;
    const double b = observations[m] - ctx.intensities.lambda0 * sp;
    sum += (a * a - b * b) / (2.0 * var);
  }
  return sum;
}

/// The z-independent part of approx_llr:
///   sum_m P~_m (lambda1_m^2 - lambda0^2) / (2 sigma~^2_m).
inline double approx_llr_offset(const FusionContext& ctx) {
  double sum = 0.0;
  for (std::size_t m = 0; m < ctx.size(); ++m) {
    const double var = ctx.channels.sigma_tilde_sq[m];
    if (var == 0.0) continue;
    const double l1 = ctx.intensities.lambda1[m];
    const double l0 = ctx.intensities.lambda0;
    sum += ctx.channels.p_tilde[m] * (l1 * l1 - l0 * l0) / (2.0 * var);
  }
  return sum;
}

/// Moments of the flat-prior posterior over k >= 0 given one normalised
/// sample z~ observed through N(k, 1/snr).
struct CountPosterior {
  double mean = 0.0;                 // Lambda-hat
  double log_c0 = 0.0;               // log sum_k p(z~ | k)
  double mean_log_factorial = 0.0;   // sum_k pi_k log k!
};

inline CountPosterior count_posterior(double z_tilde, double snr,
                                      double tolerance = kDefaultSeriesTolerance) {
  if (!(snr > 0.0)) throw std::invalid_argument("snr must be > 0");
  // The series sees log weights; mean and log k! moments ride along in
  // linear scale relative to a running reference.
  const double log_norm = 0.5 * std::log(snr / (2.0 * std::numbers::pi));
  std::vector<double> logs;
  logs.reserve(detail::initial_terms(0.0, z_tilde, snr) * 2);
  detail::truncated_series(
      detail::initial_terms(0.0, z_tilde, snr), tolerance,
      [&](std::size_t k) {
        const double r = z_tilde - static_cast<double>(k);
        const double t = log_norm - 0.5 * snr * r * r;
        logs.push_back(t);
        return t;
      },
      "count_posterior");
  const double peak = *std::max_element(logs.begin(), logs.end());
  double w_sum = 0.0;
  double k_sum = 0.0;
  double lf_sum = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const double w = std::exp(logs[k] - peak);
    w_sum += w;
    k_sum += w * static_cast<double>(k);
    lf_sum += w * detail::log_factorial(k);
  }
  return {k_sum / w_sum, peak + std::log(w_sum), lf_sum / w_sum};
}

/// Lambda-hat: posterior mean of the count under a flat prior on k >= 0.
inline double posterior_mean_count(double z_tilde, double snr,
                                   double tolerance = kDefaultSeriesTolerance) {
  return count_posterior(z_tilde, snr, tolerance).mean;
}

/// Jensen lower bound Lambda-hat log(l1) - l1 + C1 on the log-likelihood
/// log sum_k Pois(k; l1) N(z~; k, 1/snr).
inline double loglik_lower_bound(double z_tilde, double lambda1, double snr,
                                 double tolerance = kDefaultSeriesTolerance) {
  if (!(lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be > 0");
  const auto post = count_posterior(z_tilde, snr, tolerance);
  const double c1 = post.log_c0 - post.mean_log_factorial;
  return post.mean * std::log(lambda1) - lambda1 + c1;
}

/// log p(z~; lambda1) including the Gaussian normaliser.
inline double log_likelihood(double z_tilde, double lambda1, double snr,
                             double tolerance = kDefaultSeriesTolerance) {
  return log_poisson_gauss_mixture(z_tilde, lambda1, snr, tolerance) +
         0.5 * std::log(snr / (2.0 * std::numbers::pi));
}

/// Constrained-ML estimate for one cluster.
struct Lambda1Estimate {
  double cluster_mean = 0.0;  // average of the per-sample posterior means
  double lambda1_hat = 0.0;   // max(cluster_mean, lambda0)
  double slack = 0.0;         // eta >= 0, zero when the bound is inactive
};

inline Lambda1Estimate estimate_lambda1(std::span<const double> per_sample_means,
                                        double lambda0) {
  if (per_sample_means.empty()) {
    throw std::invalid_argument("at least one sample is required");
  }
  double sum = 0.0;
  for (double v : per_sample_means) sum += v;
  const double mean = sum / static_cast<double>(per_sample_means.size());
  const double eta = 1.0 - mean / lambda0;
  if (eta < 0.0) return {mean, mean, 0.0};
  return {mean, lambda0, eta};
}

/// L received samples per cluster, raw and normalised by sqrt(P~_m).
struct MultiSampleObservation {
  Matrix<double> samples;
  Matrix<double> normalized;

  [[nodiscard]] std::size_t sample_count() const noexcept { return samples.rows(); }
  [[nodiscard]] std::size_t cluster_count() const noexcept { return samples.cols(); }
};

/// Normalises raw receptions; silent clusters keep a zero normalised value.
inline MultiSampleObservation make_observation(Matrix<double> samples,
                                               const ChannelDerived& channels) {
  if (samples.rows() == 0) throw std::invalid_argument("L must be >= 1");
  if (samples.cols() != channels.size()) {
    throw std::invalid_argument("sample matrix must have one column per cluster");
  }
  Matrix<double> norm(samples.rows(), samples.cols(), 0.0);
  for (std::size_t m = 0; m < samples.cols(); ++m) {
    const double p = channels.p_tilde[m];
    if (p == 0.0) continue;
    const double sp = std::sqrt(p);
    for (std::size_t l = 0; l < samples.rows(); ++l) norm(l, m) = samples(l, m) / sp;
  }
  return {std::move(samples), std::move(norm)};
}

struct EstimationResult {
  Matrix<double> per_sample_means;   // Lambda-hat_{l,m}
  std::vector<double> cluster_means;
  std::vector<double> lambda1_hat;
  std::vector<double> slack;         // eta_m
  std::vector<double> weights_aml;   // d-hat_m
  std::vector<double> z_hat;         // average of normalised samples
};

/// Runs the estimation phase on normalised samples with per-cluster SNRs
/// `snr`; weights use the FC-side channel quantities. Clusters with zero SNR
/// yield no information and are pinned to lambda0.
inline EstimationResult estimate(const Matrix<double>& normalized,
                                 std::span<const double> snr, double lambda0,
                                 const ChannelDerived& channels,
                                 double tolerance = kDefaultSeriesTolerance) {
  const std::size_t L = normalized.rows();
  const std::size_t M = normalized.cols();
  if (snr.size() != M || channels.size() != M) {
    throw std::invalid_argument("estimation inputs disagree on cluster count");
  }
  EstimationResult r;
  r.per_sample_means = Matrix<double>(L, M, lambda0);
  r.cluster_means.resize(M);
  r.lambda1_hat.resize(M);
  r.slack.resize(M);
  r.weights_aml.assign(M, 0.0);
  r.z_hat.assign(M, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    if (snr[m] > 0.0) {
      for (std::size_t l = 0; l < L; ++l) {
        r.per_sample_means(l, m) = posterior_mean_count(normalized(l, m), snr[m], tolerance);
      }
    }
    const auto col = r.per_sample_means.column(m);
    const auto est = estimate_lambda1(col, lambda0);
    r.cluster_means[m] = est.cluster_mean;
    r.lambda1_hat[m] = est.lambda1_hat;
    r.slack[m] = est.slack;
    double zsum = 0.0;
    for (std::size_t l = 0; l < L; ++l) zsum += normalized(l, m);
    r.z_hat[m] = zsum / static_cast<double>(L);
    const double var = channels.sigma_tilde_sq[m];
    if (var > 0.0) {
      r.weights_aml[m] = std::sqrt(channels.p_tilde[m]) * (r.lambda1_hat[m] - lambda0) / var;
    }
  }
  return r;
}

/// FC-side estimation: posterior means from the received samples themselves.
inline EstimationResult estimate(const MultiSampleObservation& obs, double lambda0,
                                 const ChannelDerived& channels,
                                 double tolerance = kDefaultSeriesTolerance) {
  return estimate(obs.normalized, channels.snr, lambda0, channels, tolerance);
}

/// LFR-aML: sum d-hat_m z-hat_m.
inline double lfr_aml_statistic(const EstimationResult& estimation) {
  return detail::dot<double, double>(estimation.weights_aml, estimation.z_hat);
}

inline double lfr_aml_statistic(const MultiSampleObservation& observation,
                                const EstimationResult& estimation) {
  if (estimation.per_sample_means.rows() != observation.sample_count() ||
      estimation.z_hat.size() != observation.cluster_count()) {
    throw std::invalid_argument("estimation was not computed from this observation");
  }
  return lfr_aml_statistic(estimation);
}

}  // namespace wsnfuse

// Two-hop channel: shared AWGN SN->CH access and amplify-and-forward CH->FC.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wsnfuse/rng.hpp"

namespace wsnfuse {

struct ChannelConfig {
  double sn_power = 1.0;                // P_0
  std::vector<double> ch_powers;        // P_m
  std::vector<double> snch_noise_vars;  // sigma^2_{c,m}
  std::vector<double> chfc_noise_vars;  // sigma^2_{f,m}

  [[nodiscard]] std::size_t size() const noexcept { return ch_powers.size(); }

  void validate() const {
    if (!(sn_power > 0.0)) throw std::invalid_argument("sn_power must be > 0");
    const auto m = ch_powers.size();
    if (snch_noise_vars.size() != m || chfc_noise_vars.size() != m) {
      throw std::invalid_argument("channel lists must all have one entry per cluster");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!(ch_powers[i] >= 0.0) || !(snch_noise_vars[i] >= 0.0) ||
          !(chfc_noise_vars[i] >= 0.0)) {
        throw std::invalid_argument("channel powers and noise variances must be >= 0 (cluster " +
                                    std::to_string(i) + ")");
      }
    }
  }
};

/// End-to-end quantities seen at the fusion centre.
struct ChannelDerived {
  std::vector<double> p_tilde;         // P_m * P_0
  std::vector<double> sigma_tilde_sq;  // P_m sigma_c^2 + sigma_f^2
  std::vector<double> snr;             // p_tilde / sigma_tilde_sq

  [[nodiscard]] std::size_t size() const noexcept { return p_tilde.size(); }
};

/// Thrown when a cluster has signal power but no aggregate noise.
class DegenerateChannelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline ChannelDerived derive(const ChannelConfig& config) {
  config.validate();
  ChannelDerived out;
  const auto m = config.size();
  out.p_tilde.resize(m);
  out.sigma_tilde_sq.resize(m);
  out.snr.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.p_tilde[i] = config.ch_powers[i] * config.sn_power;
    out.sigma_tilde_sq[i] =
        config.ch_powers[i] * config.snch_noise_vars[i] + config.chfc_noise_vars[i];
    if (out.sigma_tilde_sq[i] == 0.0) {
      if (out.p_tilde[i] > 0.0) {
        throw DegenerateChannelError("cluster " + std::to_string(i) +
                                     " has zero aggregate noise (infinite SNR)");
      }
      out.snr[i] = 0.0;
    } else {
      out.snr[i] = out.p_tilde[i] / out.sigma_tilde_sq[i];
    }
  }
  return out;
}

/// Y = sqrt(P_0) * count + sqrt(noise_var) * w, for a standard normal w.
inline double sn_ch_transmit(std::int64_t count, double sn_power, double noise_var,
                             double standard_normal) noexcept {
  return std::sqrt(sn_power) * static_cast<double>(count) +
         std::sqrt(noise_var) * standard_normal;
}

inline double sn_ch_transmit(std::int64_t count, double sn_power, double noise_var,
                             RandomStream& rng) {
  if (!(noise_var >= 0.0)) throw std::invalid_argument("noise_var must be >= 0");
  std::normal_distribution<double> n01;
  return sn_ch_transmit(count, sn_power, noise_var, n01(rng));
}

/// Z = sqrt(P_m) * Y + sqrt(noise_var) * v, for a standard normal v.
inline double ch_fc_relay(double reception, double ch_power, double noise_var,
                          double standard_normal) noexcept {
  return std::sqrt(ch_power) * reception + std::sqrt(noise_var) * standard_normal;
}

inline double ch_fc_relay(double reception, double ch_power, double noise_var,
                          RandomStream& rng) {
  if (!(noise_var >= 0.0)) throw std::invalid_argument("noise_var must be >= 0");
  std::normal_distribution<double> n01;
  return ch_fc_relay(reception, ch_power, noise_var, n01(rng));
}

/// Per-cluster noise variances for figure-style hop SNRs:
///   SNR_c = P_0 / sigma_c^2,   SNR_f = P_m P_0 / sigma_f^2.
/// `config.ch_powers` supplies P_m; single-entry dB lists broadcast.
inline std::pair<std::vector<double>, std::vector<double>> noise_vars_from_snr(
    const std::vector<double>& snr_c_db, const std::vector<double>& snr_f_db,
    const ChannelConfig& config) {
  const auto m = config.ch_powers.size();
  auto at = [m](const std::vector<double>& v, std::size_t i, const char* name) {
    if (v.size() == 1) return v[0];
    if (v.size() != m) {
      throw std::invalid_argument(std::string(name) +
                                  " needs one entry or one per cluster");
    }
    return v[i];
  };
  std::vector<double> var_c(m);
  std::vector<double> var_f(m);
  for (std::size_t i = 0; i < m; ++i) {
    var_c[i] = config.sn_power / std::pow(10.0, at(snr_c_db, i, "snr_c_db") / 10.0);
    var_f[i] = config.ch_powers[i] * config.sn_power /
               std::pow(10.0, at(snr_f_db, i, "snr_f_db") / 10.0);
  }
  return {std::move(var_c), std::move(var_f)};
}

/// M clusters with equal CH power and noise set from hop SNRs.
inline ChannelConfig channel_from_snr(std::size_t clusters, double sn_power,
                                      double ch_power,
                                      const std::vector<double>& snr_c_db,
                                      const std::vector<double>& snr_f_db) {
  ChannelConfig cfg{sn_power, std::vector<double>(clusters, ch_power), {}, {}};
  auto [c, f] = noise_vars_from_snr(snr_c_db, snr_f_db, cfg);
  cfg.snch_noise_vars = std::move(c);
  cfg.chfc_noise_vars = std::move(f);
  cfg.validate();
  return cfg;
}

}  // namespace wsnfuse

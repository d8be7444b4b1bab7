// Reproducible random substreams keyed by (seed, trial, lane).
#pragma once

#include <cstdint>
#include <random>

namespace wsnfuse {

using RandomStream = std::mt19937_64;

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Independent lanes drawn within a single trial.
enum class Lane : std::uint64_t {
  kDeployment = 0,
  kDecisions = 1,
  kChannel = 2,
  kDecisionsAlt = 3,  // unpaired H1 decisions
  kChannelAlt = 4,    // unpaired H1 channel noise
  kDeploymentAlt = 5,
};

/// Derives a stream whose state depends only on its three keys, so a trial
/// can be replayed on any worker in any order.
inline RandomStream make_stream(std::uint64_t seed, std::uint64_t trial,
                                Lane lane) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ trial);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(lane));
  std::seed_seq seq{static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(lane)};
  return RandomStream(seq);
}

}  // namespace wsnfuse

// Exception types shared by the wsnfuse library and CLI.
#pragma once

#include <stdexcept>
#include <string>

namespace wsnfuse {

/// A point fell outside the region of interest.
class OutOfRegionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A numerical routine (quadrature, truncated series) failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested mean-difference floor cannot be met by any power vector.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double supremum)
      : std::runtime_error(what), supremum_(supremum) {}

  /// Least upper bound of the achievable constraint value.
  [[nodiscard]] double supremum() const noexcept { return supremum_; }

 private:
  double supremum_;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wsnfuse

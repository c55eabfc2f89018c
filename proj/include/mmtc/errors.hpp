#pragma once

#include <stdexcept>
#include <string>

namespace mmtc {

/// Raised when a numerical routine cannot reach its requested tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved = 0.0)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Raised for special-function parameter sets outside the supported families.
class UnsupportedFamily : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed scenario or configuration input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Clamp a probability to [0, 1]. Excursions above 1e-6 indicate a numerical
/// failure and raise NumericError; smaller ones are counted.
double clamp_probability(double p, const char* context);

/// Number of clamps applied since start-up and the largest excursion seen.
struct ClampStats {
  long count;
  double largest;
};
ClampStats clamp_stats();

}  // namespace mmtc

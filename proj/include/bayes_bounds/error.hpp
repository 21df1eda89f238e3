#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bayes_bounds {

enum class ErrorKind {
  NonFiniteIntegrand,
  DimensionTooLarge,
  NotPositiveDefinite,
  NotSymmetric,
  OutOfSupport,
  NonPositiveInformation,
  NonPositiveDenominator,
  DerivativeMismatch,
  RhoDegenerate,
  SpacingTooCoarse,
  DegenerateObjective,
  BadParams,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every numerical failure in the library is reported through this type; the
/// kind names the failure class so callers (and the CLI) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bayes_bounds

#pragma once

#include <string>
#include <vector>

namespace bayes_bounds {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Invariant suite of a preset at its default parameters: closed-form
/// oracles, orderings, identities and model self-checks.
std::vector<Check> verify_preset(const std::string& preset);

}  // namespace bayes_bounds

#pragma once

namespace bayes_bounds {
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchema = "bayes-bounds/1";
}  // namespace bayes_bounds

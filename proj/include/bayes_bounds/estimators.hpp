#pragma once

// MAP / ML point estimators by grid scan plus golden-section refinement, and
// the Monte-Carlo MSE harness.

#include <cstdint>
#include <functional>
#include <string_view>

#include "bayes_bounds/model.hpp"

namespace bayes_bounds {

enum class EstimatorKind { Map, Ml };

std::string_view to_string(EstimatorKind k);
EstimatorKind estimator_from_string(std::string_view s);

struct McConfig {
  int trials = 5000;
  std::uint64_t seed = 20240607;
  EstimatorKind estimator = EstimatorKind::Map;
  /// Coarse scan size. Vector models scan grid/8 points per axis.
  int grid = 512;
  /// Cap on golden-section iterations (scalar) or coordinate sweeps (vector).
  int refine = 100;
  /// 0: BAYES_BOUNDS_THREADS if set, else hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct SearchOptions {
  int grid = 512;
  int refine = 100;
};

double map_estimate(const ScalarModel& m, const Observation& x, const SearchOptions& s = {});
double ml_estimate(const ScalarModel& m, const Observation& x, const SearchOptions& s = {});
Vector map_estimate(const VectorModel& m, const Observation& x, const SearchOptions& s = {});
Vector ml_estimate(const VectorModel& m, const Observation& x, const SearchOptions& s = {});

/// Maximiser of `objective` over [lo, hi]: `grid` midpoints scanned, then
/// golden-section on the bracket around the best one down to width*1e-6.
double maximize_1d(const std::function<double(double)>& objective, double lo, double hi, const SearchOptions& s);

struct McResult {
  Matrix mse;     // 1x1 for scalar models
  Matrix mse_se;  // entrywise jackknife standard errors
  Vector rmse;    // sqrt of the diagonal of mse
  int trials = 0;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::Map;

  double scalar_mse() const { return mse(0, 0); }
  double scalar_se() const { return mse_se(0, 0); }
};

/// Estimator callback: observation and the true parameter (for test oracles).
using ScalarEstimator = std::function<double(const Observation&, double)>;
using VectorEstimator = std::function<Vector(const Observation&, const Vector&)>;

McResult monte_carlo_mse(const ScalarModel& m, const McConfig& cfg);
McResult monte_carlo_mse(const VectorModel& m, const McConfig& cfg);
McResult monte_carlo_mse(const ScalarModel& m, const McConfig& cfg, const ScalarEstimator& est);
McResult monte_carlo_mse(const VectorModel& m, const McConfig& cfg, const VectorEstimator& est);

/// Independent generator for one trial, derived from the master seed.
Rng trial_rng(std::uint64_t seed, std::uint64_t trial);

int resolve_threads(int requested);

}  // namespace bayes_bounds

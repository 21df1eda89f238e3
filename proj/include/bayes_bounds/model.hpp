#pragma once

// Estimation-problem interface shared by every bound and estimator: prior,
// conditional Fisher information J_D, samplers and conditional likelihood,
// plus the derived prior term L_P and J_DP = J_D + L_P.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bayes_bounds/numerics.hpp"

namespace bayes_bounds {

using Rng = std::mt19937_64;
using Observation = std::vector<double>;

/// Components of a scalar-parameter model. Optional callbacks may be left
/// empty: the prior log-derivative is then finite-differenced and
/// `bind_loglik` falls back to wrapping `cond_loglik`.
struct ScalarModelParts {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  std::function<double(double)> prior_logpdf;
  std::function<double(double)> prior_logpdf_deriv;
  std::function<double(double)> cond_fim;
  std::function<double(Rng&)> sample_prior;
  std::function<Observation(Rng&, double)> sample_cond;
  std::function<double(const Observation&, double)> cond_loglik;
  /// Precomputes sufficient statistics of x; the returned closure is theta -> log f(x|theta).
  std::function<std::function<double(double)>(const Observation&)> bind_loglik;
  int n_obs = 1;
  QuadratureSpec quadrature;
  std::vector<double> breaks;  // points where the prior is not smooth
};

/// Immutable after construction. The constructor checks prior normalisation
/// (1e-4), the supplied log-derivative against finite differences at 32
/// interior points (1e-4 relative) and positivity of J_D on a probe grid.
class ScalarModel {
 public:
  explicit ScalarModel(ScalarModelParts parts);

  const std::string& name() const { return p_.name; }
  double lo() const { return p_.lo; }
  double hi() const { return p_.hi; }
  int n_obs() const { return p_.n_obs; }
  const QuadratureSpec& quadrature() const { return p_.quadrature; }
  const std::vector<double>& breaks() const { return p_.breaks; }
  bool has_analytic_prior_deriv() const { return static_cast<bool>(p_.prior_logpdf_deriv); }

  bool in_support(double theta) const { return theta > p_.lo && theta < p_.hi; }

  double prior_logpdf(double theta) const { return p_.prior_logpdf(theta); }
  double prior_pdf(double theta) const { return std::exp(p_.prior_logpdf(theta)); }
  double prior_logpdf_deriv(double theta) const;
  double cond_fim(double theta) const { return p_.cond_fim(theta); }

  double sample_prior(Rng& rng) const { return p_.sample_prior(rng); }
  Observation sample_cond(Rng& rng, double theta) const { return p_.sample_cond(rng, theta); }
  double cond_loglik(const Observation& x, double theta) const { return p_.cond_loglik(x, theta); }
  std::function<double(double)> bind_loglik(const Observation& x) const;

  /// Rule over the model support using its quadrature settings with `q`'s
  /// scheme and panel count.
  Rule1D rule(const QuadratureSpec& q) const;
  /// q with the model's clip and grading settings applied.
  QuadratureSpec adapt(const QuadratureSpec& q) const;

 private:
  ScalarModelParts p_;
};

struct VectorModelParts {
  std::string name;
  std::vector<std::string> param_names;
  Vector lo;
  Vector hi;
  std::function<double(const Vector&)> prior_logpdf;
  std::function<Vector(const Vector&)> prior_grad;
  std::function<Matrix(const Vector&)> cond_fim;
  std::function<Vector(Rng&)> sample_prior;
  std::function<Observation(Rng&, const Vector&)> sample_cond;
  std::function<double(const Observation&, const Vector&)> cond_loglik;
  std::function<std::function<double(const Vector&)>(const Observation&)> bind_loglik;
  int n_obs = 1;
  std::vector<QuadratureSpec> quadrature;  // one per axis
  std::vector<std::vector<double>> breaks;
};

class VectorModel {
 public:
  explicit VectorModel(VectorModelParts parts);

  const std::string& name() const { return p_.name; }
  const std::vector<std::string>& param_names() const { return p_.param_names; }
  int dim() const { return static_cast<int>(p_.lo.size()); }
  const Vector& lo() const { return p_.lo; }
  const Vector& hi() const { return p_.hi; }
  int n_obs() const { return p_.n_obs; }
  const std::vector<QuadratureSpec>& quadrature() const { return p_.quadrature; }

  bool in_support(const Vector& theta) const;

  double prior_logpdf(const Vector& theta) const { return p_.prior_logpdf(theta); }
  double prior_pdf(const Vector& theta) const { return std::exp(p_.prior_logpdf(theta)); }
  Vector prior_grad(const Vector& theta) const { return p_.prior_grad(theta); }
  Matrix cond_fim(const Vector& theta) const { return p_.cond_fim(theta); }

  Vector sample_prior(Rng& rng) const { return p_.sample_prior(rng); }
  Observation sample_cond(Rng& rng, const Vector& theta) const { return p_.sample_cond(rng, theta); }
  double cond_loglik(const Observation& x, const Vector& theta) const { return p_.cond_loglik(x, theta); }
  std::function<double(const Vector&)> bind_loglik(const Observation& x) const;

  /// Tensor rule over the support: per-axis model settings, with scheme and
  /// panel count taken from `q` when given.
  TensorRule rule(const QuadratureSpec* q = nullptr) const;

 private:
  VectorModelParts p_;
};

/// Squared prior log-derivative (scalar L_P).
double l_p_scalar(const ScalarModel& m, double theta);
/// J_D + L_P; throws NonPositiveInformation if not strictly positive.
double j_dp_scalar(const ScalarModel& m, double theta);
/// J_D + g g^T with g the prior log-gradient; throws NonPositiveInformation
/// if the smallest eigenvalue is not positive.
Matrix j_dp_matrix(const VectorModel& m, const Vector& theta);

/// Boundary products of the weighted-bound regularity conditions, evaluated on
/// the prior factor at lo + offset*W and hi - offset*W.
struct RegularityReport {
  double c1 = 0.0;  // |w f|
  double c2 = 0.0;  // |theta w f|
  double c3 = 0.0;  // |(w^2)' f|
  double c4 = 0.0;  // |w^2 f'|
  double tol = 1e-6;
  double offset = 0.0;

  bool c1_ok() const { return c1 <= tol; }
  bool c2_ok() const { return c2 <= tol; }
  bool c3_ok() const { return c3 <= tol; }
  bool c4_ok() const { return c4 <= tol; }
  bool warn() const { return !(c1_ok() && c2_ok() && c3_ok() && c4_ok()); }
  std::string summary() const;
};

struct RegularityOptions {
  double tol = 1e-6;
  /// Relative distance from the support edge at which the products are taken.
  /// Zero means the model's clip, or 1e-9 when the model does not clip.
  double offset = 0.0;
};

RegularityReport check_regularity(const ScalarModel& m, const std::function<double(double)>& w,
                                  const RegularityOptions& opt = {});

/// Monte-Carlo statistics of the conditional score at fixed theta.
struct ScoreStats {
  double mean = 0.0;          // E[d/dtheta log f(x|theta)]
  double mean_se = 0.0;
  double fisher = 0.0;        // E[score^2]
  double fisher_se = 0.0;
};

ScoreStats score_stats(const ScalarModel& m, double theta, int draws, std::uint64_t seed);

struct VectorScoreStats {
  Vector mean;
  Vector mean_se;
  Matrix fisher;  // E[score score^T]
};

VectorScoreStats score_stats(const VectorModel& m, const Vector& theta, int draws, std::uint64_t seed);

/// Prior CDF tabulated by quadrature, linear interpolation between nodes.
class PriorCdf {
 public:
  explicit PriorCdf(const ScalarModel& m, int cells = 20000);
  double operator()(double theta) const;

 private:
  std::vector<double> x_, c_;
};

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic KS critical value sqrt(-ln(alpha/2)/2)/sqrt(n).
double ks_critical(std::size_t n, double alpha);

}  // namespace bayes_bounds

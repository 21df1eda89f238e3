#pragma once

// Ready-made estimation problems with analytic Fisher information:
//   variance-beta  x|theta ~ N(0, theta I_N), theta ~ Beta(a, a)
//   doa            single far-field source on a half-wavelength ULA, raised-cosine prior
//   mean-var       x|(mu, phi) ~ N(mu 1_N, phi I_N), mu ~ N(0, s2), phi ~ Beta(a, a)
// plus two toy models used as exact references in tests.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "bayes_bounds/model.hpp"

namespace bayes_bounds {

struct VarianceBetaParams {
  double a = 2.1;
  int n = 128;
};

struct DoaParams {
  int n_sensors = 32;
  int n_snapshots = 128;
  double snr = 10.0;  // linear, sigma_alpha^2 / sigma^2
  double edge = 85.0 * 3.14159265358979323846 / 180.0;
  double rolloff = 0.98;
};

struct MeanVarParams {
  double a = 2.1;
  int n = 100;
  double sigma_mu2 = 0.1;
};

ScalarModel make_variance_beta(const VarianceBetaParams& p);
ScalarModel make_doa(const DoaParams& p);
VectorModel make_mean_var(const MeanVarParams& p);

/// x|theta ~ N(theta 1_N, I), theta ~ N(0, sigma2) truncated at +-8 sigma.
ScalarModel make_linear_gaussian(int n, double sigma2);
/// Uniform prior on (lo, hi) and x|theta ~ N(theta, 1/c): J_D = J_DP = c.
ScalarModel make_constant_information(double c, double lo = 0.0, double hi = 1.0);

double doa_delta(const DoaParams& p);
/// delta evaluated through the unreduced sum over sensor positions.
double doa_delta_sum_form(const DoaParams& p);
/// Normalisation constant of the raised-cosine prior.
double doa_prior_norm(const DoaParams& p);

/// Closed forms for the beta-variance problem (also the phi-marginal of mean-var).
struct BetaVarianceClosedForm {
  double prior_mean;
  double prior_var;
  double ecrb;  // E[2 theta^2 / N]
  double bcrb;  // 1 / E[J_D + L_P]
};
BetaVarianceClosedForm beta_variance_closed_form(double a, int n);

struct MeanVarClosedForm {
  Matrix bcrb;
  Matrix ecrb;
};
MeanVarClosedForm mean_var_closed_form(const MeanVarParams& p);

/// gamma(phi) = (a-1)(1/(1-phi) - 1/phi)
double mean_var_gamma(double a, double phi);

/// Log-density of the DOA observation evaluated with the dense complex
/// covariance sigma_a^2 a a^H + I (Cholesky), for checking the reduced form.
double doa_loglik_dense(const DoaParams& p, const Observation& x, double theta);

// ------------------------------------------------------------------ presets

using PresetParams = std::map<std::string, double>;
using AnyModel = std::variant<ScalarModel, VectorModel>;

const std::vector<std::string>& preset_names();
/// Default parameter values of a preset (keys are the accepted override names).
PresetParams preset_defaults(const std::string& preset);
/// Builds the preset with `overrides` applied on top of its defaults.
/// For doa, `snr` is in dB.
AnyModel make_preset(const std::string& preset, const PresetParams& overrides = {});

}  // namespace bayes_bounds

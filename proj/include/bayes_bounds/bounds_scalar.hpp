#pragma once

// Closed-form bound family for scalar models. Every expectation is a
// quadrature over the prior on the model's support.

#include <functional>
#include <optional>

#include "bayes_bounds/model.hpp"

namespace bayes_bounds {

/// E[g(theta)] under the prior of m.
double expect(const ScalarModel& m, const std::function<double(double)>& g, const QuadratureSpec& q);

/// 1 / E[J_DP].
double bcrb(const ScalarModel& m, const QuadratureSpec& q);

/// E[1 / J_D]. Not a lower bound in general; the asymptotic MSE of ML/MAP.
double ecrb(const ScalarModel& m, const QuadratureSpec& q);

/// Weighted bound for a positive weight w with derivatives w', w'':
///   E[w]^2 / (E[w^2 J_DP] - E[(w')^2 + 2 w w''])
/// Throws DerivativeMismatch if the derivative callbacks disagree with finite
/// differences of w (8 points, 1e-3 relative), NonPositiveDenominator if the
/// denominator is not positive.
double wbcrb_given_weight(const ScalarModel& m, const std::function<double(double)>& w,
                          const std::function<double(double)>& w_prime,
                          const std::function<double(double)>& w_second, const QuadratureSpec& q);

/// Same with w' and w'' by central differences.
double wbcrb_given_weight(const ScalarModel& m, const std::function<double(double)>& w, const QuadratureSpec& q,
                          const DiffSpec& d);

/// Ingredients shared by the AT-BCRB and the suboptimal weighted bound.
struct InverseInfoMoments {
  double e_inv = 0.0;       // E[J_DP^-1]
  double correction = 0.0;  // E[((J_DP^-1)')^2 - (J_DP^-2)'']
  double rho() const { return correction / e_inv; }
};

/// Derivatives of J_DP^-1 and J_DP^-2 are taken as whole functions by central
/// differences with the step of `d`, capped near the support edges.
InverseInfoMoments inverse_info_moments(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d);

struct AtBcrb {
  double bound = 0.0;
  double rho = 0.0;
  double e_inv = 0.0;
};

/// E[J_DP^-1] / (1 + rho). Throws RhoDegenerate if 1 + rho <= 0.
AtBcrb at_bcrb(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d);
AtBcrb at_bcrb(const InverseInfoMoments& mom);

/// E[J_DP^-1] + E[(J_DP^-2)'' - ((J_DP^-1)')^2] = E[J_DP^-1] (1 - rho).
double wbcrb_sub(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d);
double wbcrb_sub(const InverseInfoMoments& mom);

/// Relative change of a quantity between q and q.refined().
struct Convergence {
  double value = 0.0;
  double refined = 0.0;
  double rel_change = 0.0;
  bool converged(double tol = 1e-3) const { return rel_change < tol; }
};

Convergence check_convergence(const std::function<double(const QuadratureSpec&)>& f, const QuadratureSpec& q);

}  // namespace bayes_bounds

#pragma once

// Matrix bounds for vector parameters (dimension <= 3). Expectations use the
// model's tensor quadrature; theta-derivatives of the weighting matrix are
// central differences with per-axis steps h * (box width).

#include <functional>
#include <string>
#include <vector>

#include "bayes_bounds/model.hpp"

namespace bayes_bounds {

using MatrixField = std::function<Matrix(const Vector&)>;

struct MatrixBoundReport {
  Matrix bcrb;
  Matrix ecrb;
  Matrix at_bcrb;
  Matrix f_inner;   // the F of the weighted bound, symmetrised
  Matrix e_weight;  // E[W]
  double f_asymmetry = 0.0;
  double c8 = 0.0;  // max |W_mn d_i f| over boundary probes
  std::vector<std::string> warnings;
};

/// [div W]_m = sum_n dW_mn / dtheta_n.
Vector divergence_w(const MatrixField& w, const Vector& theta, const VectorModel& m, const DiffSpec& d);

/// E[W] F^-1 E[W] with
///   F = E[W J_DP W] - E[d d'] - E[W G'] - E[G W],  d = div W, G = dd/dtheta.
Matrix wbcrb_matrix(const VectorModel& m, const MatrixField& w, const QuadratureSpec* q, const DiffSpec& d,
                    MatrixBoundReport* details = nullptr);

/// Weighted bound with W = J_DP^-1, plus the matrix BCRB and ECRB.
MatrixBoundReport at_bcrb_matrix(const VectorModel& m, const QuadratureSpec* q, const DiffSpec& d);

Matrix bcrb_matrix(const VectorModel& m, const QuadratureSpec* q = nullptr);
Matrix ecrb_matrix(const VectorModel& m, const QuadratureSpec* q = nullptr);

/// Boundary product of the mixed regularity condition for W, probed on every
/// face of the box (5 points per free axis) at `offset` relative distance.
double c8_diagnostic(const VectorModel& m, const MatrixField& w, const DiffSpec& d, double offset = 1e-9);

/// One-parameter VectorModel with the callbacks of a scalar model.
VectorModel as_vector_model(const ScalarModel& m);

}  // namespace bayes_bounds

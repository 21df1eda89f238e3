#pragma once

// Weighted bound with the weight optimised on a uniform grid. The weight is a
// vector w over the grid; the bound (f'w)^2 / (w' A w) is maximised subject to
// f'w = 1, giving w = A^-1 f / (f' A^-1 f) and the value f' A^-1 f, where
// A = ZF + Phi.

#include <string_view>

#include "bayes_bounds/model.hpp"

namespace bayes_bounds {

struct Grid {
  std::vector<double> points;  // cell midpoints
  double delta = 0.0;

  std::size_t size() const { return points.size(); }
};

/// Midpoint grid over the clipped support with L = floor(width / delta) cells,
/// centred if delta does not divide the width. Throws SpacingTooCoarse if
/// delta >= width / 3.
Grid build_grid(const ScalarModel& m, double delta);

/// How the derivative penalty Phi is discretised.
///   Symmetric: Dt' Fe Dt - diag(f p''/p), with Fe the prior mass at the cell
///              edges and Dt the lower-bidiagonal difference D extended by a
///              closing row, so the weight is pinned to zero outside the grid.
///              Positive semidefinite up to the p'' term.
///   Paper:     -(F D D + (F D D)' + D' F D). Indefinite for every grid; kept
///              for comparison, factorisation fails with NotPositiveDefinite.
enum class PhiForm { Symmetric, Paper };

std::string_view to_string(PhiForm p);
PhiForm phi_form_from_string(std::string_view s);

struct GridOperators {
  Grid grid;
  Vector f;    // delta * prior density
  Vector z;    // J_DP at grid points
  Matrix D;    // L x L, 1/delta diagonal, -1/delta subdiagonal
  Matrix phi;  // symmetric

  std::size_t size() const { return grid.size(); }
  Matrix F() const { return f.asDiagonal(); }
  Matrix Z() const { return z.asDiagonal(); }
  /// ZF + Phi, symmetrised.
  Matrix system() const;
};

GridOperators build_operators(const ScalarModel& m, const Grid& g, PhiForm form = PhiForm::Symmetric,
                              const DiffSpec& d = {});

/// Q(w) = w' A w / (f' w)^2, the reciprocal of the bound attained by w.
double quadratic_form(const GridOperators& ops, const Vector& w);

Vector optimal_weight(const GridOperators& ops);

struct WbcrbOpt {
  double bound = 0.0;
  Vector weight;
  /// 1' Z^-1 f, the large-sample limit of the bound.
  double asymptotic = 0.0;
};

WbcrbOpt wbcrb_opt(const GridOperators& ops);
WbcrbOpt wbcrb_opt(const ScalarModel& m, double delta, PhiForm form = PhiForm::Symmetric);

/// Smallest eigenvalue of (I + Psi)^-1 - (I - Psi).
double lemma1_check(const Matrix& psi);

}  // namespace bayes_bounds

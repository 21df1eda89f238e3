#pragma once

// Shared numerical kernels: composite quadrature (1-D and tensor product),
// central finite differences, dense symmetric linear algebra.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bayes_bounds/error.hpp"

namespace bayes_bounds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class QuadratureScheme { CompositeSimpson, GaussLegendrePanels };

std::string_view to_string(QuadratureScheme s);
QuadratureScheme quadrature_scheme_from_string(std::string_view s);

struct QuadratureSpec {
  QuadratureScheme scheme = QuadratureScheme::GaussLegendrePanels;
  int panels = 400;
  int nodes_per_panel = 5;  // Gauss-Legendre only
  double clip = 1e-6;       // fraction of the width removed at each end
  // Geometric panel grading toward both ends of the clipped interval: the
  // outermost uniform panel is split into `grading_levels` panels whose widths
  // shrink by `grading_ratio`. Resolves integrable endpoint singularities.
  // Graded panels use at least 8 Gauss-Legendre nodes.
  int grading_levels = 0;
  double grading_ratio = 0.5;

  void validate() const;
  /// Same rule with twice the panels and twice the grading depth.
  QuadratureSpec refined() const;
};

enum class DiffOrder { First, Second };

struct DiffSpec {
  double h = 1e-5;
  bool relative = true;  // effective step max(h, h*|theta|)
  DiffOrder order = DiffOrder::First;

  double step_at(double theta) const { return relative ? std::max(h, h * std::abs(theta)) : h; }
};

/// Nodes and weights of a composite rule on an interval.
/// Contribution of the piece [edge, edge +- d0] next to a graded end, from a
/// power law C d^alpha fitted through the integrand at distances d0 and d0*ratio.
struct EndTail {
  bool active = false;
  double d0 = 0.0;
  double ratio = 5.0;
  double x_near = 0.0;
  double x_far = 0.0;
};

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  EndTail lo_tail;
  EndTail hi_tail;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  auto integrate(F&& f) const;
};

/// Gauss-Legendre nodes/weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// Composite rule over the clipped interval. `breaks` are interior points at
/// which the integrand is not smooth; every piece between breaks receives the
/// full panel count, and grading is applied at the two outer ends only.
Rule1D make_rule(double lo, double hi, const QuadratureSpec& spec,
                 std::span<const double> breaks = {});

/// Clipped interval [lo + clip*W, hi - clip*W].
std::pair<double, double> clipped(double lo, double hi, double clip);

double integrate_1d(const std::function<double(double)>& f, double lo, double hi,
                    const QuadratureSpec& spec);

/// Tensor-product quadrature on a box; dimension at most 3.
struct TensorRule {
  std::vector<Rule1D> axes;

  std::size_t dim() const { return axes.size(); }

  /// Calls f(point) for every tensor node; `point` is reused between calls.
  template <class F>
  auto integrate(F&& f) const;

 private:
  template <class F, class Value>
  void add_tails(F& f, Value& acc) const;
};

TensorRule make_tensor_rule(const Vector& lo, const Vector& hi, std::span<const QuadratureSpec> specs,
                            std::span<const std::vector<double>> breaks = {});

double integrate_box(const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi,
                     const QuadratureSpec& spec);
double integrate_box(const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi,
                     std::span<const QuadratureSpec> specs);

/// Central difference of the order requested in `spec`.
double diff_1d(const std::function<double(double)>& f, double theta, const DiffSpec& spec);

/// Step for a stencil reaching theta +- 2h that must stay inside (lo, hi).
double stencil_step(double theta, double lo, double hi, const DiffSpec& spec);

/// Solves A x = b for symmetric positive-definite A by Cholesky factorisation.
Vector solve_spd(const Matrix& A, const Vector& b);

double min_eig_sym(const Matrix& A);

/// Max-abs asymmetry of A relative to max(1, max|A_ij|).
double relative_asymmetry(const Matrix& A);

// ---------------------------------------------------------------------------

namespace detail {

inline bool all_finite(double v) { return std::isfinite(v); }

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

[[noreturn]] void throw_non_finite(double at);
[[noreturn]] void throw_non_finite(const Vector& at);

double power_tail(double near, double far, double d0, double ratio);

template <class Derived>
auto power_tail(const Eigen::MatrixBase<Derived>& near, const Eigen::MatrixBase<Derived>& far, double d0,
                double ratio) {
  typename Derived::PlainObject out(near.rows(), near.cols());
  for (Eigen::Index j = 0; j < near.cols(); ++j)
    for (Eigen::Index i = 0; i < near.rows(); ++i) out(i, j) = power_tail(near(i, j), far(i, j), d0, ratio);
  return out;
}

}  // namespace detail

template <class F>
auto Rule1D::integrate(F&& f) const {
  using Value = std::decay_t<decltype(f(0.0))>;
  Value acc = f(nodes.front()) * weights.front();
  if (!detail::all_finite(acc)) detail::throw_non_finite(nodes.front());
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    Value v = f(nodes[i]);
    if (!detail::all_finite(v)) detail::throw_non_finite(nodes[i]);
    acc += v * weights[i];
  }
  for (const EndTail* t : {&lo_tail, &hi_tail}) {
    if (!t->active) continue;
    Value near = f(t->x_near);
    Value far = f(t->x_far);
    if (!detail::all_finite(near)) detail::throw_non_finite(t->x_near);
    if (!detail::all_finite(far)) detail::throw_non_finite(t->x_far);
    acc += detail::power_tail(near, far, t->d0, t->ratio);
  }
  return acc;
}

template <class F>
auto TensorRule::integrate(F&& f) const {
  const std::size_t m = axes.size();
  Vector point(static_cast<Eigen::Index>(m));
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t k = 0; k < m; ++k) point[static_cast<Eigen::Index>(k)] = axes[k].nodes[0];

  using Value = std::decay_t<decltype(f(point))>;
  bool first = true;
  Value acc{};
  while (true) {
    double w = 1.0;
    for (std::size_t k = 0; k < m; ++k) w *= axes[k].weights[idx[k]];
    Value v = f(point);
    if (!detail::all_finite(v)) detail::throw_non_finite(point);
    if (first) {
      acc = v * w;
      first = false;
    } else {
      acc += v * w;
    }
    // odometer increment, last axis fastest
    std::size_t k = m;
    while (k > 0) {
      --k;
      if (++idx[k] < axes[k].size()) {
        point[static_cast<Eigen::Index>(k)] = axes[k].nodes[idx[k]];
        break;
      }
      idx[k] = 0;
      point[static_cast<Eigen::Index>(k)] = axes[k].nodes[0];
      if (k == 0) {
        add_tails(f, acc);
        return acc;
      }
    }
  }
}

template <class F, class Value>
void TensorRule::add_tails(F& f, Value& acc) const {
  // One axis at a time in its tail, the others on their regular nodes.
  const std::size_t m = axes.size();
  for (std::size_t k = 0; k < m; ++k) {
    for (const EndTail* t : {&axes[k].lo_tail, &axes[k].hi_tail}) {
      if (!t->active) continue;
      Vector near(static_cast<Eigen::Index>(m)), far(static_cast<Eigen::Index>(m));
      std::vector<std::size_t> idx(m, 0);
      while (true) {
        double w = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
          const auto e = static_cast<Eigen::Index>(j);
          if (j == k) {
            near[e] = t->x_near;
            far[e] = t->x_far;
          } else {
            near[e] = far[e] = axes[j].nodes[idx[j]];
            w *= axes[j].weights[idx[j]];
          }
        }
        Value vn = f(near);
        if (!detail::all_finite(vn)) detail::throw_non_finite(near);
        Value vf = f(far);
        if (!detail::all_finite(vf)) detail::throw_non_finite(far);
        acc += detail::power_tail(vn, vf, t->d0, t->ratio) * w;
        std::size_t j = m;
        bool done = true;
        while (j > 0) {
          --j;
          if (j == k) continue;
          if (++idx[j] < axes[j].size()) {
            done = false;
            break;
          }
          idx[j] = 0;
        }
        if (done) break;
      }
    }
  }
}

}  // namespace bayes_bounds

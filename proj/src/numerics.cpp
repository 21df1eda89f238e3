#include "bayes_bounds/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace bayes_bounds {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::NonPositiveInformation: return "NonPositiveInformation";
    case ErrorKind::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorKind::DerivativeMismatch: return "DerivativeMismatch";
    case ErrorKind::RhoDegenerate: return "RhoDegenerate";
    case ErrorKind::SpacingTooCoarse: return "SpacingTooCoarse";
    case ErrorKind::DegenerateObjective: return "DegenerateObjective";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

std::string_view to_string(QuadratureScheme s) {
  return s == QuadratureScheme::CompositeSimpson ? "composite-simpson" : "gauss-legendre-panels";
}

QuadratureScheme quadrature_scheme_from_string(std::string_view s) {
  if (s == "composite-simpson" || s == "simpson") return QuadratureScheme::CompositeSimpson;
  if (s == "gauss-legendre-panels" || s == "gl") return QuadratureScheme::GaussLegendrePanels;
  throw Error(ErrorKind::InvalidConfig, "unknown quadrature scheme '" + std::string(s) + "'");
}

void QuadratureSpec::validate() const {
  if (panels < 8) throw Error(ErrorKind::InvalidConfig, "quadrature panels must be >= 8");
  if (!(clip >= 0.0 && clip < 0.5)) throw Error(ErrorKind::InvalidConfig, "quadrature clip must be in [0, 0.5)");
  if (nodes_per_panel < 1 || nodes_per_panel > 64)
    throw Error(ErrorKind::InvalidConfig, "nodes_per_panel must be in [1, 64]");
  if (grading_levels < 0) throw Error(ErrorKind::InvalidConfig, "grading_levels must be >= 0");
  if (!(grading_ratio > 0.0 && grading_ratio < 1.0))
    throw Error(ErrorKind::InvalidConfig, "grading_ratio must be in (0, 1)");
}

QuadratureSpec QuadratureSpec::refined() const {
  QuadratureSpec r = *this;
  r.panels *= 2;
  r.grading_levels *= 2;
  return r;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(n - 1 - i);
    x[a] = -z;
    x[b] = z;
    w[a] = w[b] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return {x, w};
}

std::pair<double, double> clipped(double lo, double hi, double clip) {
  const double w = hi - lo;
  return {lo + clip * w, hi - clip * w};
}

namespace {

void append_panel(Rule1D& rule, double a, double b, const QuadratureSpec& spec,
                  const std::pair<std::vector<double>, std::vector<double>>& gl) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  if (spec.scheme == QuadratureScheme::GaussLegendrePanels) {
    for (std::size_t k = 0; k < gl.first.size(); ++k) {
      rule.nodes.push_back(mid + half * gl.first[k]);
      rule.weights.push_back(half * gl.second[k]);
    }
  } else {
    // Simpson on the panel; shared endpoints are merged by the caller.
    const double h6 = (b - a) / 6.0;
    if (!rule.nodes.empty() && rule.nodes.back() == a) {
      rule.weights.back() += h6;
    } else {
      rule.nodes.push_back(a);
      rule.weights.push_back(h6);
    }
    rule.nodes.push_back(mid);
    rule.weights.push_back(4.0 * h6);
    rule.nodes.push_back(b);
    rule.weights.push_back(h6);
  }
}

constexpr int kGradedNodes = 8;

// Closest approach of graded panels to an end. Nodes nearer a nonzero end
// carry a large relative rounding error in their distance to it.
double resolvable(double edge) { return 0x1p24 * std::numeric_limits<double>::epsilon() * std::abs(edge); }

EndTail make_tail(double edge, double d, double ratio, int side) {
  EndTail t;
  t.active = true;
  t.ratio = 1.0 / ratio;
  t.x_near = edge + side * d;
  t.d0 = std::abs(t.x_near - edge);
  t.x_far = edge + side * t.d0 * t.ratio;
  return t;
}

// Panel edges for [a, b] with `panels` uniform panels, optionally graded
// geometrically toward a (grade_lo) and/or b (grade_hi).
std::vector<double> panel_edges(double a, double b, int panels, bool grade_lo, bool grade_hi,
                                const QuadratureSpec& spec, Rule1D& rule) {
  const double h = (b - a) / panels;
  const int levels = spec.grading_levels;
  std::vector<double> edges;
  if (grade_lo && levels > 0) {
    const double d = std::max(h * std::pow(spec.grading_ratio, levels), resolvable(a));
    rule.lo_tail = make_tail(a, d, spec.grading_ratio, +1);
    edges.push_back(rule.lo_tail.x_near);
    for (int k = levels; k >= 1; --k) {
      const double x = a + h * std::pow(spec.grading_ratio, k);
      if (x > edges.back()) edges.push_back(x);
    }
  } else {
    edges.push_back(a);
  }
  for (int i = 1; i < panels; ++i) edges.push_back(a + h * i);
  if (grade_hi && levels > 0) {
    const double d = std::max(h * std::pow(spec.grading_ratio, levels), resolvable(b));
    rule.hi_tail = make_tail(b, d, spec.grading_ratio, -1);
    for (int k = 1; k <= levels; ++k) {
      const double x = b - h * std::pow(spec.grading_ratio, k);
      if (x < rule.hi_tail.x_near) edges.push_back(x);
    }
    edges.push_back(rule.hi_tail.x_near);
  } else {
    edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

Rule1D make_rule(double lo, double hi, const QuadratureSpec& spec, std::span<const double> breaks) {
  spec.validate();
  if (!(lo < hi)) throw Error(ErrorKind::InvalidConfig, "integration interval requires lo < hi");
  const auto [a, b] = clipped(lo, hi, spec.clip);

  std::vector<double> cuts{a};
  for (double br : breaks) {
    if (br > a && br < b) cuts.push_back(br);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);

  const auto gl = gauss_legendre(spec.nodes_per_panel);
  // graded panels see a singular integrand at a fixed relative scale
  const auto gl_graded = gauss_legendre(std::max(spec.nodes_per_panel, kGradedNodes));
  Rule1D rule;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double h = (cuts[p + 1] - cuts[p]) / spec.panels;
    const auto edges = panel_edges(cuts[p], cuts[p + 1], spec.panels, p == 0, p + 2 == cuts.size(), spec, rule);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      if (!(edges[e + 1] > edges[e])) continue;
      const bool graded = spec.grading_levels > 0 && edges[e + 1] - edges[e] < 0.75 * h;
      append_panel(rule, edges[e], edges[e + 1], spec, graded ? gl_graded : gl);
    }
  }
  return rule;
}

double integrate_1d(const std::function<double(double)>& f, double lo, double hi, const QuadratureSpec& spec) {
  return make_rule(lo, hi, spec).integrate(f);
}

TensorRule make_tensor_rule(const Vector& lo, const Vector& hi, std::span<const QuadratureSpec> specs,
                            std::span<const std::vector<double>> breaks) {
  const auto m = static_cast<std::size_t>(lo.size());
  if (m > 3) throw Error(ErrorKind::DimensionTooLarge, "tensor quadrature supports at most 3 dimensions");
  if (m == 0 || hi.size() != lo.size())
    throw Error(ErrorKind::InvalidConfig, "box bounds must be non-empty and of equal dimension");
  if (specs.size() != 1 && specs.size() != m)
    throw Error(ErrorKind::InvalidConfig, "need one quadrature spec or one per axis");
  TensorRule rule;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& s = specs.size() == 1 ? specs[0] : specs[k];
    const auto i = static_cast<Eigen::Index>(k);
    std::span<const double> br;
    if (k < breaks.size()) br = breaks[k];
    rule.axes.push_back(make_rule(lo[i], hi[i], s, br));
  }
  return rule;
}

double integrate_box(const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi,
                     std::span<const QuadratureSpec> specs) {
  return make_tensor_rule(lo, hi, specs).integrate(f);
}

double integrate_box(const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi,
                     const QuadratureSpec& spec) {
  return integrate_box(f, lo, hi, std::span<const QuadratureSpec>(&spec, 1));
}

double diff_1d(const std::function<double(double)>& f, double theta, const DiffSpec& spec) {
  const double h = spec.step_at(theta);
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidConfig, "finite-difference step must be positive");
  const double fp = f(theta + h), fm = f(theta - h);
  double out;
  if (spec.order == DiffOrder::First) {
    out = (fp - fm) / (2.0 * h);
  } else {
    const double f0 = f(theta);
    out = (fp - 2.0 * f0 + fm) / (h * h);
  }
  if (!std::isfinite(out)) detail::throw_non_finite(theta);
  return out;
}

double detail::power_tail(double near, double far, double d0, double ratio) {
  if (near == 0.0) return 0.0;
  if (near * far > 0.0) {
    const double alpha = std::log(far / near) / std::log(ratio);
    if (alpha > -1.0) return near * d0 / (alpha + 1.0);
  }
  return near * d0;
}

double stencil_step(double theta, double lo, double hi, const DiffSpec& spec) {
  const double dist = std::min(theta - lo, hi - theta);
  if (!(dist > 0.0)) {
    std::ostringstream os;
    os << "theta=" << theta << " outside (" << lo << ", " << hi << ")";
    throw Error(ErrorKind::OutOfSupport, os.str());
  }
  const double h = std::min(spec.step_at(theta), 0.25 * dist);
  // Exactly representable offset from theta.
  volatile double up = theta + h;
  return up - theta;
}

double relative_asymmetry(const Matrix& A) {
  if (A.rows() != A.cols()) return std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
}

Vector solve_spd(const Matrix& A, const Vector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw Error(ErrorKind::InvalidConfig, "solve_spd: dimension mismatch");
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Matrix> ldlt(A);
    std::ostringstream os;
    os << "Cholesky failed on " << A.rows() << "x" << A.cols() << " matrix; smallest LDLT pivot "
       << ldlt.vectorD().minCoeff();
    throw Error(ErrorKind::NotPositiveDefinite, os.str());
  }
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw Error(ErrorKind::NotPositiveDefinite, "solve_spd produced non-finite solution");
  return x;
}

double min_eig_sym(const Matrix& A) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::NotSymmetric, "matrix is not square");
  if (relative_asymmetry(A) > 1e-12) throw Error(ErrorKind::NotSymmetric, "matrix asymmetric beyond 1e-12");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace detail {

void throw_non_finite(double at) {
  std::ostringstream os;
  os << "integrand not finite at " << at;
  throw Error(ErrorKind::NonFiniteIntegrand, os.str());
}

void throw_non_finite(const Vector& at) {
  std::ostringstream os;
  os << "integrand not finite at (" << at.transpose() << ")";
  throw Error(ErrorKind::NonFiniteIntegrand, os.str());
}

}  // namespace detail

}  // namespace bayes_bounds

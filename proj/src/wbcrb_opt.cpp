#include "bayes_bounds/wbcrb_opt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bayes_bounds {

std::string_view to_string(PhiForm p) { return p == PhiForm::Symmetric ? "symmetric" : "paper"; }

PhiForm phi_form_from_string(std::string_view s) {
  if (s == "symmetric") return PhiForm::Symmetric;
  if (s == "paper") return PhiForm::Paper;
  throw Error(ErrorKind::InvalidConfig, "unknown phi form '" + std::string(s) + "'");
}

Grid build_grid(const ScalarModel& m, double delta) {
  const auto [a, b] = clipped(m.lo(), m.hi(), m.quadrature().clip);
  const double width = b - a;
  if (!(delta > 0.0) || !(delta < width / 3.0)) {
    std::ostringstream os;
    os << "grid spacing " << delta << " must be in (0, " << width / 3.0 << ")";
    throw Error(ErrorKind::SpacingTooCoarse, os.str());
  }
  const auto cells = static_cast<std::size_t>(std::floor(width / delta + 1e-9));
  Grid g;
  g.delta = delta;
  const double start = a + 0.5 * (width - static_cast<double>(cells) * delta) + 0.5 * delta;
  g.points.reserve(cells);
  for (std::size_t i = 0; i < cells; ++i) g.points.push_back(start + static_cast<double>(i) * delta);
  return g;
}

Matrix GridOperators::system() const {
  Matrix a = phi;
  a.diagonal() += z.cwiseProduct(f);
  return 0.5 * (a + a.transpose());
}

GridOperators build_operators(const ScalarModel& m, const Grid& g, PhiForm form, const DiffSpec& d) {
  const auto L = static_cast<Eigen::Index>(g.size());
  const double delta = g.delta;
  GridOperators ops;
  ops.grid = g;
  ops.f.resize(L);
  ops.z.resize(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    const double t = g.points[static_cast<std::size_t>(i)];
    ops.f[i] = delta * m.prior_pdf(t);
    ops.z[i] = j_dp_scalar(m, t);
  }
  ops.D = Matrix::Zero(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    ops.D(i, i) = 1.0 / delta;
    if (i > 0) ops.D(i, i - 1) = -1.0 / delta;
  }

  if (form == PhiForm::Paper) {
    const Matrix fdd = ops.f.asDiagonal() * ops.D * ops.D;
    ops.phi = -(fdd + fdd.transpose() + ops.D.transpose() * ops.f.asDiagonal() * ops.D);
    return ops;
  }

  // Prior mass at the L+1 cell edges, evaluated just inside the support.
  const double width = m.hi() - m.lo();
  const double inset = 1e-12 * width;
  Vector fe(L + 1);
  for (Eigen::Index i = 0; i <= L; ++i) {
    const double e = g.points.front() - 0.5 * delta + static_cast<double>(i) * delta;
    fe[i] = delta * m.prior_pdf(std::clamp(e, m.lo() + inset, m.hi() - inset));
  }
  Matrix dt = Matrix::Zero(L + 1, L);
  dt.topRows(L) = ops.D;
  dt(L, L - 1) = -1.0 / delta;
  ops.phi = dt.transpose() * fe.asDiagonal() * dt;
  for (Eigen::Index i = 0; i < L; ++i) {
    // p''/p = (log p)'' + ((log p)')^2
    const double t = g.points[static_cast<std::size_t>(i)];
    const double h = stencil_step(t, m.lo(), m.hi(), d);
    const double l1 = m.prior_logpdf_deriv(t);
    const double l2 = (m.prior_logpdf_deriv(t + h) - m.prior_logpdf_deriv(t - h)) / (2.0 * h);
    ops.phi(i, i) -= ops.f[i] * (l2 + l1 * l1);
  }
  ops.phi = 0.5 * (ops.phi + ops.phi.transpose());
  return ops;
}

double quadratic_form(const GridOperators& ops, const Vector& w) {
  const double fw = ops.f.dot(w);
  return w.dot(ops.system() * w) / (fw * fw);
}

namespace {

Vector solve_system(const GridOperators& ops) {
  try {
    return solve_spd(ops.system(), ops.f);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    std::ostringstream os;
    os << "ZF + Phi is not positive definite (L=" << ops.size() << ", delta=" << ops.grid.delta
       << "); try a finer grid or a larger clip. " << std::string(e.what()).substr(to_string(e.kind()).size() + 2);
    throw Error(ErrorKind::NotPositiveDefinite, os.str());
  }
}

}  // namespace

Vector optimal_weight(const GridOperators& ops) {
  const Vector y = solve_system(ops);
  return y / ops.f.dot(y);
}

WbcrbOpt wbcrb_opt(const GridOperators& ops) {
  const Vector y = solve_system(ops);
  WbcrbOpt r;
  r.bound = ops.f.dot(y);
  r.weight = y / r.bound;
  r.asymptotic = ops.f.cwiseQuotient(ops.z).sum();
  return r;
}

WbcrbOpt wbcrb_opt(const ScalarModel& m, double delta, PhiForm form) {
  return wbcrb_opt(build_operators(m, build_grid(m, delta), form));
}

double lemma1_check(const Matrix& psi) {
  if (psi.rows() != psi.cols()) throw Error(ErrorKind::NotSymmetric, "Psi must be square");
  if (relative_asymmetry(psi) > 1e-12) throw Error(ErrorKind::NotSymmetric, "Psi must be symmetric");
  const Matrix id = Matrix::Identity(psi.rows(), psi.cols());
  const Matrix ip = id + psi;
  Eigen::LLT<Matrix> llt(ip);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "I + Psi is not positive definite");
  Matrix diff = llt.solve(id) - (id - psi);
  diff = 0.5 * (diff + diff.transpose());
  return min_eig_sym(diff);
}

}  // namespace bayes_bounds

#include "bayes_bounds/bounds_vector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bayes_bounds {

namespace {

double axis_step(const VectorModel& m, const Vector& theta, Eigen::Index k, const DiffSpec& d, double scale) {
  const double width = m.hi()[k] - m.lo()[k];
  DiffSpec s{scale * d.h * width, false, d.order};
  const double h = stencil_step(theta[k], m.lo()[k], m.hi()[k], s);
  return h;
}

Vector divergence(const MatrixField& w, const Vector& theta, const VectorModel& m, const DiffSpec& d,
                  double scale) {
  const Eigen::Index n = theta.size();
  Vector div = Vector::Zero(n);
  Vector p = theta;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = axis_step(m, theta, k, d, scale);
    p[k] = theta[k] + h;
    const Matrix up = w(p);
    p[k] = theta[k] - h;
    const Matrix dn = w(p);
    p[k] = theta[k];
    div += (up.col(k) - dn.col(k)) / (2.0 * h);
  }
  return div;
}

// Jacobian of the divergence, outer differences 10x wider than the inner ones.
Matrix divergence_jacobian(const MatrixField& w, const Vector& theta, const VectorModel& m, const DiffSpec& d) {
  const Eigen::Index n = theta.size();
  Matrix g(n, n);
  Vector p = theta;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = axis_step(m, theta, k, d, 10.0);
    p[k] = theta[k] + h;
    const Vector up = divergence(w, p, m, d, 1.0);
    p[k] = theta[k] - h;
    const Vector dn = divergence(w, p, m, d, 1.0);
    p[k] = theta[k];
    g.col(k) = (up - dn) / (2.0 * h);
  }
  return g;
}

Matrix symmetrised(const Matrix& a) { return 0.5 * (a + a.transpose()); }

Matrix inverse_spd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << what << " is not positive definite; smallest eigenvalue "
       << Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    throw Error(ErrorKind::NotPositiveDefinite, os.str());
  }
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

}  // namespace

Vector divergence_w(const MatrixField& w, const Vector& theta, const VectorModel& m, const DiffSpec& d) {
  return divergence(w, theta, m, d, 1.0);
}

Matrix bcrb_matrix(const VectorModel& m, const QuadratureSpec* q) {
  const Matrix ej = m.rule(q).integrate([&](const Vector& t) -> Matrix { return j_dp_matrix(m, t) * m.prior_pdf(t); });
  return symmetrised(inverse_spd(symmetrised(ej), "E[J_DP]"));
}

Matrix ecrb_matrix(const VectorModel& m, const QuadratureSpec* q) {
  const Matrix e = m.rule(q).integrate([&](const Vector& t) -> Matrix {
    return inverse_spd(m.cond_fim(t), "J_D") * m.prior_pdf(t);
  });
  return symmetrised(e);
}

Matrix wbcrb_matrix(const VectorModel& m, const MatrixField& w, const QuadratureSpec* q, const DiffSpec& d,
                    MatrixBoundReport* details) {
  const Eigen::Index n = m.dim();
  // Column blocks: E[W] | E[W J W] | E[d d'] | E[W G' + G W]
  const Matrix acc = m.rule(q).integrate([&](const Vector& t) -> Matrix {
    const Matrix wt = w(t);
    const Vector dv = divergence(w, t, m, d, 1.0);
    const Matrix g = divergence_jacobian(w, t, m, d);
    Matrix out(n, 4 * n);
    out.block(0, 0, n, n) = wt;
    out.block(0, n, n, n) = wt * j_dp_matrix(m, t) * wt;
    out.block(0, 2 * n, n, n) = dv * dv.transpose();
    out.block(0, 3 * n, n, n) = wt * g.transpose() + g * wt;
    return out * m.prior_pdf(t);
  });
  const Matrix ew = symmetrised(acc.block(0, 0, n, n));
  const Matrix f_raw = acc.block(0, n, n, n) - acc.block(0, 2 * n, n, n) - acc.block(0, 3 * n, n, n);
  const double asym = relative_asymmetry(f_raw);
  const Matrix f = symmetrised(f_raw);
  const Matrix bound = symmetrised(ew * inverse_spd(f, "F") * ew);
  if (details) {
    details->f_inner = f;
    details->e_weight = ew;
    details->f_asymmetry = asym;
    if (asym > 1e-8) {
      std::ostringstream os;
      os << "F asymmetric by " << asym << " before symmetrisation";
      details->warnings.push_back(os.str());
    }
  }
  return bound;
}

MatrixBoundReport at_bcrb_matrix(const VectorModel& m, const QuadratureSpec* q, const DiffSpec& d) {
  MatrixBoundReport r;
  const MatrixField w = [&m](const Vector& t) -> Matrix { return inverse_spd(j_dp_matrix(m, t), "J_DP"); };
  r.at_bcrb = wbcrb_matrix(m, w, q, d, &r);
  r.bcrb = bcrb_matrix(m, q);
  r.ecrb = ecrb_matrix(m, q);
  r.c8 = c8_diagnostic(m, w, d);
  if (r.c8 > 1e-6) {
    std::ostringstream os;
    os << "boundary product of the mixed regularity condition is " << r.c8;
    r.warnings.push_back(os.str());
  }
  return r;
}

double c8_diagnostic(const VectorModel& m, const MatrixField& w, const DiffSpec& d, double offset) {
  const Eigen::Index n = m.dim();
  const Vector width = m.hi() - m.lo();
  constexpr int kProbes = 5;
  double worst = 0.0;
  // Free axes take interior probe positions; the fixed axis sits on a face.
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (Eigen::Index face = 0; face < n; ++face) {
    for (int side = 0; side < 2; ++side) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        Vector t(n);
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == face) {
            t[k] = side == 0 ? m.lo()[k] + offset * width[k] : m.hi()[k] - offset * width[k];
          } else {
            const double frac = (idx[static_cast<std::size_t>(k)] + 0.5) / kProbes;
            t[k] = m.lo()[k] + frac * width[k];
          }
        }
        const Matrix wt = w(t);
        const Vector dv = divergence(w, t, m, d, 1.0);
        const double v = wt.cwiseAbs().maxCoeff() * dv.cwiseAbs().maxCoeff() * m.prior_pdf(t);
        if (std::isfinite(v)) worst = std::max(worst, v);
        Eigen::Index k = n;
        bool done = true;
        while (k > 0) {
          --k;
          if (k == face) continue;
          if (++idx[static_cast<std::size_t>(k)] < kProbes) {
            done = false;
            break;
          }
          idx[static_cast<std::size_t>(k)] = 0;
        }
        if (done) break;
      }
    }
  }
  return worst;
}

VectorModel as_vector_model(const ScalarModel& m) {
  VectorModelParts p;
  p.name = m.name();
  p.param_names = {"theta"};
  p.lo = Vector::Constant(1, m.lo());
  p.hi = Vector::Constant(1, m.hi());
  p.prior_logpdf = [m](const Vector& t) { return m.prior_logpdf(t[0]); };
  p.prior_grad = [m](const Vector& t) { return Vector::Constant(1, m.prior_logpdf_deriv(t[0])); };
  p.cond_fim = [m](const Vector& t) { return Matrix::Constant(1, 1, m.cond_fim(t[0])); };
  p.sample_prior = [m](Rng& rng) { return Vector::Constant(1, m.sample_prior(rng)); };
  p.sample_cond = [m](Rng& rng, const Vector& t) { return m.sample_cond(rng, t[0]); };
  p.cond_loglik = [m](const Observation& x, const Vector& t) { return m.cond_loglik(x, t[0]); };
  p.n_obs = m.n_obs();
  p.quadrature = {m.quadrature()};
  p.breaks = {m.breaks()};
  return VectorModel(std::move(p));
}

}  // namespace bayes_bounds

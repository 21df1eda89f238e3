#include <doctest.h>

#include <cmath>

#include "bayes_bounds/bounds_scalar.hpp"
#include "bayes_bounds/bounds_vector.hpp"
#include "bayes_bounds/models.hpp"

using namespace bayes_bounds;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Uniform prior on [0, 3]^2, unit-variance Gaussian observation of theta.
VectorModel flat_box(double info) {
  VectorModelParts p;
  p.name = "flat-box";
  p.lo = Vector::Zero(2);
  p.hi = Vector::Constant(2, 3.0);
  p.prior_logpdf = [](const Vector&) { return -std::log(9.0); };
  p.prior_grad = [](const Vector&) { return Vector::Zero(2).eval(); };
  p.cond_fim = [info](const Vector&) { return (info * Matrix::Identity(2, 2)).eval(); };
  p.sample_prior = [](Rng& r) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Vector t(2);
    t[0] = u(r);
    t[1] = u(r);
    return t;
  };
  p.sample_cond = [info](Rng& r, const Vector& t) {
    std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(info));
    return Observation{t[0] + n(r), t[1] + n(r)};
  };
  p.cond_loglik = [info](const Observation& x, const Vector& t) {
    return -0.5 * info * ((x[0] - t[0]) * (x[0] - t[0]) + (x[1] - t[1]) * (x[1] - t[1]));
  };
  QuadratureSpec q;
  q.panels = 20;
  q.clip = 0.0;
  p.quadrature = {q, q};
  return VectorModel(p);
}

bool symmetric(const Matrix& a) { return (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("divergence of a matrix field") {
  const VectorModel box = flat_box(1.0);
  const Vector t = (Vector(2) << 1.0, 2.0).finished();
  const Vector zero = divergence_w([](const Vector&) { return Matrix::Constant(2, 2, 3.0); }, t, box, {});
  CHECK(zero.norm() == 0.0);
  const Vector d = divergence_w(
      [](const Vector& x) {
        Matrix w = Matrix::Zero(2, 2);
        w(0, 0) = x[0] * x[0];
        w(1, 1) = x[1] * x[1];
        return w;
      },
      t, box, {});
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(d[1] == doctest::Approx(4.0).epsilon(1e-8));

  const VectorModel mv = make_mean_var({2.1, 100, 0.1});
  const Vector s = (Vector(2) << 0.0, 0.5).finished();
  const Vector dj = divergence_w([&](const Vector& x) { return j_dp_matrix(mv, x).inverse().eval(); }, s, mv, {});
  CHECK(std::abs(dj[0]) < 1e-10);
  CHECK(dj[1] == doctest::Approx(2.0 / 100.0).epsilon(1e-6));
}

TEST_CASE("W = I gives the matrix BCRB") {
  const VectorModel mv = make_mean_var({2.1, 100, 0.1});
  const Matrix b = bcrb_matrix(mv);
  const Matrix w = wbcrb_matrix(mv, [](const Vector&) { return Matrix::Identity(2, 2).eval(); }, nullptr, {});
  CHECK((w - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("one-dimensional box matches the scalar code") {
  const ScalarModel s = make_variance_beta({2.1, 128});
  const VectorModel v = as_vector_model(s);
  const double scalar = wbcrb_given_weight(
      s, [](double t) { return t * t; }, [](double t) { return 2.0 * t; }, [](double) { return 2.0; },
      s.quadrature());
  const Matrix vec = wbcrb_matrix(v, [](const Vector& t) { return Matrix::Constant(1, 1, t[0] * t[0]); }, nullptr, {});
  CHECK(rel(vec(0, 0), scalar) < 1e-8);
  CHECK(rel(bcrb_matrix(v)(0, 0), bcrb(s, s.quadrature())) < 1e-10);
  CHECK(rel(ecrb_matrix(v)(0, 0), ecrb(s, s.quadrature())) < 1e-10);

  const MatrixBoundReport r = at_bcrb_matrix(v, nullptr, {});
  CHECK(rel(r.at_bcrb(0, 0), at_bcrb(s, s.quadrature(), {}).bound) < 1e-6);
}

TEST_CASE("constant information collapses the matrix bounds") {
  const VectorModel box = flat_box(25.0);
  const MatrixBoundReport r = at_bcrb_matrix(box, nullptr, {});
  const Matrix expect = Matrix::Identity(2, 2) / 25.0;
  CHECK((r.bcrb - expect).norm() < 1e-12);
  CHECK((r.ecrb - expect).norm() < 1e-12);
  CHECK((r.at_bcrb - expect).norm() < 1e-12);
}

TEST_CASE("mean-var closed forms and the AT-BCRB") {
  const MeanVarParams p{2.1, 100, 0.1};
  const VectorModel m = make_mean_var(p);
  const MeanVarClosedForm cf = mean_var_closed_form(p);
  const MatrixBoundReport r = at_bcrb_matrix(m, nullptr, {});
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(rel(r.bcrb(i, i), cf.bcrb(i, i)) < 1e-4);
    CHECK(rel(r.ecrb(i, i), cf.ecrb(i, i)) < 1e-4);
  }
  CHECK(std::abs(r.bcrb(0, 1)) < 1e-12);
  CHECK(std::abs(r.ecrb(0, 1)) < 1e-12);
  CHECK(r.bcrb(0, 0) == doctest::Approx(3.323e-3).epsilon(1e-3));
  CHECK(r.ecrb(0, 0) == doctest::Approx(5.0e-3).epsilon(1e-4));
  CHECK(r.ecrb(1, 1) == doctest::Approx(5.962e-3).epsilon(1e-3));

  for (const Matrix* a : {&r.bcrb, &r.ecrb, &r.at_bcrb, &r.f_inner}) CHECK(symmetric(*a));
  CHECK(r.f_asymmetry < 1e-8);
  CHECK(min_eig_sym(r.ecrb - r.bcrb) >= -1e-9);
  CHECK(min_eig_sym(r.at_bcrb - r.bcrb) >= -1e-9);

  auto inv = [&](const Vector& t) { return j_dp_matrix(m, t).llt().solve(Matrix::Identity(2, 2)).eval(); };
  const Matrix w = wbcrb_matrix(m, inv, nullptr, {});
  CHECK((w - r.at_bcrb).norm() <= 1e-12 * r.at_bcrb.norm());

  const double c8 = c8_diagnostic(m, [&](const Vector& t) { return j_dp_matrix(m, t).inverse().eval(); }, {});
  CHECK(std::isfinite(c8));
  CHECK(c8 >= 0.0);
}

TEST_CASE("matrix Jensen ordering across N") {
  for (int n : {20, 50, 100, 200, 500, 1000, 2000}) {
    CAPTURE(n);
    const VectorModel m = make_mean_var({2.1, n, 0.1});
    CHECK(min_eig_sym(ecrb_matrix(m) - bcrb_matrix(m)) >= -1e-9);
  }
}

TEST_CASE("matrix AT-BCRB approaches the ECRB") {
  double prev = 1e300;
  for (int n : {125, 250, 500, 1000, 2000}) {
    CAPTURE(n);
    const MatrixBoundReport r = at_bcrb_matrix(make_mean_var({2.1, n, 0.1}), nullptr, {});
    const double gap = (r.at_bcrb - r.ecrb).norm() / r.ecrb.norm();
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev <= 0.05);
}

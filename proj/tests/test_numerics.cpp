#include <doctest.h>

#include <cmath>
#include <random>

#include "bayes_bounds/numerics.hpp"

using namespace bayes_bounds;

namespace {

double beta_pdf(double a, double t) {
  const double log_b = 2.0 * std::lgamma(a) - std::lgamma(2.0 * a);
  return std::exp((a - 1.0) * (std::log(t) + std::log1p(-t)) - log_b);
}

QuadratureSpec spec(double clip, int panels = 400) {
  QuadratureSpec q;
  q.clip = clip;
  q.panels = panels;
  return q;
}

}  // namespace

TEST_CASE("gauss_legendre nodes integrate polynomials to degree 2n-1") {
  const auto [x, w] = gauss_legendre(5);
  for (int deg = 0; deg <= 9; ++deg) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], deg);
    const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-14));
  }
}

TEST_CASE("integrate_1d examples") {
  CHECK(integrate_1d([](double) { return 1.0; }, 0.0, 1.0, spec(1e-6)) == doctest::Approx(1.0 - 2e-6).epsilon(1e-13));
  CHECK(integrate_1d([](double t) { return t; }, 0.0, 1.0, spec(0.0)) == doctest::Approx(0.5).epsilon(1e-14));
  const double mass = integrate_1d([](double t) { return beta_pdf(2.1, t); }, 0.0, 1.0, spec(1e-6));
  CHECK(std::abs(mass - 1.0) < 1e-6);
}

TEST_CASE("integrate_1d is linear") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const double a = u(rng), b = u(rng), c = u(rng);
    auto f = [&](double t) { return std::sin(c * t); };
    auto g = [&](double t) { return std::exp(-t * t); };
    const double lhs = integrate_1d([&](double t) { return a * f(t) + b * g(t); }, -1.0, 2.0, spec(1e-6));
    const double rhs = a * integrate_1d(f, -1.0, 2.0, spec(1e-6)) + b * integrate_1d(g, -1.0, 2.0, spec(1e-6));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("panel doubling leaves smooth integrals unchanged") {
  auto f = [](double t) { return std::cos(3.0 * t) * std::exp(t); };
  const QuadratureSpec q = spec(0.0, 50);
  const double a = integrate_1d(f, 0.0, 2.0, q), b = integrate_1d(f, 0.0, 2.0, q.refined());
  CHECK(std::abs(a - b) < 1e-13);
}

TEST_CASE("composite Simpson agrees with Gauss-Legendre") {
  QuadratureSpec q = spec(0.0, 400);
  q.scheme = QuadratureScheme::CompositeSimpson;
  CHECK(integrate_1d([](double t) { return std::exp(t); }, 0.0, 1.0, q) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
}

TEST_CASE("graded ends with the power-law tail resolve an endpoint singularity") {
  QuadratureSpec q = spec(0.0, 40);
  q.grading_levels = 40;
  // integral of t^-0.9 over (0, 1) is 10
  CHECK(integrate_1d([](double t) { return std::pow(t, -0.9); }, 0.0, 1.0, q) == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(integrate_1d([](double t) { return std::pow(1.0 - t, -0.9); }, 0.0, 1.0, q) == doctest::Approx(10.0).epsilon(1e-8));
}

TEST_CASE("integrate_1d reports non-finite integrands") {
  try {
    integrate_1d([](double t) { return t > 0.5 ? NAN : 1.0; }, 0.0, 1.0, spec(0.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteIntegrand);
  }
}

TEST_CASE("integrate_box examples") {
  const Vector lo2 = Vector::Zero(2), hi2 = Vector::Ones(2);
  // 360000 summands
  CHECK(integrate_box([](const Vector&) { return 1.0; }, lo2, hi2, spec(0.0, 120)) == doctest::Approx(1.0).epsilon(1e-12));

  auto two_betas = [](const Vector& t) { return beta_pdf(3.0, t[0]) * beta_pdf(4.5, t[1]); };
  CHECK(std::abs(integrate_box(two_betas, lo2, hi2, spec(0.0, 120)) - 1.0) < 1e-6);

  const double s2 = 0.1, r = 4.0 * std::sqrt(s2);
  Vector lo(2), hi(2);
  lo << -r, 0.0;
  hi << r, 1.0;
  auto moment = [&](const Vector& t) {
    const double g = std::exp(-t[0] * t[0] / (2.0 * s2)) / std::sqrt(2.0 * M_PI * s2);
    return t[0] * t[0] * g * beta_pdf(2.1, t[1]);
  };
  CHECK(std::abs(integrate_box(moment, lo, hi, spec(1e-6, 120)) - 0.1) < 1e-3);
}

TEST_CASE("integrate_box rejects dimension above three") {
  const Vector lo = Vector::Zero(4), hi = Vector::Ones(4);
  try {
    integrate_box([](const Vector&) { return 1.0; }, lo, hi, spec(0.0, 4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionTooLarge);
  }
}

TEST_CASE("diff_1d examples") {
  auto sq = [](double t) { return t * t; };
  CHECK(diff_1d(sq, 3.0, {1e-5, true, DiffOrder::First}) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(diff_1d(sq, 1.0, {1e-3, true, DiffOrder::Second}) == doctest::Approx(2.0).epsilon(1e-8));
  const double d = diff_1d([](double t) { return 1.0 / (t * t); }, 0.5, {1e-4, false, DiffOrder::First});
  CHECK(std::abs(d + 16.0) < 16.0 * 1e-4);
}

TEST_CASE("first-order central difference error is O(h^2)") {
  auto f = [](double t) { return std::sin(t); };
  const double exact = std::cos(0.7);
  const double e1 = std::abs(diff_1d(f, 0.7, {1e-2, false, DiffOrder::First}) - exact);
  const double e2 = std::abs(diff_1d(f, 0.7, {5e-3, false, DiffOrder::First}) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("stencil_step keeps the stencil inside the support") {
  const DiffSpec d{1e-3, true, DiffOrder::First};
  for (double t : {1e-9, 1e-4, 0.5, 1.0 - 1e-4, 1.0 - 1e-12}) {
    const double h = stencil_step(t, 0.0, 1.0, d);
    CHECK(h > 0.0);
    CHECK(t - 2.0 * h > 0.0);
    CHECK(t + 2.0 * h < 1.0);
    CHECK((t + h) - t == h);
  }
  CHECK(stencil_step(0.5, 0.0, 1.0, d) == doctest::Approx(1e-3));
}

TEST_CASE("solve_spd examples") {
  const Vector b = (Vector(3) << 1.0, -2.0, 5.0).finished();
  CHECK((solve_spd(Matrix::Identity(3, 3), b) - b).norm() == 0.0);

  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 4.0;
  const Vector x = solve_spd(a, (Vector(2) << 2.0, 8.0).finished());
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m(30, 30);
    Vector r(30);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = n01(rng);
    const Matrix spd = m.transpose() * m + Matrix::Identity(30, 30);
    CHECK((spd * solve_spd(spd, r) - r).norm() <= 1e-10 * r.norm());
  }
}

TEST_CASE("solve_spd rejects indefinite matrices") {
  Matrix a = Matrix::Identity(2, 2);
  a(1, 1) = -1.0;
  try {
    solve_spd(a, Vector::Ones(2));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("min_eig_sym examples") {
  CHECK(min_eig_sym(Matrix::Identity(2, 2)) == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -1.0;
  CHECK(min_eig_sym(d) == doctest::Approx(-1.0));
  const Vector v = (Vector(2) << 1.0, 2.0).finished();
  CHECK(std::abs(min_eig_sym(v * v.transpose())) < 1e-12);

  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-3;
  try {
    min_eig_sym(asym);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSymmetric);
  }
}

TEST_CASE("QuadratureSpec validation") {
  QuadratureSpec q;
  q.panels = 0;
  CHECK_THROWS_AS(q.validate(), Error);
  q = QuadratureSpec{};
  q.clip = 0.6;
  CHECK_THROWS_AS(q.validate(), Error);
  CHECK(quadrature_scheme_from_string(to_string(QuadratureScheme::CompositeSimpson)) == QuadratureScheme::CompositeSimpson);
}

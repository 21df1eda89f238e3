#include "bayes_bounds/bounds_scalar.hpp"

#include <cmath>
#include <sstream>

namespace bayes_bounds {

namespace {

constexpr std::uint64_t kWeightCheckSeed = 0x77e1'9487ULL;

void check_weight_derivatives(const ScalarModel& m, const std::function<double(double)>& w,
                              const std::function<double(double)>& w1, const std::function<double(double)>& w2) {
  Rng rng(kWeightCheckSeed);
  const double width = m.hi() - m.lo();
  std::uniform_real_distribution<double> u(m.lo() + 0.05 * width, m.hi() - 0.05 * width);
  for (int i = 0; i < 8; ++i) {
    const double t = u(rng);
    const double h = stencil_step(t, m.lo(), m.hi(), DiffSpec{1e-4, true, DiffOrder::First});
    const double wp = w(t + h), w0 = w(t), wm = w(t - h);
    const double fd1 = (wp - wm) / (2.0 * h);
    const double fd2 = (wp - 2.0 * w0 + wm) / (h * h);
    const double an1 = w1(t), an2 = w2(t);
    const double scale1 = std::max({std::abs(fd1), std::abs(an1), std::abs(w0) / width});
    const double scale2 = std::max({std::abs(fd2), std::abs(an2), std::abs(w0) / (width * width)});
    if (std::abs(fd1 - an1) > 1e-3 * scale1 || std::abs(fd2 - an2) > 1e-3 * scale2) {
      std::ostringstream os;
      os << "weight derivatives disagree with finite differences at theta=" << t;
      throw Error(ErrorKind::DerivativeMismatch, os.str());
    }
  }
}

}  // namespace

double expect(const ScalarModel& m, const std::function<double(double)>& g, const QuadratureSpec& q) {
  return m.rule(q).integrate([&](double t) { return g(t) * m.prior_pdf(t); });
}

double bcrb(const ScalarModel& m, const QuadratureSpec& q) {
  const double j = expect(m, [&](double t) { return j_dp_scalar(m, t); }, q);
  if (!(j > 0.0)) throw Error(ErrorKind::NonPositiveInformation, "E[J_DP] is not positive");
  return 1.0 / j;
}

double ecrb(const ScalarModel& m, const QuadratureSpec& q) {
  return expect(m, [&](double t) { return 1.0 / m.cond_fim(t); }, q);
}

double wbcrb_given_weight(const ScalarModel& m, const std::function<double(double)>& w,
                          const std::function<double(double)>& w_prime,
                          const std::function<double(double)>& w_second, const QuadratureSpec& q) {
  check_weight_derivatives(m, w, w_prime, w_second);
  // (E[w], E[w^2 J_DP], E[w'^2 + 2 w w''])
  const Eigen::Vector3d acc = m.rule(q).integrate([&](double t) -> Eigen::Vector3d {
    const double wt = w(t);
    if (!(wt > 0.0)) {
      std::ostringstream os;
      os << "weight must be positive, w(" << t << ")=" << wt;
      throw Error(ErrorKind::BadParams, os.str());
    }
    const double w1 = w_prime(t), w2 = w_second(t);
    return Eigen::Vector3d(wt, wt * wt * j_dp_scalar(m, t), w1 * w1 + 2.0 * wt * w2) * m.prior_pdf(t);
  });
  const double ew = acc[0], quad = acc[1], deriv = acc[2];
  const double den = quad - deriv;
  if (!(den > 0.0)) {
    std::ostringstream os;
    os << "E[w^2 J_DP] - E[w'^2 + 2 w w''] = " << den;
    throw Error(ErrorKind::NonPositiveDenominator, os.str());
  }
  return ew * ew / den;
}

double wbcrb_given_weight(const ScalarModel& m, const std::function<double(double)>& w, const QuadratureSpec& q,
                          const DiffSpec& d) {
  auto w1 = [&](double t) {
    const double h = stencil_step(t, m.lo(), m.hi(), d);
    return (w(t + h) - w(t - h)) / (2.0 * h);
  };
  auto w2 = [&](double t) {
    const double h = stencil_step(t, m.lo(), m.hi(), d);
    return (w(t + h) - 2.0 * w(t) + w(t - h)) / (h * h);
  };
  return wbcrb_given_weight(m, w, w1, w2, q);
}

InverseInfoMoments inverse_info_moments(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d) {
  const Eigen::Vector2d acc = m.rule(q).integrate([&](double t) -> Eigen::Vector2d {
    const double h = stencil_step(t, m.lo(), m.hi(), d);
    const double qp = 1.0 / j_dp_scalar(m, t + h);
    const double q0 = 1.0 / j_dp_scalar(m, t);
    const double qm = 1.0 / j_dp_scalar(m, t - h);
    const double first = (qp - qm) / (2.0 * h);
    const double sq_second = (qp * qp - 2.0 * q0 * q0 + qm * qm) / (h * h);
    return Eigen::Vector2d(q0, first * first - sq_second) * m.prior_pdf(t);
  });
  return {acc[0], acc[1]};
}

AtBcrb at_bcrb(const InverseInfoMoments& mom) {
  const double rho = mom.rho();
  if (!(1.0 + rho > 0.0)) {
    std::ostringstream os;
    os << "1 + rho = " << 1.0 + rho;
    throw Error(ErrorKind::RhoDegenerate, os.str());
  }
  return {mom.e_inv / (1.0 + rho), rho, mom.e_inv};
}

AtBcrb at_bcrb(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d) {
  return at_bcrb(inverse_info_moments(m, q, d));
}

double wbcrb_sub(const InverseInfoMoments& mom) {
  // Same validity domain as the AT-BCRB it loosens.
  if (!(1.0 + mom.rho() > 0.0)) {
    std::ostringstream os;
    os << "1 + rho = " << 1.0 + mom.rho();
    throw Error(ErrorKind::RhoDegenerate, os.str());
  }
  return mom.e_inv * (1.0 - mom.rho());
}

double wbcrb_sub(const ScalarModel& m, const QuadratureSpec& q, const DiffSpec& d) {
  return wbcrb_sub(inverse_info_moments(m, q, d));
}

Convergence check_convergence(const std::function<double(const QuadratureSpec&)>& f, const QuadratureSpec& q) {
  Convergence c;
  c.value = f(q);
  c.refined = f(q.refined());
  c.rel_change = std::abs(c.refined - c.value) / std::max(std::abs(c.refined), 1e-300);
  return c;
}

}  // namespace bayes_bounds

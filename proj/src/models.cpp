#include "bayes_bounds/models.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

namespace bayes_bounds {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::BadParams, what);
}

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double sample_symmetric_beta(Rng& rng, double a) {
  std::gamma_distribution<double> g(a, 1.0);
  const double x = g(rng), y = g(rng);
  return x / (x + y);
}

// Beta axis: the prior and E[J_D], E[L_P] integrands behave like powers of the
// distance to 0 and 1, so the axis is integrated without clipping on graded panels.
QuadratureSpec beta_axis_quadrature(int panels) {
  QuadratureSpec q;
  q.panels = panels;
  q.clip = 0.0;
  q.grading_levels = 40;
  q.grading_ratio = 0.5;
  return q;
}

}  // namespace

// ------------------------------------------------------------ variance-beta

BetaVarianceClosedForm beta_variance_closed_form(double a, int n) {
  BetaVarianceClosedForm c{};
  c.prior_mean = 0.5;
  c.prior_var = 1.0 / (4.0 * (2.0 * a + 1.0));
  c.ecrb = (a + 1.0) / (n * (2.0 * a + 1.0));
  c.bcrb = (a - 2.0) / ((2.0 * a - 1.0) * (n + 4.0 * (a - 1.0)));
  return c;
}

ScalarModel make_variance_beta(const VarianceBetaParams& p) {
  require(p.a > 2.0, "variance-beta: shape a must exceed 2");
  require(p.n >= 1, "variance-beta: N must be >= 1");
  const double a = p.a;
  const double n = p.n;
  const double log_b = log_beta_fn(a, a);

  ScalarModelParts m;
  m.name = "variance-beta";
  m.lo = 0.0;
  m.hi = 1.0;
  m.n_obs = p.n;
  m.prior_logpdf = [a, log_b](double t) { return (a - 1.0) * (std::log(t) + std::log1p(-t)) - log_b; };
  m.prior_logpdf_deriv = [a](double t) { return (a - 1.0) * (1.0 / t - 1.0 / (1.0 - t)); };
  m.cond_fim = [n](double t) { return n / (2.0 * t * t); };
  m.sample_prior = [a](Rng& rng) { return sample_symmetric_beta(rng, a); };
  m.sample_cond = [np = p.n](Rng& rng, double t) {
    std::normal_distribution<double> g(0.0, std::sqrt(t));
    Observation x(static_cast<std::size_t>(np));
    for (auto& v : x) v = g(rng);
    return x;
  };
  m.cond_loglik = [n](const Observation& x, double t) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * n * std::log(2.0 * kPi * t) - s / (2.0 * t);
  };
  m.bind_loglik = [n](const Observation& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::function<double(double)>(
        [n, s](double t) { return -0.5 * n * std::log(2.0 * kPi * t) - s / (2.0 * t); });
  };
  m.quadrature = beta_axis_quadrature(400);
  return ScalarModel(std::move(m));
}

// ---------------------------------------------------------------------- doa

double doa_delta(const DoaParams& p) {
  const double na = p.n_sensors, snr = p.snr;
  return kPi * kPi * p.n_snapshots * snr * snr / (1.0 + na * snr) * (na * na * (na * na - 1.0) / 6.0);
}

double doa_delta_sum_form(const DoaParams& p) {
  const double na = p.n_sensors, snr = p.snr;
  double sum = 0.0;
  for (int k = 0; k < p.n_sensors; ++k) {
    const double d = k - (na - 1.0) / 2.0;
    sum += d * d;
  }
  return 2.0 * kPi * kPi * (p.n_snapshots * na * snr * snr / (1.0 + na * snr)) * sum;
}

double doa_prior_norm(const DoaParams& p) { return p.edge * (1.0 + p.rolloff); }

namespace {

// log-likelihood of the DOA snapshots with the source amplitudes marginalised;
// only |a(theta)^H x_j|^2 depends on theta.
struct DoaLagSums {
  int na = 0;
  double energy = 0.0;                    // sum_j ||x_j||^2
  std::vector<std::complex<double>> lag;  // r_d = sum_j sum_m conj(x_jm) x_j(m+d), d >= 1

  DoaLagSums(const Observation& x, int n_sensors) : na(n_sensors), lag(static_cast<std::size_t>(n_sensors), 0.0) {
    const auto* z = reinterpret_cast<const std::complex<double>*>(x.data());
    const std::size_t snaps = x.size() / (2 * static_cast<std::size_t>(na));
    for (std::size_t j = 0; j < snaps; ++j) {
      const auto* s = z + j * static_cast<std::size_t>(na);
      for (int m = 0; m < na; ++m) energy += std::norm(s[m]);
      for (int d = 1; d < na; ++d) {
        std::complex<double> acc = 0.0;
        for (int m = 0; m + d < na; ++m) acc += std::conj(s[m]) * s[m + d];
        lag[static_cast<std::size_t>(d)] += acc;
      }
    }
  }

  // sum_j |a(theta)^H x_j|^2
  double beam_power(double theta) const {
    const std::complex<double> step = std::polar(1.0, -kPi * std::sin(theta));
    std::complex<double> ph = 1.0;
    double acc = energy;
    for (int d = 1; d < na; ++d) {
      ph *= step;
      acc += 2.0 * std::real(lag[static_cast<std::size_t>(d)] * ph);
    }
    return acc;
  }
};

}  // namespace

ScalarModel make_doa(const DoaParams& p) {
  require(p.n_sensors >= 2, "doa: need at least 2 sensors");
  require(p.n_snapshots >= 1, "doa: need at least 1 snapshot");
  require(p.snr > 0.0, "doa: SNR must be positive");
  require(p.edge > 0.0 && p.edge < kPi / 2.0, "doa: edge s must be in (0, pi/2)");
  require(p.rolloff >= 0.0 && p.rolloff <= 1.0, "doa: roll-off must be in [0, 1]");

  const double s = p.edge, kappa = p.rolloff;
  const double flat = s * kappa, roll = s * (1.0 - kappa);
  const double log_c = std::log(doa_prior_norm(p));
  const double delta = doa_delta(p);
  const int na = p.n_sensors, ns = p.n_snapshots;
  const double snr = p.snr;
  const double gain = snr / (1.0 + na * snr);
  const double log_const = -ns * (na * std::log(kPi) + std::log1p(na * snr));

  ScalarModelParts m;
  m.name = "doa";
  m.lo = -s;
  m.hi = s;
  m.n_obs = ns;
  m.prior_logpdf = [=](double t) {
    const double r = std::abs(t);
    if (r < flat) return -log_c;
    if (r > s || roll <= 0.0) return -std::numeric_limits<double>::infinity();
    const double u = kPi * (r - flat) / roll;
    return std::log(0.5 * (1.0 + std::cos(u))) - log_c;
  };
  m.prior_logpdf_deriv = [=](double t) {
    const double r = std::abs(t);
    if (r < flat || roll <= 0.0) return 0.0;
    const double u = kPi * (r - flat) / roll;
    const double sign = t < 0.0 ? -1.0 : 1.0;
    return -sign * std::tan(0.5 * u) * kPi / roll;
  };
  m.cond_fim = [delta](double t) {
    const double c = std::cos(t);
    return delta * c * c;
  };
  m.sample_prior = [=](Rng& rng) {
    std::uniform_real_distribution<double> prop(-s, s), acc(0.0, 1.0);
    while (true) {
      const double t = prop(rng);
      const double r = std::abs(t);
      const double shape = r < flat ? 1.0 : 0.5 * (1.0 + std::cos(kPi * (r - flat) / roll));
      if (acc(rng) < shape) return t;
    }
  };
  m.sample_cond = [=](Rng& rng, double t) {
    std::normal_distribution<double> sig(0.0, std::sqrt(snr / 2.0)), noise(0.0, std::sqrt(0.5));
    Observation x(2 * static_cast<std::size_t>(na) * static_cast<std::size_t>(ns));
    const double u = kPi * std::sin(t);
    std::vector<std::complex<double>> steer(static_cast<std::size_t>(na));
    for (int k = 0; k < na; ++k) steer[static_cast<std::size_t>(k)] = std::polar(1.0, u * (k - (na - 1) / 2.0));
    auto* z = reinterpret_cast<std::complex<double>*>(x.data());
    for (int j = 0; j < ns; ++j) {
      const std::complex<double> alpha(sig(rng), sig(rng));
      for (int k = 0; k < na; ++k) {
        const std::complex<double> v(noise(rng), noise(rng));
        z[static_cast<std::size_t>(j * na + k)] = alpha * steer[static_cast<std::size_t>(k)] + v;
      }
    }
    return x;
  };
  m.bind_loglik = [=](const Observation& x) {
    auto sums = std::make_shared<DoaLagSums>(x, na);
    return std::function<double(double)>([=](double t) {
      return log_const - sums->energy + gain * sums->beam_power(t);
    });
  };
  m.cond_loglik = [=](const Observation& x, double t) {
    const DoaLagSums sums(x, na);
    return log_const - sums.energy + gain * sums.beam_power(t);
  };
  QuadratureSpec q;
  q.clip = 1e-6;
  m.quadrature = q;
  if (flat > 0.0 && roll > 0.0) m.breaks = {-flat, flat};
  return ScalarModel(std::move(m));
}

double doa_loglik_dense(const DoaParams& p, const Observation& x, double theta) {
  using C = std::complex<double>;
  const int na = p.n_sensors;
  const std::size_t ns = x.size() / (2 * static_cast<std::size_t>(na));
  Eigen::VectorXcd a(na);
  for (int k = 0; k < na; ++k) a[k] = std::polar(1.0, kPi * (k - (na - 1) / 2.0) * std::sin(theta));
  Eigen::MatrixXcd cov = p.snr * a * a.adjoint() + Eigen::MatrixXcd::Identity(na, na);
  Eigen::LLT<Eigen::MatrixXcd> llt(cov);
  double logdet = 0.0;
  for (int k = 0; k < na; ++k) logdet += 2.0 * std::log(std::real(llt.matrixL()(k, k)));
  const auto* z = reinterpret_cast<const C*>(x.data());
  double quad = 0.0;
  for (std::size_t j = 0; j < ns; ++j) {
    Eigen::Map<const Eigen::VectorXcd> xj(z + j * static_cast<std::size_t>(na), na);
    quad += std::real(xj.dot(llt.solve(xj)));
  }
  return -static_cast<double>(ns) * (na * std::log(kPi) + logdet) - quad;
}

// ----------------------------------------------------------------- mean-var

double mean_var_gamma(double a, double phi) { return (a - 1.0) * (1.0 / (1.0 - phi) - 1.0 / phi); }

MeanVarClosedForm mean_var_closed_form(const MeanVarParams& p) {
  const double a = p.a, n = p.n;
  MeanVarClosedForm c{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  c.bcrb(0, 0) = 1.0 / (1.0 / p.sigma_mu2 + n * (2.0 * a - 1.0) / (a - 1.0));
  c.bcrb(1, 1) = (a - 2.0) / ((2.0 * a - 1.0) * (n + 4.0 * (a - 1.0)));
  c.ecrb(0, 0) = 1.0 / (2.0 * n);
  c.ecrb(1, 1) = (a + 1.0) / (n * (2.0 * a + 1.0));
  return c;
}

VectorModel make_mean_var(const MeanVarParams& p) {
  require(p.a > 2.0, "mean-var: shape a must exceed 2");
  require(p.n >= 1, "mean-var: N must be >= 1");
  require(p.sigma_mu2 > 0.0, "mean-var: sigma_mu2 must be positive");
  const double a = p.a, n = p.n, s2 = p.sigma_mu2;
  const double sd = std::sqrt(s2);
  const double log_b = log_beta_fn(a, a);
  // Gaussian truncated at +-6 sigma, renormalised.
  const double log_norm = -0.5 * std::log(2.0 * kPi * s2) - std::log(std::erf(6.0 / std::sqrt(2.0)));

  VectorModelParts m;
  m.name = "mean-var";
  m.param_names = {"mu", "phi"};
  m.lo = Vector(2);
  m.hi = Vector(2);
  m.lo << -6.0 * sd, 0.0;
  m.hi << 6.0 * sd, 1.0;
  m.n_obs = p.n;
  m.prior_logpdf = [=](const Vector& t) {
    const double mu = t[0], phi = t[1];
    return log_norm - mu * mu / (2.0 * s2) + (a - 1.0) * (std::log(phi) + std::log1p(-phi)) - log_b;
  };
  m.prior_grad = [=](const Vector& t) {
    Vector g(2);
    g << -t[0] / s2, -mean_var_gamma(a, t[1]);
    return g;
  };
  m.cond_fim = [n](const Vector& t) {
    Matrix j = Matrix::Zero(2, 2);
    j(0, 0) = n / t[1];
    j(1, 1) = n / (2.0 * t[1] * t[1]);
    return j;
  };
  m.sample_prior = [=](Rng& rng) {
    std::normal_distribution<double> g(0.0, sd);
    double mu;
    do {
      mu = g(rng);
    } while (std::abs(mu) >= 6.0 * sd);
    Vector t(2);
    t << mu, sample_symmetric_beta(rng, a);
    return t;
  };
  m.sample_cond = [np = p.n](Rng& rng, const Vector& t) {
    std::normal_distribution<double> g(t[0], std::sqrt(t[1]));
    Observation x(static_cast<std::size_t>(np));
    for (auto& v : x) v = g(rng);
    return x;
  };
  auto loglik = [n](double s1, double s2sum, const Vector& t) {
    const double mu = t[0], phi = t[1];
    const double ss = s2sum - 2.0 * mu * s1 + n * mu * mu;
    return -0.5 * n * std::log(2.0 * kPi * phi) - ss / (2.0 * phi);
  };
  m.cond_loglik = [loglik](const Observation& x, const Vector& t) {
    double s1 = 0.0, s2sum = 0.0;
    for (double v : x) {
      s1 += v;
      s2sum += v * v;
    }
    return loglik(s1, s2sum, t);
  };
  m.bind_loglik = [loglik](const Observation& x) {
    double s1 = 0.0, s2sum = 0.0;
    for (double v : x) {
      s1 += v;
      s2sum += v * v;
    }
    return std::function<double(const Vector&)>([=](const Vector& t) { return loglik(s1, s2sum, t); });
  };
  QuadratureSpec mu_axis;
  mu_axis.panels = 40;
  mu_axis.clip = 0.0;
  m.quadrature = {mu_axis, beta_axis_quadrature(60)};
  return VectorModel(std::move(m));
}

// ---------------------------------------------------------------- toy models

ScalarModel make_linear_gaussian(int n, double sigma2) {
  require(n >= 1 && sigma2 > 0.0, "linear-gaussian: need N >= 1 and sigma2 > 0");
  const double sd = std::sqrt(sigma2);
  const double log_norm = -0.5 * std::log(2.0 * kPi * sigma2) - std::log(std::erf(8.0 / std::sqrt(2.0)));
  ScalarModelParts m;
  m.name = "linear-gaussian";
  m.lo = -8.0 * sd;
  m.hi = 8.0 * sd;
  m.n_obs = n;
  m.prior_logpdf = [=](double t) { return log_norm - t * t / (2.0 * sigma2); };
  m.prior_logpdf_deriv = [=](double t) { return -t / sigma2; };
  m.cond_fim = [n](double) { return static_cast<double>(n); };
  m.sample_prior = [=](Rng& rng) {
    std::normal_distribution<double> g(0.0, sd);
    double t;
    do {
      t = g(rng);
    } while (std::abs(t) >= 8.0 * sd);
    return t;
  };
  m.sample_cond = [n](Rng& rng, double t) {
    std::normal_distribution<double> g(t, 1.0);
    Observation x(static_cast<std::size_t>(n));
    for (auto& v : x) v = g(rng);
    return x;
  };
  m.cond_loglik = [n](const Observation& x, double t) {
    double ss = 0.0;
    for (double v : x) ss += (v - t) * (v - t);
    return -0.5 * n * std::log(2.0 * kPi) - 0.5 * ss;
  };
  QuadratureSpec q;
  q.clip = 0.0;
  m.quadrature = q;
  return ScalarModel(std::move(m));
}

ScalarModel make_constant_information(double c, double lo, double hi) {
  require(c > 0.0 && lo < hi, "constant-information: need c > 0 and lo < hi");
  const double log_p = -std::log(hi - lo);
  ScalarModelParts m;
  m.name = "constant-information";
  m.lo = lo;
  m.hi = hi;
  m.n_obs = 1;
  m.prior_logpdf = [log_p](double) { return log_p; };
  m.prior_logpdf_deriv = [](double) { return 0.0; };
  m.cond_fim = [c](double) { return c; };
  m.sample_prior = [lo, hi](Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  m.sample_cond = [c](Rng& rng, double t) {
    return Observation{std::normal_distribution<double>(t, 1.0 / std::sqrt(c))(rng)};
  };
  m.cond_loglik = [c](const Observation& x, double t) {
    return 0.5 * std::log(c / (2.0 * kPi)) - 0.5 * c * (x[0] - t) * (x[0] - t);
  };
  QuadratureSpec q;
  q.clip = 0.0;
  m.quadrature = q;
  return ScalarModel(std::move(m));
}

// ------------------------------------------------------------------ presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"variance-beta", "doa", "mean-var"};
  return names;
}

PresetParams preset_defaults(const std::string& preset) {
  if (preset == "variance-beta") return {{"a", 2.1}, {"N", 128}};
  if (preset == "doa") return {{"Na", 32}, {"N", 128}, {"snr", 10.0}, {"s", 85.0 * kPi / 180.0}, {"kappa", 0.98}};
  if (preset == "mean-var") return {{"a", 2.1}, {"N", 100}, {"sigma_mu2", 0.1}};
  throw Error(ErrorKind::InvalidConfig, "unknown preset '" + preset + "'");
}

namespace {

int as_count(const PresetParams& p, const std::string& key) {
  const double v = p.at(key);
  if (v != std::floor(v) || v < 1.0) throw Error(ErrorKind::BadParams, key + " must be a positive integer");
  return static_cast<int>(v);
}

}  // namespace

AnyModel make_preset(const std::string& preset, const PresetParams& overrides) {
  PresetParams p = preset_defaults(preset);
  for (const auto& [k, v] : overrides) {
    if (!p.contains(k)) throw Error(ErrorKind::InvalidConfig, "preset '" + preset + "' has no parameter '" + k + "'");
    p[k] = v;
  }
  if (preset == "variance-beta") return make_variance_beta({p["a"], as_count(p, "N")});
  if (preset == "doa") {
    DoaParams d;
    d.n_sensors = as_count(p, "Na");
    d.n_snapshots = as_count(p, "N");
    d.snr = std::pow(10.0, p["snr"] / 10.0);
    d.edge = p["s"];
    d.rolloff = p["kappa"];
    return make_doa(d);
  }
  return make_mean_var({p["a"], as_count(p, "N"), p["sigma_mu2"]});
}

}  // namespace bayes_bounds

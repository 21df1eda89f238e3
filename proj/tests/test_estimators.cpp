#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bayes_bounds/bounds_scalar.hpp"
#include "bayes_bounds/estimators.hpp"
#include "bayes_bounds/models.hpp"
#include "bayes_bounds/wbcrb_opt.hpp"

using namespace bayes_bounds;

TEST_CASE("linear-Gaussian MAP is the posterior mean") {
  const int n = 6;
  const double s2 = 0.7;
  const ScalarModel m = make_linear_gaussian(n, s2);
  Rng rng(12);
  for (int k = 0; k < 50; ++k) {
    const Observation x = m.sample_cond(rng, m.sample_prior(rng));
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double expect = xbar * n * s2 / (n * s2 + 1.0);
    CHECK(std::abs(map_estimate(m, x) - expect) < 1e-5 * (m.hi() - m.lo()));
  }
}

TEST_CASE("variance-beta ML is the clamped mean square") {
  const ScalarModel m = make_variance_beta({2.1, 16});
  Rng rng(13);
  for (int k = 0; k < 100; ++k) {
    const Observation x = m.sample_cond(rng, m.sample_prior(rng));
    double ms = 0.0;
    for (double v : x) ms += v * v;
    ms /= static_cast<double>(x.size());
    const double expect = std::clamp(ms, m.lo(), m.hi());
    CHECK(std::abs(ml_estimate(m, x) - expect) < 1e-5);
  }
}

TEST_CASE("ML equals MAP under a flat prior") {
  const ScalarModel m = make_constant_information(30.0);
  Rng rng(14);
  for (int k = 0; k < 20; ++k) {
    const Observation x = m.sample_cond(rng, m.sample_prior(rng));
    CHECK(std::abs(ml_estimate(m, x) - map_estimate(m, x)) < 1e-9);
  }
}

TEST_CASE("maximize_1d") {
  const double t = maximize_1d([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0, {});
  CHECK(std::abs(t - 0.3) < 1e-6);
  try {
    maximize_1d([](double) { return NAN; }, 0.0, 1.0, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateObjective);
  }
}

TEST_CASE("prior-mean estimator recovers the prior variance") {
  const ScalarModel m = make_variance_beta({2.1, 8});
  McConfig cfg;
  const McResult r = monte_carlo_mse(m, cfg, [](const Observation&, double) { return 0.5; });
  const double prior_var = 1.0 / 20.8;
  CHECK(std::abs(r.scalar_mse() - prior_var) < 3.0 * r.scalar_se());
  CHECK(r.trials == 5000);
  CHECK(r.seed == cfg.seed);
}

TEST_CASE("an estimator that reads the truth has zero error") {
  const ScalarModel m = make_variance_beta({2.1, 8});
  McConfig cfg;
  cfg.trials = 200;
  CHECK(monte_carlo_mse(m, cfg, [](const Observation&, double t) { return t; }).scalar_mse() == 0.0);
  const VectorModel v = make_mean_var({2.1, 20, 0.1});
  const McResult r = monte_carlo_mse(v, cfg, [](const Observation&, const Vector& t) { return t; });
  CHECK(r.mse.norm() == 0.0);
}

TEST_CASE("results are bit-identical across thread counts") {
  const ScalarModel m = make_variance_beta({2.1, 32});
  McConfig cfg;
  cfg.trials = 400;
  cfg.threads = 1;
  const McResult a = monte_carlo_mse(m, cfg);
  cfg.threads = 4;
  const McResult b = monte_carlo_mse(m, cfg);
  cfg.threads = 3;
  const McResult c = monte_carlo_mse(m, cfg);
  CHECK(a.scalar_mse() == b.scalar_mse());
  CHECK(a.scalar_se() == b.scalar_se());
  CHECK(a.scalar_mse() == c.scalar_mse());

  cfg.seed += 1;
  CHECK(monte_carlo_mse(m, cfg).scalar_mse() != a.scalar_mse());

  Rng r0 = trial_rng(1, 0), r1 = trial_rng(1, 1), r0b = trial_rng(1, 0);
  const auto x0 = r0(), x1 = r1(), x0b = r0b();
  CHECK(x0 == x0b);
  CHECK(x0 != x1);
}

TEST_CASE("vector results: PSD and consistent RMSE") {
  const VectorModel m = make_mean_var({2.1, 50, 0.1});
  McConfig cfg;
  cfg.trials = 300;
  const McResult r = monte_carlo_mse(m, cfg);
  CHECK(min_eig_sym(r.mse) >= -1e-12);
  for (Eigen::Index k = 0; k < 2; ++k) CHECK(std::abs(r.rmse[k] * r.rmse[k] - r.mse(k, k)) <= 1e-12 * r.mse(k, k));
  CHECK(r.mse_se.minCoeff() >= 0.0);
}

TEST_CASE("configuration validation and error propagation") {
  McConfig cfg;
  cfg.trials = 99;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = McConfig{};
  cfg.grid = 2;
  CHECK_THROWS_AS(cfg.validate(), Error);

  const ScalarModel m = make_variance_beta({2.1, 8});
  McConfig small;
  small.trials = 100;
  try {
    monte_carlo_mse(m, small, [](const Observation&, double t) -> double {
      if (t > 0.9) throw Error(ErrorKind::DegenerateObjective, "boom");
      return t;
    });
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("trial") != std::string::npos);
  }
  CHECK(estimator_from_string(to_string(EstimatorKind::Ml)) == EstimatorKind::Ml);
  CHECK_THROWS_AS(estimator_from_string("mmse"), Error);
}

TEST_CASE("MAP at N=128 sits on the optimal weighted bound") {
  const ScalarModel m = make_variance_beta({2.1, 128});
  const double opt = wbcrb_opt(m, 0.02).bound;
  const McResult r = monte_carlo_mse(m, McConfig{});
  CHECK(r.scalar_mse() >= opt - 3.0 * r.scalar_se());
  CHECK(std::abs(std::sqrt(r.scalar_mse() / opt) - 1.0) < 0.05);
}

TEST_CASE("ML at N=1024 tracks the ECRB") {
  const ScalarModel m = make_variance_beta({2.1, 1024});
  McConfig cfg;
  cfg.estimator = EstimatorKind::Ml;
  const McResult r = monte_carlo_mse(m, cfg);
  CHECK(std::abs(std::sqrt(r.scalar_mse() / ecrb(m, m.quadrature())) - 1.0) < 0.05);
}

TEST_CASE("doubling the search grid barely moves the MSE") {
  const ScalarModel m = make_variance_beta({2.1, 32});
  McConfig cfg;
  cfg.trials = 2000;
  const double a = monte_carlo_mse(m, cfg).scalar_mse();
  cfg.grid = 1024;
  const double b = monte_carlo_mse(m, cfg).scalar_mse();
  CHECK(std::abs(a - b) / a < 0.005);
}

// Acceptance suite. `acceptance <n>` runs criterion n and prints one PASS/FAIL
// line; without arguments every criterion runs in turn. Exit status 0 iff all
// selected criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bayes_bounds/bounds_scalar.hpp"
#include "bayes_bounds/bounds_vector.hpp"
#include "bayes_bounds/estimators.hpp"
#include "bayes_bounds/models.hpp"
#include "bayes_bounds/run.hpp"
#include "bayes_bounds/wbcrb_opt.hpp"

using namespace bayes_bounds;

namespace {

// Pinned tolerances.
constexpr double kGridBudget = 0.005;      // discretisation budget of wbcrb_opt
constexpr double kTightness = 0.05;        // asymptotic gap at N=1024
constexpr double kAttain = 0.05;           // MAP RMSE vs bound RMSE at N=1024
constexpr double kSigmas = 3.0;            // Monte-Carlo standard errors
constexpr double kJensenMatrix = -1e-9;    // min eigenvalue of ecrb - bcrb
constexpr double kClosedForm = 1e-4;       // entrywise relative
constexpr double kDoaSpread = 0.02;        // mutual spread of at/opt/ecrb
constexpr double kDoaAttain = 0.10;        // MAP RMSE vs sqrt(at_bcrb)
constexpr double kIdentity = 1e-10;        // reduction identities
constexpr double kLemma = -1e-10;          // Lemma 1 min eigenvalue
constexpr double kRuntime1 = 30.0;         // seconds

constexpr double kA = 2.1;
constexpr double kDoaDelta = 0.005;
constexpr double kVbDelta = 0.02;
constexpr int kTrials = 5000;
constexpr std::uint64_t kSeed = 20240607;

const std::vector<int> kSampleSweep = {8, 16, 32, 64, 128, 256, 512, 1024};
const std::vector<double> kSnrSweepDb = {-10.0, -5.0, 0.0, 5.0, 10.0};
const std::vector<double> kSigmaSweep = {0.01, 0.03, 0.1, 0.3, 1.0};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string violations;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      violations += " [violated: " + what + "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ScalarModel doa_at(double snr_db) {
  DoaParams p;
  p.snr = db_to_linear(snr_db);
  return make_doa(p);
}

McConfig mc(EstimatorKind k) {
  McConfig c;
  c.trials = kTrials;
  c.seed = kSeed;
  c.estimator = k;
  return c;
}

struct ScalarFamily {
  double bcrb, ecrb, at, sub, opt, e_inv, rho;
};

ScalarFamily scalar_family(const ScalarModel& m, double delta) {
  const QuadratureSpec& q = m.quadrature();
  const InverseInfoMoments mom = inverse_info_moments(m, q, {});
  const AtBcrb at = at_bcrb(mom);
  return {bcrb(m, q), ecrb(m, q), at.bound, wbcrb_sub(mom), wbcrb_opt(m, delta).bound, mom.e_inv, at.rho};
}

// ------------------------------------------------------------------ criteria

void ordering_chain(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_at = -1e300, worst_bcrb = -1e300;
  for (int n : kSampleSweep) {
    const ScalarFamily f = scalar_family(make_variance_beta({kA, n}), kVbDelta);
    const std::string at = "N=" + std::to_string(n);
    o.require(f.sub <= f.at, at + " wbcrb_sub <= at_bcrb");
    o.require(f.at <= f.opt * (1.0 + kGridBudget), at + " at_bcrb <= wbcrb_opt(1+budget)");
    o.require(f.bcrb <= f.opt * (1.0 + kGridBudget), at + " bcrb <= wbcrb_opt(1+budget)");
    worst_at = std::max(worst_at, f.at / f.opt - 1.0);
    worst_bcrb = std::max(worst_bcrb, f.bcrb / f.opt - 1.0);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < kRuntime1, "runtime < 30 s");
  o.detail << "max(at_bcrb/wbcrb_opt - 1) = " << worst_at << ", max(bcrb/wbcrb_opt - 1) = " << worst_bcrb
           << ", runtime " << secs << " s";
}

void jensen(Outcome& o) {
  int points = 0;
  double tightest = 1e300;
  for (int n : kSampleSweep) {
    const ScalarModel m = make_variance_beta({kA, n});
    const double b = bcrb(m, m.quadrature()), e = ecrb(m, m.quadrature());
    o.require(b <= e, "variance-beta N=" + std::to_string(n));
    tightest = std::min(tightest, e / b);
    ++points;
  }
  for (double snr : kSnrSweepDb) {
    const ScalarModel m = doa_at(snr);
    const double b = bcrb(m, m.quadrature()), e = ecrb(m, m.quadrature());
    o.require(b <= e, "doa snr=" + std::to_string(snr));
    tightest = std::min(tightest, e / b);
    ++points;
  }
  double min_eig = 1e300;
  for (double s2 : kSigmaSweep) {
    const VectorModel m = make_mean_var({kA, 100, s2});
    const double ev = min_eig_sym(ecrb_matrix(m) - bcrb_matrix(m));
    o.require(ev >= kJensenMatrix, "mean-var sigma_mu2=" + std::to_string(s2));
    min_eig = std::min(min_eig, ev);
    ++points;
  }
  o.detail << points << " sweep points, min scalar ecrb/bcrb = " << tightest
           << ", min eig(ecrb - bcrb) = " << min_eig;
}

void tightness(Outcome& o) {
  double prev_at = 1e300, prev_opt = 1e300, gap_at = 0.0, gap_opt = 0.0;
  std::ostringstream trail;
  for (int n : kSampleSweep) {
    const ScalarFamily f = scalar_family(make_variance_beta({kA, n}), kVbDelta);
    gap_at = std::abs(f.at / f.ecrb - 1.0);
    gap_opt = std::abs(f.opt / f.ecrb - 1.0);
    o.require(gap_at < prev_at, "at_bcrb gap decreasing at N=" + std::to_string(n));
    o.require(gap_opt < prev_opt, "wbcrb_opt gap decreasing at N=" + std::to_string(n));
    prev_at = gap_at;
    prev_opt = gap_opt;
    trail << " " << n << ":" << gap_at << "/" << gap_opt;
  }
  o.require(gap_at <= kTightness, "|at_bcrb/ecrb - 1| <= 0.05 at N=1024");
  o.require(gap_opt <= kTightness, "|wbcrb_opt/ecrb - 1| <= 0.05 at N=1024");
  o.detail << "gaps (at_bcrb/wbcrb_opt) by N:" << trail.str();
}

void attainability(Outcome& o) {
  const ScalarModel m = make_variance_beta({kA, 1024});
  const ScalarFamily f = scalar_family(m, kVbDelta);
  const McResult r = monte_carlo_mse(m, mc(EstimatorKind::Map));
  const double rmse = std::sqrt(r.scalar_mse());
  const double d_opt = rel(rmse, std::sqrt(f.opt)), d_at = rel(rmse, std::sqrt(f.at));
  o.require(d_opt <= kAttain, "MAP RMSE within 5% of sqrt(wbcrb_opt)");
  o.require(d_at <= kAttain, "MAP RMSE within 5% of sqrt(at_bcrb)");
  o.detail << "MAP RMSE " << rmse << ", sqrt(wbcrb_opt) " << std::sqrt(f.opt) << " (" << d_opt
           << "), sqrt(at_bcrb) " << std::sqrt(f.at) << " (" << d_at << ")";
}

void ecrb_invalid(Outcome& o) {
  const ScalarModel m = make_variance_beta({kA, 8});
  const double e = ecrb(m, m.quadrature());
  const McResult r = monte_carlo_mse(m, mc(EstimatorKind::Map));
  o.require(r.scalar_mse() < e - kSigmas * r.scalar_se(), "MAP MSE < ecrb - 3 SE");
  o.detail << "MAP MSE " << r.scalar_mse() << " +- " << r.scalar_se() << ", ecrb " << e << ", margin "
           << (e - r.scalar_mse()) / r.scalar_se() << " SE";
}

// Bounds checked against the estimators. The ECRB is not a bound and is
// excluded; criterion 5 requires it to exceed the MAP MSE.
void validity(Outcome& o) {
  int checks = 0;
  double closest = 1e300;  // min over checks of (mse + 3 se - bound) / se
  auto check_scalar = [&](const std::string& where, const ScalarModel& m, double delta) {
    const ScalarFamily f = scalar_family(m, delta);
    for (EstimatorKind k : {EstimatorKind::Map, EstimatorKind::Ml}) {
      const McResult r = monte_carlo_mse(m, mc(k));
      const double ceiling = r.scalar_mse() + kSigmas * r.scalar_se();
      const std::pair<const char*, double> bounds[] = {
          {"bcrb", f.bcrb}, {"at_bcrb", f.at}, {"wbcrb_sub", f.sub}, {"wbcrb_opt", f.opt}};
      for (const auto& [name, b] : bounds) {
        o.require(b <= ceiling, where + " " + name + " vs " + std::string(to_string(k)));
        closest = std::min(closest, (ceiling - b) / r.scalar_se());
        ++checks;
      }
    }
  };
  for (int n : kSampleSweep) check_scalar("variance-beta N=" + std::to_string(n), make_variance_beta({kA, n}), kVbDelta);
  for (double snr : kSnrSweepDb) check_scalar("doa snr=" + std::to_string(snr), doa_at(snr), kDoaDelta);
  for (double s2 : kSigmaSweep) {
    const VectorModel m = make_mean_var({kA, 100, s2});
    const MatrixBoundReport rep = at_bcrb_matrix(m, nullptr, {});
    for (EstimatorKind k : {EstimatorKind::Map, EstimatorKind::Ml}) {
      const McResult r = monte_carlo_mse(m, mc(k));
      const double slack = kSigmas * r.mse_se.maxCoeff();
      for (const auto& [name, b] : {std::pair<const char*, const Matrix*>{"bcrb", &rep.bcrb}, {"at_bcrb", &rep.at_bcrb}}) {
        const std::string where = "mean-var sigma_mu2=" + std::to_string(s2) + " " + name + " vs " + std::string(to_string(k));
        for (Eigen::Index i = 0; i < 2; ++i) {
          o.require((*b)(i, i) <= r.mse(i, i) + kSigmas * r.mse_se(i, i), where + " diagonal");
          closest = std::min(closest, (r.mse(i, i) + kSigmas * r.mse_se(i, i) - (*b)(i, i)) / r.mse_se(i, i));
        }
        o.require(min_eig_sym(r.mse - *b) >= -slack, where + " matrix ordering");
        checks += 3;
      }
    }
  }
  o.detail << checks << " comparisons over " << kSampleSweep.size() + kSnrSweepDb.size() + kSigmaSweep.size()
           << " sweep points, MAP and ML; smallest margin " << closest << " SE above the bound";
}

void closed_forms(Outcome& o) {
  const MeanVarParams p{kA, 100, 0.1};
  const VectorModel m = make_mean_var(p);
  const MeanVarClosedForm cf = mean_var_closed_form(p);
  const Matrix b = bcrb_matrix(m), e = ecrb_matrix(m);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double eb = cf.bcrb(i, j) == 0.0 ? std::abs(b(i, j)) / cf.bcrb(i, i) : rel(b(i, j), cf.bcrb(i, j));
      const double ee = cf.ecrb(i, j) == 0.0 ? std::abs(e(i, j)) / cf.ecrb(i, i) : rel(e(i, j), cf.ecrb(i, j));
      worst = std::max({worst, eb, ee});
    }
  }
  o.require(worst <= kClosedForm, "entrywise relative error <= 1e-4");
  o.require(rel(b(0, 0), 3.323e-3) < 5e-4, "bcrb_11 ~ 3.323e-3");
  o.require(rel(e(0, 0), 5.0e-3) < 5e-4, "ecrb_11 = 5.0e-3");
  o.require(rel(e(1, 1), 5.962e-3) < 5e-4, "ecrb_22 ~ 5.962e-3");
  o.detail << "max entrywise error " << worst << "; bcrb_11 " << b(0, 0) << ", bcrb_22 " << b(1, 1) << ", ecrb_11 "
           << e(0, 0) << ", ecrb_22 " << e(1, 1);
}

void doa_threshold(Outcome& o) {
  {
    const ScalarModel m = doa_at(10.0);
    const ScalarFamily f = scalar_family(m, kDoaDelta);
    const double lo = std::min({f.at, f.opt, f.ecrb}), hi = std::max({f.at, f.opt, f.ecrb});
    o.require(hi / lo - 1.0 <= kDoaSpread, "at_bcrb, wbcrb_opt, ecrb within 2%");
    const McResult r = monte_carlo_mse(m, mc(EstimatorKind::Map));
    const double d = rel(std::sqrt(r.scalar_mse()), std::sqrt(f.at));
    o.require(d <= kDoaAttain, "MAP RMSE within 10% of sqrt(at_bcrb)");
    o.detail << "10 dB: spread " << hi / lo - 1.0 << ", MAP RMSE " << std::sqrt(r.scalar_mse()) << " vs "
             << std::sqrt(f.at) << " (" << d << ")";
  }
  {
    const ScalarModel m = doa_at(-10.0);
    const ScalarFamily f = scalar_family(m, kDoaDelta);
    double margin = 1e300;
    for (EstimatorKind k : {EstimatorKind::Map, EstimatorKind::Ml}) {
      const McResult r = monte_carlo_mse(m, mc(k));
      const double ceiling = r.scalar_mse() + kSigmas * r.scalar_se();
      for (double b : {f.bcrb, f.ecrb, f.at, f.sub, f.opt}) {
        o.require(b <= ceiling, "-10 dB bound <= MSE + 3 SE (" + std::string(to_string(k)) + ")");
        margin = std::min(margin, (ceiling - b) / r.scalar_se());
      }
    }
    o.detail << "; -10 dB: smallest margin " << margin << " SE";
  }
}

void identities(Outcome& o) {
  double worst = 0.0;
  std::vector<ScalarModel> models;
  for (int n : kSampleSweep) models.push_back(make_variance_beta({kA, n}));
  models.push_back(doa_at(10.0));
  models.push_back(doa_at(-10.0));
  for (const ScalarModel& m : models) {
    const QuadratureSpec& q = m.quadrature();
    auto one = [](double) { return 1.0; };
    auto zero = [](double) { return 0.0; };
    const double w1 = rel(wbcrb_given_weight(m, one, zero, zero, q), bcrb(m, q));
    const InverseInfoMoments mom = inverse_info_moments(m, q, {});
    const AtBcrb at = at_bcrb(mom);
    const double i1 = rel(at.bound * (1.0 + at.rho), mom.e_inv);
    const double i2 = rel(wbcrb_sub(mom), mom.e_inv * (1.0 - mom.rho()));
    o.require(w1 <= kIdentity, m.name() + " w=1 reduces to bcrb");
    o.require(i1 <= kIdentity, m.name() + " at_bcrb (1 + rho) = E[1/J_DP]");
    o.require(i2 <= kIdentity, m.name() + " wbcrb_sub = E[1/J_DP](1 - rho)");
    worst = std::max({worst, w1, i1, i2});
  }
  Rng rng(kSeed);
  std::uniform_real_distribution<double> spectrum(-0.9, 5.0);
  std::normal_distribution<double> n01;
  double lemma = 1e300;
  for (int k = 0; k < 200; ++k) {
    const int l = 2 + k % 9;
    Matrix a(l, l);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
    const Matrix q = Eigen::HouseholderQR<Matrix>(a).householderQ();
    Vector ev(l);
    for (Eigen::Index i = 0; i < l; ++i) ev[i] = spectrum(rng);
    Matrix psi = q * ev.asDiagonal() * q.transpose();
    psi = 0.5 * (psi + psi.transpose());
    lemma = std::min(lemma, lemma1_check(psi));
  }
  o.require(lemma >= kLemma, "Lemma 1 on 200 random matrices");
  o.detail << models.size() << " models, worst identity error " << worst << "; Lemma 1 min eigenvalue " << lemma;
}

void determinism(Outcome& o) {
  auto config = [](const std::string& preset, const std::string& key, std::vector<double> values, int threads) {
    RunConfig c;
    c.preset = preset;
    c.sweep_key = key;
    c.sweep_values = std::move(values);
    c.mc = parse_mc("trials=400,estimator=both,seed=7");
    c.threads = threads;
    return c;
  };
  int runs = 0;
  const std::pair<std::string, std::pair<std::string, std::vector<double>>> cases[] = {
      {"variance-beta", {"N", {8, 64, 512}}},
      {"doa", {"snr", {-5.0, 10.0}}},
  };
  for (const auto& [preset, sweep] : cases) {
    RunConfig base = config(preset, sweep.first, sweep.second, 1);
    if (preset == "doa") base.bounds = {"bcrb", "ecrb", "at_bcrb", "wbcrb_sub"};
    const std::string ref = to_csv(run(base));
    for (int threads : {1, 2, 3, 8}) {
      RunConfig c = base;
      c.threads = threads;
      o.require(to_csv(run(c)) == ref, preset + " threads=" + std::to_string(threads));
      ++runs;
    }
  }
  RunConfig vec = config("mean-var", "sigma_mu2", {0.1, 1.0}, 1);
  vec.bounds = {"bcrb", "ecrb"};
  const std::string ref = to_csv(run(vec));
  for (int threads : {2, 4}) {
    vec.threads = threads;
    o.require(to_csv(run(vec)) == ref, "mean-var threads=" + std::to_string(threads));
    ++runs;
  }
  o.detail << runs << " repeated runs compared byte for byte against a single-thread reference";
}

struct Criterion {
  const char* title;
  std::function<void(Outcome&)> body;
};

const Criterion kCriteria[] = {
    {"ordering chain", ordering_chain},
    {"Jensen ordering", jensen},
    {"asymptotic tightness", tightness},
    {"MAP attainability", attainability},
    {"ECRB invalidity", ecrb_invalid},
    {"validity sandwich", validity},
    {"closed-form oracles", closed_forms},
    {"DOA above/below threshold", doa_threshold},
    {"reduction identities", identities},
    {"determinism", determinism},
};

bool run_criterion(int n) {
  Outcome o;
  try {
    kCriteria[n - 1].body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.violations += std::string(" [exception: ") + e.what() + "]";
  }
  std::printf("%s criterion %d (%s): %s%s\n", o.pass ? "PASS" : "FAIL", n, kCriteria[n - 1].title,
              o.detail.str().c_str(), o.violations.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const int count = static_cast<int>(std::size(kCriteria));
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > count) {
      std::fprintf(stderr, "usage: %s [criterion 1..%d]...\n", argv[0], count);
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= count; ++n) selected.push_back(n);
  bool ok = true;
  for (int n : selected) ok = run_criterion(n) && ok;
  return ok ? 0 : 1;
}

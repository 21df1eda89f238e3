#include "bayes_bounds/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "bayes_bounds/bounds_scalar.hpp"
#include "bayes_bounds/bounds_vector.hpp"
#include "bayes_bounds/models.hpp"
#include "bayes_bounds/wbcrb_opt.hpp"

namespace bayes_bounds {

namespace {

constexpr std::uint64_t kSeed = 0x5eed'b0b5ULL;

class Suite {
 public:
  void add(const std::string& name, bool pass, const std::string& detail) { checks_.push_back({name, pass, detail}); }

  // Runs fn; an exception counts as a failure carrying its message.
  void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
      auto [ok, detail] = fn();
      add(name, ok, detail);
    } catch (const std::exception& e) {
      add(name, false, e.what());
    }
  }

  std::vector<Check> take() { return std::move(checks_); }

 private:
  std::vector<Check> checks_;
};

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (const auto& [k, v] : kv) {
    os << (first ? "" : " ") << k << "=" << v;
    first = false;
  }
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void scalar_common(Suite& s, const ScalarModel& m) {
  const QuadratureSpec q = m.quadrature();
  const DiffSpec d;
  s.run("prior normalisation", [&] {
    const double mass = expect(m, [](double) { return 1.0; }, q);
    return std::pair{std::abs(mass - 1.0) < 1e-6, fmt({{"mass", mass}})};
  });
  s.run("prior log-derivative vs finite differences", [&] {
    Rng rng(kSeed);
    const double w = m.hi() - m.lo();
    std::uniform_real_distribution<double> u(m.lo() + 1e-3 * w, m.hi() - 1e-3 * w);
    double worst = 0.0;
    for (int i = 0; i < 32; ++i) {
      const double t = u(rng);
      const double fd = diff_1d([&](double x) { return m.prior_logpdf(x); }, t, DiffSpec{1e-6, true});
      const double an = m.prior_logpdf_deriv(t);
      worst = std::max(worst, std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
    }
    return std::pair{worst < 1e-4, fmt({{"max_rel_err", worst}})};
  });
  s.run("jensen: bcrb <= ecrb", [&] {
    const double b = bcrb(m, q), e = ecrb(m, q);
    return std::pair{b <= e, fmt({{"bcrb", b}, {"ecrb", e}})};
  });
  s.run("w=1 reduces to bcrb", [&] {
    const double w1 = wbcrb_given_weight(
        m, [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, q);
    const double b = bcrb(m, q);
    return std::pair{rel(w1, b) < 1e-10, fmt({{"rel", rel(w1, b)}})};
  });
  s.run("at_bcrb (1 + rho) = E[1/J_DP]", [&] {
    const auto mom = inverse_info_moments(m, q, d);
    const auto at = at_bcrb(mom);
    const double r = rel(at.bound * (1.0 + at.rho), mom.e_inv);
    return std::pair{r < 1e-10, fmt({{"rel", r}})};
  });
  s.run("wbcrb_sub = E[1/J_DP] (1 - rho)", [&] {
    const auto mom = inverse_info_moments(m, q, d);
    const double r = rel(wbcrb_sub(mom), mom.e_inv * (1.0 - mom.rho()));
    return std::pair{r < 1e-10, fmt({{"rel", r}})};
  });
  s.run("bcrb quadrature converged (< 0.1% under panel doubling)", [&] {
    const auto c = check_convergence([&](const QuadratureSpec& qq) { return bcrb(m, qq); }, q);
    return std::pair{c.converged(), fmt({{"rel_change", c.rel_change}})};
  });
  s.run("at_bcrb quadrature converged (< 0.1% under panel doubling)", [&] {
    const auto c = check_convergence([&](const QuadratureSpec& qq) { return at_bcrb(m, qq, d).bound; }, q);
    return std::pair{c.converged(), fmt({{"rel_change", c.rel_change}})};
  });
  s.run("score has zero mean (1e4 draws, 3 SE)", [&] {
    const double t = 0.5 * (m.lo() + m.hi()) + 0.1 * (m.hi() - m.lo());
    const auto st = score_stats(m, t, 10000, kSeed);
    return std::pair{std::abs(st.mean) <= 3.0 * st.mean_se, fmt({{"mean", st.mean}, {"se", st.mean_se}})};
  });
  s.run("score variance matches J_D (1e4 draws, 3 SE)", [&] {
    const double t = 0.5 * (m.lo() + m.hi()) + 0.1 * (m.hi() - m.lo());
    const auto st = score_stats(m, t, 10000, kSeed);
    const double jd = m.cond_fim(t);
    return std::pair{std::abs(st.fisher - jd) <= 3.0 * st.fisher_se,
                     fmt({{"mc", st.fisher}, {"se", st.fisher_se}, {"J_D", jd}})};
  });
  s.run("prior sampler passes KS test (n=5000, alpha=0.01)", [&] {
    Rng rng(kSeed);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = m.sample_prior(rng);
    const PriorCdf cdf(m);
    const double ks = ks_statistic(xs, [&](double t) { return cdf(t); });
    const double crit = ks_critical(xs.size(), 0.01);
    return std::pair{ks < crit, fmt({{"D", ks}, {"critical", crit}})};
  });
}

void ordering_chain(Suite& s, const std::string& label, const std::function<ScalarModel(int)>& make,
                    const std::vector<int>& ns, double delta) {
  s.run("ordering wbcrb_sub <= at_bcrb <= wbcrb_opt(1.005), bcrb <= wbcrb_opt(1.005) over " + label, [&] {
    std::ostringstream os;
    bool ok = true;
    for (int n : ns) {
      const ScalarModel m = make(n);
      const auto mom = inverse_info_moments(m, m.quadrature(), {});
      const double sub = wbcrb_sub(mom), at = at_bcrb(mom).bound, b = bcrb(m, m.quadrature());
      const double opt = wbcrb_opt(m, delta).bound;
      const bool pt = sub <= at && at <= opt * 1.005 && b <= opt * 1.005;
      if (!pt) os << "N=" << n << " sub=" << sub << " at=" << at << " opt=" << opt << " bcrb=" << b << "; ";
      ok = ok && pt;
    }
    return std::pair{ok, ok ? std::string("all points ordered") : os.str()};
  });
}

void wbcrb_opt_checks(Suite& s, const ScalarModel& m, double delta) {
  s.run("wbcrb_opt weight is feasible (f'w = 1)", [&] {
    const auto ops = build_operators(m, build_grid(m, delta));
    const Vector w = optimal_weight(ops);
    const double e = std::abs(ops.f.dot(w) - 1.0);
    return std::pair{e < 1e-10, fmt({{"|f'w - 1|", e}})};
  });
  s.run("wbcrb_opt weight beats 100 random feasible weights", [&] {
    const auto ops = build_operators(m, build_grid(m, delta));
    const Vector w = optimal_weight(ops);
    const double qopt = quadratic_form(ops, w);
    Rng rng(kSeed);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    int beaten = 0;
    for (int k = 0; k < 100; ++k) {
      Vector r(static_cast<Eigen::Index>(ops.size()));
      for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = u(rng);
      r /= ops.f.dot(r);
      if (quadratic_form(ops, r) < qopt) ++beaten;
    }
    return std::pair{beaten == 0, fmt({{"Q(w_opt)", qopt}, {"beaten_by", beaten}})};
  });
  s.run("wbcrb_opt = 1 / Q(w_opt)", [&] {
    const auto ops = build_operators(m, build_grid(m, delta));
    const auto r = wbcrb_opt(ops);
    const double e = rel(r.bound, 1.0 / quadratic_form(ops, r.weight));
    return std::pair{e < 1e-10, fmt({{"rel", e}})};
  });
  s.run("wbcrb_opt stable under halving the grid spacing (< 1%)", [&] {
    const double a = wbcrb_opt(m, delta).bound, b = wbcrb_opt(m, 0.5 * delta).bound;
    return std::pair{rel(a, b) < 0.01, fmt({{"delta", a}, {"delta/2", b}})};
  });
  s.run("wbcrb_opt >= wbcrb_sub (0.5% budget)", [&] {
    const double opt = wbcrb_opt(m, delta).bound, sub = wbcrb_sub(m, m.quadrature(), {});
    return std::pair{sub <= opt * 1.005, fmt({{"wbcrb_opt", opt}, {"wbcrb_sub", sub}})};
  });
}

std::vector<Check> verify_variance_beta() {
  Suite s;
  const VarianceBetaParams p;
  const ScalarModel m = make_variance_beta(p);
  scalar_common(s, m);
  s.run("bcrb matches closed form (1e-6)", [&] {
    const double v = bcrb(m, m.quadrature()), cf = beta_variance_closed_form(p.a, p.n).bcrb;
    return std::pair{rel(v, cf) < 1e-6, fmt({{"bcrb", v}, {"closed_form", cf}})};
  });
  s.run("ecrb matches closed form (1e-6)", [&] {
    const double v = ecrb(m, m.quadrature()), cf = beta_variance_closed_form(p.a, p.n).ecrb;
    return std::pair{rel(v, cf) < 1e-6, fmt({{"ecrb", v}, {"closed_form", cf}})};
  });
  s.run("prior variance 1/(4(2a+1))", [&] {
    const double v = expect(m, [](double t) { return (t - 0.5) * (t - 0.5); }, m.quadrature());
    const double cf = 1.0 / (4.0 * (2.0 * p.a + 1.0));
    return std::pair{rel(v, cf) < 1e-8, fmt({{"quadrature", v}, {"closed_form", cf}})};
  });
  s.run("regularity C1-C2 hold for w=1", [&] {
    const auto r = check_regularity(m, [](double) { return 1.0; });
    return std::pair{r.c1_ok() && r.c2_ok(), r.summary()};
  });
  ordering_chain(
      s, "N=8..1024", [&](int n) { return make_variance_beta({p.a, n}); }, {8, 16, 32, 64, 128, 256, 512, 1024},
      0.02);
  wbcrb_opt_checks(s, m, 0.02);
  s.run("lemma 1 on 200 random symmetric matrices", [&] {
    Rng rng(kSeed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> spec(-0.9, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const int n = 2 + k % 7;
      Matrix a(n, n);
      for (auto& v : a.reshaped()) v = g(rng);
      const Eigen::HouseholderQR<Matrix> qr(a);
      const Matrix qm = qr.householderQ();
      Vector lam(n);
      for (auto& v : lam) v = spec(rng);
      Matrix psi = qm * lam.asDiagonal() * qm.transpose();
      psi = 0.5 * (psi + psi.transpose());
      worst = std::min(worst, lemma1_check(psi));
    }
    return std::pair{worst >= -1e-10, fmt({{"min_eig", worst}})};
  });
  return s.take();
}

std::vector<Check> verify_doa() {
  Suite s;
  const DoaParams p;
  const ScalarModel m = make_doa(p);
  scalar_common(s, m);
  s.run("delta: sum form equals reduced form", [&] {
    const double a = doa_delta(p), b = doa_delta_sum_form(p);
    return std::pair{rel(a, b) < 1e-10, fmt({{"reduced", a}, {"sum", b}})};
  });
  s.run("marginal log-likelihood equals dense covariance evaluation (10 points, 1e-8)", [&] {
    DoaParams small = p;
    small.n_snapshots = 4;
    const ScalarModel ms = make_doa(small);
    Rng rng(kSeed);
    std::uniform_real_distribution<double> u(-small.edge, small.edge);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const double truth = ms.sample_prior(rng);
      const Observation x = ms.sample_cond(rng, truth);
      const double t = u(rng);
      const double a = ms.cond_loglik(x, t), b = doa_loglik_dense(small, x, t);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
    return std::pair{worst < 1e-8, fmt({{"max_rel_err", worst}})};
  });
  s.run("at_bcrb, wbcrb_opt and ecrb within 2% above threshold", [&] {
    const double at = at_bcrb(m, m.quadrature(), {}).bound, opt = wbcrb_opt(m, 0.005).bound;
    const double e = ecrb(m, m.quadrature());
    const double spread = (std::max({at, opt, e}) - std::min({at, opt, e})) / std::min({at, opt, e});
    return std::pair{spread < 0.02, fmt({{"at_bcrb", at}, {"wbcrb_opt", opt}, {"ecrb", e}})};
  });
  ordering_chain(
      s, "snapshots N=8..512",
      [&](int n) {
        DoaParams q = p;
        q.n_snapshots = n;
        return make_doa(q);
      },
      {8, 32, 128, 512}, 0.005);
  wbcrb_opt_checks(s, m, 0.005);
  return s.take();
}

std::vector<Check> verify_mean_var() {
  Suite s;
  const MeanVarParams p;
  const VectorModel m = make_mean_var(p);
  const MatrixBoundReport rep = at_bcrb_matrix(m, nullptr, {});
  const auto cf = mean_var_closed_form(p);
  auto entrywise = [](const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
  };
  s.run("bcrb matrix matches closed form (1e-4)", [&] {
    const double e = entrywise(rep.bcrb, cf.bcrb);
    return std::pair{e < 1e-4, fmt({{"rel", e}, {"bcrb11", rep.bcrb(0, 0)}, {"bcrb22", rep.bcrb(1, 1)}})};
  });
  s.run("ecrb matrix matches closed form (1e-4)", [&] {
    const double e = entrywise(rep.ecrb, cf.ecrb);
    return std::pair{e < 1e-4, fmt({{"rel", e}, {"ecrb11", rep.ecrb(0, 0)}, {"ecrb22", rep.ecrb(1, 1)}})};
  });
  s.run("returned matrices symmetric (1e-10)", [&] {
    const double a = std::max({relative_asymmetry(rep.bcrb), relative_asymmetry(rep.ecrb),
                               relative_asymmetry(rep.at_bcrb), relative_asymmetry(rep.f_inner)});
    return std::pair{a < 1e-10, fmt({{"max_asymmetry", a}})};
  });
  s.run("F symmetric before symmetrisation (1e-8)", [&] {
    return std::pair{rep.f_asymmetry < 1e-8, fmt({{"asymmetry", rep.f_asymmetry}})};
  });
  s.run("matrix jensen: ecrb - bcrb PSD over N=20..2000", [&] {
    double worst = 1e300;
    for (int n : {20, 100, 500, 2000}) {
      const VectorModel mm = make_mean_var({p.a, n, p.sigma_mu2});
      const Matrix diff = ecrb_matrix(mm) - bcrb_matrix(mm);
      worst = std::min(worst, min_eig_sym(0.5 * (diff + diff.transpose())));
    }
    return std::pair{worst >= -1e-9, fmt({{"min_eig", worst}})};
  });
  s.run("W = I reduces to bcrb", [&] {
    const Matrix w = wbcrb_matrix(m, [&](const Vector&) -> Matrix { return Matrix::Identity(2, 2); }, nullptr, {});
    const double e = entrywise(w, rep.bcrb);
    return std::pair{e < 1e-10, fmt({{"rel", e}})};
  });
  s.run("divergence of 1/J_DP at (0, 0.5) is (0, 2/N)", [&] {
    Vector t(2);
    t << 0.0, 0.5;
    const Vector dv = divergence_w(
        [&](const Vector& x) -> Matrix { return j_dp_matrix(m, x).inverse(); }, t, m, {});
    const double expect2 = 2.0 / p.n;
    const bool ok = std::abs(dv[0]) < 1e-8 && rel(dv[1], expect2) < 1e-6;
    return std::pair{ok, fmt({{"d_mu", dv[0]}, {"d_phi", dv[1]}, {"expected", expect2}})};
  });
  s.run("at_bcrb approaches ecrb as N doubles (<= 5% at N=2000)", [&] {
    std::ostringstream os;
    double prev = 1e300;
    bool ok = true;
    for (int n : {250, 500, 1000, 2000}) {
      const VectorModel mm = make_mean_var({p.a, n, p.sigma_mu2});
      const auto r = at_bcrb_matrix(mm, nullptr, {});
      const double gap = (r.at_bcrb - r.ecrb).norm() / r.ecrb.norm();
      os << "N=" << n << ":" << gap << " ";
      ok = ok && gap < prev;
      prev = gap;
    }
    ok = ok && prev <= 0.05;
    return std::pair{ok, os.str()};
  });
  s.run("score has zero mean (1e4 draws, 3 SE)", [&] {
    Vector t(2);
    t << 0.1, 0.4;
    const auto st = score_stats(m, t, 10000, kSeed);
    const bool ok = (st.mean.cwiseAbs().array() <= 3.0 * st.mean_se.array()).all();
    return std::pair{ok, fmt({{"mean_mu", st.mean[0]}, {"mean_phi", st.mean[1]}})};
  });
  s.run("prior normalisation", [&] {
    const double mass = m.rule().integrate([&](const Vector& t) { return m.prior_pdf(t); });
    return std::pair{std::abs(mass - 1.0) < 1e-6, fmt({{"mass", mass}})};
  });
  return s.take();
}

}  // namespace

std::vector<Check> verify_preset(const std::string& preset) {
  if (preset == "variance-beta") return verify_variance_beta();
  if (preset == "doa") return verify_doa();
  if (preset == "mean-var") return verify_mean_var();
  throw Error(ErrorKind::InvalidConfig, "unknown preset '" + preset + "'");
}

}  // namespace bayes_bounds

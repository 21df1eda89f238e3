#include "bayes_bounds/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bayes_bounds {

namespace {

constexpr std::uint64_t kCheckSeed = 0x5eed'c0de'1234ULL;

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::BadParams, what);
}

std::string fmt_point(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- ScalarModel

ScalarModel::ScalarModel(ScalarModelParts parts) : p_(std::move(parts)) {
  require(p_.lo < p_.hi, p_.name + ": support requires lo < hi");
  require(p_.n_obs >= 1, p_.name + ": n_obs must be >= 1");
  require(p_.prior_logpdf && p_.cond_fim && p_.sample_prior && p_.sample_cond && p_.cond_loglik,
          p_.name + ": prior_logpdf, cond_fim, samplers and cond_loglik are required");
  p_.quadrature.validate();

  const double mass = rule(p_.quadrature).integrate([&](double t) { return prior_pdf(t); });
  if (std::abs(mass - 1.0) > 1e-4)
    throw Error(ErrorKind::BadParams, p_.name + ": prior integrates to " + fmt_point(mass));

  const double w = p_.hi - p_.lo;
  if (p_.prior_logpdf_deriv) {
    Rng rng(kCheckSeed);
    std::uniform_real_distribution<double> u(p_.lo + 1e-3 * w, p_.hi - 1e-3 * w);
    const DiffSpec fine{1e-6, true, DiffOrder::First};
    for (int i = 0; i < 32; ++i) {
      const double t = u(rng);
      const double h = stencil_step(t, p_.lo, p_.hi, fine);
      const double fd = (p_.prior_logpdf(t + h) - p_.prior_logpdf(t - h)) / (2.0 * h);
      const double an = p_.prior_logpdf_deriv(t);
      if (std::abs(fd - an) > 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}))
        throw Error(ErrorKind::DerivativeMismatch,
                    p_.name + ": prior log-derivative disagrees with finite differences at " + fmt_point(t));
    }
  }

  const auto [a, b] = clipped(p_.lo, p_.hi, p_.quadrature.clip);
  for (int i = 0; i < 64; ++i) {
    const double t = a + (i + 0.5) * (b - a) / 64.0;
    const double jd = p_.cond_fim(t);
    if (!(jd > 0.0) || !std::isfinite(jd))
      throw Error(ErrorKind::NonPositiveInformation, p_.name + ": J_D not positive at " + fmt_point(t));
  }
}

double ScalarModel::prior_logpdf_deriv(double theta) const {
  if (p_.prior_logpdf_deriv) return p_.prior_logpdf_deriv(theta);
  const double h = stencil_step(theta, p_.lo, p_.hi, DiffSpec{});
  return (p_.prior_logpdf(theta + h) - p_.prior_logpdf(theta - h)) / (2.0 * h);
}

std::function<double(double)> ScalarModel::bind_loglik(const Observation& x) const {
  if (p_.bind_loglik) return p_.bind_loglik(x);
  return [this, x](double theta) { return p_.cond_loglik(x, theta); };
}

QuadratureSpec ScalarModel::adapt(const QuadratureSpec& q) const {
  QuadratureSpec eff = p_.quadrature;
  eff.scheme = q.scheme;
  eff.panels = q.panels;
  eff.nodes_per_panel = q.nodes_per_panel;
  eff.grading_levels = std::max(eff.grading_levels, q.grading_levels);
  return eff;
}

Rule1D ScalarModel::rule(const QuadratureSpec& q) const { return make_rule(p_.lo, p_.hi, adapt(q), p_.breaks); }

// ---------------------------------------------------------------- VectorModel

VectorModel::VectorModel(VectorModelParts parts) : p_(std::move(parts)) {
  const auto m = p_.lo.size();
  require(m >= 1 && m == p_.hi.size(), p_.name + ": support box dimensions mismatch");
  require((p_.lo.array() < p_.hi.array()).all(), p_.name + ": support box requires lo < hi");
  require(p_.n_obs >= 1, p_.name + ": n_obs must be >= 1");
  require(p_.prior_logpdf && p_.prior_grad && p_.cond_fim && p_.sample_prior && p_.sample_cond &&
              p_.cond_loglik,
          p_.name + ": all model callbacks are required");
  if (p_.quadrature.empty()) p_.quadrature.assign(static_cast<std::size_t>(m), QuadratureSpec{});
  require(p_.quadrature.size() == static_cast<std::size_t>(m), p_.name + ": one quadrature spec per axis");
  if (p_.param_names.empty()) {
    for (Eigen::Index k = 0; k < m; ++k) p_.param_names.push_back("theta" + std::to_string(k + 1));
  }
  p_.breaks.resize(static_cast<std::size_t>(m));

  const double mass = rule().integrate([&](const Vector& t) { return prior_pdf(t); });
  if (std::abs(mass - 1.0) > 1e-4)
    throw Error(ErrorKind::BadParams, p_.name + ": prior integrates to " + fmt_point(mass));

  Rng rng(kCheckSeed);
  std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
  const Vector width = p_.hi - p_.lo;
  for (int i = 0; i < 32; ++i) {
    Vector t(m);
    for (Eigen::Index k = 0; k < m; ++k) t[k] = p_.lo[k] + u(rng) * width[k];
    const Vector g = p_.prior_grad(t);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(t[k]));
      Vector tp = t, tm = t;
      tp[k] += h;
      tm[k] -= h;
      const double fd = (p_.prior_logpdf(tp) - p_.prior_logpdf(tm)) / (2.0 * h);
      if (std::abs(fd - g[k]) > 1e-4 * std::max({1.0, std::abs(fd), std::abs(g[k])}))
        throw Error(ErrorKind::DerivativeMismatch, p_.name + ": prior gradient disagrees with finite differences");
    }
    Eigen::LLT<Matrix> llt(p_.cond_fim(t));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::NonPositiveInformation, p_.name + ": J_D not positive definite");
  }
}

bool VectorModel::in_support(const Vector& theta) const {
  return theta.size() == p_.lo.size() && (theta.array() > p_.lo.array()).all() &&
         (theta.array() < p_.hi.array()).all();
}

std::function<double(const Vector&)> VectorModel::bind_loglik(const Observation& x) const {
  if (p_.bind_loglik) return p_.bind_loglik(x);
  return [this, x](const Vector& theta) { return p_.cond_loglik(x, theta); };
}

TensorRule VectorModel::rule(const QuadratureSpec* q) const {
  std::vector<QuadratureSpec> specs = p_.quadrature;
  if (q) {
    for (auto& s : specs) {
      s.scheme = q->scheme;
      s.panels = q->panels;
      s.nodes_per_panel = q->nodes_per_panel;
    }
  }
  return make_tensor_rule(p_.lo, p_.hi, specs, p_.breaks);
}

// ----------------------------------------------------------- derived terms

double l_p_scalar(const ScalarModel& m, double theta) {
  if (!m.in_support(theta)) throw Error(ErrorKind::OutOfSupport, m.name() + ": theta=" + fmt_point(theta));
  const double g = m.prior_logpdf_deriv(theta);
  return g * g;
}

double j_dp_scalar(const ScalarModel& m, double theta) {
  const double v = m.cond_fim(theta) + l_p_scalar(m, theta);
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorKind::NonPositiveInformation, m.name() + ": J_DP=" + fmt_point(v) + " at " + fmt_point(theta));
  return v;
}

Matrix j_dp_matrix(const VectorModel& m, const Vector& theta) {
  if (!m.in_support(theta)) throw Error(ErrorKind::OutOfSupport, m.name() + ": theta outside support box");
  const Vector g = m.prior_grad(theta);
  Matrix j = m.cond_fim(theta) + g * g.transpose();
  Eigen::LLT<Matrix> llt(j);
  if (llt.info() != Eigen::Success || !j.allFinite())
    throw Error(ErrorKind::NonPositiveInformation, m.name() + ": J_DP not positive definite");
  return j;
}

// -------------------------------------------------------------- regularity

std::string RegularityReport::summary() const {
  std::ostringstream os;
  os.precision(3);
  os << "C1=" << c1 << (c1_ok() ? "" : "(WARN)") << " C2=" << c2 << (c2_ok() ? "" : "(WARN)") << " C3=" << c3
     << (c3_ok() ? "" : "(WARN)") << " C4=" << c4 << (c4_ok() ? "" : "(WARN)");
  return os.str();
}

RegularityReport check_regularity(const ScalarModel& m, const std::function<double(double)>& w,
                                  const RegularityOptions& opt) {
  RegularityReport r;
  r.tol = opt.tol;
  r.offset = opt.offset > 0.0 ? opt.offset : (m.quadrature().clip > 0.0 ? m.quadrature().clip : 1e-9);
  const double width = m.hi() - m.lo();
  for (double t : {m.lo() + r.offset * width, m.hi() - r.offset * width}) {
    const double f = m.prior_pdf(t);
    const double fp = f * m.prior_logpdf_deriv(t);
    const double wt = w(t);
    const double h = stencil_step(t, m.lo(), m.hi(), DiffSpec{});
    const double w2p = (w(t + h) * w(t + h) - w(t - h) * w(t - h)) / (2.0 * h);
    r.c1 = std::max(r.c1, std::abs(wt * f));
    r.c2 = std::max(r.c2, std::abs(t * wt * f));
    r.c3 = std::max(r.c3, std::abs(w2p * f));
    r.c4 = std::max(r.c4, std::abs(wt * wt * fp));
  }
  return r;
}

// ---------------------------------------------------------- score statistics

ScoreStats score_stats(const ScalarModel& m, double theta, int draws, std::uint64_t seed) {
  Rng rng(seed);
  const double h = stencil_step(theta, m.lo(), m.hi(), DiffSpec{1e-6, true, DiffOrder::First});
  double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto ll = m.bind_loglik(m.sample_cond(rng, theta));
    const double s = (ll(theta + h) - ll(theta - h)) / (2.0 * h);
    s1 += s;
    s2 += s * s;
    q1 += s * s;
    q2 += s * s * s * s;
  }
  const double n = draws;
  ScoreStats st;
  st.mean = s1 / n;
  st.mean_se = std::sqrt(std::max(0.0, s2 / n - st.mean * st.mean) / n);
  st.fisher = q1 / n;
  st.fisher_se = std::sqrt(std::max(0.0, q2 / n - st.fisher * st.fisher) / n);
  return st;
}

VectorScoreStats score_stats(const VectorModel& m, const Vector& theta, int draws, std::uint64_t seed) {
  Rng rng(seed);
  const auto dim = static_cast<Eigen::Index>(m.dim());
  Vector sum = Vector::Zero(dim), sumsq = Vector::Zero(dim);
  Matrix outer = Matrix::Zero(dim, dim);
  for (int i = 0; i < draws; ++i) {
    const auto ll = m.bind_loglik(m.sample_cond(rng, theta));
    Vector s(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double h = stencil_step(theta[k], m.lo()[k], m.hi()[k], DiffSpec{1e-6, true, DiffOrder::First});
      Vector tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      s[k] = (ll(tp) - ll(tm)) / (2.0 * h);
    }
    sum += s;
    sumsq += s.cwiseProduct(s);
    outer += s * s.transpose();
  }
  VectorScoreStats st;
  st.mean = sum / draws;
  st.mean_se = ((sumsq / draws - st.mean.cwiseProduct(st.mean)).cwiseMax(0.0) / draws).cwiseSqrt();
  st.fisher = outer / draws;
  return st;
}

// --------------------------------------------------------------- KS helpers

PriorCdf::PriorCdf(const ScalarModel& m, int cells) {
  const auto [a, b] = clipped(m.lo(), m.hi(), m.quadrature().clip);
  const auto [gx, gw] = gauss_legendre(5);
  x_.reserve(static_cast<std::size_t>(cells) + 1);
  c_.reserve(static_cast<std::size_t>(cells) + 1);
  x_.push_back(a);
  c_.push_back(0.0);
  const double h = (b - a) / cells;
  for (int i = 0; i < cells; ++i) {
    const double lo = a + i * h, mid = lo + 0.5 * h;
    double acc = 0.0;
    for (std::size_t k = 0; k < gx.size(); ++k) acc += gw[k] * m.prior_pdf(mid + 0.5 * h * gx[k]);
    x_.push_back(lo + h);
    c_.push_back(c_.back() + 0.5 * h * acc);
  }
  const double total = c_.back();
  for (double& c : c_) c /= total;
}

double PriorCdf::operator()(double theta) const {
  if (theta <= x_.front()) return 0.0;
  if (theta >= x_.back()) return 1.0;
  const auto it = std::upper_bound(x_.begin(), x_.end(), theta);
  const auto i = static_cast<std::size_t>(it - x_.begin());
  const double t = (theta - x_[i - 1]) / (x_[i] - x_[i - 1]);
  return c_[i - 1] + t * (c_[i] - c_[i - 1]);
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  return std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(static_cast<double>(n));
}

}  // namespace bayes_bounds

#include "bayes_bounds/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

namespace bayes_bounds {

std::string_view to_string(EstimatorKind k) { return k == EstimatorKind::Map ? "map" : "ml"; }

EstimatorKind estimator_from_string(std::string_view s) {
  if (s == "map" || s == "MAP") return EstimatorKind::Map;
  if (s == "ml" || s == "ML") return EstimatorKind::Ml;
  throw Error(ErrorKind::InvalidConfig, "unknown estimator '" + std::string(s) + "'");
}

void McConfig::validate() const {
  if (trials < 100) throw Error(ErrorKind::InvalidConfig, "trials must be >= 100");
  if (grid < 16) throw Error(ErrorKind::InvalidConfig, "search grid must have >= 16 points");
  if (refine < 1) throw Error(ErrorKind::InvalidConfig, "refine must be >= 1");
  if (threads < 0) throw Error(ErrorKind::InvalidConfig, "threads must be >= 0");
}

namespace {

constexpr double kGolden = 0.6180339887498949;

double finite_or_lowest(double v) { return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity(); }

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Golden-section on (lo, hi); the interval ends are never evaluated.
double golden(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iter) {
  double a = lo, b = hi;
  double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
  double fc = finite_or_lowest(f(c)), fd = finite_or_lowest(f(d));
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = finite_or_lowest(f(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = finite_or_lowest(f(d));
    }
  }
  return fc >= fd ? c : d;
}

std::pair<double, double> search_box(double lo, double hi, double clip) { return clipped(lo, hi, clip); }

double scalar_search(const ScalarModel& m, const Observation& x, const SearchOptions& s, bool with_prior) {
  const auto ll = m.bind_loglik(x);
  const auto [a, b] = search_box(m.lo(), m.hi(), m.quadrature().clip);
  if (with_prior) return maximize_1d([&](double t) { return ll(t) + m.prior_logpdf(t); }, a, b, s);
  return maximize_1d(ll, a, b, s);
}

Vector vector_search(const VectorModel& m, const Observation& x, const SearchOptions& s, bool with_prior) {
  const auto ll = m.bind_loglik(x);
  const Eigen::Index n = m.dim();
  Vector lo(n), hi(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [a, b] = search_box(m.lo()[k], m.hi()[k], m.quadrature()[static_cast<std::size_t>(k)].clip);
    lo[k] = a;
    hi[k] = b;
  }
  auto objective = [&](const Vector& t) {
    return finite_or_lowest(with_prior ? ll(t) + m.prior_logpdf(t) : ll(t));
  };

  const int per_axis = std::max(4, s.grid / 8);
  const Vector cell = (hi - lo) / per_axis;
  Vector t(n), best(n);
  double best_v = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    for (Eigen::Index k = 0; k < n; ++k) t[k] = lo[k] + (idx[static_cast<std::size_t>(k)] + 0.5) * cell[k];
    const double v = objective(t);
    if (v > best_v) {
      best_v = v;
      best = t;
    }
    Eigen::Index k = n;
    bool done = true;
    while (k > 0) {
      --k;
      if (++idx[static_cast<std::size_t>(k)] < per_axis) {
        done = false;
        break;
      }
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (done) break;
  }
  if (!std::isfinite(best_v)) throw Error(ErrorKind::DegenerateObjective, "objective is not finite on the search grid");

  // Coordinate-wise golden-section, bracket of one coarse cell either side.
  for (int sweep = 0; sweep < s.refine; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector p = best;
      auto along = [&](double v) {
        p[k] = v;
        return objective(p);
      };
      const double a = std::max(lo[k], best[k] - cell[k]), b = std::min(hi[k], best[k] + cell[k]);
      const double v = golden(along, a, b, (hi[k] - lo[k]) * 1e-6, 200);
      p[k] = v;
      const double pv = objective(p);
      if (pv >= best_v) {
        moved = std::max(moved, std::abs(v - best[k]) / (hi[k] - lo[k]));
        best_v = pv;
        best[k] = v;
      }
    }
    if (moved < 1e-7) break;
  }
  for (Eigen::Index k = 0; k < n; ++k) best[k] = std::clamp(best[k], lo[k], hi[k]);
  return best;
}

}  // namespace

double maximize_1d(const std::function<double(double)>& objective, double lo, double hi, const SearchOptions& s) {
  const int g = std::max(s.grid, 3);
  const double cell = (hi - lo) / g;
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < g; ++i) {
    const double v = finite_or_lowest(objective(lo + (i + 0.5) * cell));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best < 0) throw Error(ErrorKind::DegenerateObjective, "objective is not finite on the search grid");
  const double centre = lo + (best + 0.5) * cell;
  const double a = std::max(lo, centre - cell), b = std::min(hi, centre + cell);
  const double t = golden(objective, a, b, (hi - lo) * 1e-6, s.refine);
  const double v = finite_or_lowest(objective(t));
  return std::clamp(v >= best_v ? t : centre, lo, hi);
}

double map_estimate(const ScalarModel& m, const Observation& x, const SearchOptions& s) {
  return scalar_search(m, x, s, true);
}
double ml_estimate(const ScalarModel& m, const Observation& x, const SearchOptions& s) {
  return scalar_search(m, x, s, false);
}
Vector map_estimate(const VectorModel& m, const Observation& x, const SearchOptions& s) {
  return vector_search(m, x, s, true);
}
Vector ml_estimate(const VectorModel& m, const Observation& x, const SearchOptions& s) {
  return vector_search(m, x, s, false);
}

Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t state = seed;
  const std::uint64_t base = splitmix64(state);
  state = base ^ (trial * 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BAYES_BOUNDS_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

// Runs fn(i) for every trial on a worker pool; rethrows the failure of the
// lowest trial index.
void for_each_trial(int trials, int threads, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_at = trials;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= trials) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (i > failed_at) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const int n = std::max(1, std::min(threads, trials));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (!failure) return;
  try {
    std::rethrow_exception(failure);
  } catch (const Error& e) {
    std::ostringstream os;
    os << "trial " << failed_at << ": " << std::string(e.what()).substr(to_string(e.kind()).size() + 2);
    throw Error(e.kind(), os.str());
  }
}

// Pairwise sum of rows [lo, hi) of a column-per-trial matrix.
Vector pairwise_sum(const Matrix& cols, Eigen::Index lo, Eigen::Index hi) {
  if (hi - lo <= 8) {
    Vector s = Vector::Zero(cols.rows());
    for (Eigen::Index i = lo; i < hi; ++i) s += cols.col(i);
    return s;
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  return pairwise_sum(cols, lo, mid) + pairwise_sum(cols, mid, hi);
}

// errors: M x trials.
McResult summarise(const Matrix& errors, const McConfig& cfg) {
  const Eigen::Index m = errors.rows(), n = errors.cols();
  // Each column holds the vectorised outer product e e'.
  Matrix outer(m * m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix o = errors.col(i) * errors.col(i).transpose();
    outer.col(i) = Eigen::Map<const Vector>(o.data(), m * m);
  }
  const Vector total = pairwise_sum(outer, 0, n);
  const Vector mean = total / static_cast<double>(n);
  // Jackknife over leave-one-out means.
  Vector ss = Vector::Zero(m * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector loo = (total - outer.col(i)) / static_cast<double>(n - 1);
    ss += (loo - mean).cwiseAbs2();
  }
  const Vector se = (ss * (static_cast<double>(n - 1) / static_cast<double>(n))).cwiseSqrt();

  McResult r;
  r.mse = Eigen::Map<const Matrix>(mean.data(), m, m);
  r.mse = 0.5 * (r.mse + r.mse.transpose());
  r.mse_se = Eigen::Map<const Matrix>(se.data(), m, m);
  r.rmse = r.mse.diagonal().cwiseSqrt();
  r.trials = static_cast<int>(n);
  r.seed = cfg.seed;
  r.estimator = cfg.estimator;
  return r;
}

}  // namespace

McResult monte_carlo_mse(const ScalarModel& m, const McConfig& cfg, const ScalarEstimator& est) {
  cfg.validate();
  Matrix errors(1, cfg.trials);
  for_each_trial(cfg.trials, resolve_threads(cfg.threads), [&](int i) {
    Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(i));
    const double theta = m.sample_prior(rng);
    const Observation x = m.sample_cond(rng, theta);
    errors(0, i) = est(x, theta) - theta;
  });
  return summarise(errors, cfg);
}

McResult monte_carlo_mse(const VectorModel& m, const McConfig& cfg, const VectorEstimator& est) {
  cfg.validate();
  Matrix errors(m.dim(), cfg.trials);
  for_each_trial(cfg.trials, resolve_threads(cfg.threads), [&](int i) {
    Rng rng = trial_rng(cfg.seed, static_cast<std::uint64_t>(i));
    const Vector theta = m.sample_prior(rng);
    const Observation x = m.sample_cond(rng, theta);
    errors.col(i) = est(x, theta) - theta;
  });
  return summarise(errors, cfg);
}

McResult monte_carlo_mse(const ScalarModel& m, const McConfig& cfg) {
  const SearchOptions s{cfg.grid, cfg.refine};
  const bool map = cfg.estimator == EstimatorKind::Map;
  return monte_carlo_mse(m, cfg, [&](const Observation& x, double) {
    return map ? map_estimate(m, x, s) : ml_estimate(m, x, s);
  });
}

McResult monte_carlo_mse(const VectorModel& m, const McConfig& cfg) {
  const SearchOptions s{cfg.grid, cfg.refine};
  const bool map = cfg.estimator == EstimatorKind::Map;
  return monte_carlo_mse(m, cfg, [&](const Observation& x, const Vector&) {
    return map ? map_estimate(m, x, s) : ml_estimate(m, x, s);
  });
}

}  // namespace bayes_bounds

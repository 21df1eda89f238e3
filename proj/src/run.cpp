#include "bayes_bounds/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bayes_bounds/bounds_scalar.hpp"
#include "bayes_bounds/bounds_vector.hpp"
#include "bayes_bounds/version.hpp"

namespace bayes_bounds {

using nlohmann::json;

namespace {

const std::vector<std::string> kBoundOrder{"bcrb", "ecrb", "at_bcrb", "wbcrb_sub", "wbcrb_opt"};
const std::set<std::string> kSweepKeys{"N", "snr", "a", "sigma_mu2"};

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::InvalidConfig, field + ": " + msg);
}

bool is_vector_preset(const std::string& preset) { return preset == "mean-var"; }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_number(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    bad(field, "'" + s + "' is not a number");
  }
}

}  // namespace

std::vector<double> parse_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number(item, field));
  return out;
}

McSpec parse_mc(const std::string& s) {
  McSpec mc;
  for (const auto& item : split(s, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) bad("mc", "expected key=value, got '" + item + "'");
    const std::string k = trim(item.substr(0, eq)), v = trim(item.substr(eq + 1));
    if (k == "trials") {
      mc.trials = static_cast<int>(parse_number(v, "mc.trials"));
    } else if (k == "seed") {
      try {
        mc.seed = std::stoull(v);
      } catch (const std::exception&) {
        bad("mc.seed", "'" + v + "' is not an unsigned integer");
      }
    } else if (k == "estimator") {
      mc.estimator = v;
    } else if (k == "grid") {
      mc.grid = static_cast<int>(parse_number(v, "mc.grid"));
    } else if (k == "refine") {
      mc.refine = static_cast<int>(parse_number(v, "mc.refine"));
    } else {
      bad("mc", "unknown key '" + k + "'");
    }
  }
  return mc;
}

double default_grid_delta(const std::string& preset) { return preset == "doa" ? 0.005 : 0.02; }

void RunConfig::validate() const {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end()) bad("preset", "unknown preset '" + preset + "'");
  const PresetParams defaults = preset_defaults(preset);
  for (const auto& [k, v] : params) {
    if (!defaults.contains(k)) bad("params", "preset '" + preset + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) bad("params." + k, "must be finite");
  }
  if (!sweep_key.empty()) {
    if (!kSweepKeys.contains(sweep_key) || !defaults.contains(sweep_key))
      bad("sweep", "'" + sweep_key + "' is not a sweep axis of preset '" + preset + "'");
    if (sweep_values.empty()) bad("sweep", "value list is empty");
    for (std::size_t i = 1; i < sweep_values.size(); ++i)
      if (!(sweep_values[i] > sweep_values[i - 1])) bad("sweep", "values must be strictly increasing");
    if (params.contains(sweep_key)) bad("params", "'" + sweep_key + "' is also the sweep axis");
  } else if (!sweep_values.empty()) {
    bad("sweep", "values given without an axis");
  }
  if (bounds.empty()) bad("bounds", "no bounds requested");
  for (const auto& b : bounds) {
    if (b == "all") continue;
    if (std::find(kBoundOrder.begin(), kBoundOrder.end(), b) == kBoundOrder.end()) bad("bounds", "unknown bound '" + b + "'");
    if (is_vector_preset(preset) && (b == "wbcrb_opt" || b == "wbcrb_sub"))
      bad("bounds", b + " is only defined for scalar parameters");
  }
  if (mc) {
    if (mc->trials < 100) bad("mc.trials", "must be >= 100");
    if (mc->estimator != "map" && mc->estimator != "ml" && mc->estimator != "both")
      bad("mc.estimator", "must be map, ml or both");
    if (mc->grid < 16) bad("mc.grid", "must be >= 16");
    if (mc->refine < 1) bad("mc.refine", "must be >= 1");
  }
  if (quad) {
    if (quad->panels < 0) bad("quad.panels", "must be >= 0");
    if (quad->nodes < 1 || quad->nodes > 64) bad("quad.nodes", "must be in [1, 64]");
  }
  if (!(diff.h > 0.0)) bad("diff.h", "must be positive");
  if (!(grid_delta >= 0.0)) bad("grid.delta", "must be >= 0");
  if (format != "csv" && format != "json") bad("format", "must be csv or json");
  if (threads < 0) bad("threads", "must be >= 0");
}

std::vector<std::string> RunConfig::resolved_bounds() const {
  const bool all = std::find(bounds.begin(), bounds.end(), "all") != bounds.end();
  std::vector<std::string> out;
  for (const auto& b : kBoundOrder) {
    if (is_vector_preset(preset) && (b == "wbcrb_opt" || b == "wbcrb_sub")) continue;
    if (all || std::find(bounds.begin(), bounds.end(), b) != bounds.end()) out.push_back(b);
  }
  return out;
}

json to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["params"] = json::object();
  for (const auto& [k, v] : c.params) j["params"][k] = v;
  j["sweep"] = {{"key", c.sweep_key}, {"values", c.sweep_values}};
  j["bounds"] = c.bounds;
  if (c.mc) {
    j["mc"] = {{"trials", c.mc->trials},
               {"seed", c.mc->seed},
               {"estimator", c.mc->estimator},
               {"grid", c.mc->grid},
               {"refine", c.mc->refine}};
  }
  if (c.quad) {
    j["quad"] = {{"scheme", std::string(to_string(c.quad->scheme))},
                 {"panels", c.quad->panels},
                 {"nodes", c.quad->nodes}};
  }
  j["diff"] = {{"h", c.diff.h}};
  j["grid"] = {{"delta", c.grid_delta}, {"phi", std::string(to_string(c.phi))}};
  j["out"] = c.out;
  j["format"] = c.format;
  j["raw_mse"] = c.raw_mse;
  j["threads"] = c.threads;
  return j;
}

RunConfig run_config_from_json(const json& doc) {
  const json& j = doc.contains("config") && doc["config"].is_object() ? doc["config"] : doc;
  if (!j.is_object()) bad("config", "expected a JSON object");
  RunConfig c;
  try {
    c.preset = j.at("preset").get<std::string>();
    if (j.contains("params"))
      for (const auto& [k, v] : j["params"].items()) c.params[k] = v.get<double>();
    if (j.contains("sweep")) {
      c.sweep_key = j["sweep"].value("key", "");
      c.sweep_values = j["sweep"].value("values", std::vector<double>{});
    }
    if (j.contains("bounds")) c.bounds = j["bounds"].get<std::vector<std::string>>();
    if (j.contains("mc") && !j["mc"].is_null()) {
      McSpec mc;
      const auto& m = j["mc"];
      mc.trials = m.value("trials", mc.trials);
      mc.seed = m.value("seed", mc.seed);
      mc.estimator = m.value("estimator", mc.estimator);
      mc.grid = m.value("grid", mc.grid);
      mc.refine = m.value("refine", mc.refine);
      c.mc = mc;
    }
    if (j.contains("quad") && !j["quad"].is_null()) {
      QuadOverride q;
      q.scheme = quadrature_scheme_from_string(j["quad"].value("scheme", std::string("gauss-legendre-panels")));
      q.panels = j["quad"].value("panels", q.panels);
      q.nodes = j["quad"].value("nodes", q.nodes);
      c.quad = q;
    }
    if (j.contains("diff")) c.diff.h = j["diff"].value("h", c.diff.h);
    if (j.contains("grid")) {
      c.grid_delta = j["grid"].value("delta", 0.0);
      c.phi = phi_form_from_string(j["grid"].value("phi", std::string("symmetric")));
    }
    c.out = j.value("out", "");
    c.format = j.value("format", "csv");
    c.raw_mse = j.value("raw_mse", false);
    c.threads = j.value("threads", 0);
  } catch (const json::exception& e) {
    bad("config", e.what());
  }
  return c;
}

namespace {

struct Point {
  std::vector<double> row;
  json diag;
};

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(r);
  }
  return rows;
}

json regularity_json(const RegularityReport& r) {
  return {{"c1", r.c1}, {"c2", r.c2}, {"c3", r.c3}, {"c4", r.c4}, {"offset", r.offset}, {"warn", r.warn()}};
}

double to_output(double mse, bool raw) {
  if (raw) return mse;
  return mse >= 0.0 ? std::sqrt(mse) : std::numeric_limits<double>::quiet_NaN();
}

std::vector<std::string> estimators_of(const McSpec& mc) {
  if (mc.estimator == "both") return {"map", "ml"};
  return {mc.estimator};
}

McConfig mc_config(const McSpec& s, const std::string& estimator, int threads) {
  McConfig c;
  c.trials = s.trials;
  c.seed = s.seed;
  c.estimator = estimator_from_string(estimator);
  c.grid = s.grid;
  c.refine = s.refine;
  c.threads = threads;
  return c;
}

void append_mc(Point& p, const RunConfig& cfg, const McResult& r, const std::string& est) {
  const Eigen::Index n = r.mse.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mse = r.mse(k, k), se = r.mse_se(k, k);
    p.row.push_back(to_output(mse, cfg.raw_mse));
    // delta method: se(sqrt(m)) = se(m) / (2 sqrt(m))
    p.row.push_back(cfg.raw_mse ? se : (mse > 0.0 ? se / (2.0 * std::sqrt(mse)) : 0.0));
  }
  p.diag["mc"][est] = {{"mse", matrix_json(r.mse)},
                       {"mse_se", matrix_json(r.mse_se)},
                       {"trials", r.trials},
                       {"seed", r.seed}};
}

Point scalar_point(const RunConfig& cfg, const ScalarModel& m, int mc_threads) {
  Point p;
  const auto bounds = cfg.resolved_bounds();
  QuadratureSpec q = m.quadrature();
  if (cfg.quad && cfg.quad->panels > 0) {
    q.scheme = cfg.quad->scheme;
    q.panels = cfg.quad->panels;
    q.nodes_per_panel = cfg.quad->nodes;
  }
  const DiffSpec& d = cfg.diff;
  auto wants = [&](const char* b) { return std::find(bounds.begin(), bounds.end(), b) != bounds.end(); };

  json conv = json::object();
  json warnings = json::array();
  auto note_convergence = [&](const char* name, const Convergence& c) {
    conv[name] = c.rel_change;
    if (!c.converged()) warnings.push_back(std::string("NonConverged: ") + name + " moved by " + std::to_string(c.rel_change) + " under panel doubling");
  };

  std::optional<InverseInfoMoments> mom;
  if (wants("at_bcrb") || wants("wbcrb_sub")) {
    mom = inverse_info_moments(m, q, d);
    p.diag["e_inv"] = mom->e_inv;
    p.diag["rho"] = mom->rho();
  }
  for (const auto& b : bounds) {
    double v = 0.0;
    if (b == "bcrb") {
      const auto c = check_convergence([&](const QuadratureSpec& qq) { return bcrb(m, qq); }, q);
      note_convergence("bcrb", c);
      v = c.value;
    } else if (b == "ecrb") {
      const auto c = check_convergence([&](const QuadratureSpec& qq) { return ecrb(m, qq); }, q);
      note_convergence("ecrb", c);
      v = c.value;
    } else if (b == "at_bcrb") {
      const auto c = check_convergence([&](const QuadratureSpec& qq) { return at_bcrb(m, qq, d).bound; }, q);
      note_convergence("at_bcrb", c);
      v = c.value;
    } else if (b == "wbcrb_sub") {
      v = wbcrb_sub(*mom);
      if (v <= 0.0) warnings.push_back("wbcrb_sub is not positive (vacuous); RMSE column is nan");
    } else if (b == "wbcrb_opt") {
      const double delta = cfg.grid_delta > 0.0 ? cfg.grid_delta : default_grid_delta(cfg.preset);
      const auto r = wbcrb_opt(m, delta, cfg.phi);
      const auto fine = wbcrb_opt(m, 0.5 * delta, cfg.phi);
      const double rel = std::abs(fine.bound - r.bound) / fine.bound;
      p.diag["wbcrb_opt"] = {{"delta", delta},
                             {"L", r.weight.size()},
                             {"phi", std::string(to_string(cfg.phi))},
                             {"asymptotic", r.asymptotic},
                             {"half_delta_rel_change", rel}};
      if (rel > 0.01) warnings.push_back("wbcrb_opt moved by more than 1% when halving the grid spacing");
      v = r.bound;
    }
    p.diag["bounds"][b] = v;
    p.row.push_back(to_output(v, cfg.raw_mse));
  }
  p.diag["convergence"] = conv;
  p.diag["regularity"]["w=1"] = regularity_json(check_regularity(m, [](double) { return 1.0; }));
  p.diag["regularity"]["w=1/J_DP"] =
      regularity_json(check_regularity(m, [&m](double t) { return 1.0 / j_dp_scalar(m, t); }));

  if (cfg.mc) {
    for (const auto& est : estimators_of(*cfg.mc)) {
      append_mc(p, cfg, monte_carlo_mse(m, mc_config(*cfg.mc, est, mc_threads)), est);
    }
  }
  p.diag["warnings"] = warnings;
  return p;
}

Point vector_point(const RunConfig& cfg, const VectorModel& m, int mc_threads) {
  Point p;
  const auto bounds = cfg.resolved_bounds();
  QuadratureSpec qo;
  const QuadratureSpec* q = nullptr;
  if (cfg.quad && cfg.quad->panels > 0) {
    qo.scheme = cfg.quad->scheme;
    qo.panels = cfg.quad->panels;
    qo.nodes_per_panel = cfg.quad->nodes;
    q = &qo;
  }
  MatrixBoundReport rep;
  const bool need_at = std::find(bounds.begin(), bounds.end(), "at_bcrb") != bounds.end();
  if (need_at) {
    rep = at_bcrb_matrix(m, q, cfg.diff);
  } else {
    rep.bcrb = bcrb_matrix(m, q);
    rep.ecrb = ecrb_matrix(m, q);
  }
  p.diag["jensen_min_eig"] = min_eig_sym(0.5 * ((rep.ecrb - rep.bcrb) + (rep.ecrb - rep.bcrb).transpose()));
  for (const auto& b : bounds) {
    const Matrix& mat = b == "bcrb" ? rep.bcrb : b == "ecrb" ? rep.ecrb : rep.at_bcrb;
    p.diag["bounds"][b] = matrix_json(mat);
    for (Eigen::Index k = 0; k < mat.rows(); ++k) p.row.push_back(to_output(mat(k, k), cfg.raw_mse));
  }
  if (need_at) {
    p.diag["F"] = matrix_json(rep.f_inner);
    p.diag["f_asymmetry"] = rep.f_asymmetry;
    p.diag["c8"] = rep.c8;
  }
  if (cfg.mc) {
    for (const auto& est : estimators_of(*cfg.mc)) {
      append_mc(p, cfg, monte_carlo_mse(m, mc_config(*cfg.mc, est, mc_threads)), est);
    }
  }
  p.diag["warnings"] = rep.warnings;
  return p;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunResult run(const RunConfig& cfg_in) {
  cfg_in.validate();
  RunConfig cfg = cfg_in;
  if (cfg.sweep_key.empty()) {
    cfg.sweep_key = "N";
    cfg.sweep_values = {preset_defaults(cfg.preset).at("N")};
    if (cfg.params.contains("N")) {
      cfg.sweep_values = {cfg.params.at("N")};
      cfg.params.erase("N");
    }
  }
  const auto bounds = cfg.resolved_bounds();
  const bool vec = is_vector_preset(cfg.preset);
  const std::vector<std::string> names = vec ? std::vector<std::string>{"mu", "phi"} : std::vector<std::string>{};

  RunResult res;
  res.header.push_back(cfg.sweep_key);
  for (const auto& b : bounds) {
    if (vec) {
      for (const auto& n : names) res.header.push_back(b + "_" + n);
    } else {
      res.header.push_back(b);
    }
  }
  if (cfg.mc) {
    const auto ests = estimators_of(*cfg.mc);
    const std::string base = cfg.raw_mse ? "mc_mse" : "mc_rmse";
    for (const auto& e : ests) {
      const std::string suffix = ests.size() > 1 ? "_" + e : "";
      if (vec) {
        for (const auto& n : names) {
          res.header.push_back(base + suffix + "_" + n);
          res.header.push_back("mc_se" + suffix + "_" + n);
        }
      } else {
        res.header.push_back(base + suffix);
        res.header.push_back("mc_se" + suffix);
      }
    }
  }

  const std::size_t n = cfg.sweep_values.size();
  const int threads = resolve_threads(cfg.threads);
  // Either sweep points or Monte-Carlo trials run in parallel, not both.
  const bool parallel_points = n > 1 && static_cast<std::size_t>(threads) >= n;
  const int workers = parallel_points ? static_cast<int>(n) : 1;
  const int mc_threads = parallel_points ? 1 : threads;

  std::vector<Point> points(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        PresetParams params = cfg.params;
        params[cfg.sweep_key] = cfg.sweep_values[i];
        const AnyModel model = make_preset(cfg.preset, params);
        points[i] = std::holds_alternative<ScalarModel>(model)
                        ? scalar_point(cfg, std::get<ScalarModel>(model), mc_threads)
                        : vector_point(cfg, std::get<VectorModel>(model), mc_threads);
        points[i].diag["x"] = cfg.sweep_values[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "sweep point " << cfg.sweep_key << "=" << format_value(cfg.sweep_values[i]) << ": "
         << std::string(e.what()).substr(to_string(e.kind()).size() + 2);
      throw Error(e.kind(), os.str());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{cfg.sweep_values[i]};
    row.insert(row.end(), points[i].row.begin(), points[i].row.end());
    res.rows.push_back(std::move(row));
    res.diagnostics.push_back(std::move(points[i].diag));
  }
  return res;
}

std::string to_csv(const RunResult& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.header.size(); ++i) os << (i ? "," : "") << r.header[i];
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_value(row[i]);
    os << '\n';
  }
  return os.str();
}

json sidecar(const RunConfig& cfg, const RunResult& r) {
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["config"] = to_json(cfg);
  if (cfg.mc) j["seed"] = cfg.mc->seed;
  j["columns"] = r.header;
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr = json::array();
    for (double v : row) jr.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    rows.push_back(jr);
  }
  j["rows"] = rows;
  j["points"] = r.diagnostics;
  return j;
}

int exit_code_for(ErrorKind k) {
  return (k == ErrorKind::InvalidConfig || k == ErrorKind::BadParams) ? 2 : 3;
}

}  // namespace bayes_bounds

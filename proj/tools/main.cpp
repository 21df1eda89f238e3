#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bayes_bounds/run.hpp"
#include "bayes_bounds/verify.hpp"
#include "bayes_bounds/version.hpp"

using namespace bayes_bounds;

namespace {

std::map<std::string, std::string> parse_kv(const std::string& s, const std::string& field) {
  std::map<std::string, std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, field + ": expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double to_double(const std::string& v, const std::string& field) {
  const auto xs = parse_list(v, field);
  if (xs.size() != 1) throw Error(ErrorKind::InvalidConfig, field + ": expected one number");
  return xs[0];
}

std::filesystem::path sidecar_path(const std::string& out) {
  std::filesystem::path p(out);
  if (p.extension() == ".json") return p.string() + ".meta.json";
  return p.replace_extension(".json");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::InvalidConfig, "out: cannot open '" + p.string() + "' for writing");
  f << text;
}

struct BoundsFlags {
  std::string config, preset, sweep, bounds, mc, quad, grid, diff, out, format;
  std::vector<std::string> params;
  bool raw_mse = false;
  int threads = -1;
};

RunConfig assemble(const BoundsFlags& f, const CLI::App& cmd) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw Error(ErrorKind::InvalidConfig, "config: cannot read '" + f.config + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
    }
    c = run_config_from_json(j);
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--preset")) c.preset = f.preset;
  for (const auto& p : f.params) {
    for (const auto& [k, v] : parse_kv(p, "param")) c.params[k] = to_double(v, "param." + k);
  }
  if (given("--sweep")) {
    const auto eq = f.sweep.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "sweep: expected key=v1,v2,...");
    c.sweep_key = f.sweep.substr(0, eq);
    c.sweep_values = parse_list(f.sweep.substr(eq + 1), "sweep");
  }
  if (given("--bounds")) {
    c.bounds.clear();
    std::stringstream ss(f.bounds);
    std::string b;
    while (std::getline(ss, b, ',')) c.bounds.push_back(b);
  }
  if (given("--mc")) c.mc = parse_mc(f.mc);
  if (given("--quad")) {
    QuadOverride q;
    for (const auto& [k, v] : parse_kv(f.quad, "quad")) {
      if (k == "scheme") {
        q.scheme = quadrature_scheme_from_string(v);
      } else if (k == "panels") {
        q.panels = static_cast<int>(to_double(v, "quad.panels"));
      } else if (k == "nodes") {
        q.nodes = static_cast<int>(to_double(v, "quad.nodes"));
      } else {
        throw Error(ErrorKind::InvalidConfig, "quad: unknown key '" + k + "'");
      }
    }
    c.quad = q;
  }
  if (given("--grid")) {
    for (const auto& [k, v] : parse_kv(f.grid, "grid")) {
      if (k == "delta") {
        c.grid_delta = to_double(v, "grid.delta");
      } else if (k == "phi") {
        c.phi = phi_form_from_string(v);
      } else {
        throw Error(ErrorKind::InvalidConfig, "grid: unknown key '" + k + "'");
      }
    }
  }
  if (given("--diff")) {
    for (const auto& [k, v] : parse_kv(f.diff, "diff")) {
      if (k != "h") throw Error(ErrorKind::InvalidConfig, "diff: unknown key '" + k + "'");
      c.diff.h = to_double(v, "diff.h");
    }
  }
  if (given("--out")) c.out = f.out;
  if (given("--format")) c.format = f.format;
  if (given("--raw-mse")) c.raw_mse = true;
  if (given("--threads")) c.threads = f.threads;
  return c;
}

int run_bounds(const BoundsFlags& f, const CLI::App& cmd) {
  const RunConfig cfg = assemble(f, cmd);
  const RunResult r = run(cfg);
  const nlohmann::json side = sidecar(cfg, r);
  if (cfg.out.empty()) {
    std::cout << (cfg.format == "csv" ? to_csv(r) : side.dump(2) + "\n");
    return 0;
  }
  if (cfg.format == "csv") {
    write_file(cfg.out, to_csv(r));
    write_file(sidecar_path(cfg.out), side.dump(2) + "\n");
  } else {
    write_file(cfg.out, side.dump(2) + "\n");
  }
  return 0;
}

int run_verify(const std::string& preset) {
  const auto checks = verify_preset(preset);
  int failed = 0;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  [" << c.detail << "]\n";
    if (!c.pass) ++failed;
  }
  std::cout << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Cramer-Rao-type bounds and Monte-Carlo MSE"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  BoundsFlags f;
  auto* bounds = app.add_subcommand("bounds", "Evaluate bounds (and optionally MC RMSE) over a sweep");
  bounds->add_option("--config", f.config, "RunConfig JSON or a previous sidecar");
  bounds->add_option("--preset", f.preset, "variance-beta | doa | mean-var");
  bounds->add_option("--param", f.params, "Preset parameter override k=v[,k=v]");
  bounds->add_option("--sweep", f.sweep, "Sweep axis and values, e.g. N=8,16,32");
  bounds->add_option("--bounds", f.bounds, "all or a list of bcrb,ecrb,at_bcrb,wbcrb_sub,wbcrb_opt");
  bounds->add_option("--mc", f.mc, "trials=,estimator=map|ml|both,seed=,grid=,refine=");
  bounds->add_option("--quad", f.quad, "scheme=gl|simpson,panels=,nodes=");
  bounds->add_option("--grid", f.grid, "delta=<spacing>,phi=symmetric|paper");
  bounds->add_option("--diff", f.diff, "h=<relative step>");
  bounds->add_option("--out", f.out, "Output file (stdout if omitted)");
  bounds->add_option("--format", f.format, "csv | json");
  bounds->add_flag("--raw-mse", f.raw_mse, "Report MSE instead of RMSE");
  bounds->add_option("--threads", f.threads, "Worker threads (0 = BAYES_BOUNDS_THREADS or all cores)");

  std::string preset;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite of a preset");
  verify->add_option("preset", preset, "variance-beta | doa | mean-var")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*bounds) return run_bounds(f, *bounds);
    return run_verify(preset);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return *verify ? 2 : exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

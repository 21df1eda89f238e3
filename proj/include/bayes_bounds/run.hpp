#pragma once

// Sweep driver behind the command line: evaluates the requested bounds and
// Monte-Carlo RMSE at every sweep point of a preset.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayes_bounds/estimators.hpp"
#include "bayes_bounds/models.hpp"
#include "bayes_bounds/wbcrb_opt.hpp"

namespace bayes_bounds {

struct McSpec {
  int trials = 5000;
  std::uint64_t seed = 20240607;
  std::string estimator = "map";  // map, ml or both
  int grid = 512;
  int refine = 100;
};

struct QuadOverride {
  QuadratureScheme scheme = QuadratureScheme::GaussLegendrePanels;
  int panels = 0;  // 0 keeps the model's own settings
  int nodes = 5;
};

struct RunConfig {
  std::string preset;
  PresetParams params;
  std::string sweep_key;
  std::vector<double> sweep_values;
  std::vector<std::string> bounds{"all"};
  std::optional<McSpec> mc;
  std::optional<QuadOverride> quad;
  DiffSpec diff;
  double grid_delta = 0.0;  // 0: preset default
  PhiForm phi = PhiForm::Symmetric;
  std::string out;
  std::string format = "csv";
  bool raw_mse = false;
  int threads = 0;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
  /// Bound names after expanding "all", in output order.
  std::vector<std::string> resolved_bounds() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Accepts a RunConfig object or a sidecar document carrying one under "config".
RunConfig run_config_from_json(const nlohmann::json& j);

/// Parses "k=v,k=v" for --mc and "v1,v2" lists.
McSpec parse_mc(const std::string& s);
std::vector<double> parse_list(const std::string& s, const std::string& field);

struct RunResult {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<nlohmann::json> diagnostics;
};

/// Grid spacing used for wbcrb_opt when the config leaves it at 0.
double default_grid_delta(const std::string& preset);

RunResult run(const RunConfig& cfg);

std::string to_csv(const RunResult& r);
nlohmann::json sidecar(const RunConfig& cfg, const RunResult& r);

/// Exit code for an error kind: 2 for configuration problems, 3 otherwise.
int exit_code_for(ErrorKind k);

}  // namespace bayes_bounds

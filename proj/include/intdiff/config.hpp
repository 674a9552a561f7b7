#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "intdiff/functions.hpp"
#include "intdiff/mc.hpp"
#include "intdiff/model.hpp"
#include "intdiff/pbef.hpp"
#include "intdiff/simulate.hpp"

namespace intdiff {

enum class Command { simulate, verify_expansion, avar, estimate, study, rate_study };

std::string to_string(Command c);

struct EstimatorConfig {
  int q = 1;
  CoeffMode mode = CoeffMode::expansion;
  bool corrected_mean = true;
  std::vector<std::size_t> free;  // parameter indices
  Bounds bounds;
  InitRule init_rule = InitRule::truth;
  std::vector<double> init;
  bool full_multistart = true;
};

struct RunConfig {
  Command command = Command::simulate;
  std::string model_name = "ou";
  DiffusionModel model = ou_model();
  ParamVector theta;
  SmoothFunction f = SmoothFunction::monomial(2);
  std::string f_spec = "x^2";

  // simulate / estimate (when no data file) / verify-expansion
  std::size_t n = 0;
  double delta = 0;
  std::size_t substeps = 16;
  Stepper stepper = Stepper::automatic;
  std::optional<double> x0;

  // verify-expansion
  std::vector<double> deltas;

  // avar
  std::optional<double> gamma_halfwidth;
  std::size_t gamma_points = 0;

  // estimate / study / rate-study
  std::optional<EstimatorConfig> estimator;
  std::optional<std::string> data_path;
  std::vector<GridPoint> grid;
  std::size_t replications = 500;

  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output = ".";

  /// Normalized document with defaults applied, echoed into reports.
  nlohmann::ordered_json echo;
};

/// Throws ConfigError naming the offending field and, when it can be
/// located, the 1-based line in `text`.
RunConfig parse_config(const std::string& text);

ExperimentConfig experiment_config(const RunConfig& rc);
EstimatorSpec estimator_spec(const RunConfig& rc);

}  // namespace intdiff

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nlmc/simulator.hpp"

namespace nlmc {

enum class CalibrationMode { Evaluations, WallClock, Fixed };
enum class DriftKernelKind { Rwm, Nonlinear };

/// Everything a CLI invocation needs: the run itself plus the settings of the
/// repeat, grid, comparison and diagnostics commands.
struct ExperimentConfig {
  RunConfig run;
  std::size_t repeats = 10;
  std::size_t workers = 1;
  std::vector<double> epsilons{0.05, 0.25, 0.5, 0.75, 0.95};
  std::size_t baseline_iters = 100000;
  double compare_epsilon = 0.01;
  std::size_t compare_k_iterate = 1;
  CalibrationMode calibration = CalibrationMode::Evaluations;
  double calibration_factor = 1.0;
  std::size_t calibration_iters = 20000;
  std::vector<double> drift_probes{-10.0, 30.0};
  std::size_t drift_samples = 10000;
  double drift_radius = 0.0;
  DriftKernelKind drift_kernel = DriftKernelKind::Rwm;
  std::size_t ustat_samples = 100;
  bool dump_trace = false;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Mandatory keys; every other key has a default.
const std::vector<std::string>& mandatory_config_keys();

/// Every accepted key, in emission order.
const std::vector<std::string>& config_keys();

/// Parses the flat `key = value` format: one pair per line, `#` starts a
/// comment, arrays are comma separated. Unknown or duplicate keys, missing
/// mandatory keys and malformed values raise ConfigError; out-of-range values
/// raise RangeError naming the admissible bounds. `overrides` are applied on
/// top of the file and must name known keys.
ExperimentConfig parse_config(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Every key with its resolved value; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// Splits "key=value" into its parts; throws ConfigError without '='.
std::pair<std::string, std::string> split_override(const std::string& text);

}  // namespace nlmc

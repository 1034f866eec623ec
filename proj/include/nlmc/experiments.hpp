#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nlmc/config.hpp"
#include "nlmc/diagnostics.hpp"
#include "nlmc/simulator.hpp"

namespace nlmc {

// --- CSV writers --------------------------------------------------------------

/// Header: run_index,seed,estimate_x,estimate_x2,accept_rwm_x,accept_rwm_y,
/// accept_exchange,branch_eps_count,snY_V_final.
void write_runs_csv(std::ostream& os, const std::vector<RunSummary>& runs);

/// Header: estimate,mean,two_sd,runs,failures.
void write_aggregate_csv(std::ostream& os, const RepeatSummary& summary);

// --- Epsilon grid ---------------------------------------------------------------

struct Table1Cell {
  KernelKind kind;
  double epsilon;
  RepeatSummary result;
};

struct Table1Result {
  std::vector<double> epsilons;
  /// Row-major: select_mutate cells first, then exchange, each in epsilon order.
  std::vector<Table1Cell> cells;
};

/// Runs config.repeats repeats for every (kind, epsilon) pair, each cell with
/// the base seed so a cell matches a standalone repeat_runs call.
Table1Result table1_grid(const ExperimentConfig& config);

/// Rows are kernel kinds, columns epsilons, cells "mean (+/-two_sd)".
void write_table1_csv(std::ostream& os, const Table1Result& table);

/// Long form: kernel,epsilon followed by the runs.csv columns.
void write_table1_runs_csv(std::ostream& os, const Table1Result& table);

// --- Baseline comparison --------------------------------------------------------

struct Calibration {
  /// Nonlinear iterations per baseline iteration at equal cost.
  double factor = 1.0;
  double baseline_cost_per_iter = 0.0;
  double nonlinear_cost_per_iter = 0.0;
  std::size_t baseline_iters = 0;
  std::size_t nonlinear_iters = 0;
  CalibrationMode mode = CalibrationMode::Evaluations;
};

/// Config of the plain random-walk side of the comparison.
RunConfig baseline_run_config(const ExperimentConfig& config);

/// Config of the exchange sampler at compare_epsilon, n_iters left as given.
RunConfig comparison_nonlinear_config(const ExperimentConfig& config);

/// Short calibration runs of both samplers. Evaluations mode counts log pi
/// evaluations per iteration (deterministic); WallClock times them; Fixed uses
/// config.calibration_factor.
Calibration calibrate(const ExperimentConfig& config);

struct ComparisonResult {
  Calibration calibration;
  RepeatSummary baseline;
  RepeatSummary nonlinear;
};

ComparisonResult baseline_compare(const ExperimentConfig& config);

/// Header: method,iterations,mean,two_sd,calibration_factor,calibration_mode.
void write_comparison_csv(std::ostream& os, const ComparisonResult& result);

// --- Diagnostics ----------------------------------------------------------------

struct UVReport {
  std::size_t sample_size = 0;
  std::size_t q = 2;
  double u = 0.0;
  double v = 0.0;
  /// (n+1)^q (U - V) - [(n+1)^q - (n+1)_q] U + non-injective sum; zero up to
  /// rounding.
  double identity_residual = 0.0;
};

struct DiagnosticsReport {
  DriftReport drift;
  std::vector<SnvPoint> snv;
  UVReport uv;
};

/// One stored-trace run, the drift check at config.drift_probes and a U/V
/// statistic of |a - b| on the last ustat_samples post-burn-in X states.
DiagnosticsReport run_diagnostics(const ExperimentConfig& config);

void write_drift_csv(std::ostream& os, const DriftReport& report);
void write_snv_csv(std::ostream& os, const std::vector<SnvPoint>& snv);
void write_uv_csv(std::ostream& os, const UVReport& uv);

// --- Command dispatch -----------------------------------------------------------

enum class Command { Run, Repeats, Table1, BaselineCompare, Diagnostics };

struct ExperimentSpec {
  Command command = Command::Run;
  std::filesystem::path config_path;
  std::filesystem::path output_dir;
  std::vector<std::pair<std::string, std::string>> overrides;
};

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumeric = 3 };

Command parse_command(const std::string& name);

/// Reads and resolves the config, writes resolved_config and the command's
/// outputs under spec.output_dir, and a short report to `log`. Returns the
/// process exit code; errors are reported on `err`.
int execute(const ExperimentSpec& spec, std::ostream& log, std::ostream& err);

}  // namespace nlmc

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlmc/empirical_measure.hpp"
#include "nlmc/kernels.hpp"
#include "nlmc/random.hpp"
#include "nlmc/target_model.hpp"

namespace nlmc {

struct TargetSpec {
  enum class Kind { MixtureNormals1d, StdNormal };

  Kind kind = Kind::MixtureNormals1d;
  /// Two-component toy mixture 0.4 N(0, 0.5) + 0.6 N(17.5, 1) (variances).
  MixtureOfNormals mixture{{0.4, 0.6}, {0.0, 17.5}, {0.70710678118654757, 1.0}};
  /// Used by StdNormal only.
  std::size_t dimension = 1;

  std::size_t dim() const { return kind == Kind::StdNormal ? dimension : 1; }
  TargetModel build() const;

  bool operator==(const TargetSpec&) const = default;
};

/// Initial-state distribution: a fixed point (one value is broadcast to every
/// coordinate) or independent uniforms on [lo, hi].
struct InitSpec {
  enum class Kind { Fixed, Uniform };

  Kind kind = Kind::Fixed;
  std::vector<double> values{0.0};
  double lo = 0.0;
  double hi = 1.0;

  static InitSpec fixed(double v) { return InitSpec{Kind::Fixed, {v}, 0.0, 1.0}; }
  static InitSpec uniform(double lo, double hi) {
    return InitSpec{Kind::Uniform, {}, lo, hi};
  }

  /// Fixed draws nothing; Uniform consumes one uniform per coordinate.
  Point draw(Rng& rng, std::size_t dimension) const;
  void validate(std::size_t dimension) const;

  bool operator==(const InitSpec&) const = default;
};

struct LyapunovSettings {
  double s_v = 0.1;
  double s_w = 0.5;
  double r_star = 0.5;
  /// Estimated on a grid (or taken from a closed form) when absent.
  std::optional<double> log_pi_sup;

  bool operator==(const LyapunovSettings&) const = default;
};

struct RunConfig {
  TargetSpec target;
  double alpha_tilde = 0.75;
  double epsilon = 0.05;
  KernelKind kind = KernelKind::Exchange;
  bool with_mutation = false;
  double sigma_pi = 1.0;
  double sigma_eta = 1.0;
  std::size_t k_iterate = 1;
  std::size_t p_iterate = 1;
  std::size_t n_iters = 10000;
  std::size_t burn_in = 0;
  InitSpec x0;
  /// Same as x0 when absent.
  std::optional<InitSpec> y0;
  std::uint64_t seed = 0;
  /// When set, the X chain moves by K alone for n <= burn_in; the auxiliary
  /// states of that period still enter the measure.
  bool feed_after_burnin = false;
  LyapunovSettings lyapunov;
  /// S_n(V) is recorded every snv_stride iterations and at the last one.
  std::size_t snv_stride = 1000;
  /// Keep every X state in the trace.
  bool store_trace = false;
  /// Batches used for the batch-means standard errors.
  std::size_t batches = 50;

  /// Throws RangeError when an invariant does not hold.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

struct BranchCounts {
  std::size_t base = 0;
  std::size_t nonlinear_accepted = 0;
  std::size_t nonlinear_rejected = 0;
  std::size_t fallback = 0;

  std::size_t eps() const { return nonlinear_accepted + nonlinear_rejected; }
  std::size_t total() const { return base + eps(); }
};

struct SnvPoint {
  std::size_t n;
  double value;
};

struct ChainTrace {
  /// X_0..X_n when store_trace is set, otherwise empty.
  std::vector<Point> x_states;
  std::size_t y_count = 0;
  BranchCounts branches;
  /// S_n^X(f) over iterations after burn-in for each registered f.
  std::map<std::string, double> running_estimates;
  std::vector<SnvPoint> snv;
  bool has_lyapunov = false;
};

struct RunSummary {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> estimates;
  std::map<std::string, double> estimate_se;
  double accept_rwm_x = 0.0;
  double accept_rwm_y = 0.0;
  double accept_exchange = 0.0;
  BranchCounts branches;
  std::size_t branch_eps_count = 0;
  double snv_final = 0.0;
  double snv_max = 0.0;
  std::size_t density_evaluations = 0;
  double wall_seconds = 0.0;
};

struct RunResult {
  ChainTrace trace;
  RunSummary summary;
  /// Final S_n^Y; empty for rwm_baseline.
  std::optional<EmpiricalMeasure> measure;
};

/// Called before the X move of iteration n (n >= 1) with the measure that move
/// will consult and the current X state.
using StepObserver =
    std::function<void(std::size_t n, const EmpiricalMeasure&, const ChainState&)>;

/// Registered test functions: "x" (first coordinate) and "x2" (its square).
const std::vector<std::string>& estimate_names();

/// log |pi|_inf used for V: explicit setting, closed form, or grid estimate.
double resolve_log_pi_sup(const RunConfig& config, const TargetModel& model);

/// Interacting run: Y_n ~ P(Y_{n-1}), X_n ~ K_{S_{n-1}}(X_{n-1}), then S_n gets
/// Y_n. The two chains draw from independent streams derived from the seed.
/// Non-finite states raise NumericError carrying the iteration index.
RunResult run(const RunConfig& config, const StepObserver& observer = {});

/// Plain K chain on pi with the same initialization, stream and estimators.
RunSummary rwm_baseline(const RunConfig& config);

struct RunFailure {
  std::size_t run_index;
  std::string message;
};

struct RepeatSummary {
  /// Successful runs ordered by run index.
  std::vector<RunSummary> runs;
  std::vector<RunFailure> failures;
  std::map<std::string, double> mean;
  std::map<std::string, double> two_sd;

  std::vector<double> estimates(const std::string& name) const;
};

enum class RunMode { Nonlinear, Baseline };

struct RepeatOptions {
  std::size_t workers = 1;
  RunMode mode = RunMode::Nonlinear;
  /// Test hook: every repeat reuses config.seed instead of a derived seed.
  bool identical_seeds = false;
};

/// Seed of repeat i: mix_seed(config.seed, i).
std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t index);

/// Runs `repeats` (>= 2) independent copies; results are ordered by index
/// whatever the worker count. Failed runs are listed and left out of the
/// aggregate.
RepeatSummary repeat_runs(const RunConfig& config, std::size_t repeats,
                          const RepeatOptions& options = {});

/// mean and 2 x sample standard deviation (n - 1 denominator).
std::pair<double, double> mean_two_sd(const std::vector<double>& values);

}  // namespace nlmc

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlmc/empirical_measure.hpp"
#include "nlmc/kernels.hpp"
#include "nlmc/random.hpp"
#include "nlmc/simulator.hpp"
#include "nlmc/target_model.hpp"

namespace nlmc {

// --- U- and V-statistics ---------------------------------------------------

using TupleFunction = std::function<double(std::span<const PointView>)>;

/// Order-q statistic of a sample Y_0..Y_n.
///
/// VStat averages f over all (n+1)^q index maps; UStat averages over the
/// (n+1)_q = (n+1) n ... (n-q+2) one-to-one maps. Both are evaluated by brute
/// force and refuse inputs with (n+1)^q > kMaxTuples.
struct PolyStatistic {
  enum class Kind { VStat, UStat };

  std::size_t q = 1;
  TupleFunction f;
  Kind kind = Kind::VStat;
};

inline constexpr double kMaxTuples = 1e8;

double v_statistic(std::span<const Point> samples, const PolyStatistic& stat);
double u_statistic(std::span<const Point> samples, const PolyStatistic& stat);

/// Sum of f over the index maps {0..n}^q that repeat some index.
double non_injective_sum(std::span<const Point> samples, const TupleFunction& f,
                         std::size_t q);

/// n (n-1) ... (n-q+1), as a double; 0 when q > n.
double falling_factorial(std::size_t n, std::size_t q);

// --- Drift ------------------------------------------------------------------

struct DriftOptions {
  std::size_t mc_samples = 10000;
  /// Probes with |x| <= tail_radius are never flagged: they may sit inside the
  /// (unknown) small set where the drift inequality allows KV > V.
  double tail_radius = 0.0;
};

struct DriftProbe {
  Point x;
  double v_x = 0.0;
  /// Monte Carlo estimate of K V(x) / V(x).
  double ratio = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
  /// ratio - 3 se > 1 at a probe outside the tail radius.
  bool violation = false;
};

struct DriftReport {
  std::vector<DriftProbe> probes;
};

/// Averages V(X') / V(x) over independent one-step transitions X' ~ K(x, .).
DriftReport drift_check(const RwmKernel& kernel, const LyapunovPair& pair,
                        std::span<const Point> probes, const DriftOptions& options,
                        Rng& rng);

/// Same for the nonlinear kernel with the measure frozen.
DriftReport drift_check(const NonlinearKernel& kernel, const EmpiricalMeasure& measure,
                        const LyapunovPair& pair, std::span<const Point> probes,
                        const DriftOptions& options, Rng& rng);

/// S_n^Y(V) sampled along a run. Throws ConfigError for traces recorded
/// without a LyapunovPair.
std::vector<SnvPoint> snv_trajectory(const ChainTrace& trace);

}  // namespace nlmc

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nlmc/accumulators.hpp"
#include "nlmc/random.hpp"
#include "nlmc/target_model.hpp"

namespace nlmc {

using TestFunction = std::function<double(PointView)>;

/// Append-only empirical measure S_n = (n+1)^-1 sum_i delta_{Y_i} of the
/// auxiliary chain.
///
/// Every stored state keeps its log pi and log g = (1 - alpha_tilde) log pi,
/// both computed once at insertion. For weighted resampling the measure also
/// keeps prefix sums of exp(log g - ref), where ref is re-anchored to the
/// running maximum whenever the maximum climbs more than kRescaleMargin above
/// it; so ref <= max_log_weight <= ref + kRescaleMargin at all times.
class EmpiricalMeasure {
 public:
  static constexpr double kRescaleMargin = 30.0;

  /// Empty measure. Only reachable through this constructor; the simulator
  /// always starts from init(y0).
  EmpiricalMeasure(TemperedAuxiliary aux,
                   std::optional<LyapunovPair> lyapunov = std::nullopt);

  /// S_0 = delta_{y0}. Throws DomainError if log pi(y0) is not finite.
  static EmpiricalMeasure init(PointView y0, TemperedAuxiliary aux,
                               std::optional<LyapunovPair> lyapunov = std::nullopt);

  /// Appends y. Throws DomainError (measure unchanged) if log pi(y) is not
  /// finite.
  void update(PointView y);

  /// Appends y with a log pi value the caller already holds. The value must
  /// equal aux().base().log_pi(y).
  void update(PointView y, double log_pi);

  std::size_t size() const { return log_pi_.size(); }
  bool empty() const { return log_pi_.empty(); }
  std::size_t dimension() const { return dimension_; }

  PointView state(std::size_t i) const {
    return PointView(states_.data() + i * dimension_, dimension_);
  }
  double log_pi(std::size_t i) const { return log_pi_[i]; }
  double log_weight(std::size_t i) const { return log_weights_[i]; }
  std::span<const double> log_weights() const { return log_weights_; }
  double max_log_weight() const { return max_log_weight_; }

  const TemperedAuxiliary& aux() const { return aux_; }
  const std::optional<LyapunovPair>& lyapunov() const { return lyapunov_; }

  /// S_n(f). Throws StateError on an empty measure and NumericError (with the
  /// offending index) if f is not finite at a stored state.
  double integrate(const TestFunction& f) const;

  /// Phi(S_n)(f) = S_n(g f) / S_n(g).
  double weighted_integrate(const TestFunction& f) const;

  /// Running S_n(V). Throws ConfigError when no LyapunovPair is attached.
  double measure_v() const;

  /// max_i V(Y_i). Same precondition as measure_v.
  double max_v() const;

  /// Index drawn with probability proportional to exp(log_weight). One uniform.
  std::size_t sample_weighted_index(Rng& rng) const;

  /// Index drawn uniformly over stored states. One uniform.
  std::size_t sample_uniform_index(Rng& rng) const;

  /// CSV dump with header index,y,log_weight (index,y_0,...,y_{d-1},log_weight
  /// for d > 1).
  void write_csv(std::ostream& os) const;

 private:
  void append(PointView y, double log_pi);
  void rebuild_prefix();

  TemperedAuxiliary aux_;
  std::optional<LyapunovPair> lyapunov_;
  std::size_t dimension_;
  std::vector<double> states_;
  std::vector<double> log_pi_;
  std::vector<double> log_weights_;
  double max_log_weight_;
  double ref_log_weight_;
  std::vector<double> prefix_weights_;
  CompensatedSum v_sum_;
  double v_max_ = 0.0;
};

/// Self-normalized sum_i w_i f_i / sum_i w_i with w_i = exp(log_w_i - max).
/// Throws DomainError if every log weight is -inf.
double self_normalized_mean(std::span<const double> log_weights,
                            std::span<const double> values);

}  // namespace nlmc

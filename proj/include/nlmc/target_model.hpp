#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nlmc {

using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Finite mixture of univariate normal densities.
struct MixtureOfNormals {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> std_devs;

  /// Throws ConfigError unless the arrays agree in length, the weights form a
  /// probability vector (sum within 1e-12) and every std dev is positive.
  void validate() const;

  /// log of sum_k w_k N(x; m_k, s_k^2), evaluated with log-sum-exp.
  double log_density(double x) const;

  bool operator==(const MixtureOfNormals&) const = default;
};

/// Unnormalized target density pi, always handled in log space.
///
/// log_pi may return -inf (zero density) but never +inf or NaN; a NaN from the
/// underlying procedure is reported as NumericError. Immutable after
/// construction.
class TargetModel {
 public:
  using LogDensityFn = std::function<double(PointView)>;

  TargetModel(std::string name, std::size_t dimension, LogDensityFn log_density,
              std::optional<double> known_log_pi_sup = std::nullopt);

  static TargetModel mixture(MixtureOfNormals mixture);
  static TargetModel standard_normal(std::size_t dimension);

  /// Throws InputError on a wrong dimension or a non-finite coordinate.
  double log_pi(PointView x) const;

  /// Same as log_pi without validating the input point; the result is still
  /// checked for NaN.
  double log_pi_unchecked(PointView x) const;

  std::size_t dimension() const { return dimension_; }
  const std::string& name() const { return name_; }

  /// Exact supremum of log pi when known in closed form.
  std::optional<double> known_log_pi_sup() const { return known_log_pi_sup_; }

 private:
  std::string name_;
  std::size_t dimension_;
  LogDensityFn log_density_;
  std::optional<double> known_log_pi_sup_;
};

/// Tempered auxiliary density eta ~ pi^alpha_tilde with alpha_tilde in (0,1).
///
/// Nothing here is normalized: the potential g = pi / eta is returned as
/// (1 - alpha_tilde) log pi, which only ever enters self-normalized weights
/// and acceptance ratios.
class TemperedAuxiliary {
 public:
  TemperedAuxiliary(TargetModel base, double alpha_tilde);

  const TargetModel& base() const { return base_; }
  double alpha_tilde() const { return alpha_tilde_; }

  double log_eta(PointView x) const { return alpha_tilde_ * base_.log_pi(x); }
  double log_g(PointView x) const { return log_g_from_log_pi(base_.log_pi(x)); }

  double log_g_from_log_pi(double log_pi) const {
    return (1.0 - alpha_tilde_) * log_pi;
  }

  /// log of 1 ^ pi(y) eta(x) / (pi(x) eta(y)). Throws DomainError when
  /// log_pi(x) is -inf.
  double log_alpha_exchange(PointView x, PointView y) const;

  /// Exchange acceptance from precomputed log pi values.
  double log_alpha_from_log_pi(double log_pi_x, double log_pi_y) const;

 private:
  TargetModel base_;
  double alpha_tilde_;
};

/// Lyapunov functions V = (|pi|_inf / pi)^s_v and W = (|pi|_inf / pi)^(alpha_tilde s_w).
struct LyapunovPair {
  double s_v;
  double s_w;
  double alpha_tilde;
  double log_pi_sup;

  /// Validates s_v, s_w, alpha_tilde, r_star in (0,1) and
  /// s_v < r_star * alpha_tilde * s_w. Throws RangeError otherwise.
  static LyapunovPair create(double s_v, double s_w, double alpha_tilde,
                             double log_pi_sup, double r_star);

  /// Throws DomainError for log_pi = -inf and InvariantError when log_pi
  /// exceeds log_pi_sup beyond rounding slack.
  double v_from_log_pi(double log_pi) const;
  double w_from_log_pi(double log_pi) const;

  double v(const TargetModel& model, PointView x) const {
    return v_from_log_pi(model.log_pi(x));
  }
  double w(const TargetModel& model, PointView x) const {
    return w_from_log_pi(model.log_pi(x));
  }

 private:
  double checked_gap(double log_pi) const;
};

/// Grid search for sup log pi over a box, refined by golden-section search
/// around the best grid node in one dimension. The result is a lower bound on
/// the true supremum. Supports dimension <= 3; higher dimensions throw
/// UnsupportedError and the supremum must be supplied by the user.
double estimate_log_pi_sup(const TargetModel& model,
                           std::span<const std::pair<double, double>> box,
                           std::size_t grid_points);

}  // namespace nlmc

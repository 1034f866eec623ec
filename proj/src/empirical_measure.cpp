#include "nlmc/empirical_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "nlmc/csv.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

EmpiricalMeasure::EmpiricalMeasure(TemperedAuxiliary aux,
                                   std::optional<LyapunovPair> lyapunov)
    : aux_(std::move(aux)),
      lyapunov_(lyapunov),
      dimension_(aux_.base().dimension()),
      max_log_weight_(kNegInf),
      ref_log_weight_(kNegInf) {}

EmpiricalMeasure EmpiricalMeasure::init(PointView y0, TemperedAuxiliary aux,
                                        std::optional<LyapunovPair> lyapunov) {
  EmpiricalMeasure m(std::move(aux), lyapunov);
  m.update(y0);
  return m;
}

void EmpiricalMeasure::update(PointView y) { append(y, aux_.base().log_pi(y)); }

void EmpiricalMeasure::update(PointView y, double log_pi) { append(y, log_pi); }

void EmpiricalMeasure::append(PointView y, double log_pi) {
  if (y.size() != dimension_) throw InputError("measure update: dimension mismatch");
  if (!std::isfinite(log_pi)) {
    std::ostringstream os;
    os << "measure update: log_pi is not finite at state " << log_pi_.size();
    throw DomainError(os.str());
  }
  const double lw = aux_.log_g_from_log_pi(log_pi);
  // Compute V first so a stale supremum leaves the measure untouched.
  const double v = lyapunov_ ? lyapunov_->v_from_log_pi(log_pi) : 0.0;

  states_.insert(states_.end(), y.begin(), y.end());
  log_pi_.push_back(log_pi);
  log_weights_.push_back(lw);
  if (lyapunov_) {
    v_sum_.add(v);
    v_max_ = std::max(v_max_, v);
  }

  max_log_weight_ = std::max(max_log_weight_, lw);
  if (lw > ref_log_weight_ + kRescaleMargin) {
    rebuild_prefix();
  } else {
    const double prev = prefix_weights_.empty() ? 0.0 : prefix_weights_.back();
    prefix_weights_.push_back(prev + std::exp(lw - ref_log_weight_));
  }
}

void EmpiricalMeasure::rebuild_prefix() {
  ref_log_weight_ = max_log_weight_;
  prefix_weights_.resize(log_weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights_.size(); ++i) {
    acc += std::exp(log_weights_[i] - ref_log_weight_);
    prefix_weights_[i] = acc;
  }
}

double EmpiricalMeasure::integrate(const TestFunction& f) const {
  if (empty()) throw StateError("integrate: empirical measure is empty");
  CompensatedSum sum;
  for (std::size_t i = 0; i < size(); ++i) {
    const double v = f(state(i));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "integrate: test function not finite at stored state " << i;
      throw NumericError(os.str(), i);
    }
    sum.add(v);
  }
  return sum.value() / static_cast<double>(size());
}

double EmpiricalMeasure::weighted_integrate(const TestFunction& f) const {
  if (empty()) throw StateError("weighted_integrate: empirical measure is empty");
  std::vector<double> values(size());
  for (std::size_t i = 0; i < size(); ++i) {
    values[i] = f(state(i));
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "weighted_integrate: test function not finite at stored state " << i;
      throw NumericError(os.str(), i);
    }
  }
  return self_normalized_mean(log_weights_, values);
}

double EmpiricalMeasure::measure_v() const {
  if (!lyapunov_) throw ConfigError("measure_v: no LyapunovPair attached");
  if (empty()) throw StateError("measure_v: empirical measure is empty");
  return v_sum_.value() / static_cast<double>(size());
}

double EmpiricalMeasure::max_v() const {
  if (!lyapunov_) throw ConfigError("max_v: no LyapunovPair attached");
  if (empty()) throw StateError("max_v: empirical measure is empty");
  return v_max_;
}

std::size_t EmpiricalMeasure::sample_weighted_index(Rng& rng) const {
  if (empty()) throw StateError("weighted selection from an empty measure");
  const double target = rng.uniform() * prefix_weights_.back();
  const auto it =
      std::upper_bound(prefix_weights_.begin(), prefix_weights_.end(), target);
  const auto i = static_cast<std::size_t>(it - prefix_weights_.begin());
  return std::min(i, size() - 1);
}

std::size_t EmpiricalMeasure::sample_uniform_index(Rng& rng) const {
  if (empty()) throw StateError("uniform selection from an empty measure");
  return rng.index(size());
}

void EmpiricalMeasure::write_csv(std::ostream& os) const {
  os << "index";
  if (dimension_ == 1) {
    os << ",y";
  } else {
    for (std::size_t k = 0; k < dimension_; ++k) os << ",y_" << k;
  }
  os << ",log_weight\n";
  for (std::size_t i = 0; i < size(); ++i) {
    os << i;
    for (double v : state(i)) os << ',' << format_double(v);
    os << ',' << format_double(log_weights_[i]) << '\n';
  }
}

double self_normalized_mean(std::span<const double> log_weights,
                            std::span<const double> values) {
  if (log_weights.size() != values.size() || log_weights.empty()) {
    throw InputError("self_normalized_mean: size mismatch or empty input");
  }
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (top == kNegInf) throw DomainError("degenerate measure: every weight is zero");
  CompensatedSum num, den;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = std::exp(log_weights[i] - top);
    num.add(w * values[i]);
    den.add(w);
  }
  return num.value() / den.value();
}

}  // namespace nlmc

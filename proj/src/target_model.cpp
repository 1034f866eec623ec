#include "nlmc/target_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

// Slack allowed when a state lands marginally above an estimated supremum.
constexpr double kSupSlack = 1e-9;

}  // namespace

void MixtureOfNormals::validate() const {
  if (weights.empty()) throw ConfigError("mixture: no components");
  if (weights.size() != means.size() || weights.size() != std_devs.size()) {
    throw ConfigError("mixture: weights, means and std_devs differ in length");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw RangeError("mixture: weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "mixture: weights sum to " << total << ", expected 1 within 1e-12";
    throw RangeError(os.str());
  }
  for (double m : means) {
    if (!std::isfinite(m)) throw RangeError("mixture: means must be finite");
  }
  for (double s : std_devs) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw RangeError("mixture: std_devs must be in (0, inf)");
    }
  }
}

double MixtureOfNormals::log_density(double x) const {
  double best = kNegInf;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (x - means[k]) / std_devs[k];
    const double term =
        std::log(weights[k]) - std::log(std_devs[k]) - kLogSqrtTwoPi - 0.5 * z * z;
    best = std::max(best, term);
  }
  if (best == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double z = (x - means[k]) / std_devs[k];
    const double term =
        std::log(weights[k]) - std::log(std_devs[k]) - kLogSqrtTwoPi - 0.5 * z * z;
    sum += std::exp(term - best);
  }
  return best + std::log(sum);
}

TargetModel::TargetModel(std::string name, std::size_t dimension,
                         LogDensityFn log_density,
                         std::optional<double> known_log_pi_sup)
    : name_(std::move(name)),
      dimension_(dimension),
      log_density_(std::move(log_density)),
      known_log_pi_sup_(known_log_pi_sup) {
  if (dimension_ == 0) throw ConfigError("target: dimension must be positive");
  if (!log_density_) throw ConfigError("target: missing log density");
}

TargetModel TargetModel::mixture(MixtureOfNormals mixture) {
  mixture.validate();
  // Per-component constants hoisted out of the hot path.
  struct Component {
    double log_scale;
    double mean;
    double inv_two_var;
  };
  std::vector<Component> comps;
  for (std::size_t k = 0; k < mixture.weights.size(); ++k) {
    if (mixture.weights[k] == 0.0) continue;
    const double s = mixture.std_devs[k];
    comps.push_back({std::log(mixture.weights[k]) - std::log(s) - kLogSqrtTwoPi,
                     mixture.means[k], 0.5 / (s * s)});
  }
  auto fn = [comps = std::move(comps)](PointView x) {
    const double v = x[0];
    if (comps.size() == 2) {
      const double d0 = v - comps[0].mean;
      const double d1 = v - comps[1].mean;
      const double a = comps[0].log_scale - d0 * d0 * comps[0].inv_two_var;
      const double b = comps[1].log_scale - d1 * d1 * comps[1].inv_two_var;
      return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
    }
    double best = kNegInf;
    for (const auto& c : comps) {
      const double d = v - c.mean;
      best = std::max(best, c.log_scale - d * d * c.inv_two_var);
    }
    double sum = 0.0;
    for (const auto& c : comps) {
      const double d = v - c.mean;
      sum += std::exp(c.log_scale - d * d * c.inv_two_var - best);
    }
    return best + std::log(sum);
  };
  return TargetModel("mixture_normals_1d", 1, std::move(fn));
}

TargetModel TargetModel::standard_normal(std::size_t dimension) {
  const double log_norm = -static_cast<double>(dimension) * kLogSqrtTwoPi;
  auto fn = [log_norm](PointView x) {
    double ss = 0.0;
    for (double v : x) ss += v * v;
    return log_norm - 0.5 * ss;
  };
  return TargetModel("std_normal", dimension, std::move(fn), log_norm);
}

double TargetModel::log_pi(PointView x) const {
  if (x.size() != dimension_) {
    std::ostringstream os;
    os << "log_pi: point has " << x.size() << " coordinates, target dimension is "
       << dimension_;
    throw InputError(os.str());
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      std::ostringstream os;
      os << "log_pi: coordinate " << i << " is not finite";
      throw InputError(os.str());
    }
  }
  return log_pi_unchecked(x);
}

double TargetModel::log_pi_unchecked(PointView x) const {
  const double value = log_density_(x);
  if (std::isnan(value) || value == std::numeric_limits<double>::infinity()) {
    throw NumericError("log_pi: target '" + name_ + "' returned " +
                       (std::isnan(value) ? "NaN" : "+inf"));
  }
  return value;
}

TemperedAuxiliary::TemperedAuxiliary(TargetModel base, double alpha_tilde)
    : base_(std::move(base)), alpha_tilde_(alpha_tilde) {
  if (!(alpha_tilde_ > 0.0 && alpha_tilde_ < 1.0)) {
    throw RangeError("alpha_tilde must lie in the open interval (0,1)");
  }
}

double TemperedAuxiliary::log_alpha_exchange(PointView x, PointView y) const {
  return log_alpha_from_log_pi(base_.log_pi(x), base_.log_pi(y));
}

double TemperedAuxiliary::log_alpha_from_log_pi(double log_pi_x,
                                                double log_pi_y) const {
  if (log_pi_x == kNegInf) {
    throw DomainError("exchange acceptance undefined at a zero-density state");
  }
  if (log_pi_y == kNegInf) return kNegInf;
  return std::min(0.0, (1.0 - alpha_tilde_) * (log_pi_y - log_pi_x));
}

LyapunovPair LyapunovPair::create(double s_v, double s_w, double alpha_tilde,
                                  double log_pi_sup, double r_star) {
  auto open_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw RangeError(std::string(name) + " must lie in the open interval (0,1)");
    }
  };
  open_unit(s_v, "s_v");
  open_unit(s_w, "s_w");
  open_unit(alpha_tilde, "alpha_tilde");
  open_unit(r_star, "r_star");
  if (!std::isfinite(log_pi_sup)) throw RangeError("log_pi_sup must be finite");
  const double bound = r_star * alpha_tilde * s_w;
  if (!(s_v < bound)) {
    std::ostringstream os;
    os.precision(17);
    os << "s_v must lie in (0, r_star * alpha_tilde * s_w) = (0, " << bound << ")";
    throw RangeError(os.str());
  }
  return LyapunovPair{s_v, s_w, alpha_tilde, log_pi_sup};
}

double LyapunovPair::checked_gap(double log_pi) const {
  if (log_pi == kNegInf) {
    throw DomainError("Lyapunov function undefined at a zero-density state");
  }
  const double gap = log_pi_sup - log_pi;
  if (gap < -kSupSlack * (1.0 + std::fabs(log_pi_sup))) {
    std::ostringstream os;
    os.precision(17);
    os << "log_pi " << log_pi << " exceeds stored supremum " << log_pi_sup;
    throw InvariantError(os.str());
  }
  return std::max(gap, 0.0);
}

double LyapunovPair::v_from_log_pi(double log_pi) const {
  return std::exp(s_v * checked_gap(log_pi));
}

double LyapunovPair::w_from_log_pi(double log_pi) const {
  return std::exp(alpha_tilde * s_w * checked_gap(log_pi));
}

double estimate_log_pi_sup(const TargetModel& model,
                           std::span<const std::pair<double, double>> box,
                           std::size_t grid_points) {
  const std::size_t d = model.dimension();
  if (d > 3) {
    throw UnsupportedError(
        "estimate_log_pi_sup: grid search unsupported above dimension 3; "
        "supply log_pi_sup explicitly");
  }
  if (box.size() != d) throw InputError("estimate_log_pi_sup: box dimension mismatch");
  if (grid_points < 2) throw InputError("estimate_log_pi_sup: need >= 2 grid points");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw InputError("estimate_log_pi_sup: search box must be finite and non-empty");
    }
  }

  auto node = [&](std::size_t dim, std::size_t i) {
    const auto [lo, hi] = box[dim];
    if (i + 1 == grid_points) return hi;
    return lo + (hi - lo) * static_cast<double>(i) /
                    static_cast<double>(grid_points - 1);
  };

  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= grid_points;

  Point x(d), best_x(d);
  double best = kNegInf;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = node(k, rest % grid_points);
      rest /= grid_points;
    }
    const double v = model.log_pi(x);
    if (v > best || flat == 0) {
      best = v;
      best_x = x;
    }
  }

  if (d == 1 && std::isfinite(best)) {
    const double h = (box[0].second - box[0].first) /
                     static_cast<double>(grid_points - 1);
    double a = best_x[0] - h;
    double b = best_x[0] + h;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    Point p(1);
    auto f = [&](double t) {
      p[0] = t;
      return model.log_pi(p);
    };
    double c = b - invphi * (b - a);
    double e = a + invphi * (b - a);
    double fc = f(c), fe = f(e);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::fabs(a)); ++it) {
      if (fc > fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - invphi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + invphi * (b - a);
        fe = f(e);
      }
    }
    best = std::max({best, fc, fe, f(0.5 * (a + b))});
  }
  return best;
}

}  // namespace nlmc

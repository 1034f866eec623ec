#include "nlmc/diagnostics.hpp"

#include <cmath>
#include <sstream>

#include "nlmc/accumulators.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

void check_size(std::size_t m, std::size_t q) {
  if (q < 1) throw RangeError("statistic order q must be >= 1");
  if (std::pow(static_cast<double>(m), static_cast<double>(q)) > kMaxTuples) {
    std::ostringstream os;
    os << "(n+1)^q = " << m << "^" << q
       << " exceeds the brute-force limit of 1e8 tuples; subsample first";
    throw SizeError(os.str());
  }
}

// Odometer over {0..m-1}^q, optionally skipping maps that repeat an index.
template <typename Visit>
void for_each_tuple(std::size_t m, std::size_t q, bool injective_only, Visit&& visit) {
  std::vector<std::size_t> idx(q, 0);
  while (true) {
    bool ok = true;
    if (injective_only) {
      for (std::size_t a = 0; a < q && ok; ++a) {
        for (std::size_t b = a + 1; b < q && ok; ++b) ok = idx[a] != idx[b];
      }
    }
    if (ok) visit(idx);
    std::size_t k = q;
    while (k > 0) {
      --k;
      if (++idx[k] < m) break;
      idx[k] = 0;
      if (k == 0) return;
    }
  }
}

double tuple_sum(std::span<const Point> samples, const PolyStatistic& stat,
                 bool injective_only) {
  std::vector<PointView> args(stat.q);
  CompensatedSum sum;
  for_each_tuple(samples.size(), stat.q, injective_only,
                 [&](const std::vector<std::size_t>& idx) {
                   for (std::size_t k = 0; k < stat.q; ++k) args[k] = samples[idx[k]];
                   sum.add(stat.f(args));
                 });
  return sum.value();
}

DriftProbe probe_ratio(const Point& x, const LyapunovPair& pair,
                       const DriftOptions& options, double log_pi_x,
                       const std::function<double()>& step_log_pi) {
  DriftProbe p;
  p.x = x;
  p.v_x = pair.v_from_log_pi(log_pi_x);
  // Welford running mean and sum of squared deviations.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < options.mc_samples; ++s) {
    // V(x') / V(x) = exp(s_v (log pi(x) - log pi(x'))); taken as a ratio so
    // far-tail probes do not overflow.
    const double r = std::exp(pair.s_v * (log_pi_x - step_log_pi()));
    const double delta = r - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (r - mean);
  }
  const double n = static_cast<double>(options.mc_samples);
  p.samples = options.mc_samples;
  p.ratio = mean;
  p.se = std::sqrt(m2 / (n - 1.0) / n);
  double norm = 0.0;
  for (double v : x) norm += v * v;
  p.violation = std::sqrt(norm) > options.tail_radius && p.ratio - 3.0 * p.se > 1.0;
  return p;
}

void check_drift_options(const DriftOptions& options) {
  if (options.mc_samples < 100) throw RangeError("drift_check: mc_samples must be >= 100");
}

}  // namespace

double non_injective_sum(std::span<const Point> samples, const TupleFunction& f,
                         std::size_t q) {
  check_size(samples.size(), q);
  std::vector<PointView> args(q);
  CompensatedSum sum;
  for_each_tuple(samples.size(), q, false, [&](const std::vector<std::size_t>& idx) {
    bool repeated = false;
    for (std::size_t a = 0; a < q && !repeated; ++a) {
      for (std::size_t b = a + 1; b < q && !repeated; ++b) repeated = idx[a] == idx[b];
    }
    if (!repeated) return;
    for (std::size_t k = 0; k < q; ++k) args[k] = samples[idx[k]];
    sum.add(f(args));
  });
  return sum.value();
}

double falling_factorial(std::size_t n, std::size_t q) {
  if (q > n) return 0.0;
  double out = 1.0;
  for (std::size_t k = 0; k < q; ++k) out *= static_cast<double>(n - k);
  return out;
}

double v_statistic(std::span<const Point> samples, const PolyStatistic& stat) {
  if (stat.kind != PolyStatistic::Kind::VStat) {
    throw ConfigError("v_statistic called with a U-statistic");
  }
  if (samples.empty()) throw StateError("v_statistic: empty sample");
  check_size(samples.size(), stat.q);
  const double m = static_cast<double>(samples.size());
  return tuple_sum(samples, stat, false) / std::pow(m, static_cast<double>(stat.q));
}

double u_statistic(std::span<const Point> samples, const PolyStatistic& stat) {
  if (stat.kind != PolyStatistic::Kind::UStat) {
    throw ConfigError("u_statistic called with a V-statistic");
  }
  if (samples.size() < stat.q) {
    std::ostringstream os;
    os << "u_statistic: sample size " << samples.size() << " is below order "
       << stat.q;
    throw SizeError(os.str());
  }
  check_size(samples.size(), stat.q);
  return tuple_sum(samples, stat, true) / falling_factorial(samples.size(), stat.q);
}

DriftReport drift_check(const RwmKernel& kernel, const LyapunovPair& pair,
                        std::span<const Point> probes, const DriftOptions& options,
                        Rng& rng) {
  check_drift_options(options);
  DriftReport report;
  for (const Point& x : probes) {
    const double lp = kernel.model.log_pi(x);
    ChainState s;
    report.probes.push_back(probe_ratio(x, pair, options, lp, [&] {
      s.x = x;
      s.log_pi = lp;
      rwm_advance(kernel, s, rng);
      return s.log_pi;
    }));
  }
  return report;
}

DriftReport drift_check(const NonlinearKernel& kernel, const EmpiricalMeasure& measure,
                        const LyapunovPair& pair, std::span<const Point> probes,
                        const DriftOptions& options, Rng& rng) {
  check_drift_options(options);
  DriftReport report;
  for (const Point& x : probes) {
    const double lp = kernel.base.model.log_pi(x);
    ChainState s;
    report.probes.push_back(probe_ratio(x, pair, options, lp, [&] {
      s.x = x;
      s.log_pi = lp;
      nonlinear_advance(kernel, s, measure, rng);
      return s.log_pi;
    }));
  }
  return report;
}

std::vector<SnvPoint> snv_trajectory(const ChainTrace& trace) {
  if (!trace.has_lyapunov) {
    throw ConfigError("snv_trajectory: run was recorded without a LyapunovPair");
  }
  return trace.snv;
}

}  // namespace nlmc

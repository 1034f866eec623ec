#include "nlmc/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "nlmc/accumulators.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

// Stream labels fed to mix_seed(run seed, label).
constexpr std::uint64_t kStreamX = 0x58;
constexpr std::uint64_t kStreamY = 0x59;

constexpr std::size_t kSupGridPoints = 2001;

void check_finite_state(const ChainState& s, std::size_t n, const char* chain) {
  bool ok = std::isfinite(s.log_pi);
  for (double v : s.x) ok = ok && std::isfinite(v);
  if (!ok) {
    std::ostringstream os;
    os << "non-finite " << chain << " state at iteration " << n;
    throw NumericError(os.str(), n);
  }
}

ChainState initial_state(const InitSpec& spec, const TargetModel& model, Rng& rng,
                         const char* chain) {
  ChainState s;
  s.x = spec.draw(rng, model.dimension());
  s.log_pi = model.log_pi(s.x);
  if (!std::isfinite(s.log_pi)) {
    throw DomainError(std::string("initial ") + chain + " state has zero density");
  }
  return s;
}

double ratio(std::size_t num, std::size_t den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

// Post-burn-in estimators for the registered test functions.
class Estimators {
 public:
  Estimators(std::size_t count, std::size_t batches)
      : x_(count, batches), x2_(count, batches) {}

  void add(const Point& x) {
    x_.add(x[0]);
    x2_.add(x[0] * x[0]);
  }

  void fill(std::map<std::string, double>& est,
            std::map<std::string, double>* se) const {
    est["x"] = x_.mean();
    est["x2"] = x2_.mean();
    if (se) {
      (*se)["x"] = x_.standard_error();
      (*se)["x2"] = x2_.standard_error();
    }
  }

 private:
  BatchMeans x_;
  BatchMeans x2_;
};

}  // namespace

TargetModel TargetSpec::build() const {
  switch (kind) {
    case Kind::MixtureNormals1d:
      return TargetModel::mixture(mixture);
    case Kind::StdNormal:
      return TargetModel::standard_normal(dimension);
  }
  throw ConfigError("unknown target kind");
}

Point InitSpec::draw(Rng& rng, std::size_t dimension) const {
  Point p(dimension);
  if (kind == Kind::Fixed) {
    for (std::size_t k = 0; k < dimension; ++k) {
      p[k] = values.size() == 1 ? values[0] : values[k];
    }
  } else {
    for (auto& v : p) v = rng.uniform(lo, hi);
  }
  return p;
}

void InitSpec::validate(std::size_t dimension) const {
  if (kind == Kind::Fixed) {
    if (values.size() != 1 && values.size() != dimension) {
      throw RangeError("initial state: need 1 or `dimension` fixed values");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw RangeError("initial state: values must be finite");
    }
  } else if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw RangeError("initial state: uniform interval needs finite lo < hi");
  }
}

void RunConfig::validate() const {
  if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) {
    throw RangeError("alpha_tilde must lie in (0,1)");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw RangeError("epsilon must lie in (0,1)");
  if (!(sigma_pi > 0.0) || !std::isfinite(sigma_pi)) {
    throw RangeError("sigma_pi must lie in (0, inf)");
  }
  if (!(sigma_eta > 0.0) || !std::isfinite(sigma_eta)) {
    throw RangeError("sigma_eta must lie in (0, inf)");
  }
  if (k_iterate < 1) throw RangeError("k_iterate must be >= 1");
  if (p_iterate < 1) throw RangeError("p_iterate must be >= 1");
  if (n_iters < 1) throw RangeError("n_iters must be >= 1");
  if (!(burn_in < n_iters)) throw RangeError("burn_in must lie in [0, n_iters)");
  if (snv_stride < 1) throw RangeError("snv_stride must be >= 1");
  if (target.kind == TargetSpec::Kind::StdNormal && target.dimension < 1) {
    throw RangeError("dimension must be >= 1");
  }
  if (target.kind == TargetSpec::Kind::MixtureNormals1d) target.mixture.validate();
  x0.validate(target.dim());
  if (y0) y0->validate(target.dim());
  // Surfaces the s_v < r* alpha_tilde s_w constraint before any run starts.
  LyapunovPair::create(lyapunov.s_v, lyapunov.s_w, alpha_tilde,
                       lyapunov.log_pi_sup.value_or(0.0), lyapunov.r_star);
}

const std::vector<std::string>& estimate_names() {
  static const std::vector<std::string> names{"x", "x2"};
  return names;
}

double resolve_log_pi_sup(const RunConfig& config, const TargetModel& model) {
  if (config.lyapunov.log_pi_sup) return *config.lyapunov.log_pi_sup;
  if (auto known = model.known_log_pi_sup()) return *known;
  if (config.target.kind == TargetSpec::Kind::MixtureNormals1d) {
    const auto& m = config.target.mixture;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < m.means.size(); ++k) {
      lo = std::min(lo, m.means[k] - 10.0 * m.std_devs[k]);
      hi = std::max(hi, m.means[k] + 10.0 * m.std_devs[k]);
    }
    const std::pair<double, double> box[] = {{lo, hi}};
    return estimate_log_pi_sup(model, box, kSupGridPoints);
  }
  throw UnsupportedError("log_pi_sup must be supplied for this target");
}

RunResult run(const RunConfig& config, const StepObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const TargetModel model = config.target.build();
  const TemperedAuxiliary aux(model, config.alpha_tilde);
  const std::size_t d = model.dimension();
  const LyapunovPair lyap =
      LyapunovPair::create(config.lyapunov.s_v, config.lyapunov.s_w,
                           config.alpha_tilde, resolve_log_pi_sup(config, model),
                           config.lyapunov.r_star);

  const NonlinearKernel kernel{
      RwmKernel::for_target(model, Point(d, config.sigma_pi), config.k_iterate),
      config.epsilon, config.kind, config.with_mutation, aux};
  kernel.validate();
  const RwmKernel aux_kernel =
      RwmKernel::for_auxiliary(aux, Point(d, config.sigma_eta), config.p_iterate);

  Rng rng_x(mix_seed(config.seed, kStreamX));
  Rng rng_y(mix_seed(config.seed, kStreamY));

  ChainState x = initial_state(config.x0, model, rng_x, "X");
  ChainState y = initial_state(config.y0.value_or(config.x0), model, rng_y, "Y");

  RunResult result;
  ChainTrace& trace = result.trace;
  RunSummary& summary = result.summary;
  trace.has_lyapunov = true;
  if (config.store_trace) {
    trace.x_states.reserve(config.n_iters + 1);
    trace.x_states.push_back(x.x);
  }

  EmpiricalMeasure measure(aux, lyap);
  measure.update(y.x, y.log_pi);
  std::size_t evaluations = 2;

  Estimators est(config.n_iters - config.burn_in, config.batches);
  std::size_t accepts_x = 0;
  std::size_t accepts_y = 0;

  for (std::size_t n = 1; n <= config.n_iters; ++n) {
    accepts_y += rwm_advance(aux_kernel, y, rng_y);
    evaluations += aux_kernel.iterate_count;
    check_finite_state(y, n, "Y");

    if (observer) observer(n, measure, x);

    if (config.feed_after_burnin && n <= config.burn_in) {
      rng_x.uniform();  // keeps the X stream layout identical to a fed step
      accepts_x += rwm_advance(kernel.base, x, rng_x);
      evaluations += kernel.base.iterate_count;
      ++trace.branches.base;
    } else {
      const StepInfo info = nonlinear_advance(kernel, x, measure, rng_x);
      evaluations += info.density_evaluations;
      accepts_x += info.base_accept_count;
      switch (info.branch) {
        case Branch::BaseKernel:
          ++trace.branches.base;
          break;
        case Branch::NonlinearAccepted:
          ++trace.branches.nonlinear_accepted;
          break;
        case Branch::NonlinearRejected:
          ++trace.branches.nonlinear_rejected;
          break;
      }
      if (info.fallback) ++trace.branches.fallback;
    }
    check_finite_state(x, n, "X");

    measure.update(y.x, y.log_pi);

    if (n % config.snv_stride == 0 || n == config.n_iters) {
      trace.snv.push_back({n, measure.measure_v()});
    }
    if (n > config.burn_in) est.add(x.x);
    if (config.store_trace) trace.x_states.push_back(x.x);
  }

  trace.y_count = measure.size();
  est.fill(trace.running_estimates, nullptr);

  summary.seed = config.seed;
  est.fill(summary.estimates, &summary.estimate_se);
  summary.branches = trace.branches;
  summary.branch_eps_count = trace.branches.eps();
  summary.accept_rwm_x = ratio(accepts_x, trace.branches.base * config.k_iterate);
  summary.accept_rwm_y = ratio(accepts_y, config.n_iters * config.p_iterate);
  summary.accept_exchange =
      ratio(trace.branches.nonlinear_accepted, trace.branches.eps());
  summary.snv_final = measure.measure_v();
  summary.snv_max = 0.0;
  for (const auto& p : trace.snv) summary.snv_max = std::max(summary.snv_max, p.value);
  summary.density_evaluations = evaluations;
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  result.measure.emplace(std::move(measure));
  return result;
}

RunSummary rwm_baseline(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const TargetModel model = config.target.build();
  const RwmKernel kernel = RwmKernel::for_target(
      model, Point(model.dimension(), config.sigma_pi), config.k_iterate);
  Rng rng_x(mix_seed(config.seed, kStreamX));
  ChainState x = initial_state(config.x0, model, rng_x, "X");

  Estimators est(config.n_iters - config.burn_in, config.batches);
  std::size_t accepts = 0;
  for (std::size_t n = 1; n <= config.n_iters; ++n) {
    accepts += rwm_advance(kernel, x, rng_x);
    check_finite_state(x, n, "X");
    if (n > config.burn_in) est.add(x.x);
  }

  RunSummary summary;
  summary.seed = config.seed;
  est.fill(summary.estimates, &summary.estimate_se);
  summary.branches.base = config.n_iters;
  summary.accept_rwm_x = ratio(accepts, config.n_iters * config.k_iterate);
  summary.snv_final = std::nan("");
  summary.snv_max = std::nan("");
  summary.density_evaluations = 1 + config.n_iters * config.k_iterate;
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

std::vector<double> RepeatSummary::estimates(const std::string& name) const {
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(r.estimates.at(name));
  return out;
}

std::uint64_t repeat_seed(std::uint64_t base_seed, std::size_t index) {
  return mix_seed(base_seed, index);
}

std::pair<double, double> mean_two_sd(const std::vector<double>& values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  const double mean = sum.value() / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nan("")};
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  const double var = ss.value() / static_cast<double>(values.size() - 1);
  return {mean, 2.0 * std::sqrt(var)};
}

RepeatSummary repeat_runs(const RunConfig& config, std::size_t repeats,
                          const RepeatOptions& options) {
  if (repeats < 2) throw RangeError("repeats must be >= 2");
  config.validate();

  std::vector<std::optional<RunSummary>> slots(repeats);
  std::vector<std::string> errors(repeats);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < repeats; i = next++) {
      RunConfig cfg = config;
      cfg.seed = options.identical_seeds ? config.seed : repeat_seed(config.seed, i);
      cfg.store_trace = false;
      try {
        RunSummary s = options.mode == RunMode::Baseline ? rwm_baseline(cfg)
                                                         : run(cfg).summary;
        s.run_index = i;
        slots[i] = std::move(s);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, repeats);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RepeatSummary out;
  for (std::size_t i = 0; i < repeats; ++i) {
    if (slots[i]) {
      out.runs.push_back(std::move(*slots[i]));
    } else {
      out.failures.push_back({i, errors[i]});
    }
  }
  for (const auto& name : estimate_names()) {
    const auto [m, s] = mean_two_sd(out.estimates(name));
    out.mean[name] = m;
    out.two_sd[name] = s;
  }
  return out;
}

}  // namespace nlmc

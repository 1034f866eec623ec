#include "nlmc/kernels.hpp"

#include <cmath>
#include <sstream>

#include "nlmc/errors.hpp"

namespace nlmc {

RwmKernel RwmKernel::for_target(const TargetModel& model,
                                std::vector<double> proposal_std,
                                std::size_t iterate_count) {
  RwmKernel k{model, 1.0, std::move(proposal_std), iterate_count};
  k.validate();
  return k;
}

RwmKernel RwmKernel::for_auxiliary(const TemperedAuxiliary& aux,
                                   std::vector<double> proposal_std,
                                   std::size_t iterate_count) {
  RwmKernel k{aux.base(), aux.alpha_tilde(), std::move(proposal_std), iterate_count};
  k.validate();
  return k;
}

void RwmKernel::validate() const {
  if (proposal_std.size() != model.dimension()) {
    throw RangeError("rwm kernel: one proposal std per dimension required");
  }
  for (double s : proposal_std) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw RangeError("rwm kernel: proposal std must lie in (0, inf)");
    }
  }
  if (iterate_count < 1) throw RangeError("rwm kernel: iterate_count must be >= 1");
  if (!(temperature > 0.0 && temperature <= 1.0)) {
    throw RangeError("rwm kernel: temperature must lie in (0, 1]");
  }
}

void NonlinearKernel::validate() const {
  base.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw RangeError("epsilon must lie in the open interval (0,1)");
  }
  if (base.temperature != 1.0) {
    throw RangeError("nonlinear kernel: base kernel must be pi-invariant");
  }
}

std::size_t rwm_advance(const RwmKernel& kernel, ChainState& state, Rng& rng) {
  const std::size_t d = state.x.size();
  const TargetModel& model = kernel.model;
  const double temp = kernel.temperature;
  std::size_t accepted = 0;

  if (d == 1) {
    const double sigma = kernel.proposal_std[0];
    double x = state.x[0];
    double lp = state.log_pi;
    for (std::size_t it = 0; it < kernel.iterate_count; ++it) {
      const double cand = x + sigma * rng.normal();
      const double cand_lp = model.log_pi_unchecked(PointView(&cand, 1));
      const double log_u = std::log(rng.uniform());
      if (log_u < temp * (cand_lp - lp)) {
        x = cand;
        lp = cand_lp;
        ++accepted;
      }
    }
    state.x[0] = x;
    state.log_pi = lp;
    return accepted;
  }

  Point cand(d);
  for (std::size_t it = 0; it < kernel.iterate_count; ++it) {
    for (std::size_t k = 0; k < d; ++k) {
      cand[k] = state.x[k] + kernel.proposal_std[k] * rng.normal();
    }
    const double cand_lp = model.log_pi_unchecked(cand);
    const double log_u = std::log(rng.uniform());
    if (log_u < temp * (cand_lp - state.log_pi)) {
      state.x.swap(cand);
      state.log_pi = cand_lp;
      ++accepted;
    }
  }
  return accepted;
}

StepOutcome rwm_step(const RwmKernel& kernel, PointView x, Rng& rng) {
  ChainState state{Point(x.begin(), x.end()), kernel.model.log_pi(x)};
  if (!std::isfinite(state.log_pi)) {
    throw DomainError("rwm_step: log density at the starting state is not finite");
  }
  const std::size_t accepted = rwm_advance(kernel, state, rng);
  return StepOutcome{std::move(state.x), Branch::BaseKernel, accepted, false};
}

Point phi_select(const EmpiricalMeasure& measure, Rng& rng) {
  const std::size_t i = measure.sample_weighted_index(rng);
  const PointView y = measure.state(i);
  return Point(y.begin(), y.end());
}

StepInfo nonlinear_advance(const NonlinearKernel& kernel, ChainState& state,
                           const EmpiricalMeasure& measure, Rng& rng) {
  StepInfo info;
  const bool eps_branch = rng.uniform() < kernel.epsilon;

  if (!eps_branch || measure.empty()) {
    info.fallback = eps_branch;
    info.base_accept_count = rwm_advance(kernel.base, state, rng);
    info.density_evaluations = kernel.base.iterate_count;
    return info;
  }

  if (kernel.kind == KernelKind::SelectMutate) {
    const std::size_t i = measure.sample_weighted_index(rng);
    const PointView y = measure.state(i);
    state.x.assign(y.begin(), y.end());
    state.log_pi = measure.log_pi(i);
    if (kernel.with_mutation) {
      rwm_advance(kernel.base, state, rng);
      info.density_evaluations = kernel.base.iterate_count;
    }
    info.branch = Branch::NonlinearAccepted;
    return info;
  }

  const std::size_t i = measure.sample_uniform_index(rng);
  const double log_alpha =
      kernel.aux.log_alpha_from_log_pi(state.log_pi, measure.log_pi(i));
  const double log_u = std::log(rng.uniform());
  if (log_u < log_alpha) {
    const PointView u = measure.state(i);
    state.x.assign(u.begin(), u.end());
    state.log_pi = measure.log_pi(i);
    info.branch = Branch::NonlinearAccepted;
  } else {
    info.branch = Branch::NonlinearRejected;
  }
  return info;
}

StepOutcome nonlinear_step(const NonlinearKernel& kernel, PointView x,
                           const EmpiricalMeasure& measure, Rng& rng) {
  ChainState state{Point(x.begin(), x.end()), kernel.base.model.log_pi(x)};
  if (!std::isfinite(state.log_pi)) {
    throw DomainError("nonlinear_step: log pi at the current state is not finite");
  }
  const StepInfo info = nonlinear_advance(kernel, state, measure, rng);
  return StepOutcome{std::move(state.x), info.branch, info.base_accept_count,
                     info.fallback};
}

}  // namespace nlmc

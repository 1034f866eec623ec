#pragma once

#include <cstddef>
#include <vector>

#include "nlmc/empirical_measure.hpp"
#include "nlmc/random.hpp"
#include "nlmc/target_model.hpp"

namespace nlmc {

/// Symmetric Gaussian random-walk Metropolis kernel, iterated iterate_count
/// times per step.
///
/// The invariant density is model^temperature: temperature 1 gives the
/// pi-invariant kernel K, temperature alpha_tilde the eta-invariant kernel P.
struct RwmKernel {
  TargetModel model;
  double temperature = 1.0;
  std::vector<double> proposal_std;
  std::size_t iterate_count = 1;

  static RwmKernel for_target(const TargetModel& model, std::vector<double> proposal_std,
                              std::size_t iterate_count = 1);
  static RwmKernel for_auxiliary(const TemperedAuxiliary& aux,
                                 std::vector<double> proposal_std,
                                 std::size_t iterate_count = 1);

  /// temperature * log pi(x).
  double log_density(PointView x) const { return temperature * model.log_pi(x); }

  /// Throws RangeError on a non-positive scale, a dimension mismatch or
  /// iterate_count == 0.
  void validate() const;
};

enum class KernelKind { SelectMutate, Exchange };

/// Mixture (1 - epsilon) K + epsilon N_mu, where N_mu is either weighted
/// resampling Phi(mu) (followed by one K step when with_mutation is set) or
/// the exchange kernel Q_mu. with_mutation is ignored for Exchange.
struct NonlinearKernel {
  RwmKernel base;
  double epsilon = 0.05;
  KernelKind kind = KernelKind::Exchange;
  bool with_mutation = false;
  TemperedAuxiliary aux;

  void validate() const;
};

enum class Branch { BaseKernel, NonlinearAccepted, NonlinearRejected };

/// Per-step bookkeeping shared by the value-returning and in-place APIs.
struct StepInfo {
  Branch branch = Branch::BaseKernel;
  /// RWM acceptances inside the base-kernel branch; 0 on the epsilon branch.
  std::size_t base_accept_count = 0;
  /// Set when the epsilon branch was drawn against an empty measure.
  bool fallback = false;
  /// log pi evaluations spent by the step.
  std::size_t density_evaluations = 0;
};

struct StepOutcome {
  Point new_state;
  Branch branch = Branch::BaseKernel;
  std::size_t base_accept_count = 0;
  bool fallback = false;
};

/// Current point of a chain and log pi there (untempered, whichever kernel
/// moves the chain).
struct ChainState {
  Point x;
  double log_pi = 0.0;
};

// Random-stream order, per step:
//   rwm iterate:     d normals (proposal), then 1 uniform (acceptance);
//   nonlinear step:  1 uniform (branch), then either the rwm iterates of the
//                    base kernel, or
//                      SelectMutate: 1 uniform (weighted index), then the rwm
//                                    iterates if with_mutation;
//                      Exchange:     1 uniform (uniform index), 1 uniform
//                                    (acceptance).
// The acceptance uniform is drawn on every iterate, so the number of draws
// per step never depends on the states visited.

/// Runs kernel.iterate_count Metropolis iterates in place. state.log_pi must
/// hold log pi(state.x). Returns the number of acceptances.
std::size_t rwm_advance(const RwmKernel& kernel, ChainState& state, Rng& rng);

/// Throws DomainError if the log density at x is not finite.
StepOutcome rwm_step(const RwmKernel& kernel, PointView x, Rng& rng);

/// Weighted draw from Phi(measure). Throws StateError on an empty measure.
Point phi_select(const EmpiricalMeasure& measure, Rng& rng);

/// One step of the nonlinear kernel in place. The measure's stored log pi values are reused, so it must be built over
/// the same target as kernel.base.
StepInfo nonlinear_advance(const NonlinearKernel& kernel, ChainState& state,
                           const EmpiricalMeasure& measure, Rng& rng);

/// Throws DomainError if log pi(x) is not finite.
StepOutcome nonlinear_step(const NonlinearKernel& kernel, PointView x,
                           const EmpiricalMeasure& measure, Rng& rng);

}  // namespace nlmc

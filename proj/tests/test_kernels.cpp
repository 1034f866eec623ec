#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "nlmc/accumulators.hpp"
#include "nlmc/errors.hpp"
#include "nlmc/kernels.hpp"
#include "nlmc/simulator.hpp"

using namespace nlmc;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double chi_square_p(const std::vector<std::size_t>& counts, const std::vector<double>& probs,
                    std::size_t draws) {
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0) continue;
    const double e = probs[i] * static_cast<double>(draws);
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

TemperedAuxiliary toy_aux() { return TemperedAuxiliary(TargetSpec{}.build(), 0.75); }

NonlinearKernel make_kernel(const TemperedAuxiliary& aux, double eps, KernelKind kind,
                            bool mutate = false, std::size_t m = 1, double sigma = 1.0) {
  NonlinearKernel k{RwmKernel::for_target(aux.base(), {sigma}, m), eps, kind, mutate, aux};
  k.validate();
  return k;
}

}  // namespace

TEST_CASE("rwm: zero log ratio is always accepted") {
  const TargetModel flat("flat", 1, [](PointView) { return 0.0; });
  const auto k = RwmKernel::for_target(flat, {1.0}, 25);
  Rng rng(1);
  const auto out = rwm_step(k, Point{0.0}, rng);
  CHECK(out.base_accept_count == 25);
  CHECK(out.branch == Branch::BaseKernel);
}

TEST_CASE("rwm: point-mass surrogate never moves") {
  const TargetModel spike("spike", 1, [](PointView x) { return x[0] == 2.0 ? 0.0 : kNegInf; });
  const auto k = RwmKernel::for_target(spike, {1.0}, 100);
  Rng rng(2);
  const auto out = rwm_step(k, Point{2.0}, rng);
  CHECK(out.base_accept_count == 0);
  CHECK(out.new_state[0] == 2.0);
  CHECK_THROWS_AS(rwm_step(k, Point{1.0}, rng), DomainError);
}

TEST_CASE("rwm: long-run acceptance on N(0,1) with sigma 2.4 is near 0.44") {
  const auto k = RwmKernel::for_target(TargetModel::standard_normal(1), {2.4}, 1);
  Rng rng(3);
  ChainState s{{0.0}, k.model.log_pi(Point{0.0})};
  std::size_t acc = 0;
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) acc += rwm_advance(k, s, rng);
  CHECK(static_cast<double>(acc) / n == doctest::Approx(0.44).epsilon(0.05 / 0.44));
}

TEST_CASE("rwm: one m-fold step equals m single steps on the same stream") {
  const auto model = TargetSpec{}.build();
  for (std::size_t d : {1u, 3u}) {
    const auto m = d == 1 ? model : TargetModel::standard_normal(3);
    const auto k50 = RwmKernel::for_target(m, Point(d, 0.8), 50);
    const auto k1 = RwmKernel::for_target(m, Point(d, 0.8), 1);
    Rng a(42), b(42);
    const Point x0(d, 0.3);
    const auto big = rwm_step(k50, x0, a);
    Point x = x0;
    std::size_t acc = 0;
    for (int i = 0; i < 50; ++i) {
      const auto s = rwm_step(k1, x, b);
      acc += s.base_accept_count;
      x = s.new_state;
    }
    CHECK(big.new_state == x);
    CHECK(big.base_accept_count == acc);
    CHECK(a.next() == b.next());
  }
}

TEST_CASE("rwm: tempered kernel targets pi^alpha") {
  // eta = N(0,1)^0.5 = N(0, 2): variance 2.
  const auto aux = TemperedAuxiliary(TargetModel::standard_normal(1), 0.5);
  const auto p = RwmKernel::for_auxiliary(aux, {2.5}, 1);
  Rng rng(9);
  ChainState s{{0.0}, 0.0};
  s.log_pi = aux.base().log_pi(s.x);
  BatchMeans m2(400000, 40);
  for (int i = 0; i < 400000; ++i) {
    rwm_advance(p, s, rng);
    m2.add(s.x[0] * s.x[0]);
  }
  CHECK(std::fabs(m2.mean() - 2.0) < 4 * m2.standard_error());
}

TEST_CASE("kernel validation") {
  const auto model = TargetModel::standard_normal(1);
  CHECK_THROWS_AS(RwmKernel::for_target(model, {0.0}), RangeError);
  CHECK_THROWS_AS(RwmKernel::for_target(model, {1.0}, 0), RangeError);
  CHECK_THROWS_AS(RwmKernel::for_target(model, {1.0, 1.0}), RangeError);
  const TemperedAuxiliary aux(model, 0.5);
  NonlinearKernel k{RwmKernel::for_target(model, {1.0}), 1.0, KernelKind::Exchange, false, aux};
  CHECK_THROWS_AS(k.validate(), RangeError);
  k.epsilon = 0.0;
  CHECK_THROWS_AS(k.validate(), RangeError);
}

TEST_CASE("phi_select: equal weights give a uniform draw") {
  const TargetModel flat("flat", 1, [](PointView) { return 0.0; });
  auto m = EmpiricalMeasure::init(Point{0.0}, TemperedAuxiliary(flat, 0.5));
  for (int i = 1; i < 8; ++i) m.update(Point{static_cast<double>(i)});
  Rng rng(4);
  std::vector<std::size_t> counts(8, 0);
  const std::size_t n = 80000;
  for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(phi_select(m, rng)[0])];
  CHECK(chi_square_p(counts, std::vector<double>(8, 0.125), n) > 0.001);
}

TEST_CASE("phi_select: weights {1, 3} select with probabilities {0.25, 0.75}") {
  // log g = (1 - 0.5) log pi, so log pi = 2 log 3 gives weight 3.
  const TargetModel lin("lin", 1, [](PointView x) { return x[0]; });
  auto m = EmpiricalMeasure::init(Point{0.0}, TemperedAuxiliary(lin, 0.5));
  m.update(Point{2.0 * std::log(3.0)});
  Rng rng(5);
  std::vector<std::size_t> counts(2, 0);
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) ++counts[m.sample_weighted_index(rng)];
  CHECK(chi_square_p(counts, {0.25, 0.75}, n) > 0.001);
  CHECK(static_cast<double>(counts[1]) / n == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("phi_select: 100 auxiliary states match exact normalized weights") {
  const auto aux = toy_aux();
  const auto p = RwmKernel::for_auxiliary(aux, {10.0});
  Rng yrng(6);
  ChainState y{{5.0}, aux.base().log_pi(Point{5.0})};
  auto m = EmpiricalMeasure::init(y.x, aux);
  for (int i = 1; i < 100; ++i) {
    rwm_advance(p, y, yrng);
    m.update(y.x);
  }
  // Exact weights from log_pi directly, not from the measure's cache.
  std::vector<double> probs(m.size());
  double total = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    probs[i] = std::exp(0.25 * aux.base().log_pi(m.state(i)));
    total += probs[i];
  }
  for (auto& q : probs) q /= total;
  Rng rng(7);
  std::vector<std::size_t> counts(m.size(), 0);
  const std::size_t n = 200000;
  for (std::size_t i = 0; i < n; ++i) ++counts[m.sample_weighted_index(rng)];
  CHECK(chi_square_p(counts, probs, n) > 0.001);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double sd = std::sqrt(probs[i] * (1 - probs[i]) * n);
    CHECK(std::fabs(counts[i] - probs[i] * n) < 4 * sd + 1);
  }
}

TEST_CASE("phi_select on an empty measure") {
  const EmpiricalMeasure empty(toy_aux());
  Rng rng(1);
  CHECK_THROWS_AS(phi_select(empty, rng), StateError);
}

TEST_CASE("nonlinear step: exchange with U = x is accepted and leaves x in place") {
  const auto aux = toy_aux();
  const auto m = EmpiricalMeasure::init(Point{3.0}, aux);
  const auto k = make_kernel(aux, 0.999999, KernelKind::Exchange);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto out = nonlinear_step(k, Point{3.0}, m, rng);
    if (out.branch == Branch::BaseKernel) continue;
    CHECK(out.branch == Branch::NonlinearAccepted);
    CHECK(out.new_state[0] == 3.0);
    CHECK(out.base_accept_count == 0);
  }
}

TEST_CASE("nonlinear step: selection from a singleton measure returns it") {
  const auto aux = toy_aux();
  const auto m = EmpiricalMeasure::init(Point{17.0}, aux);
  const auto k = make_kernel(aux, 0.999999, KernelKind::SelectMutate);
  Rng rng(9);
  int eps = 0;
  for (int i = 0; i < 100; ++i) {
    const auto out = nonlinear_step(k, Point{0.0}, m, rng);
    if (out.branch != Branch::NonlinearAccepted) continue;
    ++eps;
    CHECK(out.new_state[0] == 17.0);
  }
  CHECK(eps > 90);

  // with mutation the selected point is moved by K afterwards
  const auto km = make_kernel(aux, 0.999999, KernelKind::SelectMutate, true, 20);
  bool moved = false;
  for (int i = 0; i < 50; ++i) moved |= nonlinear_step(km, Point{0.0}, m, rng).new_state[0] != 17.0;
  CHECK(moved);
}

TEST_CASE("nonlinear step: epsilon branch count is Binomial(N, eps)") {
  const auto aux = toy_aux();
  auto m = EmpiricalMeasure::init(Point{0.0}, aux);
  m.update(Point{17.5});
  for (double eps : {0.05, 0.5, 0.95}) {
    for (auto kind : {KernelKind::Exchange, KernelKind::SelectMutate}) {
      const auto k = make_kernel(aux, eps, kind);
      Rng rng(10);
      ChainState s{{0.0}, aux.base().log_pi(Point{0.0})};
      const std::size_t n = 100000;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) {
        hits += nonlinear_advance(k, s, m, rng).branch != Branch::BaseKernel;
      }
      const double sd = std::sqrt(n * eps * (1 - eps));
      CHECK(std::fabs(hits - n * eps) < 4 * sd);
    }
  }
}

TEST_CASE("nonlinear step: exchange moves satisfy detailed balance and accept uphill") {
  const auto aux = toy_aux();
  const auto& model = aux.base();
  const auto p = RwmKernel::for_auxiliary(aux, {10.0});
  Rng yrng(11);
  ChainState y{{0.0}, model.log_pi(Point{0.0})};
  auto m = EmpiricalMeasure::init(y.x, aux);
  for (int i = 0; i < 500; ++i) {
    rwm_advance(p, y, yrng);
    m.update(y.x);
  }
  const auto k = make_kernel(aux, 0.999999, KernelKind::Exchange);
  Rng rng(12);
  ChainState x{{8.0}, model.log_pi(Point{8.0})};
  for (int i = 0; i < 5000; ++i) {
    const ChainState before = x;
    // Replays the stream to find the proposed index.
    Rng probe = rng;
    probe.uniform();
    const std::size_t idx = m.sample_uniform_index(probe);
    const auto info = nonlinear_advance(k, x, m, rng);
    if (info.branch == Branch::BaseKernel) continue;
    const double lx = before.log_pi, lu = m.log_pi(idx);
    const double a = 0.75;
    CHECK(lx + a * lu + aux.log_alpha_from_log_pi(lx, lu) ==
          doctest::Approx(lu + a * lx + aux.log_alpha_from_log_pi(lu, lx)).epsilon(1e-12));
    if (lu >= lx) CHECK(info.branch == Branch::NonlinearAccepted);
    if (info.branch == Branch::NonlinearAccepted) CHECK(x.x[0] == m.state(idx)[0]);
    if (info.branch == Branch::NonlinearRejected) CHECK(x.x == before.x);
  }
}

TEST_CASE("nonlinear step: empty measure falls back to the base kernel") {
  const auto aux = toy_aux();
  const EmpiricalMeasure empty(aux);
  const auto k = make_kernel(aux, 0.999999, KernelKind::Exchange);
  Rng rng(13);
  const auto out = nonlinear_step(k, Point{0.0}, empty, rng);
  CHECK(out.branch == Branch::BaseKernel);
  CHECK(out.fallback);
}

TEST_CASE("nonlinear step: deterministic given the seed") {
  const auto aux = toy_aux();
  auto m = EmpiricalMeasure::init(Point{0.0}, aux);
  for (int i = 0; i < 50; ++i) m.update(Point{0.35 * i});
  for (auto kind : {KernelKind::Exchange, KernelKind::SelectMutate}) {
    const auto k = make_kernel(aux, 0.4, kind, true, 3);
    Rng a(77), b(77);
    Point xa{1.0}, xb{1.0};
    for (int i = 0; i < 1000; ++i) {
      const auto oa = nonlinear_step(k, xa, m, a);
      const auto ob = nonlinear_step(k, xb, m, b);
      CHECK(oa.new_state == ob.new_state);
      CHECK(oa.branch == ob.branch);
      CHECK(oa.base_accept_count == ob.base_accept_count);
      xa = oa.new_state;
      xb = ob.new_state;
    }
  }
}

TEST_CASE("nonlinear kernel on N(0,1) with a frozen eta sample reproduces pi moments") {
  // eta = N(0,1)^0.75 = N(0, 4/3). Long auxiliary sample, frozen.
  const auto aux = TemperedAuxiliary(TargetModel::standard_normal(1), 0.75);
  const auto p = RwmKernel::for_auxiliary(aux, {2.5});
  Rng yrng(14);
  ChainState y{{0.0}, aux.base().log_pi(Point{0.0})};
  auto m = EmpiricalMeasure::init(y.x, aux);
  for (int i = 0; i < 1000000; ++i) {
    rwm_advance(p, y, yrng);
    m.update(y.x, y.log_pi);
  }
  for (auto kind : {KernelKind::Exchange, KernelKind::SelectMutate}) {
    const auto k = make_kernel(aux, 0.25, kind, false, 1, 2.4);
    Rng rng(15);
    ChainState x{{0.0}, aux.base().log_pi(Point{0.0})};
    BatchMeans m1(1000000, 50), m2(1000000, 50);
    for (int i = 0; i < 1000000; ++i) {
      nonlinear_advance(k, x, m, rng);
      m1.add(x.x[0]);
      m2.add(x.x[0] * x.x[0]);
    }
    MESSAGE("kind " << static_cast<int>(kind) << " mean " << m1.mean() << " +- "
                    << m1.standard_error() << " second " << m2.mean() << " +- "
                    << m2.standard_error());
    CHECK(std::fabs(m1.mean()) < 3 * m1.standard_error());
    CHECK(std::fabs(m2.mean() - 1.0) < 3 * m2.standard_error());
  }
}

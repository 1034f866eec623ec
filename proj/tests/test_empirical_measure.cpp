#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nlmc/empirical_measure.hpp"
#include "nlmc/errors.hpp"
#include "nlmc/kernels.hpp"
#include "nlmc/simulator.hpp"

using namespace nlmc;

namespace {

TemperedAuxiliary toy_aux(double alpha = 0.75) {
  return TemperedAuxiliary(TargetSpec{}.build(), alpha);
}

double first(PointView x) { return x[0]; }

// Y chain under P on the toy mixture, stored into a fresh measure.
EmpiricalMeasure simulate_aux(std::size_t n, std::uint64_t seed,
                              std::optional<LyapunovPair> pair = std::nullopt) {
  const auto aux = toy_aux();
  const auto p = RwmKernel::for_auxiliary(aux, {10.0});
  Rng rng(seed);
  ChainState y{{0.0}, aux.base().log_pi(Point{0.0})};
  auto m = EmpiricalMeasure::init(y.x, aux, pair);
  for (std::size_t i = 1; i < n; ++i) {
    rwm_advance(p, y, rng);
    m.update(y.x);
  }
  return m;
}

}  // namespace

TEST_CASE("init stores a single state with its potential") {
  const auto aux = toy_aux();
  const auto m = EmpiricalMeasure::init(Point{0.0}, aux);
  CHECK(m.size() == 1);
  CHECK(m.log_weight(0) == doctest::Approx(-0.37216391869971378807).epsilon(1e-14));
  CHECK(m.integrate([](PointView x) { return std::sin(x[0]) + 3.0; }) == doctest::Approx(3.0));
  const auto m2 = EmpiricalMeasure::init(Point{2.5}, aux);
  CHECK(m2.integrate([](PointView x) { return x[0] * x[0]; }) == 6.25);

  const TargetModel holey("h", 1, [](PointView x) {
    return x[0] < 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  });
  CHECK_THROWS_AS(EmpiricalMeasure::init(Point{-1.0}, TemperedAuxiliary(holey, 0.5)),
                  DomainError);
}

TEST_CASE("update follows the recursive mean") {
  auto m = EmpiricalMeasure::init(Point{1.0}, toy_aux());
  m.update(Point{4.0});
  CHECK(m.integrate(first) == doctest::Approx(2.5));

  auto c = EmpiricalMeasure::init(Point{3.25}, toy_aux());
  for (int i = 0; i < 1000; ++i) c.update(Point{3.25});
  CHECK(c.integrate(first) == 3.25);

  // S_n = S_{n-1} + (S_{n-1} ... ) recursion, evaluated as an independent
  // oracle next to the stored-state mean after every update.
  auto r = EmpiricalMeasure::init(Point{0.0}, toy_aux());
  Rng rng(3);
  double recursive = 0.0;
  for (std::size_t n = 1; n <= 2000; ++n) {
    const double y = rng.uniform(-5, 25);
    r.update(Point{y});
    recursive += (y - recursive) / static_cast<double>(n + 1);
    if (n % 97 == 0) CHECK(r.integrate(first) == doctest::Approx(recursive).epsilon(1e-12));
  }
}

TEST_CASE("update rejects zero-density states and leaves the measure unchanged") {
  const TargetModel holey("h", 1, [](PointView x) {
    return x[0] < 0 ? -std::numeric_limits<double>::infinity() : -x[0];
  });
  auto m = EmpiricalMeasure::init(Point{1.0}, TemperedAuxiliary(holey, 0.5));
  CHECK_THROWS_AS(m.update(Point{-1.0}), DomainError);
  CHECK(m.size() == 1);
  CHECK_THROWS_AS(m.update(Point{std::nan("")}), InputError);
  CHECK(m.size() == 1);
}

TEST_CASE("append-only: earlier states never change") {
  auto m = simulate_aux(500, 11);
  const std::vector<double> prefix(m.log_weights().begin(), m.log_weights().end());
  std::vector<double> states;
  for (std::size_t i = 0; i < m.size(); ++i) states.push_back(m.state(i)[0]);
  for (int i = 0; i < 500; ++i) m.update(Point{static_cast<double>(i % 30)});
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    CHECK(m.state(i)[0] == states[i]);
    CHECK(m.log_weight(i) == prefix[i]);
  }
}

TEST_CASE("integrate") {
  const auto m = simulate_aux(300, 5);
  CHECK(m.integrate([](PointView) { return 1.0; }) == doctest::Approx(1.0));

  // linearity
  const auto f = [](PointView x) { return x[0]; };
  const auto g = [](PointView x) { return std::cos(x[0]); };
  const double a = 2.5, b = -0.75;
  CHECK(m.integrate([&](PointView x) { return a * f(x) + b * g(x); }) ==
        doctest::Approx(a * m.integrate(f) + b * m.integrate(g)).epsilon(1e-12));

  const EmpiricalMeasure empty(toy_aux());
  CHECK_THROWS_AS(empty.integrate(f), StateError);
  try {
    m.integrate([](PointView x) { return x[0] > -1e300 ? std::nan("") : 0.0; });
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.index() == 0);
  }
}

TEST_CASE("weighted_integrate") {
  // equal weights reduce to the plain mean
  const TargetModel flat("flat", 1, [](PointView) { return 0.0; });
  auto eq = EmpiricalMeasure::init(Point{1.0}, TemperedAuxiliary(flat, 0.5));
  for (double v : {2.0, 7.0, -3.0}) eq.update(Point{v});
  CHECK(eq.weighted_integrate(first) == doctest::Approx(eq.integrate(first)));

  // weights {1, 3} on values {0, 1}
  const double lw[] = {0.0, std::log(3.0)};
  const double fv[] = {0.0, 1.0};
  CHECK(self_normalized_mean(lw, fv) == doctest::Approx(0.75));

  const double dead[] = {-std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(self_normalized_mean(dead, fv), DomainError);
}

TEST_CASE("weighted_integrate is invariant under log-weight shifts") {
  const auto m = simulate_aux(1000, 21);
  std::vector<double> values, lw(m.log_weights().begin(), m.log_weights().end());
  for (std::size_t i = 0; i < m.size(); ++i) values.push_back(m.state(i)[0]);
  const double base = self_normalized_mean(lw, values);
  CHECK(base == doctest::Approx(m.weighted_integrate(first)).epsilon(1e-14));
  for (double shift : {100.0, -100.0, 700.0, -700.0}) {
    std::vector<double> shifted = lw;
    for (auto& w : shifted) w += shift;
    CHECK(self_normalized_mean(shifted, values) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("weighted_integrate recovers the pi-mean from eta samples") {
  // Importance-sampling oracle: with g = pi/eta the weighted mean of Y
  // targets E_pi[X] = 0.6 * 17.5 = 10.5. 10^4 states thinned from the chain;
  // SE from the Kish effective sample size.
  auto full = simulate_aux(200000, 99);
  const auto aux = toy_aux();
  EmpiricalMeasure thin(aux);
  for (std::size_t i = 0; i < full.size(); i += 20) thin.update(full.state(i));
  const double est = thin.weighted_integrate(first);

  double sw = 0, sw2 = 0, var = 0;
  for (std::size_t i = 0; i < thin.size(); ++i) {
    const double w = std::exp(thin.log_weight(i) - thin.max_log_weight());
    sw += w;
    sw2 += w * w;
  }
  for (std::size_t i = 0; i < thin.size(); ++i) {
    const double w = std::exp(thin.log_weight(i) - thin.max_log_weight()) / sw;
    var += w * (thin.state(i)[0] - est) * (thin.state(i)[0] - est);
  }
  const double ess = sw * sw / sw2;
  const double se = std::sqrt(var / ess);
  MESSAGE("IS estimate " << est << " se " << se << " ess " << ess);
  CHECK(std::fabs(est - 10.5) < 3.0 * se);
}

TEST_CASE("measure_v tracks the batch mean of V") {
  const auto model = TargetSpec{}.build();
  const double sup = -1.429764156970663425;
  const auto pair = LyapunovPair::create(0.1, 0.5, 0.75, sup, 0.5);

  const auto at_mode = EmpiricalMeasure::init(Point{17.5}, toy_aux(), pair);
  CHECK(at_mode.measure_v() == doctest::Approx(1.0));

  const auto m = simulate_aux(5000, 8, pair);
  const double batch = m.integrate([&](PointView x) { return pair.v(model, x); });
  CHECK(m.measure_v() == doctest::Approx(batch).epsilon(1e-12));
  CHECK(m.measure_v() <= m.max_v());

  const auto none = EmpiricalMeasure::init(Point{0.0}, toy_aux());
  CHECK_THROWS_AS(none.measure_v(), ConfigError);
}

TEST_CASE("weighted index sampling survives large jumps in the maximum weight") {
  // log pi climbs by 200 per state: forces several prefix rebuilds.
  const TargetModel ramp("ramp", 1, [](PointView x) { return x[0]; });
  auto m = EmpiricalMeasure::init(Point{-1000.0}, TemperedAuxiliary(ramp, 0.5));
  for (int k = 1; k <= 5; ++k) m.update(Point{-1000.0 + 200.0 * k});
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(m.sample_weighted_index(rng) == 5);
  CHECK(m.max_log_weight() == doctest::Approx(0.5 * 0.0));
}

TEST_CASE("trace dump") {
  auto m = EmpiricalMeasure::init(Point{0.5}, toy_aux());
  m.update(Point{17.0});
  std::ostringstream os;
  m.write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("index,y,log_weight\n0,0.5,", 0) == 0);
  CHECK(s.find("\n1,17,") != std::string::npos);
}

#include <string>

#include "doctest.h"
#include "nlmc/config.hpp"
#include "nlmc/errors.hpp"

using namespace nlmc;

namespace {

const std::string kMinimal = R"(# toy mixture, exchange kernel
alpha_tilde = 0.75
epsilon     = 0.05
sigma_pi    = 1
sigma_eta   = 10
n_iters     = 20000   # short
seed        = 42
)";

std::string message_of(const std::string& text,
                       const std::vector<std::pair<std::string, std::string>>& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal file takes defaults for everything else") {
  const auto c = parse_config(kMinimal);
  CHECK(c.run.alpha_tilde == 0.75);
  CHECK(c.run.epsilon == 0.05);
  CHECK(c.run.sigma_eta == 10.0);
  CHECK(c.run.n_iters == 20000);
  CHECK(c.run.seed == 42);
  CHECK(c.run.kind == KernelKind::Exchange);
  CHECK(c.run.target.kind == TargetSpec::Kind::MixtureNormals1d);
  CHECK(c.run.target.mixture.means == std::vector<double>{0.0, 17.5});
  CHECK(c.run.target.mixture.std_devs[0] == 0.70710678118654757);
  CHECK(!c.run.y0.has_value());
  CHECK(c.repeats == 10);
  CHECK(c.epsilons.size() == 5);
  CHECK(c.calibration == CalibrationMode::Evaluations);
}

TEST_CASE("every key parses") {
  const std::string text = kMinimal + R"(
target = std_normal
dimension = 3
kernel = select_mutate
with_mutation = true
k_iterate = 4
p_iterate = 2
burn_in = 100
x0 = fixed:1,2,3
y0 = uniform:-1:1
feed_after_burnin = true
s_v = 0.05
s_w = 0.6
r_star = 0.4
log_pi_sup = -2.5
snv_stride = 10
batches = 20
repeats = 3
workers = 2
epsilons = 0.1,0.9
baseline_iters = 500
compare_epsilon = 0.02
compare_k_iterate = 2
calibration = fixed
calibration_factor = 0.5
calibration_iters = 1000
drift_probes = -3,3
drift_samples = 200
drift_radius = 1.5
drift_kernel = nonlinear
ustat_samples = 20
dump_trace = true
)";
  const auto c = parse_config(text);
  CHECK(c.run.target.kind == TargetSpec::Kind::StdNormal);
  CHECK(c.run.target.dimension == 3);
  CHECK(c.run.kind == KernelKind::SelectMutate);
  CHECK(c.run.with_mutation);
  CHECK(c.run.k_iterate == 4);
  CHECK(c.run.x0.values == std::vector<double>{1, 2, 3});
  REQUIRE(c.run.y0.has_value());
  CHECK(c.run.y0->kind == InitSpec::Kind::Uniform);
  CHECK(c.run.lyapunov.log_pi_sup == -2.5);
  CHECK(c.epsilons == std::vector<double>{0.1, 0.9});
  CHECK(c.calibration == CalibrationMode::Fixed);
  CHECK(c.drift_kernel == DriftKernelKind::Nonlinear);
  CHECK(c.dump_trace);
  CHECK(parse_config(emit_config(c)) == c);
}

TEST_CASE("emit then parse round-trips") {
  const auto c = parse_config(kMinimal);
  const auto text = emit_config(c);
  CHECK(text.rfind("# resolved configuration", 0) == 0);
  CHECK(parse_config(text) == c);
  CHECK(emit_config(parse_config(text)) == text);
}

TEST_CASE("overrides apply on top of the file") {
  const auto c = parse_config(kMinimal, {{"epsilon", "0.5"}, {"seed", "7"}});
  CHECK(c.run.epsilon == 0.5);
  CHECK(c.run.seed == 7);
  CHECK(split_override("epsilon=0.5") == std::pair<std::string, std::string>{"epsilon", "0.5"});
  CHECK(split_override("x0=fixed:1").second == "fixed:1");
  CHECK_THROWS_AS(split_override("epsilon"), ConfigError);
  CHECK(message_of(kMinimal, {{"nope", "1"}}).find("nope") != std::string::npos);
}

TEST_CASE("out-of-range epsilon names the bounds") {
  try {
    parse_config(kMinimal, {{"epsilon", "1.5"}});
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    CHECK(std::string(e.what()).find("epsilon = 1.5 is out of range") != std::string::npos);
    CHECK(std::string(e.what()).find("(0,1)") != std::string::npos);
  }
}

TEST_CASE("missing mandatory key is named") {
  for (const auto& key : mandatory_config_keys()) {
    std::string text;
    std::size_t start = 0;
    while (start < kMinimal.size()) {
      const auto end = kMinimal.find('\n', start);
      const auto line = kMinimal.substr(start, end - start);
      if (line.rfind(key, 0) != 0) text += line + "\n";
      start = end + 1;
    }
    const auto msg = message_of(text);
    CHECK_MESSAGE(msg.find(key) != std::string::npos, key);
  }
}

TEST_CASE("malformed input") {
  CHECK(message_of(kMinimal + "bogus = 1\n").find("bogus") != std::string::npos);
  CHECK(message_of(kMinimal + "seed = 3\n").find("seed") != std::string::npos);
  CHECK(message_of(kMinimal + "no equals sign\n").find("line 8") != std::string::npos);
  CHECK(message_of(kMinimal, {{"n_iters", "12x"}}) != "");
  CHECK(message_of(kMinimal, {{"kernel", "gibbs"}}) != "");
  CHECK(message_of(kMinimal, {{"x0", "normal:0"}}) != "");
  CHECK(message_of(kMinimal, {{"weights", "0.5,0.6"}}) != "");
  CHECK(message_of(kMinimal, {{"with_mutation", "maybe"}}) != "");
  CHECK_THROWS_AS(parse_config(kMinimal, {{"repeats", "1"}}), RangeError);
  CHECK_THROWS_AS(parse_config(kMinimal, {{"sigma_pi", "-1"}}), RangeError);
  CHECK_THROWS_AS(parse_config(kMinimal, {{"s_v", "0.3"}}), RangeError);
}

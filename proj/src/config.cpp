#include "nlmc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "nlmc/csv.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ConfigError(key + ": '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ConfigError(key + ": '" + text + "' is not a non-negative integer");
  }
  return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(to_double(key, part));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

[[noreturn]] void out_of_range(const std::string& key, const std::string& value,
                               const std::string& bounds) {
  throw RangeError(key + " = " + value + " is out of range; expected a value in " +
                   bounds);
}

double open_unit(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (!(v > 0.0 && v < 1.0)) out_of_range(key, text, "(0,1)");
  return v;
}

double positive(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (!(v > 0.0) || !std::isfinite(v)) out_of_range(key, text, "(0,inf)");
  return v;
}

std::size_t at_least(const std::string& key, const std::string& text, std::size_t lo) {
  const std::size_t v = to_size(key, text);
  if (v < lo) out_of_range(key, text, "[" + std::to_string(lo) + ",inf)");
  return v;
}

InitSpec to_init(const std::string& key, const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = trim(text.substr(0, colon));
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "fixed") {
    InitSpec s;
    s.kind = InitSpec::Kind::Fixed;
    s.values = to_doubles(key, rest);
    return s;
  }
  if (kind == "uniform") {
    const auto parts = split(rest, ':');
    if (parts.size() != 2) {
      throw ConfigError(key + ": expected uniform:<lo>:<hi>, got '" + text + "'");
    }
    const double lo = to_double(key, parts[0]);
    const double hi = to_double(key, parts[1]);
    if (!(lo < hi)) out_of_range(key, text, "uniform:<lo>:<hi> with lo < hi");
    return InitSpec::uniform(lo, hi);
  }
  throw ConfigError(key + ": expected fixed:<values> or uniform:<lo>:<hi>, got '" +
                    text + "'");
}

std::string from_init(const InitSpec& s) {
  if (s.kind == InitSpec::Kind::Fixed) return "fixed:" + join(s.values);
  return "uniform:" + format_double(s.lo) + ":" + format_double(s.hi);
}

struct KeyDef {
  std::string name;
  std::string default_text;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Mandatory keys carry an empty default.
const std::vector<KeyDef>& key_table() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::vector<KeyDef> table = {
      {"target", "mixture_normals_1d",
       [](C& c, const S& v) {
         if (v == "mixture_normals_1d") {
           c.run.target.kind = TargetSpec::Kind::MixtureNormals1d;
         } else if (v == "std_normal") {
           c.run.target.kind = TargetSpec::Kind::StdNormal;
         } else {
           throw ConfigError("target: expected mixture_normals_1d or std_normal, got '" +
                             v + "'");
         }
       },
       [](const C& c) -> S {
         return c.run.target.kind == TargetSpec::Kind::StdNormal ? "std_normal"
                                                                 : "mixture_normals_1d";
       }},
      {"weights", "0.4,0.6",
       [](C& c, const S& v) { c.run.target.mixture.weights = to_doubles("weights", v); },
       [](const C& c) { return join(c.run.target.mixture.weights); }},
      {"means", "0,17.5",
       [](C& c, const S& v) { c.run.target.mixture.means = to_doubles("means", v); },
       [](const C& c) { return join(c.run.target.mixture.means); }},
      {"std_devs", "0.70710678118654757,1",
       [](C& c, const S& v) {
         c.run.target.mixture.std_devs = to_doubles("std_devs", v);
       },
       [](const C& c) { return join(c.run.target.mixture.std_devs); }},
      {"dimension", "1",
       [](C& c, const S& v) { c.run.target.dimension = at_least("dimension", v, 1); },
       [](const C& c) { return std::to_string(c.run.target.dimension); }},
      {"alpha_tilde", "",
       [](C& c, const S& v) { c.run.alpha_tilde = open_unit("alpha_tilde", v); },
       [](const C& c) { return format_double(c.run.alpha_tilde); }},
      {"epsilon", "",
       [](C& c, const S& v) { c.run.epsilon = open_unit("epsilon", v); },
       [](const C& c) { return format_double(c.run.epsilon); }},
      {"kernel", "exchange",
       [](C& c, const S& v) {
         if (v == "exchange") {
           c.run.kind = KernelKind::Exchange;
         } else if (v == "select_mutate") {
           c.run.kind = KernelKind::SelectMutate;
         } else {
           throw ConfigError("kernel: expected exchange or select_mutate, got '" + v +
                             "'");
         }
       },
       [](const C& c) -> S {
         return c.run.kind == KernelKind::Exchange ? "exchange" : "select_mutate";
       }},
      {"with_mutation", "false",
       [](C& c, const S& v) { c.run.with_mutation = to_bool("with_mutation", v); },
       [](const C& c) -> S { return c.run.with_mutation ? "true" : "false"; }},
      {"sigma_pi", "",
       [](C& c, const S& v) { c.run.sigma_pi = positive("sigma_pi", v); },
       [](const C& c) { return format_double(c.run.sigma_pi); }},
      {"sigma_eta", "",
       [](C& c, const S& v) { c.run.sigma_eta = positive("sigma_eta", v); },
       [](const C& c) { return format_double(c.run.sigma_eta); }},
      {"k_iterate", "1",
       [](C& c, const S& v) { c.run.k_iterate = at_least("k_iterate", v, 1); },
       [](const C& c) { return std::to_string(c.run.k_iterate); }},
      {"p_iterate", "1",
       [](C& c, const S& v) { c.run.p_iterate = at_least("p_iterate", v, 1); },
       [](const C& c) { return std::to_string(c.run.p_iterate); }},
      {"n_iters", "",
       [](C& c, const S& v) { c.run.n_iters = at_least("n_iters", v, 1); },
       [](const C& c) { return std::to_string(c.run.n_iters); }},
      {"burn_in", "0",
       [](C& c, const S& v) { c.run.burn_in = to_size("burn_in", v); },
       [](const C& c) { return std::to_string(c.run.burn_in); }},
      {"x0", "fixed:0",
       [](C& c, const S& v) { c.run.x0 = to_init("x0", v); },
       [](const C& c) { return from_init(c.run.x0); }},
      {"y0", "same",
       [](C& c, const S& v) {
         if (v == "same") {
           c.run.y0.reset();
         } else {
           c.run.y0 = to_init("y0", v);
         }
       },
       [](const C& c) -> S { return c.run.y0 ? from_init(*c.run.y0) : "same"; }},
      {"seed", "",
       [](C& c, const S& v) { c.run.seed = to_u64("seed", v); },
       [](const C& c) { return std::to_string(c.run.seed); }},
      {"feed_after_burnin", "false",
       [](C& c, const S& v) {
         c.run.feed_after_burnin = to_bool("feed_after_burnin", v);
       },
       [](const C& c) -> S { return c.run.feed_after_burnin ? "true" : "false"; }},
      {"s_v", "0.1",
       [](C& c, const S& v) { c.run.lyapunov.s_v = open_unit("s_v", v); },
       [](const C& c) { return format_double(c.run.lyapunov.s_v); }},
      {"s_w", "0.5",
       [](C& c, const S& v) { c.run.lyapunov.s_w = open_unit("s_w", v); },
       [](const C& c) { return format_double(c.run.lyapunov.s_w); }},
      {"r_star", "0.5",
       [](C& c, const S& v) { c.run.lyapunov.r_star = open_unit("r_star", v); },
       [](const C& c) { return format_double(c.run.lyapunov.r_star); }},
      {"log_pi_sup", "auto",
       [](C& c, const S& v) {
         if (v == "auto") {
           c.run.lyapunov.log_pi_sup.reset();
         } else {
           const double x = to_double("log_pi_sup", v);
           if (!std::isfinite(x)) out_of_range("log_pi_sup", v, "(-inf,inf)");
           c.run.lyapunov.log_pi_sup = x;
         }
       },
       [](const C& c) -> S {
         return c.run.lyapunov.log_pi_sup ? format_double(*c.run.lyapunov.log_pi_sup)
                                          : "auto";
       }},
      {"snv_stride", "1000",
       [](C& c, const S& v) { c.run.snv_stride = at_least("snv_stride", v, 1); },
       [](const C& c) { return std::to_string(c.run.snv_stride); }},
      {"batches", "50",
       [](C& c, const S& v) { c.run.batches = at_least("batches", v, 2); },
       [](const C& c) { return std::to_string(c.run.batches); }},
      {"repeats", "10",
       [](C& c, const S& v) { c.repeats = at_least("repeats", v, 2); },
       [](const C& c) { return std::to_string(c.repeats); }},
      {"workers", "1",
       [](C& c, const S& v) { c.workers = at_least("workers", v, 1); },
       [](const C& c) { return std::to_string(c.workers); }},
      {"epsilons", "0.05,0.25,0.5,0.75,0.95",
       [](C& c, const S& v) {
         c.epsilons = to_doubles("epsilons", v);
         for (double e : c.epsilons) {
           if (!(e > 0.0 && e < 1.0)) out_of_range("epsilons", v, "(0,1)");
         }
       },
       [](const C& c) { return join(c.epsilons); }},
      {"baseline_iters", "100000",
       [](C& c, const S& v) { c.baseline_iters = at_least("baseline_iters", v, 1); },
       [](const C& c) { return std::to_string(c.baseline_iters); }},
      {"compare_epsilon", "0.01",
       [](C& c, const S& v) { c.compare_epsilon = open_unit("compare_epsilon", v); },
       [](const C& c) { return format_double(c.compare_epsilon); }},
      {"compare_k_iterate", "1",
       [](C& c, const S& v) {
         c.compare_k_iterate = at_least("compare_k_iterate", v, 1);
       },
       [](const C& c) { return std::to_string(c.compare_k_iterate); }},
      {"calibration", "evaluations",
       [](C& c, const S& v) {
         if (v == "evaluations") {
           c.calibration = CalibrationMode::Evaluations;
         } else if (v == "wallclock") {
           c.calibration = CalibrationMode::WallClock;
         } else if (v == "fixed") {
           c.calibration = CalibrationMode::Fixed;
         } else {
           throw ConfigError(
               "calibration: expected evaluations, wallclock or fixed, got '" + v + "'");
         }
       },
       [](const C& c) -> S {
         switch (c.calibration) {
           case CalibrationMode::Evaluations:
             return "evaluations";
           case CalibrationMode::WallClock:
             return "wallclock";
           case CalibrationMode::Fixed:
             return "fixed";
         }
         return "evaluations";
       }},
      {"calibration_factor", "1",
       [](C& c, const S& v) {
         c.calibration_factor = positive("calibration_factor", v);
       },
       [](const C& c) { return format_double(c.calibration_factor); }},
      {"calibration_iters", "20000",
       [](C& c, const S& v) {
         c.calibration_iters = at_least("calibration_iters", v, 100);
       },
       [](const C& c) { return std::to_string(c.calibration_iters); }},
      {"drift_probes", "-10,30",
       [](C& c, const S& v) { c.drift_probes = to_doubles("drift_probes", v); },
       [](const C& c) { return join(c.drift_probes); }},
      {"drift_samples", "10000",
       [](C& c, const S& v) { c.drift_samples = at_least("drift_samples", v, 100); },
       [](const C& c) { return std::to_string(c.drift_samples); }},
      {"drift_radius", "0",
       [](C& c, const S& v) {
         const double r = to_double("drift_radius", v);
         if (!(r >= 0.0) || !std::isfinite(r)) out_of_range("drift_radius", v, "[0,inf)");
         c.drift_radius = r;
       },
       [](const C& c) { return format_double(c.drift_radius); }},
      {"drift_kernel", "rwm",
       [](C& c, const S& v) {
         if (v == "rwm") {
           c.drift_kernel = DriftKernelKind::Rwm;
         } else if (v == "nonlinear") {
           c.drift_kernel = DriftKernelKind::Nonlinear;
         } else {
           throw ConfigError("drift_kernel: expected rwm or nonlinear, got '" + v + "'");
         }
       },
       [](const C& c) -> S {
         return c.drift_kernel == DriftKernelKind::Rwm ? "rwm" : "nonlinear";
       }},
      {"ustat_samples", "100",
       [](C& c, const S& v) { c.ustat_samples = at_least("ustat_samples", v, 2); },
       [](const C& c) { return std::to_string(c.ustat_samples); }},
      {"dump_trace", "false",
       [](C& c, const S& v) { c.dump_trace = to_bool("dump_trace", v); },
       [](const C& c) -> S { return c.dump_trace ? "true" : "false"; }},
  };
  return table;
}

const KeyDef* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& mandatory_config_keys() {
  static const std::vector<std::string> keys{"sigma_pi", "sigma_eta", "epsilon",
                                             "alpha_tilde", "n_iters", "seed"};
  return keys;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return keys;
}

std::pair<std::string, std::string> split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + text + "' is not of the form key=value");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

ExperimentConfig parse_config(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::map<std::string, std::string> raw;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!find_key(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    }
    if (!raw.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "'");
    }
  }
  for (const auto& [key, value] : overrides) {
    if (!find_key(key)) throw ConfigError("override names unknown key '" + key + "'");
    raw[key] = value;
  }
  for (const auto& key : mandatory_config_keys()) {
    if (!raw.count(key)) throw ConfigError("missing mandatory key '" + key + "'");
  }

  ExperimentConfig cfg;
  for (const auto& def : key_table()) {
    const auto it = raw.find(def.name);
    def.set(cfg, it != raw.end() ? it->second : def.default_text);
  }
  if (!(cfg.run.burn_in < cfg.run.n_iters)) {
    out_of_range("burn_in", std::to_string(cfg.run.burn_in),
                 "[0," + std::to_string(cfg.run.n_iters) + ")");
  }
  cfg.run.validate();
  return cfg;
}

std::string emit_config(const ExperimentConfig& config) {
  std::string out = "# resolved configuration\n";
  for (const auto& def : key_table()) {
    out += def.name + " = " + def.get(config) + "\n";
  }
  return out;
}

}  // namespace nlmc

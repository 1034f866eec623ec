#include "nlmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlmc/csv.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

constexpr std::uint64_t kStreamDrift = 0x44;

const char* kind_name(KernelKind kind) {
  return kind == KernelKind::Exchange ? "exchange" : "select_mutate";
}

const char* calibration_name(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::Evaluations:
      return "evaluations";
    case CalibrationMode::WallClock:
      return "wallclock";
    case CalibrationMode::Fixed:
      return "fixed";
  }
  return "evaluations";
}

void write_run_row(std::ostream& os, const RunSummary& r) {
  os << r.run_index << ',' << r.seed;
  for (const auto& name : estimate_names()) {
    os << ',' << format_double(r.estimates.at(name));
  }
  os << ',' << format_double(r.accept_rwm_x) << ',' << format_double(r.accept_rwm_y)
     << ',' << format_double(r.accept_exchange) << ',' << r.branch_eps_count << ','
     << format_double(r.snv_final) << '\n';
}

std::string runs_header() {
  std::string h = "run_index,seed";
  for (const auto& name : estimate_names()) h += ",estimate_" + name;
  return h + ",accept_rwm_x,accept_rwm_y,accept_exchange,branch_eps_count,snY_V_final";
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

template <typename Write>
void write_file(const std::filesystem::path& path, Write&& write) {
  auto os = open_output(path);
  write(os);
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::size_t scaled_burn_in(std::size_t burn_in, double factor, std::size_t n_iters) {
  const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(burn_in) * factor));
  return std::min(b, n_iters - 1);
}

void print_repeat(std::ostream& log, const std::string& label, const RepeatSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s E[x] = %.4f (+/-%.4f)  runs=%zu failures=%zu\n",
                label.c_str(), s.mean.at("x"), s.two_sd.at("x"), s.runs.size(),
                s.failures.size());
  log << buf;
}

std::string csv_message(std::string msg) {
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

void write_failures(const std::filesystem::path& dir, const std::string& name,
                    const RepeatSummary& s) {
  if (s.failures.empty()) return;
  auto os = open_output(dir / name);
  os << "run_index,message\n";
  for (const auto& f : s.failures) {
    os << f.run_index << ',' << csv_message(f.message) << '\n';
  }
}

}  // namespace

void write_runs_csv(std::ostream& os, const std::vector<RunSummary>& runs) {
  os << runs_header() << '\n';
  for (const auto& r : runs) write_run_row(os, r);
}

void write_aggregate_csv(std::ostream& os, const RepeatSummary& summary) {
  os << "estimate,mean,two_sd,runs,failures\n";
  for (const auto& name : estimate_names()) {
    os << name << ',' << format_double(summary.mean.at(name)) << ','
       << format_double(summary.two_sd.at(name)) << ',' << summary.runs.size() << ','
       << summary.failures.size() << '\n';
  }
}

Table1Result table1_grid(const ExperimentConfig& config) {
  Table1Result table;
  table.epsilons = config.epsilons;
  for (KernelKind kind : {KernelKind::SelectMutate, KernelKind::Exchange}) {
    for (double eps : config.epsilons) {
      RunConfig cfg = config.run;
      cfg.kind = kind;
      cfg.epsilon = eps;
      RepeatOptions opts;
      opts.workers = config.workers;
      table.cells.push_back({kind, eps, repeat_runs(cfg, config.repeats, opts)});
    }
  }
  return table;
}

void write_table1_csv(std::ostream& os, const Table1Result& table) {
  os << "kernel";
  for (double e : table.epsilons) os << ",epsilon=" << format_double(e);
  os << '\n';
  const std::size_t cols = table.epsilons.size();
  for (std::size_t row = 0; row * cols < table.cells.size(); ++row) {
    os << kind_name(table.cells[row * cols].kind);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& r = table.cells[row * cols + c].result;
      os << ',' << format_double(r.mean.at("x")) << " (+/-"
         << format_double(r.two_sd.at("x")) << ')';
    }
    os << '\n';
  }
}

void write_table1_runs_csv(std::ostream& os, const Table1Result& table) {
  os << "kernel,epsilon," << runs_header() << '\n';
  for (const auto& cell : table.cells) {
    for (const auto& r : cell.result.runs) {
      os << kind_name(cell.kind) << ',' << format_double(cell.epsilon) << ',';
      write_run_row(os, r);
    }
  }
}

RunConfig baseline_run_config(const ExperimentConfig& config) {
  RunConfig cfg = config.run;
  cfg.n_iters = config.baseline_iters;
  cfg.k_iterate = config.compare_k_iterate;
  cfg.burn_in = std::min(cfg.burn_in, cfg.n_iters - 1);
  return cfg;
}

RunConfig comparison_nonlinear_config(const ExperimentConfig& config) {
  RunConfig cfg = config.run;
  cfg.kind = KernelKind::Exchange;
  cfg.epsilon = config.compare_epsilon;
  cfg.k_iterate = config.compare_k_iterate;
  return cfg;
}

Calibration calibrate(const ExperimentConfig& config) {
  Calibration cal;
  cal.mode = config.calibration;
  cal.baseline_iters = config.baseline_iters;
  if (config.calibration == CalibrationMode::Fixed) {
    cal.factor = config.calibration_factor;
  } else {
    RunConfig base = baseline_run_config(config);
    base.n_iters = config.calibration_iters;
    base.burn_in = 0;
    RunConfig nl = comparison_nonlinear_config(config);
    nl.n_iters = config.calibration_iters;
    nl.burn_in = 0;
    const RunSummary b = rwm_baseline(base);
    const RunSummary n = run(nl).summary;
    const double iters = static_cast<double>(config.calibration_iters);
    if (config.calibration == CalibrationMode::Evaluations) {
      cal.baseline_cost_per_iter = static_cast<double>(b.density_evaluations) / iters;
      cal.nonlinear_cost_per_iter = static_cast<double>(n.density_evaluations) / iters;
    } else {
      cal.baseline_cost_per_iter = b.wall_seconds / iters;
      cal.nonlinear_cost_per_iter = n.wall_seconds / iters;
    }
    cal.factor = cal.baseline_cost_per_iter / cal.nonlinear_cost_per_iter;
  }
  cal.nonlinear_iters = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(config.baseline_iters) * cal.factor)));
  return cal;
}

ComparisonResult baseline_compare(const ExperimentConfig& config) {
  ComparisonResult out;
  out.calibration = calibrate(config);

  RepeatOptions opts;
  opts.workers = config.workers;
  opts.mode = RunMode::Baseline;
  out.baseline = repeat_runs(baseline_run_config(config), config.repeats, opts);

  RunConfig nl = comparison_nonlinear_config(config);
  nl.n_iters = out.calibration.nonlinear_iters;
  nl.burn_in = scaled_burn_in(config.run.burn_in,
                              static_cast<double>(nl.n_iters) /
                                  static_cast<double>(config.baseline_iters),
                              nl.n_iters);
  opts.mode = RunMode::Nonlinear;
  out.nonlinear = repeat_runs(nl, config.repeats, opts);
  return out;
}

void write_comparison_csv(std::ostream& os, const ComparisonResult& result) {
  os << "method,iterations,mean,two_sd,calibration_factor,calibration_mode\n";
  const auto row = [&](const char* method, std::size_t iters, const RepeatSummary& s) {
    os << method << ',' << iters << ',' << format_double(s.mean.at("x")) << ','
       << format_double(s.two_sd.at("x")) << ','
       << format_double(result.calibration.factor) << ','
       << calibration_name(result.calibration.mode) << '\n';
  };
  row("rwm", result.calibration.baseline_iters, result.baseline);
  row("nonlinear_exchange", result.calibration.nonlinear_iters, result.nonlinear);
}

DiagnosticsReport run_diagnostics(const ExperimentConfig& config) {
  RunConfig cfg = config.run;
  cfg.store_trace = true;
  RunResult res = run(cfg);

  DiagnosticsReport report;
  report.snv = snv_trajectory(res.trace);

  const TargetModel model = cfg.target.build();
  const std::size_t d = model.dimension();
  const LyapunovPair pair =
      LyapunovPair::create(cfg.lyapunov.s_v, cfg.lyapunov.s_w, cfg.alpha_tilde,
                           resolve_log_pi_sup(cfg, model), cfg.lyapunov.r_star);
  std::vector<Point> probes;
  for (double p : config.drift_probes) probes.emplace_back(d, p);
  DriftOptions opts;
  opts.mc_samples = config.drift_samples;
  opts.tail_radius = config.drift_radius;
  Rng rng(mix_seed(cfg.seed, kStreamDrift));
  if (config.drift_kernel == DriftKernelKind::Rwm) {
    const RwmKernel k = RwmKernel::for_target(model, Point(d, cfg.sigma_pi), 1);
    report.drift = drift_check(k, pair, probes, opts, rng);
  } else {
    const NonlinearKernel k{RwmKernel::for_target(model, Point(d, cfg.sigma_pi),
                                                  cfg.k_iterate),
                            cfg.epsilon, cfg.kind, cfg.with_mutation,
                            TemperedAuxiliary(model, cfg.alpha_tilde)};
    report.drift = drift_check(k, *res.measure, pair, probes, opts, rng);
  }

  const auto& xs = res.trace.x_states;
  const std::size_t post = xs.size() - 1 - cfg.burn_in;
  const std::size_t m = std::min(config.ustat_samples, post);
  const std::vector<Point> sample(xs.end() - static_cast<std::ptrdiff_t>(m), xs.end());
  const TupleFunction f = [](std::span<const PointView> a) {
    return std::fabs(a[0][0] - a[1][0]);
  };
  UVReport& uv = report.uv;
  uv.sample_size = m;
  uv.q = 2;
  uv.v = v_statistic(sample, {2, f, PolyStatistic::Kind::VStat});
  uv.u = u_statistic(sample, {2, f, PolyStatistic::Kind::UStat});
  const double all = std::pow(static_cast<double>(m), 2.0);
  uv.identity_residual = all * (uv.u - uv.v) -
                         (all - falling_factorial(m, 2)) * uv.u +
                         non_injective_sum(sample, f, 2);
  return report;
}

void write_drift_csv(std::ostream& os, const DriftReport& report) {
  os << "probe,v_x,ratio,se,samples,violation\n";
  for (const auto& p : report.probes) {
    os << format_double(p.x[0]) << ',' << format_double(p.v_x) << ','
       << format_double(p.ratio) << ',' << format_double(p.se) << ',' << p.samples << ','
       << (p.violation ? 1 : 0) << '\n';
  }
}

void write_snv_csv(std::ostream& os, const std::vector<SnvPoint>& snv) {
  os << "n,snY_V\n";
  for (const auto& p : snv) os << p.n << ',' << format_double(p.value) << '\n';
}

void write_uv_csv(std::ostream& os, const UVReport& uv) {
  os << "sample_size,q,u_statistic,v_statistic,identity_residual\n";
  os << uv.sample_size << ',' << uv.q << ',' << format_double(uv.u) << ','
     << format_double(uv.v) << ',' << format_double(uv.identity_residual) << '\n';
}

Command parse_command(const std::string& name) {
  if (name == "run") return Command::Run;
  if (name == "repeats") return Command::Repeats;
  if (name == "table1") return Command::Table1;
  if (name == "baseline_compare") return Command::BaselineCompare;
  if (name == "diagnostics") return Command::Diagnostics;
  throw ConfigError("unknown command '" + name + "'");
}

int execute(const ExperimentSpec& spec, std::ostream& log, std::ostream& err) {
  try {
    std::ifstream in(spec.config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + spec.config_path.string());
    std::stringstream text;
    text << in.rdbuf();
    const ExperimentConfig cfg = parse_config(text.str(), spec.overrides);

    std::filesystem::create_directories(spec.output_dir);
    const auto& dir = spec.output_dir;
    write_file(dir / "resolved_config", [&](std::ostream& os) { os << emit_config(cfg); });

    bool had_failures = false;
    switch (spec.command) {
      case Command::Run: {
        RunConfig rc = cfg.run;
        const RunResult res = run(rc);
        write_file(dir / "runs.csv", [&](std::ostream& os) { write_runs_csv(os, {res.summary}); });
        if (cfg.dump_trace) {
          write_file(dir / "trace.csv", [&](std::ostream& os) { res.measure->write_csv(os); });
        }
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "E[x] = %.6f (batch-means se %.6f)  E[x^2] = %.6f\n"
                      "accept: rwm_x %.4f rwm_y %.4f exchange %.4f  eps-steps %zu\n",
                      res.summary.estimates.at("x"), res.summary.estimate_se.at("x"),
                      res.summary.estimates.at("x2"), res.summary.accept_rwm_x,
                      res.summary.accept_rwm_y, res.summary.accept_exchange,
                      res.summary.branch_eps_count);
        log << buf;
        break;
      }
      case Command::Repeats: {
        RepeatOptions opts;
        opts.workers = cfg.workers;
        const RepeatSummary s = repeat_runs(cfg.run, cfg.repeats, opts);
        write_file(dir / "runs.csv", [&](std::ostream& os) { write_runs_csv(os, s.runs); });
        write_file(dir / "aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, s); });
        write_failures(dir, "failures.csv", s);
        had_failures = !s.failures.empty();
        print_repeat(log, kind_name(cfg.run.kind), s);
        break;
      }
      case Command::Table1: {
        const Table1Result t = table1_grid(cfg);
        write_file(dir / "table1.csv", [&](std::ostream& os) { write_table1_csv(os, t); });
        write_file(dir / "table1_runs.csv", [&](std::ostream& os) { write_table1_runs_csv(os, t); });
        bool any_failed = false;
        for (const auto& c : t.cells) any_failed = any_failed || !c.result.failures.empty();
        if (any_failed) {
          write_file(dir / "table1_failures.csv", [&](std::ostream& os) {
            os << "kernel,epsilon,run_index,message\n";
            for (const auto& c : t.cells) {
              for (const auto& f : c.result.failures) {
                os << kind_name(c.kind) << ',' << format_double(c.epsilon) << ','
                   << f.run_index << ',' << csv_message(f.message) << '\n';
              }
            }
          });
        }
        for (const auto& c : t.cells) {
          had_failures = had_failures || !c.result.failures.empty();
          print_repeat(log,
                       std::string(kind_name(c.kind)) + " eps=" + format_double(c.epsilon),
                       c.result);
        }
        break;
      }
      case Command::BaselineCompare: {
        const ComparisonResult r = baseline_compare(cfg);
        write_file(dir / "comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, r); });
        write_file(dir / "baseline_runs.csv", [&](std::ostream& os) { write_runs_csv(os, r.baseline.runs); });
        write_file(dir / "nonlinear_runs.csv", [&](std::ostream& os) { write_runs_csv(os, r.nonlinear.runs); });
        write_failures(dir, "baseline_failures.csv", r.baseline);
        write_failures(dir, "nonlinear_failures.csv", r.nonlinear);
        had_failures = !r.baseline.failures.empty() || !r.nonlinear.failures.empty();
        log << "calibration factor " << format_double(r.calibration.factor) << " ("
            << calibration_name(r.calibration.mode) << "): rwm "
            << r.calibration.baseline_iters << " iterations, nonlinear "
            << r.calibration.nonlinear_iters << " iterations\n";
        print_repeat(log, "rwm", r.baseline);
        print_repeat(log, "nonlinear_exchange", r.nonlinear);
        break;
      }
      case Command::Diagnostics: {
        const DiagnosticsReport r = run_diagnostics(cfg);
        write_file(dir / "drift.csv", [&](std::ostream& os) { write_drift_csv(os, r.drift); });
        write_file(dir / "snv.csv", [&](std::ostream& os) { write_snv_csv(os, r.snv); });
        write_file(dir / "uv.csv", [&](std::ostream& os) { write_uv_csv(os, r.uv); });
        for (const auto& p : r.drift.probes) {
          log << "drift x=" << format_double(p.x[0]) << " KV/V=" << format_double(p.ratio)
              << " se=" << format_double(p.se) << (p.violation ? " VIOLATION" : "")
              << '\n';
        }
        break;
      }
    }
    return had_failures ? kExitNumeric : kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    err << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InvariantError& e) {
    err << "numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace nlmc

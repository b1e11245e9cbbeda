#pragma once

// Subcommands of the `whid` tool. Each writes into an output directory and
// throws one of the whid error types on failure; guarded() maps those to exit codes.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "whid/config.hpp"
#include "whid/error.hpp"
#include "whid/estimator.hpp"
#include "whid/experiments.hpp"
#include "whid/io.hpp"
#include "whid/metrics.hpp"
#include "whid/signals.hpp"

namespace whid::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kConditioning = 3, kIo = 4 };

struct RunOptions {
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool gnuplot = false;
};

inline void write_metrics_csv(const fs::path& path, const std::vector<MetricRow>& rows) {
  auto out = io::open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : rows)
    out << r.experiment << ',' << r.axis << ',' << io::format_double(r.value) << ',' << r.seed << ',' << r.metric
        << ',' << io::format_double(finite_db(r.value_db)) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

/// Companion gnuplot script: one curve of value_db against value per metric.
inline void write_gnuplot(const fs::path& csv, const std::vector<MetricRow>& rows, const std::string& xlabel) {
  std::vector<std::string> metrics;
  for (const auto& r : rows)
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  fs::path script = csv;
  script.replace_extension(".gp");
  auto out = io::open_out(script);
  out << "set datafile separator ','\n"
      << "set key outside\n"
      << "set xlabel '" << xlabel << "'\n"
      << "set ylabel 'dB'\n"
      << "set terminal pngcairo size 1000,700\n"
      << "set output '" << csv.stem().string() << ".png'\n"
      << "plot \\\n";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    out << "  '" << csv.filename().string() << "' using ($5 eq '" << metrics[i] << "' ? $3 : 1/0):6 with points title '"
        << metrics[i] << "'" << (i + 1 < metrics.size() ? ", \\\n" : "\n");
  }
}

inline std::uint64_t master_seed(const ExperimentConfig& cfg, const RunOptions& run) {
  return run.seed.value_or(cfg.seed);
}

inline void write_signal(const fs::path& stem, const Signal& x, const std::string& format) {
  if (format == "binary") {
    fs::path p = stem;
    io::write_signal_binary(p.replace_extension(".whsg"), x);
  } else {
    fs::path p = stem;
    io::write_signal_csv(p.replace_extension(".csv"), x);
  }
}

inline void design_pilot(const ExperimentConfig& cfg, const RunOptions& run) {
  PilotPlan plan = cfg.identify.plan;
  plan.seed = master_seed(cfg, run);
  const Pilots p = make_pilots(plan);
  write_signal(run.out / "x1", p.x1, cfg.signal_format);
  write_signal(run.out / "x2", p.x2, cfg.signal_format);
  write_signal(run.out / "x3", p.x3, cfg.signal_format);

  std::vector<std::pair<std::string, double>> report = {
      {"x1_par_db", p.x1_par_db},
      {"x1_backoff_db", p.x1_backoff_db},
      {"x1_mean_power_db", to_db(p.x1.mean_power())},
      {"x1_peak", p.x1.peak()},
      {"x2_par_db", par(p.x2).db},
      {"x2_peak", p.x2.peak()},
      {"x3_par_db", par(p.x3).db},
      {"x3_peak", p.x3.peak()},
  };

  BudgetInputs b = cfg.budget;
  b.taps = static_cast<double>(plan.taps_h + plan.taps_g - 1);
  b.taps_g = static_cast<double>(plan.taps_g);
  b.par_x1 = par(p.x1).linear;
  b.par_x2 = par(p.x2).linear;
  b.ibo = from_db(p.x1_backoff_db - p.x1_par_db);
  b.gain = linear_gain(cfg.identify.model.amplifier);
  b.input_saturation_power = plan.input_saturation_power;
  if (!(b.noise_variance > 0.0)) b.noise_variance = plan_noise_variance(cfg.identify.model, plan, p.x1);
  report.emplace_back("noise_variance", b.noise_variance);
  if (b.noise_variance > 0.0 && b.ibo > 0.0) {
    report.emplace_back("ibo_db", to_db(b.ibo));
    report.emplace_back("snr_budget_option1_db", snr_budget(b, PilotOption::kFixedPar));
    report.emplace_back("snr_budget_option2_db", snr_budget(b, PilotOption::kFilteredPar));
    report.emplace_back("nmin_x1_option1", static_cast<double>(min_pilot_length(b, PilotKind::kX1Option1)));
    report.emplace_back("nmin_x1_option2", static_cast<double>(min_pilot_length(b, PilotKind::kX1Option2)));
    report.emplace_back("nmin_x2", static_cast<double>(min_pilot_length(b, PilotKind::kX2)));
  }

  auto out = io::open_out(run.out / "report.csv");
  out << "metric,value\n";
  for (const auto& [name, v] : report) out << name << ',' << io::format_double(v) << '\n';
  if (!out) throw IoError("write failed: report.csv");
}

inline void identify(const ExperimentConfig& cfg, const RunOptions& run) {
  const std::uint64_t seed = master_seed(cfg, run);
  if (cfg.captured) {
    const auto& c = *cfg.captured;
    const CapturedSignals data{io::read_signal(c.x1), io::read_signal(c.w1), io::read_signal(c.x2),
                               io::read_signal(c.w2), io::read_signal(c.x3), io::read_signal(c.w3)};
    const WhEstimate est = estimate_from_captured(data, cfg.identify.plan);
    io::write_estimate(run.out / "estimate", est);
    std::vector<MetricRow> rows;
    for (const auto& d : est.diagnostics)
      rows.push_back({"identify", "none", 0.0, 0, "step" + d.step + "_" + d.metric, finite_db(d.value_db)});
    write_metrics_csv(run.out / "identify.csv", rows);
    return;
  }

  std::vector<WhEstimate> estimates(cfg.seeds);
  const auto blocks = ordered_parallel<std::vector<MetricRow>>(cfg.seeds, run.jobs, [&](std::size_t s) {
    return identify_trial(cfg.identify, seed, s, MetricRow{"identify", "none", 0.0, s, "", 0.0}, &estimates[s]);
  });
  std::vector<MetricRow> rows;
  for (const auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());
  io::write_estimate(run.out / "estimate", estimates.front());
  write_metrics_csv(run.out / "identify.csv", rows);
  if (run.gnuplot) write_gnuplot(run.out / "identify.csv", rows, "point");
}

inline void volterra(const ExperimentConfig& cfg, const RunOptions& run) {
  VolterraModel last;
  const auto rows = run_volterra(cfg.volterra, master_seed(cfg, run), run.jobs, &last);
  write_metrics_csv(run.out / "volterra.csv", rows);
  io::write_volterra_csv(run.out / "volterra_kernels.csv", last);
  if (run.gnuplot) write_gnuplot(run.out / "volterra.csv", rows, "pilot length N");
}

inline void sweep(const ExperimentConfig& cfg, const RunOptions& run) {
  if (cfg.sweep.values.empty()) throw ParameterError("config: sweep.values is required for the sweep command");
  const auto rows = run_sweep(cfg.identify, cfg.sweep, master_seed(cfg, run), run.jobs);
  write_metrics_csv(run.out / "sweep.csv", rows);
  if (run.gnuplot) write_gnuplot(run.out / "sweep.csv", rows, cfg.sweep.axis);
}

/// Runs `body`, reporting failures on `err` and translating them to exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kOk;
  } catch (const ParameterError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConditioningError& e) {
    err << "conditioning error: " << e.what() << " (condition " << e.condition() << ")\n";
    return kConditioning;
  } catch (const DegenerateError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kConditioning;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace whid::cli

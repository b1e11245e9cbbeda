#pragma once

// Experiment layer behind the `whid` command. Every run emits long-format metric rows.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "whid/amplifier.hpp"
#include "whid/channel.hpp"
#include "whid/error.hpp"
#include "whid/estimator.hpp"
#include "whid/metrics.hpp"
#include "whid/random.hpp"
#include "whid/signals.hpp"
#include "whid/volterra.hpp"

namespace whid {

struct MetricRow {
  std::string experiment;
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value_db = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

// ---------------------------------------------------------------------------
// Validation and scoring against a known channel

struct ValidationOptions {
  double backoff_db = 5.0;
  std::size_t length = 20000;
  double peak_reference = 16.0;  // peak amplitude at 0 dB back-off
};

struct ValidationResult {
  double nmse_prime_db;         // nonlinear estimate
  double nmse_prime_linear_db;  // linear surrogate h_hat * g_hat
};

/// White noise with the mean power of an M = 100 multisine whose peak sits
/// `backoff_db` below the reference, pushed through the noiseless channel;
/// NMSE' is weighted by the true g.
inline ValidationResult validate_estimate(const WhEstimate& est, const WhModel& model, std::uint64_t seed,
                                          const ValidationOptions& opt = {}) {
  const Signal ref = multisine(schroeder_multisine(100, 1.0 / 200.0, 200));
  const Signal scaled = ref.scaled(opt.peak_reference * std::pow(10.0, -opt.backoff_db / 20.0) / ref.peak());
  const Signal x = matched_white_noise(scaled, opt.length, seed);
  WhModel clean = model;
  clean.noise_variance = 0.0;
  const Signal w = wh_forward(clean, x, 0).w;
  return {nmse_prime(w, est.predict(x), model.g), nmse_prime(w, est.predict_linear(x), model.g)};
}

/// The polynomial the estimator is judged against: the model's own polynomial,
/// or the odd least-squares fit of a Rapp curve over [-max_abs, max_abs].
inline PolynomialAmplifier reference_polynomial(const Amplifier& amp, int order = 3, double max_abs = 16.0) {
  if (const auto* p = std::get_if<PolynomialAmplifier>(&amp)) return *p;
  const auto& rapp_amp = std::get<RappAmplifier>(amp);
  const Signal u = amplitude_grid(max_abs, 4001);
  return fit_polynomial(u, rapp(rapp_amp, u), order).amplifier;
}

struct EstimateScores {
  double q_r;
  double q_prime_g3;
  double q_prime_g1_direct;
  double q_prime_g1;
  double q_prime_g;
  double q_prime_h;
  double q_r_prime;
};

inline EstimateScores score_estimate(const WhEstimate& est, const WhModel& model, const PolynomialAmplifier& gamma) {
  const double gain = linear_gain(model.amplifier);
  const FirFilter r = cascade(model.h, model.g).scaled(gain);
  const FirFilter& g = model.g;
  return {q_value(r, est.r_hat),
          q_prime(g.scaled(gamma.coefficient(3)), est.g3, g),
          q_prime(g.scaled(gamma.coefficient(1)), est.g1_direct, g),
          q_prime(g.scaled(gamma.coefficient(1)), est.g1, g),
          q_prime(g.scaled(gain), est.g, g),
          q_prime(model.h, est.h, model.h),
          q_value(r, est.linear_surrogate())};
}

// ---------------------------------------------------------------------------
// Identification runs

struct IdentifyOptions {
  WhModel model = reference_model();
  PilotPlan plan;
  ValidationOptions validation;
  double reference_max_abs = 16.0;
};

inline void append_rows(std::vector<MetricRow>& rows, const MetricRow& proto,
                        std::initializer_list<std::pair<const char*, double>> metrics) {
  for (const auto& [name, v] : metrics) {
    MetricRow row = proto;
    row.metric = name;
    row.value_db = finite_db(v);
    rows.push_back(std::move(row));
  }
}

/// One Monte Carlo trial of the full pipeline; `seed_index` selects the noise streams.
inline std::vector<MetricRow> identify_trial(const IdentifyOptions& opt, std::uint64_t master_seed,
                                             std::uint64_t seed_index, const MetricRow& proto,
                                             WhEstimate* estimate_out = nullptr) {
  PilotPlan plan = opt.plan;
  plan.seed = derive_seed(master_seed, seed_index);
  const CapturedSignals data = simulate_capture(opt.model, plan);
  const WhEstimate est = estimate_from_captured(data, plan);
  const auto gamma = reference_polynomial(opt.model.amplifier, plan.order, opt.reference_max_abs);
  const auto s = score_estimate(est, opt.model, gamma);
  const auto v = validate_estimate(est, opt.model, derive_seed(plan.seed, 4), opt.validation);
  const std::size_t l = plan.taps_h + plan.taps_g - 1;

  double snr_db = 0.0;
  for (const auto& d : est.diagnostics)
    if (d.step == "1" && d.metric == "achieved_snr") snr_db = d.value_db;

  std::vector<MetricRow> rows;
  MetricRow p = proto;
  p.seed = seed_index;
  append_rows(rows, p,
              {{"q_r", s.q_r},
               {"predicted_q_r", predicted_q(static_cast<double>(plan.x1_length), static_cast<double>(l), snr_db)},
               {"q_prime_g3", s.q_prime_g3},
               {"q_prime_g1_direct", s.q_prime_g1_direct},
               {"q_prime_g1", s.q_prime_g1},
               {"q_prime_g", s.q_prime_g},
               {"q_prime_h", s.q_prime_h},
               {"q_r_prime", s.q_r_prime},
               {"nmse_prime", v.nmse_prime_db},
               {"nmse_prime_linear", v.nmse_prime_linear_db}});
  for (const auto& d : est.diagnostics) {
    MetricRow row = p;
    row.metric = "step" + d.step + "_" + d.metric;
    row.value_db = finite_db(d.value_db);
    rows.push_back(std::move(row));
  }
  if (estimate_out) *estimate_out = est;
  return rows;
}

/// Runs `task(i)` for i in [0, count) on up to `jobs` threads; results keep index order.
template <typename T>
std::vector<T> ordered_parallel(std::size_t count, unsigned jobs, const std::function<T(std::size_t)>& task) {
  std::vector<std::optional<T>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_index = count;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i] = task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { kSnr, kX1Backoff, kX1Length, kX2Length, kX2Peak, kX3Length, kValidationBackoff };

inline SweepAxis parse_sweep_axis(const std::string& name) {
  static const std::map<std::string, SweepAxis> names = {
      {"snr_db", SweepAxis::kSnr},           {"x1_backoff_db", SweepAxis::kX1Backoff},
      {"x1_length", SweepAxis::kX1Length},   {"x2_length", SweepAxis::kX2Length},
      {"x2_peak", SweepAxis::kX2Peak},       {"x3_length", SweepAxis::kX3Length},
      {"validation_backoff_db", SweepAxis::kValidationBackoff}};
  const auto it = names.find(name);
  if (it == names.end()) throw ParameterError("sweep.axis: unknown axis '" + name + "'");
  return it->second;
}

inline IdentifyOptions apply_axis(IdentifyOptions opt, SweepAxis axis, double value) {
  const auto count = [&](const char* what) {
    if (!(value >= 1.0) || value != std::floor(value))
      throw ParameterError(std::string("sweep value for ") + what + " must be a positive integer");
    return static_cast<std::size_t>(value);
  };
  switch (axis) {
    case SweepAxis::kSnr: opt.plan.snr_db = value; break;
    case SweepAxis::kX1Backoff: opt.plan.x1_backoff_db = value; break;
    case SweepAxis::kX1Length: opt.plan.x1_length = count("x1_length"); break;
    case SweepAxis::kX2Length: opt.plan.x2_length = count("x2_length"); break;
    case SweepAxis::kX2Peak: opt.plan.x2_peak = value; break;
    case SweepAxis::kX3Length: opt.plan.x3_length = count("x3_length"); break;
    case SweepAxis::kValidationBackoff: opt.validation.backoff_db = value; break;
  }
  return opt;
}

struct SweepOptions {
  std::string axis = "snr_db";
  std::vector<double> values;
  std::size_t seeds = 1;
};

/// One row block per (point, seed), in point-major order, independent of `jobs`.
inline std::vector<MetricRow> run_sweep(const IdentifyOptions& base, const SweepOptions& sweep,
                                        std::uint64_t master_seed, unsigned jobs) {
  if (sweep.seeds < 1) throw ParameterError("sweep.seeds must be >= 1");
  if (sweep.values.empty()) throw ParameterError("sweep.values must not be empty");
  const SweepAxis axis = parse_sweep_axis(sweep.axis);
  const std::size_t total = sweep.values.size() * sweep.seeds;
  const auto blocks = ordered_parallel<std::vector<MetricRow>>(total, jobs, [&](std::size_t i) {
    const double value = sweep.values[i / sweep.seeds];
    const std::uint64_t s = i % sweep.seeds;
    const IdentifyOptions opt = apply_axis(base, axis, value);
    return identify_trial(opt, master_seed, s, MetricRow{"sweep", sweep.axis, value, s, "", 0.0});
  });
  std::vector<MetricRow> rows;
  for (const auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());
  return rows;
}

// ---------------------------------------------------------------------------
// Volterra baseline

struct VolterraExperiment {
  std::size_t taps_h = 6;
  std::size_t taps_g = 6;
  double gamma1 = 1.0;
  double gamma3 = -0.05;
  double input_power = 1.0;
  std::vector<std::size_t> lengths;  // empty: length_factors x kernel count
  std::vector<double> length_factors = {5, 10, 20, 50};
  std::vector<double> snr_db = {20.0};
  std::size_t seeds = 1;
  std::optional<double> ridge;
};

/// Random polynomial W-H model with unit-energy Gaussian filters.
inline WhModel random_polynomial_model(std::size_t taps_h, std::size_t taps_g, double gamma1, double gamma3,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto draw = [&](std::size_t n) {
    std::vector<double> t(n);
    for (auto& v : t) v = normal(rng);
    const FirFilter f(std::move(t));
    return f.scaled(1.0 / std::sqrt(f.energy()));
  };
  FirFilter h = draw(taps_h);
  FirFilter g = draw(taps_g);
  std::map<int, double> gamma{{1, gamma1}};
  if (gamma3 != 0.0) gamma[3] = gamma3;
  return {std::move(h), PolynomialAmplifier(std::move(gamma)), std::move(g), 0.0};
}

struct VolterraTrial {
  std::vector<MetricRow> rows;
  VolterraModel fitted;
};

inline std::vector<std::size_t> volterra_lengths(const VolterraExperiment& e) {
  if (!e.lengths.empty()) return e.lengths;
  const double count = static_cast<double>(enumerate_reduced_indices(e.taps_h, e.taps_g).size());
  std::vector<std::size_t> out;
  for (double f : e.length_factors) out.push_back(static_cast<std::size_t>(std::ceil(f * count)));
  return out;
}

inline std::vector<MetricRow> run_volterra(const VolterraExperiment& e, std::uint64_t master_seed, unsigned jobs,
                                           VolterraModel* last_fit = nullptr) {
  if (e.seeds < 1) throw ParameterError("volterra.seeds must be >= 1");
  const auto lengths = volterra_lengths(e);
  const WhModel model = random_polynomial_model(e.taps_h, e.taps_g, e.gamma1, e.gamma3, derive_seed(master_seed, 7));
  const double kernels = static_cast<double>(enumerate_reduced_indices(e.taps_h, e.taps_g).size());
  lsq::SolveOptions solve_opt;
  solve_opt.ridge = e.ridge;

  struct Point {
    std::size_t length;
    double snr;
  };
  std::vector<Point> points;
  for (double snr : e.snr_db)
    for (std::size_t n : lengths) points.push_back({n, snr});

  const std::size_t total = points.size() * e.seeds;
  auto trials = ordered_parallel<VolterraTrial>(total, jobs, [&](std::size_t i) {
    const Point pt = points[i / e.seeds];
    const std::uint64_t s = i % e.seeds;
    const std::uint64_t seed = derive_seed(derive_seed(master_seed, s), pt.length * 1000 + static_cast<std::uint64_t>(i / e.seeds));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(e.input_power));
    std::vector<double> xs(pt.length);
    for (auto& v : xs) v = normal(rng);
    const Signal x(std::move(xs));
    const Signal clean = wh_forward(model, x, 0).w;
    WhModel noisy = model;
    noisy.noise_variance = noise_variance_for_snr(clean, pt.snr);
    const Signal w = wh_forward(noisy, x, derive_seed(seed, 1)).w;

    VolterraTrial t{{}, estimate_volterra(x, w, e.taps_h, e.taps_g, solve_opt)};
    // fresh input for the out-of-sample NMSE
    std::vector<double> xv(pt.length);
    for (auto& v : xv) v = normal(rng);
    const Signal xval(std::move(xv));
    const double err = nmse(wh_forward(model, xval, 0).w, t.fitted.predict(xval));
    const MetricRow proto{"volterra", "length", static_cast<double>(pt.length), s, "", 0.0};
    append_rows(t.rows, proto,
                {{"snr", pt.snr},
                 {"kernels", to_db(kernels)},
                 {"nmse", err},
                 {"predicted_q", predicted_q(static_cast<double>(pt.length), kernels, pt.snr)}});
    return t;
  });

  std::vector<MetricRow> rows;
  for (auto& t : trials) rows.insert(rows.end(), t.rows.begin(), t.rows.end());
  if (last_fit && !trials.empty()) *last_fit = trials.back().fitted;
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kMetricsHeader = "experiment,axis,value,seed,metric,value_db";

}  // namespace whid

#pragma once

// Three-step Wiener-Hammerstein identification.
//
//   step 1  r = G (h * g) from a low-power wideband pilot x1
//   step 2  Hammerstein model (g'_1, g'_3) from a band-limited pilot x2, with a
//           delay search for the unknown u ~ x2(n - tau_h) and the projection
//           refinement of g1 from g3
//   step 3  scale alpha from a linear-regime pilot x3, then h by deconvolving r

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "whid/amplifier.hpp"
#include "whid/channel.hpp"
#include "whid/error.hpp"
#include "whid/filter.hpp"
#include "whid/lsq.hpp"
#include "whid/metrics.hpp"
#include "whid/random.hpp"
#include "whid/signal.hpp"
#include "whid/signals.hpp"

namespace whid {

struct DiagnosticRow {
  std::string step;
  std::string metric;
  double value_db;

  friend bool operator==(const DiagnosticRow&, const DiagnosticRow&) = default;
};

// ---------------------------------------------------------------------------
// Step 1

struct Step1Result {
  FirFilter r_hat;
  double condition = 0.0;
  double output_power_db = 0.0;
  double achieved_snr_db = 0.0;  // fitted output power over residual power
};

inline Step1Result step1_estimate_r(const Signal& x1, const Signal& w1, std::size_t taps) {
  if (x1.size() != w1.size()) throw ParameterError("step 1: x1 and w1 lengths differ");
  const auto design = lsq::linear_design(x1, taps);
  const auto target = lsq::to_vector(w1.samples());
  const auto fit = lsq::solve(design, target);

  const double n = static_cast<double>(x1.size());
  const double noise = fit.residual_norm * fit.residual_norm / n;
  const double fitted = (design * fit.coefficients).squaredNorm() / n;
  Step1Result out{FirFilter(lsq::to_std(fit.coefficients)), fit.condition, to_db(w1.mean_power()), 0.0};
  out.achieved_snr_db = noise == 0.0 ? std::numeric_limits<double>::infinity() : to_db(fitted / noise);
  return out;
}

// ---------------------------------------------------------------------------
// Step 2

struct BandCheck {
  Band band;                    // passband of r_hat
  std::size_t bins_inside = 0;  // significant x2 periodogram bins inside it
  std::size_t bins_outside = 0;
  double ripple_db = 0.0;       // |R_hat| spread over the covered part of the band
};

/// Locates x2's significant bins (within 20 dB of its peak) relative to the passband of r_hat.
inline BandCheck check_pilot_band(const FirFilter& r_hat, const Signal& x2, double threshold_db = 3.0) {
  BandCheck out{passband(r_hat, threshold_db)};
  const auto p = dft::periodogram(x2.samples());
  const double peak = *std::max_element(p.begin(), p.end());
  if (peak == 0.0) throw EmptyBandError("x2 is identically zero");
  const double n = static_cast<double>(x2.size());
  double f_lo = 0.5, f_hi = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < peak * 1e-2) continue;
    const double f = static_cast<double>(k) / n;
    if (out.band.contains(f)) {
      ++out.bins_inside;
      f_lo = std::min(f_lo, f);
      f_hi = std::max(f_hi, f);
    } else {
      ++out.bins_outside;
    }
  }
  if (out.bins_inside == 0)
    throw EmptyBandError("x2 has no significant energy inside the passband [" + std::to_string(out.band.low) +
                         ", " + std::to_string(out.band.high) + "] of r_hat");

  constexpr std::size_t nfft = 4096;
  const auto mag = magnitude_response(r_hat, nfft);
  double lo_db = std::numeric_limits<double>::infinity(), hi_db = -lo_db;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(nfft);
    if (f < f_lo || f > f_hi) continue;
    const double db = 20.0 * std::log10(mag[k]);
    lo_db = std::min(lo_db, db);
    hi_db = std::max(hi_db, db);
  }
  out.ripple_db = hi_db >= lo_db ? hi_db - lo_db : 0.0;
  return out;
}

struct Step2Options {
  std::size_t taps_h = 20;
  std::size_t taps_g = 20;
  int order = 3;
  std::size_t grid_points = 17;
  bool refine = true;
  /// Search interval for tau; defaults to [tau_r / 4, 3 tau_r / 4].
  std::optional<std::pair<double, double>> delay_bracket;
  /// Treat x2 as periodic over its record; otherwise it is zero padded before delaying.
  bool circular = true;
  double band_threshold_db = 3.0;
  bool check_band = true;
};

struct DelayCandidate {
  double delay;
  double residual_nmse_db;
};

struct Step2Result {
  std::vector<FirFilter> blocks;  // g'_1, g'_3, ...
  double delay = 0.0;
  Signal u;  // candidate input at the chosen delay
  double residual_nmse_db = 0.0;
  double condition = 0.0;
  std::vector<DelayCandidate> candidates;
  std::vector<std::string> warnings;

  const FirFilter& g1_direct() const { return blocks.front(); }
  const FirFilter& g3() const {
    if (blocks.size() < 2) throw ParameterError("step 2 was run with order 1; no cubic block");
    return blocks[1];
  }
};

/// Rows before this index see the channel's start-up transient.
inline std::size_t warm_up_rows(std::size_t taps_h, std::size_t taps_g) { return taps_h + taps_g - 2; }

inline Signal delayed_candidate(const Signal& x, double tau, bool circular, std::size_t pad) {
  if (tau == 0.0) return x;
  if (circular) return fractional_delay(x, tau);
  const auto padded = x.zero_padded(0, static_cast<std::size_t>(std::ceil(std::abs(tau))) + pad);
  return fractional_delay(padded, tau).slice(0, x.size());
}

inline Step2Result step2_estimate_hammerstein(const Signal& x2, const Signal& w2, const FirFilter& r_hat,
                                              const Step2Options& opt = {}) {
  if (x2.size() != w2.size()) throw ParameterError("step 2: x2 and w2 lengths differ");
  if (opt.order < 1 || opt.order % 2 == 0) throw ParameterError("step 2: order must be odd");
  if (opt.grid_points < 1) throw ParameterError("step 2: grid_points must be >= 1");
  const std::size_t skip = warm_up_rows(opt.taps_h, opt.taps_g);
  const std::size_t blocks = static_cast<std::size_t>((opt.order + 1) / 2);
  if (x2.size() < skip + blocks * opt.taps_g)
    throw ParameterError("step 2: x2 too short for the warm-up and " + std::to_string(blocks * opt.taps_g) +
                         " coefficients");

  Step2Result out;
  if (opt.check_band) {
    const auto band = check_pilot_band(r_hat, x2, opt.band_threshold_db);
    if (band.bins_outside > 0)
      out.warnings.push_back("x2 has " + std::to_string(band.bins_outside) +
                             " significant bins outside the passband of r_hat");
    if (band.ripple_db > 1.0)
      out.warnings.push_back("passband ripple of r_hat over x2's band is " + std::to_string(band.ripple_db) +
                             " dB (> 1 dB)");
  }

  double lo = 0.0, hi = 0.0;
  if (opt.delay_bracket) {
    std::tie(lo, hi) = *opt.delay_bracket;
    if (!(lo <= hi)) throw ParameterError("step 2: delay bracket must satisfy low <= high");
  } else {
    const double tau_r = group_delay(r_hat);
    lo = tau_r / 4.0;
    hi = 3.0 * tau_r / 4.0;
  }

  const auto rows = static_cast<Eigen::Index>(x2.size() - skip);
  const lsq::Vector target = lsq::to_vector(w2.samples()).tail(rows);
  const double target_energy = target.squaredNorm();
  if (target_energy == 0.0) throw DegenerateError("step 2: w2 is zero after the warm-up");

  struct Fit {
    double delay;
    double nmse;
    lsq::SolveResult solution;
  };
  const auto evaluate = [&](double tau) {
    const Signal u = delayed_candidate(x2, tau, opt.circular, opt.taps_h);
    const lsq::Matrix design = lsq::hammerstein_design(u, opt.taps_g, opt.order).bottomRows(rows);
    auto sol = lsq::solve(design, target);
    const double err = sol.residual_norm * sol.residual_norm;
    const double nmse = err == 0.0 ? -std::numeric_limits<double>::infinity() : to_db(err / target_energy);
    out.candidates.push_back({tau, nmse});
    return Fit{tau, nmse, std::move(sol)};
  };

  std::optional<Fit> best;
  const auto consider = [&](Fit f) {
    if (!best || f.nmse < best->nmse) best = std::move(f);
  };
  const double step = opt.grid_points > 1 ? (hi - lo) / static_cast<double>(opt.grid_points - 1) : 0.0;
  for (std::size_t i = 0; i < opt.grid_points; ++i)
    consider(evaluate(opt.grid_points > 1 ? lo + step * static_cast<double>(i) : 0.5 * (lo + hi)));

  if (opt.refine && step > 0.0) {
    // golden-section pass on the grid cell either side of the best point
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::max(lo, best->delay - step), b = std::min(hi, best->delay + step);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    Fit fc = evaluate(c), fd = evaluate(d);
    for (int it = 0; it < 20; ++it) {
      if (fc.nmse <= fd.nmse) {
        b = d;
        d = c;
        fd = std::move(fc);
        c = b - phi * (b - a);
        fc = evaluate(c);
      } else {
        a = c;
        c = d;
        fc = std::move(fd);
        d = a + phi * (b - a);
        fd = evaluate(d);
      }
    }
    consider(std::move(fc));
    consider(std::move(fd));
  }

  out.delay = best->delay;
  out.residual_nmse_db = best->nmse;
  out.condition = best->solution.condition;
  out.u = delayed_candidate(x2, out.delay, opt.circular, opt.taps_h);
  const auto coeffs = lsq::to_std(best->solution.coefficients);
  for (std::size_t b = 0; b < blocks; ++b)
    out.blocks.emplace_back(std::vector<double>(coeffs.begin() + static_cast<std::ptrdiff_t>(b * opt.taps_g),
                                                coeffs.begin() + static_cast<std::ptrdiff_t>((b + 1) * opt.taps_g)));
  return out;
}

struct G1Improvement {
  double gamma_prime;  // estimate of gamma(1) / gamma(3)
  FirFilter g1;        // gamma_prime * g3
};

/// Projects w' = r*w - r*g3*u^3 onto y'_1 = r*g3*u, using samples from `skip` on.
inline G1Improvement improve_g1(const FirFilter& r_hat, const FirFilter& g3, const Signal& u, const Signal& w,
                                std::size_t skip = 0) {
  if (u.size() != w.size()) throw ParameterError("improve_g1: u and w lengths differ");
  if (skip >= u.size()) throw ParameterError("improve_g1: skip leaves no samples");
  std::vector<double> cube(u.size());
  for (std::size_t n = 0; n < u.size(); ++n) cube[n] = u[n] * u[n] * u[n];
  const auto wp = convolve(r_hat.taps(), w.samples());
  const auto y1 = convolve(r_hat.taps(), convolve(g3.taps(), u.samples()));
  const auto y3 = convolve(r_hat.taps(), convolve(g3.taps(), cube));

  double num = 0.0, den = 0.0, ref = 0.0;
  for (std::size_t n = skip; n < u.size(); ++n) {
    num += y1[n] * (wp[n] - y3[n]);
    den += y1[n] * y1[n];
    ref += wp[n] * wp[n];
  }
  if (den == 0.0 || den <= 1e-20 * ref)
    throw DegenerateError("improve_g1: r*g3*u vanishes, the projection is undefined");
  const double gamma = num / den;
  return {gamma, g3.scaled(gamma)};
}

// ---------------------------------------------------------------------------
// Step 3

struct Step3Result {
  double alpha = 1.0;
  FirFilter g;  // alpha * g1
  FirFilter h;
  double condition = 0.0;
};

/// (L1 + L2 - 1) x L1 matrix whose column j is g shifted down by j.
inline lsq::Matrix convolution_matrix(const FirFilter& g, std::size_t columns) {
  const auto l2 = static_cast<Eigen::Index>(g.size());
  const auto l1 = static_cast<Eigen::Index>(columns);
  lsq::Matrix m = lsq::Matrix::Zero(l1 + l2 - 1, l1);
  for (Eigen::Index j = 0; j < l1; ++j)
    for (Eigen::Index i = 0; i < l2; ++i) m(i + j, j) = g[static_cast<std::size_t>(i)];
  return m;
}

inline Step3Result step3_estimate_h(const FirFilter& r_hat, const FirFilter& g1, const Signal& x3, const Signal& w3,
                                    std::size_t taps_h, double delay = 0.0, std::size_t skip = 0,
                                    bool circular = true) {
  if (x3.size() != w3.size()) throw ParameterError("step 3: x3 and w3 lengths differ");
  if (r_hat.size() != taps_h + g1.size() - 1)
    throw ParameterError("step 3: r_hat must have L1 + L2 - 1 taps");
  if (skip >= x3.size()) throw ParameterError("step 3: skip leaves no samples");

  const Signal u3 = delayed_candidate(x3, delay, circular, taps_h);
  const auto z = convolve(g1.taps(), u3.samples());
  double num = 0.0, den = 0.0;
  for (std::size_t n = skip; n < z.size(); ++n) {
    num += z[n] * w3[n];
    den += z[n] * z[n];
  }
  if (den == 0.0) throw DegenerateError("step 3: g1 * u3 vanishes, alpha is undefined");

  Step3Result out;
  out.alpha = num / den;
  out.g = g1.scaled(out.alpha);
  const auto fit = lsq::solve(convolution_matrix(out.g, taps_h), lsq::to_vector(r_hat.taps()));
  out.h = FirFilter(lsq::to_std(fit.coefficients));
  out.condition = fit.condition;
  return out;
}

// ---------------------------------------------------------------------------
// Full estimate

struct WhEstimate {
  FirFilter r_hat;
  FirFilter g1_direct;
  FirFilter g1;
  FirFilter g3;
  double gamma_prime = 0.0;
  double alpha = 1.0;
  FirFilter g;
  FirFilter h;
  PolynomialAmplifier amplifier;  // gamma_hat(1) = 1 / alpha, gamma_hat(3) = 1 / (alpha gamma_prime)
  double delay = 0.0;
  std::vector<DiagnosticRow> diagnostics;
  std::vector<std::string> warnings;

  /// g_hat * c_hat(h_hat * x).
  Signal predict(const Signal& x) const { return convolve(g, poly_amp(amplifier, convolve(h, x))); }

  /// r' = h_hat * g_hat.
  FirFilter linear_surrogate() const { return cascade(h, g); }
  Signal predict_linear(const Signal& x) const { return convolve(linear_surrogate(), x); }
};

enum class PhaseMode { kSchroeder, kMinMax };

struct PilotPlan {
  std::size_t taps_h = 20;
  std::size_t taps_g = 20;
  int order = 3;

  int x1_harmonics = 100;
  double x1_fundamental = 1.0 / 200.0;
  std::size_t x1_length = 8000;
  double ibo_db = 5.0;
  /// Total mean-power back-off of x1 below P_sat; when unset it is ibo_db + PAR(x1).
  std::optional<double> x1_backoff_db;
  double input_saturation_power = 100.0;
  PhaseMode x1_phase = PhaseMode::kSchroeder;
  int phase_search_min_harmonics = 50;
  std::size_t phase_search_budget = 0;

  int x2_harmonics = 100;
  double x2_fundamental = 1.0 / 800.0;
  int x2_first_harmonic = 64;
  std::size_t x2_length = 8000;
  double x2_peak = 17.0;

  std::size_t x3_length = 1000;

  /// SNR of w1 with respect to its noiseless power; unset uses the model's noise variance.
  std::optional<double> snr_db = 20.0;
  std::uint64_t seed = 1;

  double band_threshold_db = 3.0;
  std::optional<std::pair<double, double>> delay_bracket;

  void validate() const {
    if (taps_h < 1 || taps_g < 1) throw ParameterError("plan: taps_h and taps_g must be >= 1");
    if (order < 1 || order % 2 == 0) throw ParameterError("plan: order must be odd");
    if (!(input_saturation_power > 0.0)) throw ParameterError("plan: input_saturation_power must be > 0");
    if (!x1_backoff_db && ibo_db < 0.0) throw ParameterError("plan: ibo_db must be >= 0 (IBO >= 1)");
    if (!(x2_peak > 0.0)) throw ParameterError("plan: x2_peak must be > 0");
    if (x1_length < taps_h + taps_g - 1) throw ParameterError("plan: x1_length shorter than r");
    if (x3_length <= warm_up_rows(taps_h, taps_g)) throw ParameterError("plan: x3_length too short");
    if (x1_phase == PhaseMode::kMinMax &&
        (phase_search_min_harmonics < 1 || phase_search_min_harmonics > x1_harmonics))
      throw ParameterError("plan: phase_search_min_harmonics must lie in [1, x1_harmonics]");
  }
};

/// 50 times the samples needed for one coefficient to reach `target_q_db` at `snr_db`.
inline std::size_t default_x3_length(double target_q_db, double snr_db) {
  return 50 * static_cast<std::size_t>(std::max(1.0, std::ceil(from_db(target_q_db - snr_db))));
}

struct Pilots {
  Signal x1;
  Signal x2;
  Signal x3;
  double x1_par_db = 0.0;
  double x1_backoff_db = 0.0;
};

inline Pilots make_pilots(const PilotPlan& plan) {
  plan.validate();
  Pilots out;

  MultisineSpec s1 = schroeder_multisine(plan.x1_harmonics, plan.x1_fundamental, plan.x1_length);
  if (plan.x1_phase == PhaseMode::kMinMax) {
    PhaseSearchOptions po;
    po.budget = plan.phase_search_budget;
    po.seed = derive_seed(plan.seed, 100);
    const auto period = static_cast<std::size_t>(std::llround(1.0 / plan.x1_fundamental));
    s1.phases = minmax_phase_search(plan.x1_harmonics, plan.phase_search_min_harmonics, plan.x1_fundamental,
                                    std::min(period, plan.x1_length), po)
                    .phases;
  }
  const Signal raw1 = multisine(s1);
  out.x1_par_db = par(raw1).db;
  out.x1_backoff_db = plan.x1_backoff_db.value_or(plan.ibo_db + out.x1_par_db);
  const double power = plan.input_saturation_power / from_db(out.x1_backoff_db);
  out.x1 = raw1.scaled(std::sqrt(power / raw1.mean_power()));

  const MultisineSpec s2 =
      schroeder_multisine(plan.x2_harmonics, plan.x2_fundamental, plan.x2_length, plan.x2_first_harmonic);
  const Signal raw2 = multisine(s2);
  out.x2 = raw2.scaled(plan.x2_peak / raw2.peak());

  MultisineSpec s3 = s2;
  s3.length = plan.x3_length;
  const Signal raw3 = multisine(s3);
  out.x3 = raw3.scaled(out.x1.peak() / raw3.peak());
  return out;
}

/// The three pilots and the channel outputs recorded for them.
struct CapturedSignals {
  Signal x1, w1;
  Signal x2, w2;
  Signal x3, w3;
};

namespace detail {

/// Re-raises the current whid exception with "step N: " prepended, keeping its type.
[[noreturn]] inline void rethrow_with_step(const std::string& step) {
  try {
    throw;
  } catch (const EmptyBandError& e) {
    throw EmptyBandError(step + ": " + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(step + ": " + e.what());
  } catch (const ConditioningError& e) {
    throw ConditioningError(step + ": " + e.what(), e.condition());
  } catch (const ParameterError& e) {
    throw ParameterError(step + ": " + e.what());
  }
}

template <typename F>
auto attributed(const std::string& step, F&& f) {
  try {
    return f();
  } catch (const std::logic_error&) {
    rethrow_with_step(step);
  } catch (const ConditioningError&) {
    rethrow_with_step(step);
  }
}

}  // namespace detail

inline WhEstimate estimate_from_captured(const CapturedSignals& data, const PilotPlan& plan) {
  plan.validate();
  WhEstimate est;
  const std::size_t l = plan.taps_h + plan.taps_g - 1;
  const std::size_t skip = warm_up_rows(plan.taps_h, plan.taps_g);

  const auto s1 = detail::attributed("step 1", [&] { return step1_estimate_r(data.x1, data.w1, l); });
  est.r_hat = s1.r_hat;
  est.diagnostics.push_back({"1", "output_power", s1.output_power_db});
  est.diagnostics.push_back({"1", "achieved_snr", s1.achieved_snr_db});
  est.diagnostics.push_back({"1", "condition", to_db(s1.condition)});

  Step2Options o2;
  o2.taps_h = plan.taps_h;
  o2.taps_g = plan.taps_g;
  o2.order = plan.order;
  o2.delay_bracket = plan.delay_bracket;
  o2.band_threshold_db = plan.band_threshold_db;
  const auto s2 =
      detail::attributed("step 2", [&] { return step2_estimate_hammerstein(data.x2, data.w2, est.r_hat, o2); });
  for (const auto& w : s2.warnings) est.warnings.push_back("step 2: " + w);
  est.delay = s2.delay;
  est.g1_direct = s2.g1_direct();
  est.diagnostics.push_back({"2", "delay_samples", s2.delay});
  est.diagnostics.push_back({"2", "residual_nmse", s2.residual_nmse_db});

  est.g1 = est.g1_direct;
  bool cubic = false;
  if (plan.order >= 3) {
    est.g3 = s2.g3();
    try {
      const auto imp = detail::attributed("step 2", [&] { return improve_g1(est.r_hat, est.g3, s2.u, data.w2, skip + l); });
      est.gamma_prime = imp.gamma_prime;
      est.g1 = imp.g1;
      cubic = true;
      est.diagnostics.push_back({"2", "gamma_prime_abs", to_db(std::abs(imp.gamma_prime))});
    } catch (const DegenerateError& e) {
      est.warnings.push_back(std::string(e.what()) + "; keeping the direct g1 and a linear amplifier");
    }
  } else {
    est.g3 = FirFilter(std::vector<double>(plan.taps_g, 0.0));
  }

  const auto s3 = detail::attributed(
      "step 3", [&] { return step3_estimate_h(est.r_hat, est.g1, data.x3, data.w3, plan.taps_h, est.delay, skip); });
  est.alpha = s3.alpha;
  est.g = s3.g;
  est.h = s3.h;
  est.diagnostics.push_back({"3", "alpha", to_db(std::abs(s3.alpha))});
  est.diagnostics.push_back({"3", "condition", to_db(s3.condition)});

  if (est.alpha == 0.0) throw DegenerateError("step 3: alpha is zero");
  std::map<int, double> gamma{{1, 1.0 / est.alpha}};
  if (cubic && est.gamma_prime != 0.0) gamma[3] = 1.0 / (est.alpha * est.gamma_prime);
  est.amplifier = PolynomialAmplifier(std::move(gamma));
  return est;
}

/// Noise variance used by run_full_pipeline for this plan and model.
inline double plan_noise_variance(const WhModel& model, const PilotPlan& plan, const Signal& x1) {
  if (!plan.snr_db) return model.noise_variance;
  WhModel clean = model;
  clean.noise_variance = 0.0;
  return noise_variance_for_snr(wh_forward(clean, x1, 0).w, *plan.snr_db);
}

/// Synthesises w1, w2, w3 from `model` with independent noise streams, then estimates.
inline CapturedSignals simulate_capture(const WhModel& model, const PilotPlan& plan) {
  const Pilots p = make_pilots(plan);
  WhModel noisy = model;
  noisy.noise_variance = plan_noise_variance(model, plan, p.x1);
  return {p.x1, wh_forward(noisy, p.x1, derive_seed(plan.seed, 1)).w,
          p.x2, wh_forward(noisy, p.x2, derive_seed(plan.seed, 2)).w,
          p.x3, wh_forward(noisy, p.x3, derive_seed(plan.seed, 3)).w};
}

inline WhEstimate run_full_pipeline(const WhModel& model, const PilotPlan& plan) {
  return estimate_from_captured(simulate_capture(model, plan), plan);
}

inline WhEstimate run_full_pipeline(const CapturedSignals& data, const PilotPlan& plan) {
  return estimate_from_captured(data, plan);
}

}  // namespace whid

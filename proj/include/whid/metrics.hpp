#pragma once

// Figures of merit (Q, Q', NMSE, NMSE') and pilot budget formulas.
//
// Exact estimates give +/-infinity; CSV writers map those to +/-kSentinelDb.

#include <cmath>
#include <limits>
#include <string>

#include "whid/error.hpp"
#include "whid/filter.hpp"
#include "whid/signal.hpp"

namespace whid {

inline constexpr double kSentinelDb = 400.0;

/// Clamp +/-inf to the CSV sentinel.
inline double finite_db(double db) {
  if (db == std::numeric_limits<double>::infinity()) return kSentinelDb;
  if (db == -std::numeric_limits<double>::infinity()) return -kSentinelDb;
  return db;
}

namespace detail {

inline double error_ratio_db(std::span<const double> ref, std::span<const double> est, const char* what) {
  if (ref.size() != est.size())
    throw ParameterError(std::string(what) + ": lengths differ (" + std::to_string(ref.size()) + " vs " +
                         std::to_string(est.size()) + ")");
  double num = 0.0, err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += ref[i] * ref[i];
    err += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  if (num == 0.0) throw DegenerateError(std::string(what) + ": reference has zero energy");
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return to_db(num / err);
}

}  // namespace detail

/// 10 log10(||r||^2 / ||r - r_hat||^2).
inline double q_value(const FirFilter& truth, const FirFilter& estimate) {
  return detail::error_ratio_db(truth.taps(), estimate.taps(), "q_value");
}

/// Q of both filters after convolution with `weighting`.
inline double q_prime(const FirFilter& truth, const FirFilter& estimate, const FirFilter& weighting) {
  if (truth.size() != estimate.size()) throw ParameterError("q_prime: lengths differ");
  return q_value(cascade(weighting, truth), cascade(weighting, estimate));
}

/// Expected least-squares Q for N observations, L unknowns: 10 log10(N/L) + SNR.
inline double predicted_q(double n, double taps, double snr_db) {
  if (!(n >= 1.0) || !(taps >= 1.0)) throw ParameterError("predicted_q: N and L must be >= 1");
  return to_db(n / taps) + snr_db;
}

/// 10 log10(||w - w_hat||^2 / ||w||^2).
inline double nmse(const Signal& reference, const Signal& estimate) {
  return -detail::error_ratio_db(reference.samples(), estimate.samples(), "nmse");
}

/// NMSE after filtering both outputs with `weighting`.
inline double nmse_prime(const Signal& reference, const Signal& estimate, const FirFilter& weighting) {
  if (reference.size() != estimate.size()) throw ParameterError("nmse_prime: lengths differ");
  return nmse(convolve(weighting, reference), convolve(weighting, estimate));
}

/// Linear inverse factor 10^{-dB/10}: a -30 dB target becomes 1000.
inline double nmse_inverse_factor(double target_nmse_db) { return from_db(-target_nmse_db); }

struct BudgetInputs {
  double target_nmse_db = -30.0;
  double taps = 39;                 // L, length of r
  double taps_g = 20;               // L2
  double bandwidth_ratio_x = 1.0;   // W_x / W_r^x
  double bandwidth_ratio_u = 1.0;   // W_u / W_g^u
  double par_x1 = 1.0;              // linear
  double par_x2 = 1.0;              // linear
  double par_increase = 1.0;        // PAR(u) / PAR(x1)
  double ibo = 1.0;                 // linear
  double noise_variance = 1.0;
  double gain = 1.0;
  double input_saturation_power = 1.0;
  double beta = 2.0;

  void validate() const {
    const auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError(std::string("budget input '") + name + "' must be positive and finite");
    };
    positive(taps, "taps");
    positive(taps_g, "taps_g");
    positive(bandwidth_ratio_x, "bandwidth_ratio_x");
    positive(bandwidth_ratio_u, "bandwidth_ratio_u");
    positive(par_x1, "par_x1");
    positive(par_x2, "par_x2");
    positive(par_increase, "par_increase");
    positive(ibo, "ibo");
    positive(noise_variance, "noise_variance");
    positive(gain, "gain");
    positive(input_saturation_power, "input_saturation_power");
    positive(beta, "beta");
    if (!std::isfinite(target_nmse_db)) throw ParameterError("budget input 'target_nmse_db' must be finite");
  }

  /// sigma_e^2 / (G^2 P_sat).
  double noise_to_peak() const { return noise_variance / (gain * gain * input_saturation_power); }
};

enum class PilotOption { kFixedPar = 1, kFilteredPar = 2 };

/// Largest achievable SNR (dB) for the step-1 pilot under the given option.
inline double snr_budget(const BudgetInputs& in, PilotOption option) {
  in.validate();
  double snr = 1.0 / (in.noise_to_peak() * in.par_x1 * in.ibo);
  if (option == PilotOption::kFixedPar)
    snr /= in.bandwidth_ratio_x;
  else
    snr /= in.bandwidth_ratio_u * in.par_increase;
  return to_db(snr);
}

enum class PilotKind { kX1Option1, kX1Option2, kX2 };

/// Minimum pilot length for the target NMSE, rounded up.
inline std::size_t min_pilot_length(const BudgetInputs& in, PilotKind which) {
  in.validate();
  const double inv = nmse_inverse_factor(in.target_nmse_db);
  double n = 0.0;
  switch (which) {
    case PilotKind::kX1Option1:
      n = inv * in.taps * in.bandwidth_ratio_x * in.par_x1 * in.ibo * in.noise_to_peak();
      break;
    case PilotKind::kX1Option2:
      n = inv * in.taps * in.bandwidth_ratio_u * in.par_x1 * in.ibo * in.par_increase * in.noise_to_peak();
      break;
    case PilotKind::kX2:
      n = in.beta * inv * in.taps_g * in.par_x2 * in.noise_to_peak();
      break;
  }
  // snap to an integer within 1e-9 before rounding up
  const double rounded = std::round(n);
  if (std::abs(n - rounded) <= 1e-9 * std::max(1.0, rounded)) n = rounded;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(n)));
}

}  // namespace whid

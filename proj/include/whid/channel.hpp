#pragma once

// Ground-truth Wiener-Hammerstein channel: x -> h -> c(.) -> g -> + e.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "whid/amplifier.hpp"
#include "whid/error.hpp"
#include "whid/filter.hpp"
#include "whid/signal.hpp"

namespace whid {

struct WhModel {
  FirFilter h;
  Amplifier amplifier = RappAmplifier{};
  FirFilter g;
  double noise_variance = 0.0;  // applied at the output only
};

struct ChannelOutputs {
  Signal u;  // h * x
  Signal y;  // c(u)
  Signal w;  // g * y + e
};

inline Signal add_white_noise(const Signal& clean, double variance, std::uint64_t seed) {
  if (variance < 0.0 || !std::isfinite(variance)) throw ParameterError("noise variance must be >= 0");
  if (variance == 0.0) return clean;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  std::vector<double> out(clean.vector());
  for (double& v : out) v += normal(rng);
  return Signal(std::move(out), clean.sample_rate());
}

/// sigma_e^2 giving the requested SNR with respect to the mean power of `clean`.
inline double noise_variance_for_snr(const Signal& clean, double snr_db) {
  return clean.mean_power() / from_db(snr_db);
}

inline ChannelOutputs wh_forward(const WhModel& model, const Signal& x, std::uint64_t seed) {
  Signal u = convolve(model.h, x);
  Signal y = amplify(model.amplifier, u);
  Signal w = add_white_noise(convolve(model.g, y), model.noise_variance, seed);
  return {std::move(u), std::move(y), std::move(w)};
}

/// g'_k(i) = gamma(k) g(i), k-major over every odd order 1..K (absent orders give zeros).
inline std::vector<double> hammerstein_coeffs(const PolynomialAmplifier& gamma, const FirFilter& g) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>((gamma.order() + 1) / 2) * g.size());
  for (int k = 1; k <= gamma.order(); k += 2) {
    const double c = gamma.coefficient(k);
    for (double tap : g.taps()) out.push_back(c * tap);
  }
  return out;
}

// Filters used for the examples, 20 symmetric taps each.
inline constexpr std::array<double, 20> kReferenceHTaps = {
    -2.1789e-3, -1.2320e-3, 7.4572e-3,   -4.4106e-3,  -20.0299e-3, 32.8752e-3,  20.1718e-3,
    -108.3123e-3, 61.5913e-3, 510.2837e-3, 510.2837e-3, 61.5913e-3,  -108.3123e-3, 20.1718e-3,
    32.8752e-3,  -20.0299e-3, -4.4106e-3,  7.4572e-3,   -1.2320e-3,  -2.1789e-3};

inline constexpr std::array<double, 20> kReferenceGTaps = {
    0.5922e-3,   -7.2598e-3,  0.0,         -25.0493e-3, -12.4071e-3, -42.2380e-3, -67.3740e-3,
    0.0,         -243.7223e-3, 543.6852e-3, 543.6852e-3, -243.7223e-3, 0.0,         -67.3740e-3,
    -42.2380e-3, -12.4071e-3, -25.0493e-3, 0.0,         -7.2598e-3,  0.5922e-3};

inline FirFilter reference_h() { return FirFilter({kReferenceHTaps.begin(), kReferenceHTaps.end()}); }
inline FirFilter reference_g() { return FirFilter({kReferenceGTaps.begin(), kReferenceGTaps.end()}); }

/// Rapp(G=1, A0=10, p=3) between the two example filters.
inline WhModel reference_model(double noise_variance = 0.0) {
  return {reference_h(), RappAmplifier{1.0, 10.0, 3.0}, reference_g(), noise_variance};
}

}  // namespace whid

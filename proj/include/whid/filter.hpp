#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "whid/dft.hpp"
#include "whid/error.hpp"
#include "whid/signal.hpp"

namespace whid {

/// Finite impulse response, taps f(0..L-1). Non-empty, finite.
class FirFilter {
 public:
  FirFilter() : taps_{1.0} {}

  explicit FirFilter(std::vector<double> taps) : taps_(std::move(taps)) {
    if (taps_.empty()) throw ParameterError("filter must have at least one tap");
    for (std::size_t i = 0; i < taps_.size(); ++i)
      if (!std::isfinite(taps_[i]))
        throw ParameterError("filter tap " + std::to_string(i) + " is not finite");
  }

  FirFilter(std::initializer_list<double> taps) : FirFilter(std::vector<double>(taps)) {}

  std::size_t size() const noexcept { return taps_.size(); }
  double operator[](std::size_t i) const { return taps_[i]; }
  std::span<const double> taps() const noexcept { return taps_; }
  const std::vector<double>& vector() const noexcept { return taps_; }

  double energy() const noexcept {
    double e = 0.0;
    for (double t : taps_) e += t * t;
    return e;
  }

  FirFilter scaled(double c) const {
    auto t = taps_;
    for (double& v : t) v *= c;
    return FirFilter(std::move(t));
  }

  friend bool operator==(const FirFilter&, const FirFilter&) = default;

 private:
  std::vector<double> taps_;
};

/// Causal convolution truncated to the input length; zero initial state.
inline std::vector<double> convolve(std::span<const double> taps, std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const std::size_t top = std::min(taps.size(), n + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < top; ++i) acc += taps[i] * x[n - i];
    y[n] = acc;
  }
  return y;
}

inline Signal convolve(const FirFilter& f, const Signal& x) {
  return Signal(convolve(f.taps(), x.samples()), x.sample_rate());
}

/// Full linear convolution of two filters, length La + Lb - 1.
inline FirFilter cascade(const FirFilter& a, const FirFilter& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return FirFilter(std::move(out));
}

/// Group delay in samples: (L-1)/2 for symmetric or antisymmetric taps,
/// otherwise the energy centroid sum i f(i)^2 / sum f(i)^2.
inline double group_delay(const FirFilter& f) {
  const double e = f.energy();
  if (e == 0.0) throw DegenerateError("group delay of an all-zero filter is undefined");
  double peak = 0.0;
  for (double t : f.taps()) peak = std::max(peak, std::abs(t));
  const double tol = 1e-12 * peak;
  const std::size_t l = f.size();
  bool symmetric = true, antisymmetric = true;
  for (std::size_t i = 0; i < l; ++i) {
    symmetric = symmetric && std::abs(f[i] - f[l - 1 - i]) <= tol;
    antisymmetric = antisymmetric && std::abs(f[i] + f[l - 1 - i]) <= tol;
  }
  if (symmetric || antisymmetric) return 0.5 * static_cast<double>(l - 1);
  double moment = 0.0;
  for (std::size_t i = 0; i < l; ++i) moment += static_cast<double>(i) * f[i] * f[i];
  return moment / e;
}

/// Circular delay by `tau` samples via a linear phase ramp in the DFT domain.
/// The Nyquist bin (even N) is multiplied by cos(pi tau) so the output stays real;
/// integer tau is an exact circular shift. Pad non-periodic input by ceil(tau) + L zeros.
inline Signal fractional_delay(const Signal& x, double tau) {
  if (!std::isfinite(tau)) throw ParameterError("fractional_delay: tau must be finite");
  const std::size_t n = x.size();
  auto spectrum = dft::forward(x.samples());
  for (std::size_t k = 0; k < n; ++k) {
    // signed frequency index in (-N/2, N/2]
    const double kk = (2 * k <= n) ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    if (2 * k == n) {
      spectrum[k] *= std::cos(std::numbers::pi * tau);
      continue;
    }
    const double phase = -2.0 * std::numbers::pi * kk * tau / static_cast<double>(n);
    spectrum[k] *= std::polar(1.0, phase);
  }
  return Signal(dft::inverse_real(spectrum), x.sample_rate());
}

/// |F(e^{j 2 pi k / nfft})| for k = 0..nfft/2.
inline std::vector<double> magnitude_response(const FirFilter& f, std::size_t nfft = 4096) {
  if (nfft < 2 * f.size()) nfft = 2 * f.size();
  std::vector<double> padded(f.taps().begin(), f.taps().end());
  padded.resize(nfft, 0.0);
  const auto spectrum = dft::forward(padded);
  std::vector<double> mag(nfft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spectrum[k]);
  return mag;
}

/// Normalised frequency interval [low, high] (cycles/sample).
struct Band {
  double low;
  double high;

  double width() const { return high - low; }
  bool contains(double f) const { return f >= low && f <= high; }
};

/// Contiguous band around the magnitude peak where |F| stays within `threshold_db` of it.
inline Band passband(const FirFilter& f, double threshold_db = 3.0, std::size_t nfft = 4096) {
  const auto mag = magnitude_response(f, nfft);
  const auto peak_it = std::max_element(mag.begin(), mag.end());
  if (*peak_it == 0.0) throw DegenerateError("passband of an all-zero filter is undefined");
  const double floor = *peak_it * std::pow(10.0, -std::abs(threshold_db) / 20.0);
  std::size_t lo = static_cast<std::size_t>(peak_it - mag.begin()), hi = lo;
  while (lo > 0 && mag[lo - 1] >= floor) --lo;
  while (hi + 1 < mag.size() && mag[hi + 1] >= floor) ++hi;
  const double df = 1.0 / static_cast<double>(2 * (mag.size() - 1));
  return {static_cast<double>(lo) * df, static_cast<double>(hi) * df};
}

}  // namespace whid

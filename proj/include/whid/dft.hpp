#pragma once

#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace whid::dft {

using Spectrum = std::vector<std::complex<double>>;

/// Full-length forward DFT of a real sequence (no scaling).
inline Spectrum forward(std::span<const double> x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  Spectrum out;
  fft.fwd(out, in);
  return out;
}

/// Inverse DFT, real part only, scaled by 1/N.
inline std::vector<double> inverse_real(const Spectrum& spectrum) {
  Eigen::FFT<double> fft;
  Spectrum in(spectrum);
  Spectrum out;
  fft.inv(out, in);
  std::vector<double> real(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) real[i] = out[i].real();
  return real;
}

/// |X(k)|^2 / N for k = 0..floor(N/2).
inline std::vector<double> periodogram(std::span<const double> x) {
  const auto spectrum = forward(x);
  const std::size_t half = x.size() / 2;
  std::vector<double> p(half + 1);
  for (std::size_t k = 0; k <= half; ++k)
    p[k] = std::norm(spectrum[k]) / static_cast<double>(x.size());
  return p;
}

}  // namespace whid::dft

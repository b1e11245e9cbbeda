#pragma once

// Memoryless AM/AM amplifier models.

#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "whid/error.hpp"
#include "whid/lsq.hpp"
#include "whid/signal.hpp"

namespace whid {

/// |y| = G|u| / (1 + (G|u|/A0)^{2p})^{1/(2p)}, y carries the sign of u.
struct RappAmplifier {
  double gain = 1.0;
  double saturation = 10.0;
  double smoothness = 3.0;

  void validate() const {
    if (!(gain > 0.0) || !(saturation > 0.0) || !(smoothness > 0.0))
      throw ParameterError("Rapp amplifier: gain, saturation and smoothness must be positive");
  }

  /// Input power at which saturation is reached, (A0 / G)^2.
  double input_saturation_power() const { return (saturation / gain) * (saturation / gain); }

  double operator()(double u) const {
    const double t = gain * std::abs(u) / saturation;
    const double two_p = 2.0 * smoothness;
    // 1/t form for t > 1
    const double mag = t <= 1.0 ? saturation * t / std::pow(1.0 + std::pow(t, two_p), 1.0 / two_p)
                                : saturation / std::pow(std::pow(t, -two_p) + 1.0, 1.0 / two_p);
    return u < 0.0 ? -mag : mag;
  }
};

/// c(u) = sum over odd k of gamma(k) u^k.
class PolynomialAmplifier {
 public:
  PolynomialAmplifier() : coeffs_{{1, 1.0}} {}

  explicit PolynomialAmplifier(std::map<int, double> coeffs) : coeffs_(std::move(coeffs)) {
    for (const auto& [k, g] : coeffs_) {
      if (k < 1 || k % 2 == 0)
        throw ParameterError("polynomial amplifier: only odd orders are allowed (got " +
                             std::to_string(k) + ")");
      if (!std::isfinite(g)) throw ParameterError("polynomial amplifier: non-finite coefficient");
    }
    if (coefficient(1) == 0.0) throw ParameterError("polynomial amplifier: gamma(1) must be nonzero");
  }

  const std::map<int, double>& coefficients() const noexcept { return coeffs_; }

  double coefficient(int k) const {
    const auto it = coeffs_.find(k);
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  /// Highest odd order present.
  int order() const noexcept { return coeffs_.empty() ? 1 : coeffs_.rbegin()->first; }

  double operator()(double u) const {
    // u^k = u * (u^2)^((k-1)/2)
    const double u2 = u * u;
    double acc = 0.0;
    double power = u;
    int k = 1;
    for (const auto& [order, g] : coeffs_) {
      while (k < order) {
        power *= u2;
        k += 2;
      }
      acc += g * power;
    }
    return acc;
  }

  friend bool operator==(const PolynomialAmplifier&, const PolynomialAmplifier&) = default;

 private:
  std::map<int, double> coeffs_;
};

using Amplifier = std::variant<RappAmplifier, PolynomialAmplifier>;

template <typename Map>
Signal apply_samplewise(const Map& map, const Signal& u) {
  std::vector<double> y(u.size());
  for (std::size_t n = 0; n < u.size(); ++n) y[n] = map(u[n]);
  return Signal(std::move(y), u.sample_rate());
}

inline Signal rapp(const RappAmplifier& amp, const Signal& u) {
  amp.validate();
  return apply_samplewise(amp, u);
}

inline Signal poly_amp(const PolynomialAmplifier& amp, const Signal& u) {
  return apply_samplewise(amp, u);
}

inline Signal amplify(const Amplifier& amp, const Signal& u) {
  return std::visit(
      [&](const auto& a) -> Signal {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, RappAmplifier>)
          return rapp(a, u);
        else
          return poly_amp(a, u);
      },
      amp);
}

/// Small-signal gain: G for Rapp, gamma(1) for a polynomial.
inline double linear_gain(const Amplifier& amp) {
  if (const auto* r = std::get_if<RappAmplifier>(&amp)) return r->gain;
  return std::get<PolynomialAmplifier>(amp).coefficient(1);
}

struct PolynomialFit {
  PolynomialAmplifier amplifier;
  double nmse_db;
};

/// Least-squares fit of odd monomials u, u^3, ..., u^K to y.
inline PolynomialFit fit_polynomial(const Signal& u, const Signal& y, int order) {
  if (order < 1 || order % 2 == 0) throw ParameterError("fit_polynomial: order must be odd");
  if (u.size() != y.size()) throw ParameterError("fit_polynomial: u and y lengths differ");
  const auto columns = static_cast<std::size_t>((order + 1) / 2);
  if (u.size() < columns) throw ParameterError("fit_polynomial: fewer samples than coefficients");

  lsq::Matrix design(static_cast<Eigen::Index>(u.size()), static_cast<Eigen::Index>(columns));
  for (std::size_t n = 0; n < u.size(); ++n) {
    double p = u[n];
    for (std::size_t c = 0; c < columns; ++c) {
      design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) = p;
      p *= u[n] * u[n];
    }
  }
  const auto target = lsq::to_vector(y.samples());
  const auto fit = lsq::solve(design, target);

  std::map<int, double> coeffs;
  for (std::size_t c = 0; c < columns; ++c)
    coeffs[static_cast<int>(2 * c + 1)] = fit.coefficients(static_cast<Eigen::Index>(c));
  const double ref = y.energy();
  if (ref == 0.0) throw DegenerateError("fit_polynomial: zero target");
  const double err = fit.residual_norm * fit.residual_norm;
  return {PolynomialAmplifier(std::move(coeffs)),
          err == 0.0 ? -std::numeric_limits<double>::infinity() : to_db(err / ref)};
}

/// `count` points evenly spread over [-max_abs, max_abs].
inline Signal amplitude_grid(double max_abs, std::size_t count) {
  if (count < 2 || !(max_abs > 0.0)) throw ParameterError("amplitude_grid: need count >= 2, max_abs > 0");
  std::vector<double> u(count);
  for (std::size_t i = 0; i < count; ++i)
    u[i] = -max_abs + 2.0 * max_abs * static_cast<double>(i) / static_cast<double>(count - 1);
  return Signal(std::move(u));
}

}  // namespace whid

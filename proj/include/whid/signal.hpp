#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "whid/error.hpp"

namespace whid {

/// Uniformly sampled real sequence. Non-empty, all samples finite.
class Signal {
 public:
  Signal() : samples_(1, 0.0) {}

  explicit Signal(std::vector<double> samples, double sample_rate = 1.0)
      : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (samples_.empty()) throw ParameterError("signal must have at least one sample");
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
      throw ParameterError("sample rate must be positive and finite");
    for (std::size_t i = 0; i < samples_.size(); ++i)
      if (!std::isfinite(samples_[i]))
        throw ParameterError("signal sample " + std::to_string(i) + " is not finite");
  }

  static Signal zeros(std::size_t n, double sample_rate = 1.0) {
    return Signal(std::vector<double>(n, 0.0), sample_rate);
  }

  std::size_t size() const noexcept { return samples_.size(); }
  double sample_rate() const noexcept { return sample_rate_; }
  double operator[](std::size_t i) const { return samples_[i]; }

  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<double>& vector() const noexcept { return samples_; }
  auto begin() const noexcept { return samples_.begin(); }
  auto end() const noexcept { return samples_.end(); }

  double energy() const noexcept {
    return std::inner_product(samples_.begin(), samples_.end(), samples_.begin(), 0.0);
  }
  double mean_power() const noexcept { return energy() / static_cast<double>(size()); }
  double peak() const noexcept {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
  }

  Signal scaled(double c) const {
    std::vector<double> out(samples_);
    for (double& v : out) v *= c;
    return Signal(std::move(out), sample_rate_);
  }

  /// Samples [first, first+count).
  Signal slice(std::size_t first, std::size_t count) const {
    if (first + count > size() || count == 0) throw ParameterError("slice out of range");
    return Signal(std::vector<double>(samples_.begin() + first, samples_.begin() + first + count),
                  sample_rate_);
  }

  /// `lead` zeros, then this signal, then `tail` zeros.
  Signal zero_padded(std::size_t lead, std::size_t tail = 0) const {
    std::vector<double> out(lead, 0.0);
    out.insert(out.end(), samples_.begin(), samples_.end());
    out.resize(out.size() + tail, 0.0);
    return Signal(std::move(out), sample_rate_);
  }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
  double sample_rate_ = 1.0;
};

inline Signal operator+(const Signal& a, const Signal& b) {
  if (a.size() != b.size()) throw ParameterError("signal lengths differ");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return Signal(std::move(out), a.sample_rate());
}

inline Signal operator-(const Signal& a, const Signal& b) {
  if (a.size() != b.size()) throw ParameterError("signal lengths differ");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return Signal(std::move(out), a.sample_rate());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("dot: lengths differ");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace whid

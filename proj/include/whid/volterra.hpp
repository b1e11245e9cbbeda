#pragma once

// Reduced-kernel cubic Volterra baseline.
//
// A W-H model with a K=3 polynomial expands into kernels over lag multisets of
// the input. Raw terms h(i)h(j)h(l)g'(m) that land on the same sorted lag
// multiset {i+m, j+m, l+m} share a regressor and are summed into one kernel.

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "whid/amplifier.hpp"
#include "whid/error.hpp"
#include "whid/filter.hpp"
#include "whid/lsq.hpp"
#include "whid/signal.hpp"

namespace whid {

/// Order k in {1, 3} with k ascending lags.
struct ReducedKernelIndex {
  int order = 1;
  std::array<std::size_t, 3> lags{};

  std::span<const std::size_t> lag_set() const { return {lags.data(), static_cast<std::size_t>(order)}; }

  friend bool operator==(const ReducedKernelIndex& a, const ReducedKernelIndex& b) {
    return a.order == b.order && std::ranges::equal(a.lag_set(), b.lag_set());
  }
  /// Canonical order: k ascending, then lexicographic lags.
  friend bool operator<(const ReducedKernelIndex& a, const ReducedKernelIndex& b) {
    if (a.order != b.order) return a.order < b.order;
    return std::ranges::lexicographical_compare(a.lag_set(), b.lag_set());
  }
};

/// Linear lags 0..L1+L2-2 followed by every realisable sorted cubic multiset.
inline std::vector<ReducedKernelIndex> enumerate_reduced_indices(std::size_t l1, std::size_t l2, int order = 3) {
  if (l1 < 1 || l2 < 1) throw ParameterError("enumerate_reduced_indices: L1 and L2 must be >= 1");
  if (order != 3) throw ParameterError("enumerate_reduced_indices: only K = 3 is supported");
  const std::size_t span = l1 + l2 - 1;
  std::vector<ReducedKernelIndex> out;
  for (std::size_t o = 0; o < span; ++o) out.push_back({1, {o, 0, 0}});
  // {a <= b <= c} is reachable iff some shift m fits: max(0, c-L1+1) <= min(a, L2-1)
  for (std::size_t a = 0; a < span; ++a)
    for (std::size_t b = a; b < span; ++b)
      for (std::size_t c = b; c < span && c - a < l1; ++c) {
        const std::size_t m_lo = c + 1 > l1 ? c + 1 - l1 : 0;
        const std::size_t m_hi = std::min(a, l2 - 1);
        if (m_lo <= m_hi) out.push_back({3, {a, b, c}});
      }
  return out;
}

/// Sorted multisets of k lags drawn from [0, L1): the count before grouping over m.
inline std::vector<std::vector<std::size_t>> distinct_lag_multisets(std::size_t l1, int k) {
  if (l1 < 1 || k < 1) throw ParameterError("distinct_lag_multisets: L1 and k must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current(static_cast<std::size_t>(k), 0);
  while (true) {
    out.push_back(current);
    int pos = k - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == l1 - 1) --pos;
    if (pos < 0) break;
    const std::size_t next = current[static_cast<std::size_t>(pos)] + 1;
    for (auto i = static_cast<std::size_t>(pos); i < current.size(); ++i) current[i] = next;
  }
  return out;
}

/// Column j holds the regressor of indices[j] with zero-prefix lags.
inline lsq::Matrix volterra_design(const Signal& x, std::span<const ReducedKernelIndex> indices) {
  const auto n = static_cast<Eigen::Index>(x.size());
  lsq::Matrix design = lsq::Matrix::Zero(n, static_cast<Eigen::Index>(indices.size()));
  const auto lagged = [&](Eigen::Index row, std::size_t lag) {
    return row >= static_cast<Eigen::Index>(lag) ? x[static_cast<std::size_t>(row) - lag] : 0.0;
  };
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto& idx = indices[j];
    const auto col = static_cast<Eigen::Index>(j);
    for (Eigen::Index row = static_cast<Eigen::Index>(idx.lags[0]); row < n; ++row) {
      double v = lagged(row, idx.lags[0]);
      for (int t = 1; t < idx.order; ++t) v *= lagged(row, idx.lags[static_cast<std::size_t>(t)]);
      design(row, col) = v;
    }
  }
  return design;
}

class VolterraModel {
 public:
  VolterraModel() = default;

  VolterraModel(std::vector<ReducedKernelIndex> indices, std::vector<double> kernels)
      : indices_(std::move(indices)), kernels_(std::move(kernels)) {
    if (indices_.size() != kernels_.size())
      throw ParameterError("VolterraModel: index and kernel counts differ");
    for (std::size_t i = 1; i < indices_.size(); ++i)
      if (!(indices_[i - 1] < indices_[i]))
        throw ParameterError("VolterraModel: indices must be unique and canonically ordered");
  }

  const std::vector<ReducedKernelIndex>& indices() const noexcept { return indices_; }
  const std::vector<double>& kernels() const noexcept { return kernels_; }
  std::size_t size() const noexcept { return kernels_.size(); }

  Signal predict(const Signal& x) const {
    const std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < indices_.size(); ++j) {
      const auto& idx = indices_[j];
      const std::size_t max_lag = idx.lags[static_cast<std::size_t>(idx.order - 1)];
      for (std::size_t t = max_lag; t < n; ++t) {
        double v = x[t - idx.lags[0]];
        for (int k = 1; k < idx.order; ++k) v *= x[t - idx.lags[static_cast<std::size_t>(k)]];
        w[t] += kernels_[j] * v;
      }
    }
    return Signal(std::move(w), x.sample_rate());
  }

 private:
  std::vector<ReducedKernelIndex> indices_;
  std::vector<double> kernels_;
};

/// Reduced kernels of the W-H model (h, gamma, g); gamma may only carry orders 1 and 3.
inline VolterraModel wh_to_kernels(const FirFilter& h, const PolynomialAmplifier& gamma, const FirFilter& g) {
  for (const auto& [k, c] : gamma.coefficients())
    if (k != 1 && k != 3) throw ParameterError("wh_to_kernels: only orders 1 and 3 are supported");
  const std::size_t l1 = h.size(), l2 = g.size();
  auto indices = enumerate_reduced_indices(l1, l2, 3);
  std::vector<double> kernels(indices.size(), 0.0);
  const double g1 = gamma.coefficient(1), g3 = gamma.coefficient(3);

  const std::size_t span = l1 + l2 - 1;
  for (std::size_t m = 0; m < l2; ++m)
    for (std::size_t i = 0; i < l1; ++i) kernels[i + m] += g1 * g[m] * h[i];

  std::size_t first_cubic = span;
  for (std::size_t j = first_cubic; j < indices.size(); ++j) {
    const auto& [a, b, c] = indices[j].lags;
    const std::size_t m_lo = c + 1 > l1 ? c + 1 - l1 : 0;
    const std::size_t m_hi = std::min(a, l2 - 1);
    const std::size_t orderings = (a == c) ? 1 : (a == b || b == c) ? 3 : 6;
    double acc = 0.0;
    for (std::size_t m = m_lo; m <= m_hi; ++m) acc += g[m] * h[a - m] * h[b - m] * h[c - m];
    kernels[j] = g3 * static_cast<double>(orderings) * acc;
  }
  return {std::move(indices), std::move(kernels)};
}

/// Least-squares kernels on the reduced index set for (L1, L2).
inline VolterraModel estimate_volterra(const Signal& x, const Signal& w, std::size_t l1, std::size_t l2,
                                       const lsq::SolveOptions& options = {}) {
  if (x.size() != w.size()) throw ParameterError("estimate_volterra: x and w lengths differ");
  auto indices = enumerate_reduced_indices(l1, l2, 3);
  if (x.size() < indices.size() && !options.ridge)
    throw ConditioningError("estimate_volterra: " + std::to_string(x.size()) + " samples for " +
                                std::to_string(indices.size()) + " kernels (underdetermined)",
                            std::numeric_limits<double>::infinity());
  const auto design = volterra_design(x, indices);
  const auto fit = lsq::solve(design, lsq::to_vector(w.samples()), options);
  return {std::move(indices), lsq::to_std(fit.coefficients)};
}

/// N_V / N_P ~ (L_V / L_P) / IBO.
inline double pilot_length_ratio(double volterra_count, double proposed_count, double ibo) {
  if (!(volterra_count > 0.0) || !(proposed_count > 0.0) || !(ibo > 0.0))
    throw ParameterError("pilot_length_ratio: all inputs must be positive");
  return volterra_count / proposed_count / ibo;
}

}  // namespace whid

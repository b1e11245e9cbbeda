#pragma once

// Least-squares regression for FIR and Hammerstein models.
//
// Designs use the zero-prefix lag convention: x(n - i) = 0 for n - i < 0,
// matching the causal zero-state convolution in filter.hpp.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "whid/error.hpp"
#include "whid/signal.hpp"

namespace whid::lsq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RegressionProblem {
  Matrix design;  // N x P
  Vector target;  // N
};

inline Vector to_vector(std::span<const double> x) {
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Row n is [x(n), x(n-1), ..., x(n-L+1)].
inline Matrix linear_design(std::span<const double> x, std::size_t taps) {
  if (taps < 1) throw ParameterError("linear_design: need at least one tap");
  if (taps > x.size()) throw ParameterError("linear_design: more taps than samples");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto l = static_cast<Eigen::Index>(taps);
  Matrix design = Matrix::Zero(n, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index row = i; row < n; ++row) design(row, i) = x[static_cast<std::size_t>(row - i)];
  return design;
}

inline Matrix linear_design(const Signal& x, std::size_t taps) {
  return linear_design(x.samples(), taps);
}

/// Lagged windows of u, u^3, ..., u^K side by side: ((K+1)/2) * L2 columns,
/// block for order k at columns ((k-1)/2) * L2 .. .
inline Matrix hammerstein_design(std::span<const double> u, std::size_t taps, int order) {
  if (order < 1 || order % 2 == 0) throw ParameterError("hammerstein_design: order must be odd and >= 1");
  if (taps < 1 || taps > u.size()) throw ParameterError("hammerstein_design: bad tap count");
  const auto blocks = static_cast<Eigen::Index>((order + 1) / 2);
  const auto n = static_cast<Eigen::Index>(u.size());
  const auto l = static_cast<Eigen::Index>(taps);
  Matrix design = Matrix::Zero(n, blocks * l);
  std::vector<double> power(u.begin(), u.end());
  std::vector<double> square(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) square[i] = u[i] * u[i];
  for (Eigen::Index b = 0; b < blocks; ++b) {
    if (b > 0)
      for (std::size_t i = 0; i < u.size(); ++i) power[i] *= square[i];
    for (Eigen::Index i = 0; i < l; ++i)
      for (Eigen::Index row = i; row < n; ++row)
        design(row, b * l + i) = power[static_cast<std::size_t>(row - i)];
  }
  return design;
}

inline Matrix hammerstein_design(const Signal& u, std::size_t taps, int order) {
  return hammerstein_design(u.samples(), taps, order);
}

struct SolveOptions {
  /// Singular values of the column-scaled design below this fraction of the largest
  /// are treated as zero.
  double rank_tolerance = 1e-10;
  /// Tikhonov parameter on the column-scaled problem; off by default.
  std::optional<double> ridge;
};

struct SolveResult {
  Vector coefficients;
  double condition;      // of the column-scaled design
  double residual_norm;  // ||X c - w||
};

/// min ||X c - w||^2 by Householder QR on the column-scaled design.
inline SolveResult solve(const Eigen::Ref<const Matrix>& design, const Eigen::Ref<const Vector>& target,
                         const SolveOptions& options = {}) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (target.size() != n) throw ParameterError("solve: target length differs from design rows");
  if (p == 0) throw ParameterError("solve: empty design");
  const bool ridge = options.ridge.has_value() && *options.ridge > 0.0;
  if (n < p && !ridge)
    throw ConditioningError("underdetermined system: " + std::to_string(n) + " rows for " +
                                std::to_string(p) + " unknowns",
                            std::numeric_limits<double>::infinity());

  Vector scale = design.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (scale(j) == 0.0)
      throw ConditioningError("design column " + std::to_string(j) + " is identically zero",
                              std::numeric_limits<double>::infinity());

  const Eigen::Index rows = ridge ? n + p : n;
  Matrix scaled(rows, p);
  scaled.topRows(n) = design * scale.cwiseInverse().asDiagonal();
  Vector rhs(rows);
  rhs.head(n) = target;
  if (ridge) {
    scaled.bottomRows(p) = std::sqrt(*options.ridge) * Matrix::Identity(p, p);
    rhs.tail(p).setZero();
  }

  Eigen::HouseholderQR<Matrix> qr(scaled);
  const Matrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const Vector sv = Eigen::JacobiSVD<Matrix>(r).singularValues();
  const double smax = sv(0);
  const double smin = sv(p - 1);
  const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smin > options.rank_tolerance * smax))
    throw ConditioningError("numerically rank-deficient design (condition " +
                                std::to_string(condition) + ")",
                            condition);

  Vector coeff = qr.solve(rhs);
  coeff = coeff.cwiseQuotient(scale);
  const double residual = (design * coeff - target).norm();
  return {std::move(coeff), condition, residual};
}

inline SolveResult solve(const RegressionProblem& problem, const SolveOptions& options = {}) {
  return solve(problem.design, problem.target, options);
}

}  // namespace whid::lsq

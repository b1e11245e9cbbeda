#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "whid/amplifier.hpp"

using namespace whid;

namespace {

const RappAmplifier kRapp{1.0, 10.0, 3.0};

Signal rapp_on(const Signal& u) { return rapp(kRapp, u); }

}  // namespace

TEST(Rapp, ZeroKneeAndSmallSignal) {
  EXPECT_EQ(kRapp(0.0), 0.0);
  EXPECT_NEAR(kRapp(10.0), 10.0 / std::pow(2.0, 1.0 / 6.0), 1e-12);
  EXPECT_NEAR(kRapp(10.0), 8.909, 1e-3);
  EXPECT_NEAR(kRapp(0.1), 0.1, 1e-6 * 0.1);
}

TEST(Rapp, OddBoundedAndIncreasing) {
  double prev = 0.0;
  for (double u = 0.01; u < 1e6; u *= 1.3) {
    const double y = kRapp(u);
    ASSERT_LE(y, 10.0);
    if (u < 1e3) {
      ASSERT_GT(y, prev);
    }
    ASSERT_GE(y, prev);
    ASSERT_EQ(kRapp(-u), -y);
    prev = y;
  }
  EXPECT_LE(kRapp(1e300), 10.0);
  EXPECT_TRUE(std::isfinite(kRapp(1e300)));
}

TEST(Rapp, SlopeAtOriginIsGain) {
  for (double gain : {0.5, 1.0, 3.0}) {
    const RappAmplifier a{gain, 10.0, 3.0};
    const double d = (a(1e-6) - a(-1e-6)) / 2e-6;
    EXPECT_NEAR(d, gain, 1e-4 * gain);
  }
}

TEST(Rapp, RejectsNonPositiveParameters) {
  EXPECT_THROW(rapp(RappAmplifier{0.0, 10.0, 3.0}, Signal({1.0})), ParameterError);
  EXPECT_THROW(rapp(RappAmplifier{1.0, -1.0, 3.0}, Signal({1.0})), ParameterError);
  EXPECT_THROW(rapp(RappAmplifier{1.0, 10.0, 0.0}, Signal({1.0})), ParameterError);
}

TEST(Polynomial, Evaluation) {
  EXPECT_EQ(poly_amp(PolynomialAmplifier({{1, 2.0}}), Signal({3.0})), Signal({6.0}));
  EXPECT_NEAR(poly_amp(PolynomialAmplifier({{1, 1.0}, {3, -0.01}}), Signal({2.0}))[0], 1.92, 1e-15);
  const PolynomialAmplifier p({{1, 0.7}, {5, 0.02}});
  EXPECT_NEAR(p(1.5), 0.7 * 1.5 + 0.02 * std::pow(1.5, 5), 1e-12);
}

TEST(Polynomial, ExactlyOdd) {
  const PolynomialAmplifier p({{1, 1.1}, {3, -0.3}, {5, 0.01}});
  for (double u : oracle::random_vector(200, 1, 3.0)) ASSERT_EQ(p(-u), -p(u));
}

TEST(Polynomial, Invariants) {
  EXPECT_THROW(PolynomialAmplifier({{2, 1.0}}), ParameterError);
  EXPECT_THROW(PolynomialAmplifier({{1, 1.0}, {4, 1.0}}), ParameterError);
  EXPECT_THROW(PolynomialAmplifier({{3, 1.0}}), ParameterError);
  EXPECT_THROW(PolynomialAmplifier({{1, 0.0}, {3, 1.0}}), ParameterError);
  EXPECT_EQ(PolynomialAmplifier({{1, 1.0}, {5, 2.0}}).order(), 5);
}

TEST(FitPolynomial, RecoversExactOddPolynomial) {
  const PolynomialAmplifier truth({{1, 1.2}, {3, -0.04}, {5, 3e-4}});
  const Signal u = amplitude_grid(5.0, 501);
  const auto fit = fit_polynomial(u, poly_amp(truth, u), 5);
  for (int k : {1, 3, 5})
    EXPECT_NEAR(fit.amplifier.coefficient(k), truth.coefficient(k), 1e-8 * std::abs(truth.coefficient(k)));
  EXPECT_LE(fit.nmse_db, -150.0);
}

TEST(FitPolynomial, RappFitQuality) {
  const Signal u3 = amplitude_grid(20.0, 4001);
  EXPECT_NEAR(fit_polynomial(u3, rapp_on(u3), 3).nmse_db, -27.0, 3.0);
  const Signal u5 = amplitude_grid(22.0, 4001);
  EXPECT_NEAR(fit_polynomial(u5, rapp_on(u5), 5).nmse_db, -36.0, 3.0);
}

TEST(FitPolynomial, ResidualOrthogonalToRegressors) {
  const Signal u = amplitude_grid(16.0, 1001);
  const Signal y = rapp_on(u);
  const auto fit = fit_polynomial(u, y, 5);
  const auto r = (y - poly_amp(fit.amplifier, u)).vector();
  for (int k : {1, 3, 5}) {
    double dot = 0.0, norm_col = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) {
      const double c = std::pow(u[n], k);
      dot += c * r[n];
      norm_col += c * c;
    }
    EXPECT_LE(std::abs(dot), 1e-8 * std::sqrt(norm_col) * std::sqrt(y.energy()));
  }
}

TEST(FitPolynomial, ConstantInputIsRankDeficient) {
  const Signal u({2.0, 2.0, 2.0, 2.0});
  EXPECT_THROW(fit_polynomial(u, rapp_on(u), 3), ConditioningError);
  EXPECT_THROW(fit_polynomial(u, rapp_on(u), 4), ParameterError);
}

TEST(AmplitudeGrid, EvenlySpaced) {
  const auto g = amplitude_grid(2.0, 5);
  EXPECT_EQ(g, Signal({-2.0, -1.0, 0.0, 1.0, 2.0}));
}

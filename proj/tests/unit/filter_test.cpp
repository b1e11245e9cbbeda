#include <gtest/gtest.h>

#include "oracles.hpp"
#include "whid/channel.hpp"
#include "whid/filter.hpp"
#include "whid/signals.hpp"

using namespace whid;

TEST(Convolve, IdentityAndUnitDelay) {
  const Signal x({1.0, 2.0, 3.0});
  EXPECT_EQ(convolve(FirFilter{1.0}, x), x);
  EXPECT_EQ(convolve(FirFilter{0.0, 1.0}, x), Signal({0.0, 1.0, 2.0}));
}

TEST(Convolve, MatchesDirectSum) {
  const auto f = oracle::random_vector(13, 1);
  const auto x = oracle::random_vector(200, 2);
  EXPECT_LT(oracle::max_abs_diff(convolve(FirFilter(f), Signal(x)).vector(), oracle::convolve(f, x)), 1e-12);
}

TEST(Convolve, Associative) {
  const FirFilter h(oracle::random_vector(7, 3));
  const FirFilter g(oracle::random_vector(9, 4));
  const Signal x(oracle::random_vector(300, 5));
  const auto a = convolve(h, convolve(g, x));
  const auto b = convolve(cascade(h, g), x);
  EXPECT_LT(oracle::relative_error(a.vector(), b.vector()), 1e-10);
  EXPECT_EQ(cascade(h, g).vector().size(), 15u);
  EXPECT_LT(oracle::max_abs_diff(cascade(h, g).vector(), oracle::full_convolve(h.vector(), g.vector())), 1e-14);
}

TEST(Convolve, Linear) {
  const FirFilter f(oracle::random_vector(11, 6));
  const Signal x(oracle::random_vector(150, 7));
  const Signal z(oracle::random_vector(150, 8));
  const double a = 1.7, b = -0.3;
  const auto lhs = convolve(f, x.scaled(a) + z.scaled(b));
  const auto rhs = convolve(f, x).scaled(a) + convolve(f, z).scaled(b);
  EXPECT_LT(oracle::max_abs_diff(lhs.vector(), rhs.vector()), 1e-10);
}

TEST(GroupDelay, PureDelayAndSymmetricFilters) {
  EXPECT_DOUBLE_EQ(group_delay(FirFilter{0.0, 0.0, 1.0}), 2.0);
  std::vector<double> sym(20);
  for (std::size_t i = 0; i < 10; ++i) sym[i] = sym[19 - i] = static_cast<double>(i + 1);
  EXPECT_DOUBLE_EQ(group_delay(FirFilter(sym)), 9.5);
  EXPECT_DOUBLE_EQ(group_delay(reference_h()), 9.5);
  EXPECT_DOUBLE_EQ(group_delay(FirFilter{1.0, 0.0, -1.0}), 1.0);
}

TEST(GroupDelay, EnergyCentroidOtherwise) {
  EXPECT_DOUBLE_EQ(group_delay(FirFilter{1.0, 2.0}), (0.0 * 1.0 + 1.0 * 4.0) / 5.0);
  EXPECT_THROW(group_delay(FirFilter{0.0, 0.0}), DegenerateError);
}

TEST(FractionalDelay, ZeroIsIdentity) {
  const Signal x(oracle::random_vector(64, 9));
  EXPECT_LT(oracle::max_abs_diff(fractional_delay(x, 0.0).vector(), x.vector()), 1e-12);
}

TEST(FractionalDelay, IntegerDelayIsCircularShift) {
  const auto x = multisine(schroeder_multisine(20, 1.0 / 64.0, 64));
  const auto y = fractional_delay(x, 1.0);
  for (std::size_t n = 0; n < 64; ++n) ASSERT_NEAR(y[n], x[(n + 63) % 64], 1e-9);
  const auto z = fractional_delay(Signal(oracle::random_vector(65, 10)), 3.0);
  const auto x2 = Signal(oracle::random_vector(65, 10));
  for (std::size_t n = 0; n < 65; ++n) ASSERT_NEAR(z[n], x2[(n + 62) % 65], 1e-9);
}

TEST(FractionalDelay, HalfSamplesCompose) {
  const auto x = multisine(schroeder_multisine(20, 1.0 / 64.0, 64));
  const auto twice = fractional_delay(fractional_delay(x, 0.5), 0.5);
  EXPECT_LT(oracle::max_abs_diff(twice.vector(), fractional_delay(x, 1.0).vector()), 1e-9);
}

TEST(Passband, FindsRegionAroundPeak) {
  const auto band = passband(reference_g());
  EXPECT_GT(band.low, 0.03);
  EXPECT_LT(band.high, 0.45);
  EXPECT_TRUE(band.contains(0.2));
  EXPECT_NEAR(passband(FirFilter{1.0}).width(), 0.5, 1e-12);
  EXPECT_THROW(passband(FirFilter{0.0}), DegenerateError);
}

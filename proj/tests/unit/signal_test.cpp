#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "whid/signal.hpp"

using whid::Signal;

TEST(Signal, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Signal(std::vector<double>{}), whid::ParameterError);
  EXPECT_THROW(Signal({1.0, std::nan("")}), whid::ParameterError);
  EXPECT_THROW(Signal({1.0, std::numeric_limits<double>::infinity()}), whid::ParameterError);
  EXPECT_THROW(Signal({1.0}, 0.0), whid::ParameterError);
  EXPECT_THROW(Signal({1.0}, -2.0), whid::ParameterError);
}

TEST(Signal, PowerAndPeak) {
  const Signal x({3.0, -4.0});
  EXPECT_DOUBLE_EQ(x.energy(), 25.0);
  EXPECT_DOUBLE_EQ(x.mean_power(), 12.5);
  EXPECT_DOUBLE_EQ(x.peak(), 4.0);
  EXPECT_EQ(x.sample_rate(), 1.0);
}

TEST(Signal, SliceAndPadding) {
  const Signal x({1.0, 2.0, 3.0});
  EXPECT_EQ(x.slice(1, 2), Signal({2.0, 3.0}));
  EXPECT_EQ(x.zero_padded(2, 1), Signal({0.0, 0.0, 1.0, 2.0, 3.0, 0.0}));
  EXPECT_THROW(x.slice(2, 5), whid::ParameterError);
}

TEST(Signal, ArithmeticRequiresMatchingLengths) {
  const Signal a({1.0, 2.0});
  const Signal b({0.5, 0.5});
  EXPECT_EQ(a + b, Signal({1.5, 2.5}));
  EXPECT_EQ(a - b, Signal({0.5, 1.5}));
  EXPECT_THROW(a + Signal({1.0}), whid::ParameterError);
}

TEST(Signal, DecibelHelpersRoundTrip) {
  EXPECT_DOUBLE_EQ(whid::to_db(100.0), 20.0);
  EXPECT_NEAR(whid::from_db(whid::to_db(3.7)), 3.7, 1e-12);
}

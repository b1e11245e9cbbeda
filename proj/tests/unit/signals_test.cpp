#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "whid/signals.hpp"

using namespace whid;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST(Multisine, QuarterRateCosine) {
  const auto x = multisine({1, 0.25, {0.0}, 4});
  const std::vector<double> expected{1.0, 0.0, -1.0, 0.0};
  EXPECT_LT(oracle::max_abs_diff(x.vector(), expected), 1e-12);
}

TEST(Multisine, AllInPhaseAtOrigin) {
  const auto x = multisine({2, 0.1, {0.0, 0.0}, 1});
  EXPECT_DOUBLE_EQ(x[0], 2.0);
}

TEST(Multisine, MatchesDirectSum) {
  const MultisineSpec spec{5, 1.0 / 64.0, {0.1, 2.0, -1.0, 3.0, 0.5}, 300, 3};
  const auto x = multisine(spec);
  for (std::size_t n = 0; n < spec.length; ++n) {
    double ref = 0.0;
    for (int k = 0; k < 5; ++k)
      ref += std::cos(2.0 * kPi * spec.fundamental * (k + 3) * static_cast<double>(n) + spec.phases[k]);
    ASSERT_NEAR(x[n], ref, 1e-9) << n;
  }
}

TEST(Multisine, PeriodicOverFundamentalPeriod) {
  const auto x = multisine(schroeder_multisine(40, 1.0 / 128.0, 256));
  for (std::size_t n = 0; n < 128; ++n) ASSERT_NEAR(x[n], x[n + 128], 1e-9);
}

TEST(Multisine, RejectsInvalidSpecs) {
  EXPECT_THROW(multisine({0, 0.1, {}, 10}), ParameterError);
  EXPECT_THROW(multisine({2, 0.3, {0.0, 0.0}, 10}), ParameterError);  // 0.6 above Nyquist
  EXPECT_THROW(multisine({2, 0.1, {0.0}, 10}), ParameterError);
  EXPECT_THROW(multisine({1, 0.6, {0.0}, 10}), ParameterError);
  EXPECT_THROW(multisine({1, 0.1, {0.0}, 0}), ParameterError);
}

TEST(SchroederPhases, ValuesFromTheFloorRule) {
  const auto th = schroeder_phases(100);
  ASSERT_EQ(th.size(), 100u);
  for (int k = 1; k <= 100; ++k) {
    const double expected = static_cast<long>(std::floor(double(k) * k / 200.0)) % 2 == 0 ? 0.0 : kPi;
    ASSERT_NEAR(th[k - 1], expected, 1e-12) << k;
  }
  EXPECT_EQ(th[0], 0.0);
  EXPECT_EQ(th[19], 0.0);
  EXPECT_EQ(th[20], 0.0);
  EXPECT_DOUBLE_EQ(schroeder_phases(2)[1], kPi);
}

TEST(SchroederPhases, OnlyZeroOrPi) {
  for (int m : {1, 7, 64, 100, 333})
    for (double t : schroeder_phases(m)) ASSERT_TRUE(t == 0.0 || t == kPi);
}

TEST(Par, ConstantAndCosine) {
  EXPECT_NEAR(par(Signal({2.0, 2.0, 2.0})).linear, 1.0, 1e-15);
  EXPECT_NEAR(par(multisine({1, 0.125, {0.0}, 64})).linear, 2.0, 1e-12);
  EXPECT_NEAR(par(multisine({1, 0.125, {0.0}, 64})).db, 3.0103, 1e-4);
}

TEST(Par, SchroederMultisineNearSixDb) {
  const auto p = par(multisine(schroeder_multisine(100, 1.0 / 200.0, 200)));
  EXPECT_NEAR(p.db, 6.0, 1.0);
}

TEST(Par, ScaleInvariant) {
  const Signal x(oracle::random_vector(500, 3));
  const double base = par(x).linear;
  for (double c : {-3.0, 0.001, 17.0}) EXPECT_NEAR(par(x.scaled(c)).linear, base, 1e-12 * base);
}

TEST(Par, ZeroSignalIsDegenerate) { EXPECT_THROW(par(Signal::zeros(8)), DegenerateError); }

TEST(PhaseSearch, ZeroBudgetReturnsSeed) {
  PhaseSearchOptions opt;
  opt.budget = 0;
  const auto r = minmax_phase_search(40, 20, 1.0 / 128.0, 128, opt);
  EXPECT_EQ(r.phases, schroeder_phases(40));
  EXPECT_EQ(r.objective, r.seed_objective);
}

TEST(PhaseSearch, SingleSignalCaseNeverWorseThanSchroeder) {
  PhaseSearchOptions opt;
  opt.budget = 2000;
  const auto r = minmax_phase_search(30, 30, 1.0 / 64.0, 64, opt);
  const double schroeder = par(multisine(schroeder_multisine(30, 1.0 / 64.0, 64))).linear;
  EXPECT_LE(r.objective, schroeder + 1e-12);
  EXPECT_NEAR(r.objective, par(multisine({30, 1.0 / 64.0, r.phases, 64})).linear, 1e-9);
}

TEST(PhaseSearch, ImprovesOnSeedInMostRuns) {
  int improved = 0;
  constexpr int runs = 50;
  for (int s = 0; s < runs; ++s) {
    PhaseSearchOptions opt;
    opt.budget = 10000;
    opt.seed = static_cast<std::uint64_t>(s);
    const auto r = minmax_phase_search(40, 20, 1.0 / 128.0, 128, opt);
    ASSERT_LE(r.objective, r.seed_objective);
    for (std::size_t i = 1; i < r.trace.size(); ++i) ASSERT_LE(r.trace[i], r.trace[i - 1] + 1e-12);
    if (r.objective < r.seed_objective) ++improved;
  }
  EXPECT_GE(improved, 45);
}

TEST(PhaseSearch, DeterministicForSeed) {
  PhaseSearchOptions opt;
  opt.budget = 1500;
  opt.seed = 9;
  EXPECT_EQ(minmax_phase_search(20, 10, 1.0 / 64.0, 64, opt).phases,
            minmax_phase_search(20, 10, 1.0 / 64.0, 64, opt).phases);
}

TEST(MatchedNoise, PowerMatchesReference) {
  const Signal ref({1.0, -1.0, 1.0, -1.0});
  const auto x = matched_white_noise(ref, 100000, 5);
  EXPECT_GE(x.mean_power(), 0.99);
  EXPECT_LE(x.mean_power(), 1.01);
}

TEST(MatchedNoise, ReproducibleAndZeroForZeroReference) {
  const Signal ref({0.5, 2.0});
  EXPECT_EQ(matched_white_noise(ref, 64, 11), matched_white_noise(ref, 64, 11));
  EXPECT_NE(matched_white_noise(ref, 64, 11), matched_white_noise(ref, 64, 12));
  const auto z = matched_white_noise(Signal::zeros(3), 16, 1);
  for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(OccupiedBandwidth, PureCosineIsOneBin) {
  const std::size_t n = 256;
  const auto x = multisine({1, 32.0 / n, {0.0}, n});
  EXPECT_NEAR(occupied_bandwidth(x), 1.0 / n, 1e-12);
}

TEST(OccupiedBandwidth, MultisineSpansItsHarmonics) {
  const std::size_t n = 1024;
  const double f1 = 1.0 / 1024.0;
  const auto x = multisine(schroeder_multisine(50, f1, n, 100));
  EXPECT_NEAR(occupied_bandwidth(x), 49 * f1 + 1.0 / n, 1e-12);
}

TEST(OccupiedBandwidth, WhiteNoiseFillsTheBand) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto x = matched_white_noise(Signal({1.0}), 1u << 16, s);
    EXPECT_GE(occupied_bandwidth(x, -20.0) / 0.5, 0.95);
  }
}

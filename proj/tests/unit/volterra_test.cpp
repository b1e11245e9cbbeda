#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "whid/channel.hpp"
#include "whid/metrics.hpp"
#include "whid/volterra.hpp"

using namespace whid;

namespace {

std::vector<std::size_t> key_of(const ReducedKernelIndex& idx) {
  return {idx.lag_set().begin(), idx.lag_set().end()};
}

}  // namespace

TEST(ReducedIndices, TwentyTapCounts) {
  const auto idx = enumerate_reduced_indices(20, 20, 3);
  EXPECT_EQ(idx.size(), 5569u);
  const auto linear = std::count_if(idx.begin(), idx.end(), [](const auto& i) { return i.order == 1; });
  EXPECT_EQ(linear, 39);
  EXPECT_EQ(idx.size() - static_cast<std::size_t>(linear), 5530u);
  EXPECT_EQ(distinct_lag_multisets(20, 3).size(), 1540u);
}

TEST(ReducedIndices, SingleLagCase) {
  const auto idx = enumerate_reduced_indices(1, 1, 3);
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx[0].order, 1);
  EXPECT_EQ(key_of(idx[0]), std::vector<std::size_t>{0});
  EXPECT_EQ(idx[1].order, 3);
  EXPECT_EQ(key_of(idx[1]), (std::vector<std::size_t>{0, 0, 0}));
}

TEST(ReducedIndices, MatchesBruteForceAndIsCanonical) {
  for (std::size_t l1 = 1; l1 <= 8; ++l1)
    for (std::size_t l2 = 1; l2 <= 8; ++l2) {
      const auto idx = enumerate_reduced_indices(l1, l2, 3);
      std::vector<std::vector<std::size_t>> cubic;
      for (const auto& i : idx)
        if (i.order == 3) cubic.push_back(key_of(i));
      ASSERT_EQ(cubic, oracle::brute_force_cubic_multisets(l1, l2)) << l1 << "," << l2;
      ASSERT_EQ(idx.size() - cubic.size(), l1 + l2 - 1);
      ASSERT_TRUE(std::is_sorted(idx.begin(), idx.end()));
      ASSERT_TRUE(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
      ASSERT_EQ(idx, enumerate_reduced_indices(l1, l2, 3));
    }
}

TEST(ReducedIndices, OnlyCubicSupported) {
  EXPECT_THROW(enumerate_reduced_indices(3, 3, 5), ParameterError);
  EXPECT_THROW(enumerate_reduced_indices(0, 3, 3), ParameterError);
}

TEST(DistinctMultisets, BinomialCounts) {
  EXPECT_EQ(distinct_lag_multisets(4, 1).size(), 4u);
  EXPECT_EQ(distinct_lag_multisets(4, 2).size(), 10u);
  EXPECT_EQ(distinct_lag_multisets(5, 3).size(), 35u);
}

TEST(VolterraDesign, Columns) {
  const std::vector<ReducedKernelIndex> lin{{1, {0, 0, 0}}};
  const auto d = volterra_design(Signal({2.0, 3.0}), lin);
  EXPECT_EQ(d(0, 0), 2.0);
  EXPECT_EQ(d(1, 0), 3.0);
  const std::vector<ReducedKernelIndex> cube{{3, {0, 0, 0}}};
  EXPECT_EQ(volterra_design(Signal({2.0}), cube)(0, 0), 8.0);
  const std::vector<ReducedKernelIndex> mixed{{3, {0, 1, 1}}};
  const auto m = volterra_design(Signal({2.0, 3.0, 5.0}), mixed);
  EXPECT_EQ(m(0, 0), 0.0);
  EXPECT_EQ(m(1, 0), 3.0 * 2.0 * 2.0);
  EXPECT_EQ(m(2, 0), 5.0 * 3.0 * 3.0);
}

TEST(WhToKernels, Examples) {
  const auto a = wh_to_kernels(FirFilter{1.0}, PolynomialAmplifier({{1, 0.7}, {3, -0.2}}), FirFilter{1.0});
  EXPECT_EQ(a.kernels(), (std::vector<double>{0.7, -0.2}));

  const auto b = wh_to_kernels(FirFilter{1.0, 1.0}, PolynomialAmplifier({{1, 1e-300}, {3, 1.0}}), FirFilter{1.0});
  bool found = false;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b.indices()[j] == ReducedKernelIndex{3, {0, 0, 1}}) {
      EXPECT_DOUBLE_EQ(b.kernels()[j], 3.0);
      found = true;
    }
  }
  EXPECT_TRUE(found);

  EXPECT_THROW(wh_to_kernels(FirFilter{1.0}, PolynomialAmplifier({{1, 1.0}, {5, 1.0}}), FirFilter{1.0}),
               ParameterError);
}

TEST(WhToKernels, MatchesBruteForceSums) {
  const auto h = oracle::random_vector(4, 1);
  const auto g = oracle::random_vector(5, 2);
  const auto model = wh_to_kernels(FirFilter(h), PolynomialAmplifier({{1, 1.3}, {3, -0.4}}), FirFilter(g));
  const auto oracle_k = oracle::brute_force_kernels(h, 1.3, -0.4, g);
  ASSERT_EQ(model.size(), oracle_k.size());
  for (std::size_t j = 0; j < model.size(); ++j) {
    const auto it = oracle_k.find(key_of(model.indices()[j]));
    ASSERT_NE(it, oracle_k.end());
    EXPECT_NEAR(model.kernels()[j], it->second, 1e-12 * (1.0 + std::abs(it->second)));
  }
}

TEST(WhToKernels, LosslessForRandomModels) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t l1 = 1 + rng() % 8, l2 = 1 + rng() % 8;
    const FirFilter h(oracle::random_vector(l1, 100 + trial));
    const FirFilter g(oracle::random_vector(l2, 200 + trial));
    const PolynomialAmplifier gamma({{1, 1.0 + 0.1 * trial}, {3, -0.05 + 0.01 * trial}});
    const Signal x(oracle::random_vector(400, 300 + trial));
    const WhModel m{h, gamma, g, 0.0};
    const auto direct = wh_forward(m, x, 0).w;
    const auto kernels = wh_to_kernels(h, gamma, g);
    EXPECT_LE(oracle::relative_error(direct.vector(), kernels.predict(x).vector()), 1e-8);
    const lsq::Vector via_design = volterra_design(x, kernels.indices()) * lsq::to_vector(kernels.kernels());
    EXPECT_LE(oracle::relative_error(direct.vector(), lsq::to_std(via_design)), 1e-8);
  }
}

TEST(EstimateVolterra, NoiselessRecovery) {
  const FirFilter h(oracle::random_vector(3, 5));
  const FirFilter g(oracle::random_vector(3, 6));
  const PolynomialAmplifier gamma({{1, 1.0}, {3, -0.1}});
  const Signal x(oracle::random_vector(2000, 7));
  const WhModel m{h, gamma, g, 0.0};
  const auto fit = estimate_volterra(x, wh_forward(m, x, 0).w, 3, 3);
  const Signal xv(oracle::random_vector(1000, 8));
  EXPECT_LE(nmse(wh_forward(m, xv, 0).w, fit.predict(xv)), -100.0);
  const auto truth = wh_to_kernels(h, gamma, g);
  EXPECT_LT(oracle::relative_error(truth.kernels(), fit.kernels()), 1e-8);
}

TEST(EstimateVolterra, DeskScaleNmseTracksPredictedQ) {
  const std::size_t l = 6;
  const auto count = enumerate_reduced_indices(l, l).size();
  const std::size_t n = 50 * count;
  std::vector<double> gaps;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const WhModel clean{FirFilter(oracle::random_vector(l, 10)), PolynomialAmplifier({{1, 1.0}, {3, -0.05}}),
                        FirFilter(oracle::random_vector(l, 11)), 0.0};
    const Signal x(oracle::random_vector(n, 20 + s));
    const Signal w0 = wh_forward(clean, x, 0).w;
    WhModel noisy = clean;
    noisy.noise_variance = noise_variance_for_snr(w0, 20.0);
    const auto fit = estimate_volterra(x, wh_forward(noisy, x, 30 + s).w, l, l);
    const Signal xv(oracle::random_vector(n, 40 + s));
    gaps.push_back(nmse(wh_forward(clean, xv, 0).w, fit.predict(xv)) +
                   predicted_q(static_cast<double>(n), static_cast<double>(count), 20.0));
  }
  EXPECT_NEAR(oracle::mean(gaps), 0.0, 3.0);
}

TEST(EstimateVolterra, UnderdeterminedRaises) {
  const Signal x(oracle::random_vector(100, 1));
  EXPECT_THROW(estimate_volterra(x, x, 6, 6), ConditioningError);
  lsq::SolveOptions opt;
  opt.ridge = 1e-2;
  EXPECT_EQ(estimate_volterra(x, x, 6, 6, opt).size(), enumerate_reduced_indices(6, 6).size());
}

TEST(PilotLengthRatio, Examples) {
  EXPECT_NEAR(pilot_length_ratio(5569, 39, std::pow(10.0, 0.5)), 45.16, 0.05);
  EXPECT_DOUBLE_EQ(pilot_length_ratio(7, 7, 1), 1.0);
  EXPECT_NEAR(pilot_length_ratio(100 * 39, 39, 3), 33.3, 0.1);
  EXPECT_THROW(pilot_length_ratio(0, 1, 1), ParameterError);
}

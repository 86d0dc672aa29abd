// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "crowdledger/dynamics.hpp"
#include "crowdledger/error.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::dynamics {
namespace {

using linalg::Matrix;

// Direct evaluation of the series estimator, written out independently.
double series_oracle(const std::vector<int>& votes) {
  std::vector<double> mean;
  double sum = 0.0;
  for (std::size_t t = 0; t < votes.size(); ++t) {
    sum += votes[t];
    mean.push_back(sum / static_cast<double>(t + 1));
  }
  std::vector<double> delta;
  for (std::size_t t = 0; t + 1 < mean.size(); ++t) {
    const double d = std::abs(mean[t + 1] - mean[t]);
    delta.push_back(d == 0.0 ? 1e-12 : d);
  }
  double acc = 0.0;
  for (std::size_t t = 0; t + 1 < delta.size(); ++t) acc += std::log(delta[t + 1] / delta[t]);
  return acc / static_cast<double>(delta.size() - 1);
}

DynamicalSystem diagonal_linear(std::vector<double> rates) {
  DynamicalSystem sys;
  sys.state_dim = rates.size();
  sys.step = [rates](std::span<const double> x, double) {
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= rates[i];
    return y;
  };
  sys.jacobian = [rates](std::span<const double>, double) {
    Matrix j(rates.size(), rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) j(i, i) = rates[i];
    return j;
  };
  return sys;
}

TEST(Entropy, Examples) {
  const std::vector<std::uint64_t> one{4, 0}, uniform{5, 5}, skewed{8, 2};
  EXPECT_EQ(shannon_entropy(one), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy(uniform), 1.0);
  const double oracle = -0.8 * std::log2(0.8) - 0.2 * std::log2(0.2);
  EXPECT_NEAR(shannon_entropy(skewed), oracle, 1e-12);
  EXPECT_NEAR(shannon_entropy(skewed), 0.721928, 1e-6);

  const std::vector<std::uint64_t> empty{0, 0};
  EXPECT_THROW(shannon_entropy(empty), Error);
}

TEST(Entropy, BoundsAndPermutationInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 2 + rng.index(6);
    std::vector<std::uint64_t> counts(k);
    for (auto& c : counts) c = rng.index(4) == 0 ? 0 : rng.index(50);
    if (std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 0) counts[0] = 1;

    const double h = shannon_entropy(counts);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(k)) + 1e-12);
    const auto nonzero = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; });
    if (nonzero == 1) {
      EXPECT_EQ(h, 0.0);
    }

    auto shuffled = counts;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
    EXPECT_NEAR(shannon_entropy(shuffled), h, 1e-12);
  }
  const std::vector<std::uint64_t> uniform(5, 7);
  EXPECT_NEAR(shannon_entropy(uniform), std::log2(5.0), 1e-12);
}

TEST(Entropy, VoteSeries) {
  VoteSeries series({1, 1, 1, 1, 1, 1, 1, 1, -1, -1});
  EXPECT_EQ(series.ups(), 8u);
  EXPECT_EQ(series.downs(), 2u);
  EXPECT_NEAR(vote_entropy(series), 0.721928, 1e-6);
  for (double s : series.running_mean()) EXPECT_LE(std::abs(s), 1.0);
}

TEST(Lyapunov, LinearMap) {
  const auto est = lyapunov_from_jacobians(diagonal_linear({0.5}), {1.0}, 0.0, 200.0);
  ASSERT_EQ(est.exponents.size(), 1u);
  EXPECT_NEAR(est.exponents[0], std::log(0.5), 1e-6);
  EXPECT_EQ(est.method, LyapunovMethod::JacobianProduct);
}

TEST(Lyapunov, IdentityIsExactlyZero) {
  const auto est = lyapunov_from_jacobians(diagonal_linear({1.0, 1.0}), {0.3, 0.7}, 0.0, 100.0);
  ASSERT_EQ(est.exponents.size(), 2u);
  EXPECT_EQ(est.exponents[0], 0.0);
  EXPECT_EQ(est.exponents[1], 0.0);
}

TEST(Lyapunov, DiagonalSpectrum) {
  const std::vector<double> rates{2.0, 0.9, 0.5, 0.25};
  const auto est = lyapunov_from_jacobians(diagonal_linear(rates), {1, 1, 1, 1}, 0.0, 60.0);
  ASSERT_EQ(est.exponents.size(), rates.size());
  auto got = est.exponents;
  std::sort(got.rbegin(), got.rend());
  for (std::size_t i = 0; i < rates.size(); ++i) EXPECT_NEAR(got[i], std::log(rates[i]), 1e-6);
}

TEST(Lyapunov, LogisticMap) {
  DynamicalSystem sys;
  sys.step = [](std::span<const double> x, double) {
    return std::vector<double>{4.0 * x[0] * (1.0 - x[0])};
  };
  sys.jacobian = [](std::span<const double> x, double) {
    Matrix j(1, 1);
    j(0, 0) = 4.0 - 8.0 * x[0];
    return j;
  };
  double x = 0.1234;
  for (int i = 0; i < 1000; ++i) x = 4.0 * x * (1.0 - x);

  // Oracle: orbit average of ln|f'(x)|.
  double acc = 0.0, y = x;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    acc += std::log(std::abs(4.0 - 8.0 * y));
    y = 4.0 * y * (1.0 - y);
  }
  const double oracle = acc / steps;

  const auto est = lyapunov_from_jacobians(sys, {x}, 0.0, steps);
  EXPECT_NEAR(est.exponents[0], oracle, 1e-6);
  EXPECT_NEAR(est.exponents[0], std::log(2.0), 0.01);
}

TEST(Lyapunov, Errors) {
  EXPECT_THROW(lyapunov_from_jacobians(diagonal_linear({0.5}), {1.0}, 1.0, 1.0), Error);
  try {
    lyapunov_from_jacobians(diagonal_linear({1e200}), {1e200}, 0.0, 50.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NumericalOverflow);
  }
}

TEST(SeriesEstimator, Examples) {
  const std::vector<int> ups(30, 1);
  EXPECT_NEAR(lyapunov_from_series(VoteSeries(ups)).exponents[0], 0.0, 1e-9);

  std::vector<int> alternating;
  for (int i = 0; i < 40; ++i) alternating.push_back(i % 2 ? -1 : 1);
  const double alt = lyapunov_from_series(VoteSeries(alternating)).exponents[0];
  EXPECT_NEAR(alt, series_oracle(alternating), 1e-12);
  EXPECT_LT(alt, 0.0);

  std::vector<int> reversal(50, 1);
  reversal.insert(reversal.end(), 50, -1);
  const auto est = lyapunov_from_series(VoteSeries(reversal));
  EXPECT_EQ(est.method, LyapunovMethod::SeriesDivergence);
  EXPECT_NEAR(est.exponents[0], series_oracle(reversal), 1e-12);
  EXPECT_GE(est.exponents[0], 0.0);

  try {
    lyapunov_from_series(VoteSeries({1, -1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooShort);
  }
}

TEST(SeriesEstimator, ScaleInvariance) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> deltas(20), scaled(20);
    const double c = rng.uniform(0.01, 100.0);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      deltas[i] = rng.uniform(0.01, 1.0) * rng.sign();
      scaled[i] = c * deltas[i];
    }
    EXPECT_NEAR(mean_log_ratio(scaled), mean_log_ratio(deltas), 1e-12);
  }
}

TEST(Equilibrium, Examples) {
  const EquilibriumParams params{0.9, 10};
  EXPECT_TRUE(equilibrium({{-0.1}}, 0.3, params, 50));
  EXPECT_FALSE(equilibrium({{0.2, -0.5}}, 0.0, params, 1000));
  EXPECT_FALSE(equilibrium({{-1.0}}, 0.0, params, 5));
}

TEST(Equilibrium, BoundaryTruthTable) {
  const EquilibriumParams params{0.9, 10};
  for (int mask = 0; mask < 8; ++mask) {
    const bool lambda_ok = mask & 1, entropy_ok = mask & 2, count_ok = mask & 4;
    const LyapunovEstimate est{{lambda_ok ? -1e-12 : 0.0}};
    const double h = entropy_ok ? std::nextafter(0.9, 0.0) : 0.9;
    const std::uint64_t c = count_ok ? 10 : 9;
    EXPECT_EQ(equilibrium(est, h, params, c), lambda_ok && entropy_ok && count_ok) << mask;
  }
}

TEST(Equilibrium, Monotone) {
  Rng rng(17);
  const EquilibriumParams params{0.9, 10};
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const LyapunovEstimate est{{rng.uniform(-1, 0.2), rng.uniform(-1, 0.2)}};
    const double h = rng.uniform(0, 1);
    const std::uint64_t c = rng.index(20);
    if (!equilibrium(est, h, params, c)) continue;
    ++checked;
    const LyapunovEstimate lower{{est.exponents[0] - rng.uniform(0, 1),
                                  est.exponents[1] - rng.uniform(0, 1)}};
    EXPECT_TRUE(equilibrium(lower, h * rng.uniform(), params, c + rng.index(5)));
  }
  EXPECT_GT(checked, 50);
}

TEST(Assess, ShortSeriesNeverStable) {
  const EquilibriumParams params{0.9, 1};
  EXPECT_FALSE(assess(VoteSeries({1, 1, 1}), params).stable);
  const auto report = assess(VoteSeries({1, -1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}), params);
  EXPECT_EQ(report.count, 12u);
  EXPECT_NEAR(report.entropy, shannon_entropy(std::vector<std::uint64_t>{11, 1}), 1e-12);
}

}  // namespace
}  // namespace crowdledger::dynamics

// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "crowdledger/error.hpp"
#include "crowdledger/metrics.hpp"
#include "crowdledger/rng.hpp"

namespace crowdledger::metrics {
namespace {

using linalg::Matrix;
using BT = population::BehaviorType;

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::ParseError;
}

TEST(Classification, Examples) {
  const auto m = classification_metrics({8, 2, 8, 2});
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_DOUBLE_EQ(m.recall, 0.8);
  EXPECT_DOUBLE_EQ(m.f1, 0.8);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);

  const auto perfect = classification_metrics({5, 0, 7, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);

  const auto none = classification_metrics({0, 0, 6, 4});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_TRUE(none.precision_degenerate);
  EXPECT_FALSE(none.recall_degenerate);

  EXPECT_EQ(error_code([] { classification_metrics({}); }), Errc::EmptyCounts);
}

TEST(Classification, F1IsHarmonicMean) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const ConfusionCounts c{1 + rng.index(50), 1 + rng.index(50), rng.index(50), 1 + rng.index(50)};
    const auto m = classification_metrics(c);
    EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
  }
}

TEST(Classification, Confusion) {
  const std::vector<int> predicted{1, 1, -1, -1, 1}, actual{1, -1, -1, 1, 1};
  const auto c = confusion(predicted, actual);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(c.fn, 1u);
}

TEST(Roc, Examples) {
  const std::vector<double> scores{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> labels{1, 1, -1, -1};
  const auto perfect = roc_auc(scores, labels);
  EXPECT_EQ(perfect.auc, 1.0);
  EXPECT_EQ(perfect.points.front().fpr, 0.0);
  EXPECT_EQ(perfect.points.back().tpr, 1.0);

  const std::vector<int> reversed{-1, -1, 1, 1};
  EXPECT_EQ(roc_auc(scores, reversed).auc, 0.0);

  const std::vector<int> one_class{1, 1, 1, 1};
  EXPECT_EQ(error_code([&] { roc_auc(scores, one_class); }), Errc::OneClassOnly);
}

TEST(Roc, TiesFormOneStep) {
  const std::vector<double> scores{0.5, 0.5, 0.5, 0.5};
  const std::vector<int> labels{1, -1, 1, -1};
  const auto curve = roc_auc(scores, labels);
  EXPECT_EQ(curve.points.size(), 2u);
  EXPECT_DOUBLE_EQ(curve.auc, 0.5);
}

TEST(Roc, RandomLabelsNearHalf) {
  Rng rng(2);
  std::vector<double> scores(10000);
  std::vector<int> labels(10000);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.sign();
  }
  EXPECT_NEAR(roc_auc(scores, labels).auc, 0.5, 0.03);
}

TEST(Roc, MonotoneTransformInvariance) {
  Rng rng(3);
  std::vector<double> scores(300), transformed(300);
  std::vector<int> labels(300);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = rng.sign();
    scores[i] = std::round((rng.uniform() + 0.2 * labels[i]) * 20) / 20;  // with ties
    transformed[i] = std::exp(3 * scores[i]) - 7;
  }
  const auto a = roc_auc(scores, labels), b = roc_auc(transformed, labels);
  EXPECT_NEAR(a.auc, b.auc, 1e-12);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 1; i < a.points.size(); ++i) {
    EXPECT_GE(a.points[i].fpr, a.points[i - 1].fpr);
    EXPECT_GE(a.points[i].tpr, a.points[i - 1].tpr);
  }
}

TEST(Roc, AucMatchesPairCount) {
  Rng rng(4);
  std::vector<double> scores(200);
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    labels[i] = rng.sign();
    scores[i] = static_cast<double>(rng.index(15)) + (labels[i] > 0 ? 2 : 0);
  }
  // Mann-Whitney: P(score+ > score−) + ½ P(tie).
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (labels[i] > 0 && labels[j] < 0) {
        wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
        ++pairs;
      }
  EXPECT_NEAR(roc_auc(scores, labels).auc, wins / pairs, 1e-12);
}

TEST(Roc, InterpolatedTpr) {
  const std::vector<double> scores{0.9, 0.8, 0.7, 0.2};
  const std::vector<int> labels{1, -1, 1, -1};
  const auto curve = roc_auc(scores, labels);
  EXPECT_EQ(tpr_at(curve, 0.0), 0.5);
  EXPECT_EQ(tpr_at(curve, 0.5), 1.0);
  EXPECT_EQ(tpr_at(curve, 1.0), 1.0);
}

TEST(MeanCi, Examples) {
  const std::vector<double> ones{1, 1, 1, 1};
  const auto a = mean_ci(ones);
  EXPECT_EQ(a.mean, 1.0);
  EXPECT_EQ(a.half_width, 0.0);

  const std::vector<double> pair{0, 2};
  const auto b = mean_ci(pair);
  EXPECT_EQ(b.mean, 1.0);
  EXPECT_NEAR(b.half_width, 12.706, 1e-3);

  const std::vector<double> single{3};
  EXPECT_EQ(error_code([&] { mean_ci(single); }), Errc::TooFewSamples);
}

TEST(StudentT, MatchesBoost) {
  for (double dof : {1.0, 2.0, 5.0, 17.0, 94.0}) {
    const boost::math::students_t dist(dof);
    for (double t : {-6.0, -2.5, -0.3, 0.0, 0.7, 1.96, 4.2}) {
      EXPECT_NEAR(student_t_cdf(t, dof), boost::math::cdf(dist, t), 1e-10) << dof << " " << t;
      const double p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      EXPECT_NEAR(student_t_two_sided_p(t, dof), p, 1e-10);
    }
    EXPECT_NEAR(student_t_quantile(0.975, dof), boost::math::quantile(dist, 0.975), 1e-8);
  }
  EXPECT_NEAR(student_t_quantile(0.975, 1), 12.706, 1e-3);
}

TEST(StudentT, PValuesShrinkWithT) {
  double last = 1.0;
  for (double t = 0.0; t < 8; t += 0.25) {
    const double p = student_t_two_sided_p(t, 12);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, last);
    last = p;
  }
  EXPECT_EQ(student_t_two_sided_p(0, 12), 1.0);
}

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 2.0, 7.5})
    for (double b : {0.5, 3.0, 40.0})
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.97, 1.0})
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-10);
}

TEST(Ols, ExactLine) {
  Matrix x(10, 2);
  std::vector<double> y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    x(i, 0) = 1;
    x(i, 1) = static_cast<double>(i);
    y[i] = 2.0 * static_cast<double>(i) + 1.0;
  }
  const auto r = ols_fit(x, y);
  EXPECT_NEAR(r.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(r.coefficients[1], 2.0, 1e-12);
  EXPECT_NEAR(r.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(r.rss, 0.0, 1e-20);
}

TEST(Ols, InterceptOnly) {
  Matrix x(5, 1, 1.0);
  const std::vector<double> y{3, 1, 4, 1, 5};
  const auto r = ols_fit(x, y);
  EXPECT_NEAR(r.coefficients[0], 2.8, 1e-12);
}

TEST(Ols, Errors) {
  Matrix x(3, 3, 1.0);
  const std::vector<double> y{1, 2, 3};
  EXPECT_EQ(error_code([&] { ols_fit(x, y); }), Errc::Underdetermined);
  Matrix collinear(6, 2);
  std::vector<double> y6(6, 1.0);
  for (std::size_t i = 0; i < 6; ++i) {
    collinear(i, 0) = static_cast<double>(i);
    collinear(i, 1) = 2.0 * static_cast<double>(i);
  }
  EXPECT_EQ(error_code([&] { ols_fit(collinear, y6); }), Errc::Singular);
}

TEST(Ols, MatchesNormalEquationOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t n = 50, k = 3;
    Matrix x(n, k);
    Eigen::MatrixXd ex(n, k);
    std::vector<double> y(n);
    Eigen::VectorXd ey(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = ex(i, 0) = 1.0;
      for (std::size_t j = 1; j < k; ++j) x(i, j) = ex(i, j) = rng.uniform(-2, 2);
      y[i] = ey(i) = 0.5 - 1.5 * x(i, 1) + 0.25 * x(i, 2) + rng.uniform(-1, 1);
    }
    const auto r = ols_fit(x, y);

    const Eigen::MatrixXd xtx = ex.transpose() * ex;
    const Eigen::VectorXd beta = xtx.ldlt().solve(ex.transpose() * ey);
    const Eigen::VectorXd resid = ey - ex * beta;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - k);
    const Eigen::MatrixXd cov = sigma2 * xtx.inverse();
    const boost::math::students_t dist(static_cast<double>(n - k));
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_NEAR(r.coefficients[j], beta(j), 1e-10);
      const double se = std::sqrt(cov(j, j));
      EXPECT_NEAR(r.std_errors[j], se, 1e-10);
      EXPECT_NEAR(r.t_stats[j], beta(j) / se, 1e-8);
      const double p = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(beta(j) / se)));
      EXPECT_NEAR(r.p_values[j], p, 1e-4);
    }
    const double tss = (ey.array() - ey.mean()).square().sum();
    EXPECT_NEAR(r.r_squared, 1.0 - resid.squaredNorm() / tss, 1e-10);

    // Residuals are orthogonal to every column.
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) {
      double fit = 0;
      for (std::size_t j = 0; j < k; ++j) fit += x(i, j) * r.coefficients[j];
      res[i] = y[i] - fit;
    }
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += x(i, j) * res[i];
      EXPECT_LT(std::abs(dot), 1e-8);
    }
  }
}

std::vector<RunRecord> sweep_runs(std::size_t n, Rng& rng) {
  std::vector<RunRecord> runs;
  for (std::size_t i = 0; i < n; ++i) {
    RunRecord r;
    const double normal = 30 + static_cast<double>(rng.index(41));
    double left = 100 - normal;
    std::vector<double> other(6);
    for (auto& o : other) o = 5;
    left -= 30;
    while (left > 0) {
      other[rng.index(6)] += 1;
      left -= 1;
    }
    r.percentages = {{BT::Normal, normal},      {BT::Troll, other[0]},       {BT::Random, other[1]},
                     {BT::Traitor, other[2]},   {BT::OrchSlander, other[3]}, {BT::OrchWhitewash, other[4]},
                     {BT::Target, other[5]}};
    runs.push_back(r);
  }
  return runs;
}

TEST(AttackImpact, RecoversConstructedTrollEffect) {
  Rng rng(5);
  auto runs = sweep_runs(60, rng);
  for (auto& r : runs) {
    const double acc = 1.0 - 0.01 * r.percentages.at(BT::Troll);
    r.metrics = {acc, acc, acc, acc};
  }
  const auto fits = attack_impact_regression(runs);
  ASSERT_EQ(fits.size(), 4u);
  const auto& acc = fits.at("Accuracy");
  EXPECT_EQ(acc.names, (std::vector<std::string>(std::begin(kRegressorNames), std::end(kRegressorNames))));
  EXPECT_NEAR(acc.coefficients[2], -0.01, 1e-9);
  for (std::size_t j = 1; j < acc.coefficients.size(); ++j)
    if (j != 2) {
      EXPECT_NEAR(acc.coefficients[j], 0.0, 1e-9);
    }
}

TEST(AttackImpact, ConstantMetrics) {
  Rng rng(6);
  auto runs = sweep_runs(40, rng);
  for (auto& r : runs) r.metrics = {0.7, 0.7, 0.7, 0.7};
  const auto fit = attack_impact_regression(runs).at("F1");
  for (std::size_t j = 1; j < fit.coefficients.size(); ++j) EXPECT_NEAR(fit.coefficients[j], 0.0, 1e-9);
  EXPECT_NEAR(fit.r_squared, 0.0, 1e-9);
}

TEST(AttackImpact, NeedsThirtyRuns) {
  Rng rng(7);
  const auto runs = sweep_runs(29, rng);
  EXPECT_EQ(error_code([&] { attack_impact_regression(runs); }), Errc::TooFewSamples);
}

TEST(OlsReport, TableAndJson) {
  Rng rng(8);
  auto runs = sweep_runs(40, rng);
  for (auto& r : runs) r.metrics = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
  const auto fit = attack_impact_regression(runs).at("Recall");
  const auto text = format_ols_table("Recall", fit);
  EXPECT_NE(text.find("P>|t|"), std::string::npos);
  EXPECT_NE(text.find("troll"), std::string::npos);
  const auto j = to_json(fit);
  EXPECT_EQ(j.at("terms").size(), 6u);
  EXPECT_TRUE(j.contains("r_squared"));
}

}  // namespace
}  // namespace crowdledger::metrics

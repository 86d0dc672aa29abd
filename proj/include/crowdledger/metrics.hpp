// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdledger/linalg.hpp"
#include "crowdledger/population.hpp"

namespace crowdledger::metrics {

/// Positive class is label +1 ("true story").
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual);

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool precision_degenerate = false;  // tp + fp == 0
  bool recall_degenerate = false;     // tp + fn == 0
};

ClassificationMetrics classification_metrics(const ConfusionCounts& counts);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) first, (1,1) last
  double auc = 0.0;
};

/// Threshold sweep over the distinct scores (descending); equal scores form a
/// single step. AUC by the trapezoid rule. Throws OneClassOnly.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

/// TPR of a staircase ROC interpolated at `fpr` (upper envelope at jumps).
double tpr_at(const RocCurve& curve, double fpr);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

/// mean ± t_{n−1,(1+level)/2} · s/√n. Throws TooFewSamples for n < 2.
MeanCi mean_ci(std::span<const double> samples, double level = 0.95);

/// I_x(a, b) by Lentz's continued fraction (relative tolerance 1e-10).
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
/// P(|T| > |t|) for T ~ Student-t(dof).
double student_t_two_sided_p(double t, double dof);
/// Quantile of Student-t by bisection on the CDF.
double student_t_quantile(double p, double dof);

struct OLSResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  double r_squared = 0.0;
  double rss = 0.0;
  std::size_t n = 0;
  std::size_t dof = 0;
  double condition_estimate = 0.0;
  bool ill_conditioned = false;  // condition estimate above 1e12
};

/// β = (XᵀX)⁻¹Xᵀy via Cholesky of the normal equations. Throws Underdetermined
/// (n ≤ k) or Singular. R² is taken about the mean of y (0 when y is constant).
OLSResult ols_fit(const linalg::Matrix& design, std::span<const double> y,
                  std::vector<std::string> names = {});

/// Per-run inputs for the attack-impact regression.
struct RunRecord {
  std::map<population::BehaviorType, double> percentages;
  ClassificationMetrics metrics;
};

inline constexpr const char* kMetricNames[4] = {"Precision", "Recall", "F1", "Accuracy"};
inline constexpr const char* kRegressorNames[6] = {"const",   "normal",  "troll",
                                                   "random",  "traitor", "orchestrated"};

/// Regresses each metric on an intercept plus the normal, troll, random,
/// traitor and orchestrated (slander + whitewash) percentages. Targets are the
/// omitted reference share. Requires at least 30 runs (TooFewSamples).
std::map<std::string, OLSResult> attack_impact_regression(std::span<const RunRecord> runs);

nlohmann::json to_json(const OLSResult& result);
/// Fixed-width block: Type | Coef | Std Err | t | P>|t| with R² in the title.
std::string format_ols_table(const std::string& title, const OLSResult& result);

}  // namespace crowdledger::metrics

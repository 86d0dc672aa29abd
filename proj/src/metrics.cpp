// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "crowdledger/error.hpp"

namespace crowdledger::metrics {

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size())
    throw Error(Errc::ShapeMismatch, "prediction and label counts differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] > 0;
    const bool a = actual[i] > 0;
    if (p && a) ++c.tp;
    else if (p && !a) ++c.fp;
    else if (!p && a) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(Errc::EmptyCounts, "confusion counts are all zero");
  ClassificationMetrics m;
  const double tp = static_cast<double>(c.tp);
  m.precision_degenerate = c.tp + c.fp == 0;
  m.recall_degenerate = c.tp + c.fn == 0;
  m.precision = m.precision_degenerate ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
  m.recall = m.recall_degenerate ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(Errc::ShapeMismatch, "score and label counts differ");
  std::size_t pos = 0;
  for (int l : labels) pos += l > 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(Errc::OneClassOnly, "ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] > 0) ++tp;
      else ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), threshold});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return curve;
}

double tpr_at(const RocCurve& curve, double fpr) {
  double best = 0.0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (p.fpr <= fpr) best = std::max(best, p.tpr);
    if (i > 0) {
      const auto& a = curve.points[i - 1];
      if (a.fpr < fpr && fpr < p.fpr) {
        const double w = (fpr - a.fpr) / (p.fpr - a.fpr);
        best = std::max(best, a.tpr + w * (p.tpr - a.tpr));
      }
    }
  }
  return best;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Use the symmetry relation where the continued fraction converges fastest.
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  constexpr double kTiny = 1e-300;
  constexpr double kTol = 1e-10;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const int m = i / 2;
    double numerator;
    if (i == 0) {
      numerator = 1.0;
    } else if (i % 2 == 0) {
      numerator = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    } else {
      numerator = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    }
    d = 1.0 + numerator * d;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    c = 1.0 + numerator / c;
    if (std::abs(c) < kTiny) c = kTiny;
    const double cd = c * d;
    f *= cd;
    if (std::abs(1.0 - cd) < kTol) return std::exp(log_front) * (f - 1.0) / a;
  }
  return std::exp(log_front) * (f - 1.0) / a;
}

double student_t_cdf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::ValidationError, "quantile level outside (0,1)");
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, dof) > p) lo *= 2.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

MeanCi mean_ci(std::span<const double> samples, double level) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(Errc::TooFewSamples, "confidence interval needs two samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = student_t_quantile(0.5 + level / 2.0, static_cast<double>(n - 1));
  return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

OLSResult ols_fit(const linalg::Matrix& x, std::span<const double> y,
                  std::vector<std::string> names) {
  const std::size_t n = x.rows();
  const std::size_t k = x.cols();
  if (y.size() != n) throw Error(Errc::ShapeMismatch, "design rows and response length differ");
  if (n <= k) throw Error(Errc::Underdetermined, "need more observations than regressors");

  const linalg::Matrix xt = x.transpose();
  const linalg::Matrix xtx = xt * x;
  const std::vector<double> xty = xt * y;

  linalg::Matrix lower;
  if (!linalg::cholesky(xtx, lower)) throw Error(Errc::Singular, "XᵀX is not positive definite");
  double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    dmax = std::max(dmax, lower(i, i));
    dmin = std::min(dmin, lower(i, i));
  }
  OLSResult r;
  r.condition_estimate = (dmax / dmin) * (dmax / dmin);
  if (r.condition_estimate > 1e16) throw Error(Errc::Singular, "design is numerically rank-deficient");
  r.ill_conditioned = r.condition_estimate > 1e12;

  r.coefficients = linalg::cholesky_solve(lower, xty);
  const linalg::Matrix inv = linalg::cholesky_inverse(lower);
  const std::vector<double> fitted = x * r.coefficients;

  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double tss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.rss += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    tss += (y[i] - y_mean) * (y[i] - y_mean);
  }
  r.n = n;
  r.dof = n - k;
  r.r_squared = tss > 0.0 ? std::clamp(1.0 - r.rss / tss, 0.0, 1.0) : 0.0;
  const double sigma2 = r.rss / static_cast<double>(r.dof);
  for (std::size_t j = 0; j < k; ++j) {
    const double se = std::sqrt(std::max(0.0, sigma2 * inv(j, j)));
    r.std_errors.push_back(se);
    const double t = se > 0.0 ? r.coefficients[j] / se
                              : (r.coefficients[j] == 0.0 ? 0.0
                                                          : std::copysign(INFINITY, r.coefficients[j]));
    r.t_stats.push_back(t);
    r.p_values.push_back(student_t_two_sided_p(t, static_cast<double>(r.dof)));
  }
  if (names.empty())
    for (std::size_t j = 0; j < k; ++j) names.push_back("x" + std::to_string(j));
  r.names = std::move(names);
  return r;
}

std::map<std::string, OLSResult> attack_impact_regression(std::span<const RunRecord> runs) {
  using population::BehaviorType;
  if (runs.size() < 30) throw Error(Errc::TooFewSamples, "attack regression needs >= 30 runs");
  const std::size_t k = 6;
  linalg::Matrix x(runs.size(), k);
  auto pct = [](const RunRecord& r, BehaviorType t) {
    auto it = r.percentages.find(t);
    return it == r.percentages.end() ? 0.0 : it->second;
  };
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    x(i, 0) = 1.0;
    x(i, 1) = pct(r, BehaviorType::Normal);
    x(i, 2) = pct(r, BehaviorType::Troll);
    x(i, 3) = pct(r, BehaviorType::Random);
    x(i, 4) = pct(r, BehaviorType::Traitor);
    x(i, 5) = pct(r, BehaviorType::OrchSlander) + pct(r, BehaviorType::OrchWhitewash);
  }
  const std::vector<std::string> names(std::begin(kRegressorNames), std::end(kRegressorNames));
  std::map<std::string, OLSResult> out;
  for (const char* metric : kMetricNames) {
    std::vector<double> y;
    for (const auto& r : runs) {
      const std::string m = metric;
      y.push_back(m == "Precision" ? r.metrics.precision
                  : m == "Recall"  ? r.metrics.recall
                  : m == "F1"      ? r.metrics.f1
                                   : r.metrics.accuracy);
    }
    out.emplace(metric, ols_fit(x, y, names));
  }
  return out;
}

nlohmann::json to_json(const OLSResult& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["dof"] = r.dof;
  j["r_squared"] = r.r_squared;
  j["condition_estimate"] = r.condition_estimate;
  j["ill_conditioned"] = r.ill_conditioned;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.coefficients.size(); ++i) {
    rows.push_back({{"name", r.names[i]},
                    {"coef", r.coefficients[i]},
                    {"std_err", r.std_errors[i]},
                    {"t", r.t_stats[i]},
                    {"p", r.p_values[i]}});
  }
  j["terms"] = std::move(rows);
  return j;
}

std::string format_ols_table(const std::string& title, const OLSResult& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s  R^2 = %.3f  (n = %zu)\n", title.c_str(), r.r_squared, r.n);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-14s %12s %12s %10s %8s\n", "Type", "Coef", "Std Err", "t",
                "P>|t|");
  out += buf;
  for (std::size_t i = 0; i < r.coefficients.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-14s %12.4e %12.3e %10.3f %8.3f\n", r.names[i].c_str(),
                  r.coefficients[i], r.std_errors[i], r.t_stats[i], r.p_values[i]);
    out += buf;
  }
  return out;
}

}  // namespace crowdledger::metrics

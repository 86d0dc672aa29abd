// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdledger/dynamics.hpp"

#include <cmath>
#include <string>

#include "crowdledger/error.hpp"

namespace crowdledger::dynamics {

VoteSeries::VoteSeries(std::vector<int> values) {
  values_.reserve(values.size());
  for (int v : values) push(v);
}

void VoteSeries::push(int vote) {
  values_.push_back(vote > 0 ? 1 : -1);
  if (vote > 0) ++ups_;
}

std::vector<double> VoteSeries::running_mean() const {
  std::vector<double> s;
  s.reserve(values_.size());
  long long sum = 0;
  for (std::size_t t = 0; t < values_.size(); ++t) {
    sum += values_[t];
    s.push_back(static_cast<double>(sum) / static_cast<double>(t + 1));
  }
  return s;
}

double shannon_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error(Errc::EmptyCounts, "total count is zero");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double vote_entropy(const VoteSeries& series) {
  const std::uint64_t counts[2] = {series.ups(), series.downs()};
  return shannon_entropy(counts);
}

LyapunovEstimate lyapunov_from_jacobians(const DynamicalSystem& system,
                                         std::vector<double> x0, double t0, double t1) {
  if (!(t1 > t0)) throw Error(Errc::BadHorizon, "t1 must exceed t0");
  if (!(system.dt > 0.0)) throw Error(Errc::BadHorizon, "dt must be positive");
  const std::size_t d = system.state_dim;
  if (d == 0 || d > kMaxStateDim || x0.size() != d)
    throw Error(Errc::ShapeMismatch, "state dimension must be 1.." + std::to_string(kMaxStateDim));

  const auto steps = static_cast<long long>(std::llround((t1 - t0) / system.dt));
  if (steps < 1) throw Error(Errc::BadHorizon, "horizon shorter than one step");

  const linalg::Matrix eye = linalg::Matrix::identity(d);
  linalg::Matrix v = eye;
  std::vector<double> log_growth(d, 0.0);
  std::vector<double> x = std::move(x0);
  double t = t0;

  auto reorthonormalize = [&] {
    auto [q, r] = linalg::qr_decompose(v);
    for (std::size_t i = 0; i < d; ++i) {
      if (!(r(i, i) > 0.0) || !std::isfinite(r(i, i)))
        throw Error(Errc::NumericalOverflow, "tangent basis collapsed or diverged");
      log_growth[i] += std::log(r(i, i));
    }
    v = std::move(q);
  };

  for (long long k = 0; k < steps; ++k) {
    const linalg::Matrix jac = system.jacobian(x, t);
    if (jac.rows() != d || jac.cols() != d)
      throw Error(Errc::ShapeMismatch, "jacobian must be d x d");
    // V += (∂f/∂x) V Δt with ∂f/∂x = (J − I) / Δt.
    const linalg::Matrix rate = (1.0 / system.dt) * (jac - eye);
    v = v + system.dt * (rate * v);
    x = system.step(x, t);
    t += system.dt;
    if (!v.all_finite()) throw Error(Errc::NumericalOverflow, "tangent propagation overflowed");
    for (double xi : x)
      if (!std::isfinite(xi)) throw Error(Errc::NumericalOverflow, "trajectory diverged");
    if ((k + 1) % kReorthonormalizeEvery == 0 || k + 1 == steps) reorthonormalize();
  }

  LyapunovEstimate out;
  out.method = LyapunovMethod::JacobianProduct;
  const double horizon = static_cast<double>(steps) * system.dt;
  for (double g : log_growth) out.exponents.push_back(g / horizon);
  return out;
}

double mean_log_ratio(std::span<const double> deltas, double epsilon) {
  if (deltas.size() < 2) throw Error(Errc::TooShort, "need at least two differences");
  auto guard = [epsilon](double x) {
    const double a = std::abs(x);
    return a == 0.0 ? epsilon : a;
  };
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < deltas.size(); ++t)
    sum += std::log(guard(deltas[t + 1]) / guard(deltas[t]));
  return sum / static_cast<double>(deltas.size() - 1);
}

LyapunovEstimate lyapunov_from_series(const VoteSeries& series) {
  if (series.size() < 4) throw Error(Errc::TooShort, "need at least 4 votes");
  const auto s = series.running_mean();
  std::vector<double> deltas(s.size() - 1);
  for (std::size_t t = 0; t + 1 < s.size(); ++t) deltas[t] = s[t + 1] - s[t];
  return {{mean_log_ratio(deltas)}, LyapunovMethod::SeriesDivergence};
}

bool equilibrium(const LyapunovEstimate& exponents, double entropy,
                 const EquilibriumParams& params, std::uint64_t count) {
  bool l_equilibrium = true;
  for (double lambda : exponents.exponents) {
    if (lambda >= 0.0) {
      l_equilibrium = false;
      break;
    }
  }
  return l_equilibrium && entropy < params.tau && count >= params.c_min;
}

StabilityReport assess(const VoteSeries& series, const EquilibriumParams& params) {
  StabilityReport r;
  r.count = series.size();
  if (series.size() == 0) return r;
  r.entropy = vote_entropy(series);
  if (series.size() < 4) return r;
  const auto est = lyapunov_from_series(series);
  r.lambda = est.exponents.front();
  r.stable = equilibrium(est, r.entropy, params, r.count);
  return r;
}

}  // namespace crowdledger::dynamics

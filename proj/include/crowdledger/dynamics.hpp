// Copyright 2026 The crowdledger Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crowdledger/linalg.hpp"

namespace crowdledger::dynamics {

/// Ordered ±1 votes on one story.
class VoteSeries {
 public:
  VoteSeries() = default;
  explicit VoteSeries(std::vector<int> values);

  void push(int vote);
  std::span<const int> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t ups() const { return ups_; }
  std::uint64_t downs() const { return values_.size() - ups_; }

  /// s_t = (v_1 + ... + v_t) / t for t = 1..C.
  std::vector<double> running_mean() const;

 private:
  std::vector<int> values_;
  std::uint64_t ups_ = 0;
};

enum class LyapunovMethod { JacobianProduct, SeriesDivergence };

struct LyapunovEstimate {
  std::vector<double> exponents;  // nats per unit time
  LyapunovMethod method = LyapunovMethod::JacobianProduct;
};

struct EquilibriumParams {
  double tau = 0.9;          // bits
  std::uint64_t c_min = 10;
};

/// A discrete-time system x_{t+Δt} = F(x_t, t) with its state Jacobian.
///
/// The tangent propagation V_{t+Δt} = V_t + (∂f/∂x) V_t Δt is written for the
/// equivalent vector field f = (F(x) − x) / Δt, which makes it V_{t+Δt} = J V_t
/// for the map itself.
struct DynamicalSystem {
  std::size_t state_dim = 1;
  std::function<std::vector<double>(std::span<const double>, double)> step;
  std::function<linalg::Matrix(std::span<const double>, double)> jacobian;
  double dt = 1.0;
};

inline constexpr double kSeriesEpsilon = 1e-12;
inline constexpr int kReorthonormalizeEvery = 10;
inline constexpr std::size_t kMaxStateDim = 8;

/// H = −Σ p_i log₂ p_i over the category counts. Throws EmptyCounts if all zero.
double shannon_entropy(std::span<const std::uint64_t> counts);

/// Two-category (upvote, downvote) entropy of a vote series, in [0, 1] bits.
double vote_entropy(const VoteSeries& series);

/// Benettin-style spectrum: tangent basis propagated from the identity,
/// re-orthonormalised by QR every kReorthonormalizeEvery steps; each exponent
/// is the accumulated log of a diagonal R factor over (t1 − t0).
LyapunovEstimate lyapunov_from_jacobians(const DynamicalSystem& system,
                                         std::vector<double> x0, double t0, double t1);

/// Largest-exponent estimate from an observed vote stream: mean of
/// ln(|δ_{t+1}| / |δ_t|) where δ_t = s_{t+1} − s_t on the running mean, with
/// zero differences replaced by kSeriesEpsilon. Requires at least 4 votes.
LyapunovEstimate lyapunov_from_series(const VoteSeries& series);

/// Same estimator over an arbitrary difference sequence; exposed for tests of
/// scale invariance.
double mean_log_ratio(std::span<const double> deltas, double epsilon = kSeriesEpsilon);

/// Stable iff every exponent is negative, H < τ and C ≥ C_min.
bool equilibrium(const LyapunovEstimate& exponents, double entropy,
                 const EquilibriumParams& params, std::uint64_t count);

struct StabilityReport {
  double lambda = 0.0;
  double entropy = 0.0;
  std::uint64_t count = 0;
  bool stable = false;
};

/// Full per-story check used by the scheduler: series estimator + vote entropy
/// + Algorithm-style decision. Series shorter than 4 are never stable.
StabilityReport assess(const VoteSeries& series, const EquilibriumParams& params);

}  // namespace crowdledger::dynamics

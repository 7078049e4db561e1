#pragma once

#include <vector>

#include "zokit/objective.hpp"
#include "zokit/rng.hpp"
#include "zokit/sampling.hpp"

namespace zokit {

enum class EstimatorKind { Rand, AvgRand, Coord };

/// Which two-point gradient estimator to use and its smoothing parameters.
///
/// Rand: one random sphere direction, forward difference scaled by d/mu.
/// AvgRand: mean of q such terms sharing the base evaluation f_i(x).
/// Coord: central difference along every coordinate axis, deterministic.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Rand;
  double mu = 1e-3;      // Rand / AvgRand smoothing radius
  Vec mu_per_coord;      // Coord per-coordinate half-widths
  int q = 1;             // AvgRand direction count

  static EstimatorSpec rand_est(double mu) {
    EstimatorSpec s;
    s.kind = EstimatorKind::Rand;
    s.mu = mu;
    return s;
  }
  static EstimatorSpec avg_rand_est(double mu, int q) {
    EstimatorSpec s;
    s.kind = EstimatorKind::AvgRand;
    s.mu = mu;
    s.q = q;
    return s;
  }
  static EstimatorSpec coord_est(double mu, int d) {
    EstimatorSpec s;
    s.kind = EstimatorKind::Coord;
    s.mu_per_coord = Vec::Constant(d, mu);
    return s;
  }
  static EstimatorSpec coord_est(Vec mu_per_coord) {
    EstimatorSpec s;
    s.kind = EstimatorKind::Coord;
    s.mu_per_coord = std::move(mu_per_coord);
    return s;
  }

  /// Component evaluations per single-component estimate:
  /// Rand 2, AvgRand q+1, Coord 2d.
  long long queries_per_component(int d) const {
    switch (kind) {
      case EstimatorKind::Rand: return 2;
      case EstimatorKind::AvgRand: return static_cast<long long>(q) + 1;
      case EstimatorKind::Coord: return 2LL * d;
    }
    return 0;
  }

  /// mu = 0 is rejected: the toolkit's contract is black-box only, there is
  /// no analytic fallback.
  void validate(int d) const;

  int directions_needed() const {
    if (kind == EstimatorKind::Coord) return 0;
    return kind == EstimatorKind::Rand ? 1 : q;
  }
};

struct GradientEstimate {
  Vec grad;
  long long queries = 0;
  std::vector<Vec> directions;  // sphere draws used (diagnostics; empty for Coord)
};

/// Fresh i.i.d. sphere directions for one component estimate (empty for Coord).
std::vector<Vec> draw_directions(const EstimatorSpec& spec, int d, Rng& rng);

/// Estimate grad f_i(x) with externally supplied directions. This is the
/// primitive that lets a blended step apply the same directions at two points.
GradientEstimate estimate_component_with_directions(const EstimatorSpec& spec,
                                                    const Objective& obj, int i, const Vec& x,
                                                    const std::vector<Vec>& directions);

/// Estimate grad f_i(x) with fresh directions.
GradientEstimate estimate_component(const EstimatorSpec& spec, const Objective& obj, int i,
                                    const Vec& x, Rng& rng);

/// Mini-batch mean (1/b) sum_{i in I} of per-component estimates, each with
/// its own fresh directions.
GradientEstimate estimate_batch(const EstimatorSpec& spec, const Objective& obj,
                                const MiniBatch& batch, const Vec& x, Rng& rng);

/// Monte-Carlo estimate of the ball-smoothed value
/// f_mu(x) = E_{u ~ unit ball}[f_i(x + mu u)], using sphere draws scaled by
/// V^(1/d) with V uniform on [0,1] (radial-CDF method). Test utility.
double smoothed_value_mc(const Objective& obj, int i, const Vec& x, double mu,
                         long long samples, Rng& rng);

/// Squared-error envelope E||est - grad f||^2 with the explicit constants:
///   Rand    4d ||g||^2 + (3/2) mu^2 L^2 d^2
///   AvgRand 4(1 + d/q) ||g||^2 + (3 + 2/q) mu^2 L^2 d^2 / 2
///   Coord   (L^2 d / 4) sum_l mu_l^2
double estimator_error_bound(const EstimatorSpec& spec, double L, int d, double grad_norm_sq);

}  // namespace zokit

#pragma once

#include <vector>

#include "zokit/objective.hpp"
#include "zokit/sampling.hpp"

namespace zokit::theory {

/// Smoothness and gradient-variance constants of the objective:
/// L-Lipschitz continuous component gradients and
/// (1/n) sum_i ||grad f_i - grad f||^2 <= sigma_sq everywhere.
struct SmoothnessParams {
  double L = 1.0;
  double sigma_sq = 0.0;
};

enum class Variant { Rand, AvgRand, Coord };

/// Inputs to the per-step coefficient recursions. `beta` and `eta` hold
/// either one value (constant schedule) or m per-step values.
struct TheoryParams {
  Variant variant = Variant::Rand;
  int d = 1;
  int b = 1;
  int n = 1;
  SamplingMode mode = SamplingMode::WithReplacement;
  double mu = 1e-3;
  std::vector<double> eta{1e-2};
  std::vector<double> beta{1.0};
  int m = 1;
  long long T = 1;
  int q = 1;  // AvgRand only

  double eta_at(int k) const { return eta.size() == 1 ? eta[0] : eta.at(k); }
  double beta_at(int k) const { return beta.size() == 1 ? beta[0] : beta.at(k); }
  int delta() const { return delta_n(mode, b, n); }
  void validate() const;
};

/// Backward-recursion output: c_m..c_0 (c[k] indexed by step), gamma_0..m-1,
/// chi_0..m-1, gamma_bar = min_k gamma_k, chi_sum = sum_k chi_k.
/// gamma_positive reports whether the step-size/beta choice keeps every
/// gamma_k > 0; a false flag means the bound is vacuous, not an error.
struct CoefficientTrace {
  std::vector<double> c;      // size m+1
  std::vector<double> gamma;  // size m
  std::vector<double> chi;    // size m
  double gamma_bar = 0.0;
  double chi_sum = 0.0;
  bool gamma_positive = false;
};

/// Per-step coefficients of the convergence analysis, from the backward
/// recursion c_m = 0 with the variant's exact constants (delta-indicator
/// factors included).
CoefficientTrace coefficients(const TheoryParams& params, const SmoothnessParams& smooth);

/// Parameter setting that yields the simplified rates:
/// mu = 1/sqrt(dT), eta = rho/(Ld), beta = L, and epoch length
/// m = ceil(d/(31 rho)) for Rand, ceil(d/(55 rho)) for AvgRand,
/// ceil(d/(3 rho)) for Coord.
struct RateSetting {
  double mu;
  double eta;
  double beta;
  int m;
};
RateSetting simplified_rate_setting(Variant variant, int d, double L, double rho, long long T);

/// Bound on E||grad f(xbar)||^2:
///   (f(x0) - f*)/(T gamma_bar) + L mu^2/(T gamma_bar) + S chi_sum/(T gamma_bar)
/// with S = ceil(T/m); the Coord variant omits the L mu^2 term. Returns +inf
/// when gamma_bar <= 0 (vacuous-bound flag semantics).
double convergence_bound(const TheoryParams& params, const CoefficientTrace& coeffs,
                     double f0_minus_fstar, const SmoothnessParams& smooth);

/// Second-moment envelope of the blended estimate:
///   4(b + 18 delta) d / b * ||grad f||^2
/// + 6(4d+1) L^2 delta / b * ||x_k - x_0||^2
/// + (6 delta + b) L^2 d^2 mu^2 / b
/// + 72 d sigma^2 delta / b.
double blend_second_moment_envelope(int d, int b, double L, double sigma_sq, double mu, int delta,
                      double grad_norm_sq, double dist_sq);

/// Dominant terms of the simplified convergence rate for a variant:
/// the d/T term and the residual delta/b (Rand), delta/(b min(d,q)) (AvgRand)
/// or 0 (Coord) term. Order-level decomposition, constants dropped.
struct RateDecomposition {
  double d_over_T;
  double residual;
};
RateDecomposition rate_decomposition(const TheoryParams& params);

/// Sample control-variate analysis of paired draws (g0_i, c_i):
/// eta_star = tr cov(g0, c) / tr cov(c), rho_corr the trace correlation, and
/// variance_ratio = tr cov(g0 - eta_star c) / tr cov(g0) recomputed directly
/// from the corrected samples (so the 1 - rho^2 identity is a genuine check,
/// not a restatement).
struct ControlVariateReport {
  double eta_star;
  double variance_ratio;
  double rho_corr;
};
ControlVariateReport control_variate_analysis(const std::vector<Vec>& g0,
                                              const std::vector<Vec>& c);

}  // namespace zokit::theory

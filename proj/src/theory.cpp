#include "zokit/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zokit::theory {

void TheoryParams::validate() const {
  if (d < 1 || b < 1 || n < 1 || m < 1 || T < 1) throw ConfigError("theory params need d, b, n, m, T >= 1");
  if (mode == SamplingMode::WithoutReplacement && b > n)
    throw ConfigError("without-replacement batches need b <= n");
  if (eta.size() != 1 && static_cast<int>(eta.size()) != m)
    throw ConfigError("eta schedule must be constant or length m");
  if (beta.size() != 1 && static_cast<int>(beta.size()) != m)
    throw ConfigError("beta schedule must be constant or length m");
  for (double e : eta)
    if (!(e > 0.0)) throw ConfigError("theory step sizes must be positive");
  for (double bk : beta)
    if (!(bk > 0.0)) throw ConfigError("beta parameters must be positive");
  if (variant == Variant::AvgRand && q < 1) throw ConfigError("AvgRand needs q >= 1");
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
}

namespace {

struct StepCoeffs {
  double c_factor;  // c_k = c_factor * c_{k+1} + c_add
  double c_add;
  double gamma_quad;  // gamma_k = (1 - c/beta) eta/2 - (L/2 + c) * gamma_quad * eta^2
  // chi_k = chi_lin(c) * eta + (L/2 + c) * chi_quad * eta^2, variant-specific linear part
};

}  // namespace

CoefficientTrace coefficients(const TheoryParams& p, const SmoothnessParams& smooth) {
  p.validate();
  const double L = smooth.L;
  const double sig2 = smooth.sigma_sq;
  const double d = static_cast<double>(p.d);
  const double b = static_cast<double>(p.b);
  const double dn = static_cast<double>(p.delta());
  const double mu2 = p.mu * p.mu;
  const double qd = static_cast<double>(p.q);

  CoefficientTrace out;
  out.c.assign(p.m + 1, 0.0);
  out.gamma.assign(p.m, 0.0);
  out.chi.assign(p.m, 0.0);

  for (int k = p.m - 1; k >= 0; --k) {
    const double eta = p.eta_at(k);
    const double beta = p.beta_at(k);
    const double c_next = out.c[k + 1];
    const double eta2 = eta * eta;
    const double half_plus_c = L / 2.0 + c_next;
    const double one_minus = 1.0 - c_next / beta;

    double c_factor = 0.0, c_add = 0.0, gamma_k = 0.0, chi_k = 0.0;
    switch (p.variant) {
      case Variant::Rand: {
        c_factor = 1.0 + beta * eta + 6.0 * (4.0 * d + 1.0) * L * L * dn * eta2 / b;
        c_add = 3.0 * (4.0 * d + 1.0) * L * L * L * dn * eta2 / b;
        gamma_k = 0.5 * one_minus * eta -
                  half_plus_c * (4.0 * d * b + 72.0 * d * dn) / b * eta2;
        chi_k = one_minus * mu2 * d * d * L * L / 4.0 * eta +
                half_plus_c *
                    ((6.0 * dn + b) * L * L * d * d * mu2 + 72.0 * d * sig2 * dn) / b * eta2;
        break;
      }
      case Variant::AvgRand: {
        c_factor = 1.0 + beta * eta + 6.0 * (4.0 * d + 5.0 * qd) * L * L * dn * eta2 / (b * qd);
        c_add = 3.0 * (4.0 * d + 5.0 * qd) * L * L * L * dn * eta2 / (b * qd);
        gamma_k = 0.5 * one_minus * eta -
                  half_plus_c * (72.0 * dn + 4.0 * b) * (qd + d) / (b * qd) * eta2;
        chi_k = one_minus * mu2 * d * d * L * L / 4.0 * eta +
                half_plus_c *
                    ((6.0 * dn + b) * (qd + 1.0) * L * L * d * d * mu2 +
                     72.0 * (qd + d) * sig2 * dn) /
                    (b * qd) * eta2;
        break;
      }
      case Variant::Coord: {
        c_factor = 1.0 + beta * eta + 2.0 * d * L * L * dn * eta2 / b;
        c_add = d * L * L * L * dn * eta2 / b;
        gamma_k = 0.5 * one_minus * eta - 4.0 * half_plus_c * eta2;
        chi_k = (0.25 + c_next / beta) * L * L * mu2 * d * d / 2.0 * eta +
                half_plus_c * mu2 * L * L * d * d * eta2;
        break;
      }
    }
    out.c[k] = c_factor * c_next + c_add;
    out.gamma[k] = gamma_k;
    out.chi[k] = chi_k;
  }

  out.gamma_bar = *std::min_element(out.gamma.begin(), out.gamma.end());
  out.chi_sum = 0.0;
  for (double x : out.chi) out.chi_sum += x;
  out.gamma_positive = out.gamma_bar > 0.0;
  return out;
}

RateSetting simplified_rate_setting(Variant variant, int d, double L, double rho, long long T) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (d < 1 || T < 1) throw ConfigError("rate setting needs d, T >= 1");
  if (!(L > 0.0)) throw ConfigError("rate setting needs L > 0");
  double m_div = 31.0;
  if (variant == Variant::AvgRand) m_div = 55.0;
  if (variant == Variant::Coord) m_div = 3.0;
  RateSetting s;
  s.mu = 1.0 / std::sqrt(static_cast<double>(d) * static_cast<double>(T));
  s.eta = rho / (L * static_cast<double>(d));
  s.beta = L;
  s.m = static_cast<int>(std::ceil(static_cast<double>(d) / (m_div * rho)));
  return s;
}

double convergence_bound(const TheoryParams& p, const CoefficientTrace& coeffs,
                     double f0_minus_fstar, const SmoothnessParams& smooth) {
  if (f0_minus_fstar < 0.0) throw ConfigError("f(x0) - f* must be nonnegative");
  if (!coeffs.gamma_positive) return std::numeric_limits<double>::infinity();
  const double T = static_cast<double>(p.T);
  const double S = std::ceil(T / static_cast<double>(p.m));
  const double denom = T * coeffs.gamma_bar;
  double bound = f0_minus_fstar / denom + S * coeffs.chi_sum / denom;
  if (p.variant != Variant::Coord) bound += smooth.L * p.mu * p.mu / denom;
  return bound;
}

double blend_second_moment_envelope(int d, int b, double L, double sigma_sq, double mu, int delta,
                      double grad_norm_sq, double dist_sq) {
  if (b < 1) throw ConfigError("envelope needs b >= 1");
  const double dd = static_cast<double>(d);
  const double bb = static_cast<double>(b);
  const double dn = static_cast<double>(delta);
  return 4.0 * (bb + 18.0 * dn) * dd / bb * grad_norm_sq +
         6.0 * (4.0 * dd + 1.0) * L * L * dn / bb * dist_sq +
         (6.0 * dn + bb) * L * L * dd * dd * mu * mu / bb +
         72.0 * dd * sigma_sq * dn / bb;
}

RateDecomposition rate_decomposition(const TheoryParams& p) {
  const double d = static_cast<double>(p.d);
  const double T = static_cast<double>(p.T);
  const double dn = static_cast<double>(p.delta());
  RateDecomposition r{d / T, 0.0};
  switch (p.variant) {
    case Variant::Rand:
      r.residual = dn / static_cast<double>(p.b);
      break;
    case Variant::AvgRand:
      r.residual = dn / (static_cast<double>(p.b) * std::min(d, static_cast<double>(p.q)));
      break;
    case Variant::Coord:
      r.residual = 0.0;
      break;
  }
  return r;
}

ControlVariateReport control_variate_analysis(const std::vector<Vec>& g0,
                                              const std::vector<Vec>& c) {
  const std::size_t N = g0.size();
  if (N < 2 || c.size() != N) throw AnalysisError("control-variate analysis needs >= 2 paired samples");
  const Eigen::Index d = g0[0].size();
  Vec mean_g = Vec::Zero(d);
  Vec mean_c = Vec::Zero(d);
  for (std::size_t i = 0; i < N; ++i) {
    if (g0[i].size() != d || c[i].size() != d)
      throw AnalysisError("paired samples must share one dimension");
    mean_g += g0[i];
    mean_c += c[i];
  }
  mean_g /= static_cast<double>(N);
  mean_c /= static_cast<double>(N);

  const double denom = static_cast<double>(N - 1);
  double tr_gg = 0.0, tr_cc = 0.0, tr_gc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Vec dg = g0[i] - mean_g;
    const Vec dc = c[i] - mean_c;
    tr_gg += dg.squaredNorm();
    tr_cc += dc.squaredNorm();
    tr_gc += dg.dot(dc);
  }
  tr_gg /= denom;
  tr_cc /= denom;
  tr_gc /= denom;

  if (!(tr_cc > 0.0)) throw AnalysisError("degenerate control variate: tr cov(c) = 0");

  ControlVariateReport rep;
  rep.eta_star = tr_gc / tr_cc;
  if (!(tr_gg > 0.0)) {
    rep.rho_corr = 0.0;
    rep.variance_ratio = 1.0;
    return rep;
  }
  rep.rho_corr = tr_gc / (std::sqrt(tr_gg) * std::sqrt(tr_cc));

  // Direct route: trace covariance of the corrected samples.
  Vec mean_h = mean_g - rep.eta_star * mean_c;
  double tr_hh = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Vec dh = (g0[i] - rep.eta_star * c[i]) - mean_h;
    tr_hh += dh.squaredNorm();
  }
  tr_hh /= denom;
  rep.variance_ratio = tr_hh / tr_gg;
  return rep;
}

}  // namespace zokit::theory

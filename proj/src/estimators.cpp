#include "zokit/estimators.hpp"

#include <cmath>

namespace zokit {

void EstimatorSpec::validate(int d) const {
  switch (kind) {
    case EstimatorKind::Rand:
    case EstimatorKind::AvgRand:
      if (!(mu > 0.0)) throw ConfigError("estimator needs smoothing parameter mu > 0");
      if (kind == EstimatorKind::AvgRand && q < 1)
        throw ConfigError("average estimator needs q >= 1 directions");
      break;
    case EstimatorKind::Coord:
      if (mu_per_coord.size() != d)
        throw ConfigError("coordinate estimator needs one smoothing radius per coordinate");
      if (!(mu_per_coord.minCoeff() > 0.0))
        throw ConfigError("coordinate smoothing radii must all be positive");
      break;
  }
}

std::vector<Vec> draw_directions(const EstimatorSpec& spec, int d, Rng& rng) {
  std::vector<Vec> dirs;
  const int count = spec.directions_needed();
  dirs.reserve(count);
  for (int j = 0; j < count; ++j) dirs.push_back(sample_unit_sphere(rng, d));
  return dirs;
}

GradientEstimate estimate_component_with_directions(const EstimatorSpec& spec,
                                                    const Objective& obj, int i, const Vec& x,
                                                    const std::vector<Vec>& directions) {
  const int d = obj.dim();
  spec.validate(d);
  GradientEstimate out;
  out.grad = Vec::Zero(d);

  if (spec.kind == EstimatorKind::Coord) {
    for (int l = 0; l < d; ++l) {
      const double mu_l = spec.mu_per_coord[l];
      Vec probe = x;
      probe[l] = x[l] + mu_l;
      const double fp = obj.eval_component(i, probe);
      probe[l] = x[l] - mu_l;
      const double fm = obj.eval_component(i, probe);
      out.grad[l] = (fp - fm) / (2.0 * mu_l);
    }
    out.queries = 2LL * d;
    return out;
  }

  const int q_eff = spec.directions_needed();
  if (static_cast<int>(directions.size()) != q_eff)
    throw ConfigError("direction count does not match estimator spec");
  const double base = obj.eval_component(i, x);
  const double scale = static_cast<double>(d) / spec.mu;
  for (const Vec& u : directions) {
    const double fp = obj.eval_component(i, x + spec.mu * u);
    out.grad += scale * (fp - base) * u;
  }
  out.grad /= static_cast<double>(q_eff);
  out.queries = q_eff + 1;
  out.directions = directions;
  return out;
}

GradientEstimate estimate_component(const EstimatorSpec& spec, const Objective& obj, int i,
                                    const Vec& x, Rng& rng) {
  return estimate_component_with_directions(spec, obj, i, x, draw_directions(spec, obj.dim(), rng));
}

GradientEstimate estimate_batch(const EstimatorSpec& spec, const Objective& obj,
                                const MiniBatch& batch, const Vec& x, Rng& rng) {
  if (batch.indices.empty()) throw ConfigError("mini-batch estimate needs a nonempty batch");
  GradientEstimate out;
  out.grad = Vec::Zero(obj.dim());
  for (int i : batch.indices) {
    GradientEstimate e = estimate_component(spec, obj, i, x, rng);
    out.grad += e.grad;
    out.queries += e.queries;
  }
  out.grad /= static_cast<double>(batch.indices.size());
  return out;
}

double smoothed_value_mc(const Objective& obj, int i, const Vec& x, double mu,
                         long long samples, Rng& rng) {
  if (samples < 1) throw ConfigError("smoothed value estimate needs samples >= 1");
  const int d = obj.dim();
  double acc = 0.0;
  for (long long s = 0; s < samples; ++s) {
    const Vec u = sample_unit_sphere(rng, d);
    const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    acc += obj.eval_component(i, x + (mu * r) * u);
  }
  return acc / static_cast<double>(samples);
}

double estimator_error_bound(const EstimatorSpec& spec, double L, int d, double grad_norm_sq) {
  if (!(L > 0.0)) throw ConfigError("error bound needs smoothness constant L > 0");
  const double dd = static_cast<double>(d);
  switch (spec.kind) {
    case EstimatorKind::Rand:
      return 4.0 * dd * grad_norm_sq + 1.5 * spec.mu * spec.mu * L * L * dd * dd;
    case EstimatorKind::AvgRand: {
      const double qd = static_cast<double>(spec.q);
      return 4.0 * (1.0 + dd / qd) * grad_norm_sq +
             (3.0 + 2.0 / qd) * spec.mu * spec.mu * L * L * dd * dd / 2.0;
    }
    case EstimatorKind::Coord:
      return L * L * dd / 4.0 * spec.mu_per_coord.squaredNorm();
  }
  return 0.0;
}

}  // namespace zokit

#pragma once

#include <vector>

#include "zokit/objective.hpp"
#include "zokit/rng.hpp"

namespace zokit {

enum class SamplingMode { WithReplacement, WithoutReplacement };

struct MiniBatch {
  std::vector<int> indices;
  SamplingMode mode = SamplingMode::WithReplacement;

  int size() const { return static_cast<int>(indices.size()); }
};

/// Uniform draw from the unit sphere in R^d: normalized standard Gaussian
/// vector (rotation invariance is exact); redraws on the measure-zero
/// all-zeros event.
Vec sample_unit_sphere(Rng& rng, int d);

/// Mini-batch of b indices from [0, n). WithReplacement draws i.i.d.;
/// WithoutReplacement draws a uniform b-subset (requires b <= n).
MiniBatch draw_minibatch(Rng& rng, int n, int b, SamplingMode mode);

/// Sampling-mode indicator: 1 for i.i.d. with-replacement batches,
/// I(b < n) for without-replacement batches.
int delta_n(SamplingMode mode, int b, int n);

}  // namespace zokit

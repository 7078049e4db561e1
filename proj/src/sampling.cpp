#include "zokit/sampling.hpp"

#include <numeric>

namespace zokit {

Vec sample_unit_sphere(Rng& rng, int d) {
  if (d < 1) throw ConfigError("sphere sample needs dimension d >= 1");
  Vec u(d);
  for (;;) {
    for (int j = 0; j < d; ++j) u[j] = rng.normal();
    const double norm = u.norm();
    if (norm > 0.0) return u / norm;
  }
}

MiniBatch draw_minibatch(Rng& rng, int n, int b, SamplingMode mode) {
  if (n < 1) throw ConfigError("mini-batch needs n >= 1");
  if (b < 1) throw ConfigError("mini-batch needs size b >= 1");
  MiniBatch batch;
  batch.mode = mode;
  batch.indices.reserve(b);
  if (mode == SamplingMode::WithReplacement) {
    for (int k = 0; k < b; ++k)
      batch.indices.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
  } else {
    if (b > n) throw ConfigError("without-replacement mini-batch needs b <= n");
    // Partial Fisher-Yates over [0, n).
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < b; ++k) {
      const int j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)));
      std::swap(pool[k], pool[j]);
      batch.indices.push_back(pool[k]);
    }
  }
  return batch;
}

int delta_n(SamplingMode mode, int b, int n) {
  if (mode == SamplingMode::WithReplacement) return 1;
  return b < n ? 1 : 0;
}

}  // namespace zokit

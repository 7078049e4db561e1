#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <thread>
#include <vector>

#include "zokit/objective.hpp"
#include "zokit/rng.hpp"
#include "zokit/sampling.hpp"

using namespace zokit;

TEST_CASE("rng: equal seeds give bitwise-equal streams") {
  Rng a(123456789u), b(123456789u);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(1), d(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.uniform() == d.uniform());
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("rng: substreams are stable and role-separated") {
  Rng root(7);
  Rng s1 = root.substream(1, 2, 3);
  root.next_u64();  // consuming the parent must not move the substream
  Rng s2 = root.substream(1, 2, 3);
  CHECK(s1.next_u64() == s2.next_u64());

  Rng other_role = root.substream(2, 2, 3);
  Rng same = root.substream(1, 2, 3);
  CHECK(other_role.next_u64() != same.next_u64());
}

TEST_CASE("rng: uniform lies in [0,1) and below(n) is in range") {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
}

TEST_CASE("sphere: d=1 gives a sign, norms are unit, d=0 rejected") {
  Rng rng(7);
  const Vec u1 = sample_unit_sphere(rng, 1);
  CHECK((u1[0] == 1.0 || u1[0] == -1.0));

  for (int rep = 0; rep < 100; ++rep) {
    const Vec u = sample_unit_sphere(rng, 5);
    CHECK(std::abs(u.norm() - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(sample_unit_sphere(rng, 0), ConfigError);
}

TEST_CASE("sphere: second moment matches I/d and the mean vanishes") {
  const long long N = 1000000;
  for (int d : {2, 5, 10}) {
    Rng rng(1000 + d);
    Vec mean = Vec::Zero(d);
    Mat second = Mat::Zero(d, d);
    for (long long s = 0; s < N; ++s) {
      const Vec u = sample_unit_sphere(rng, d);
      mean += u;
      second += u * u.transpose();
    }
    mean /= static_cast<double>(N);
    second /= static_cast<double>(N);

    CHECK(mean.norm() <= 5.0 / std::sqrt(static_cast<double>(N)) * std::sqrt(double(d)));
    const Mat expected = Mat::Identity(d, d) / static_cast<double>(d);
    CHECK((second - expected).cwiseAbs().maxCoeff() <= 5e-3);
  }
}

TEST_CASE("minibatch: full batch without replacement is the whole index set") {
  Rng rng(3);
  const MiniBatch batch = draw_minibatch(rng, 4, 4, SamplingMode::WithoutReplacement);
  std::set<int> got(batch.indices.begin(), batch.indices.end());
  CHECK(got == std::set<int>({0, 1, 2, 3}));
}

TEST_CASE("minibatch: replacement allows b > n, all indices in range") {
  Rng rng(4);
  const MiniBatch batch = draw_minibatch(rng, 3, 5, SamplingMode::WithReplacement);
  CHECK(batch.size() == 5);
  for (int i : batch.indices) {
    CHECK(i >= 0);
    CHECK(i < 3);
  }
}

TEST_CASE("minibatch: invalid sizes are rejected") {
  Rng rng(5);
  CHECK_THROWS_AS(draw_minibatch(rng, 10, 0, SamplingMode::WithReplacement), ConfigError);
  CHECK_THROWS_AS(draw_minibatch(rng, 3, 5, SamplingMode::WithoutReplacement), ConfigError);
}

TEST_CASE("minibatch: each index is marginally uniform") {
  const int n = 5, draws = 200000;
  for (SamplingMode mode : {SamplingMode::WithReplacement, SamplingMode::WithoutReplacement}) {
    Rng rng(42);
    std::vector<long long> counts(n, 0);
    long long total = 0;
    for (int t = 0; t < draws; ++t) {
      const MiniBatch batch = draw_minibatch(rng, n, 2, mode);
      for (int i : batch.indices) {
        ++counts[i];
        ++total;
      }
    }
    for (int i = 0; i < n; ++i) {
      const double freq = static_cast<double>(counts[i]) / static_cast<double>(total);
      CHECK(std::abs(freq - 1.0 / n) < 5e-3);
    }
  }
}

namespace {

// All batches of size b: index sequences for with-replacement, subsets for
// without-replacement. Enumeration oracle, independent of the sampler.
void enumerate_batches(int n, int b, SamplingMode mode,
                       const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> batch(b, 0);
  if (mode == SamplingMode::WithReplacement) {
    for (;;) {
      visit(batch);
      int pos = b - 1;
      while (pos >= 0 && ++batch[pos] == n) batch[pos--] = 0;
      if (pos < 0) return;
    }
  } else {
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == b) {
        visit(batch);
        return;
      }
      for (int i = start; i < n; ++i) {
        batch[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    rec(0, 0);
  }
}

}  // namespace

TEST_CASE("minibatch mean identity by exhaustive enumeration (n <= 4, b <= 3)") {
  Rng data_rng(9);
  for (int n = 1; n <= 4; ++n) {
    std::vector<Vec> z;
    for (int i = 0; i < n; ++i) {
      Vec v(3);
      for (int j = 0; j < 3; ++j) v[j] = data_rng.normal();
      z.push_back(v);
    }
    Vec full = Vec::Zero(3);
    for (const Vec& v : z) full += v;
    full /= static_cast<double>(n);

    for (SamplingMode mode : {SamplingMode::WithReplacement, SamplingMode::WithoutReplacement}) {
      for (int b = 1; b <= 3; ++b) {
        if (mode == SamplingMode::WithoutReplacement && b > n) continue;
        Vec acc = Vec::Zero(3);
        long long count = 0;
        enumerate_batches(n, b, mode, [&](const std::vector<int>& batch) {
          Vec avg = Vec::Zero(3);
          for (int i : batch) avg += z[i];
          acc += avg / static_cast<double>(b);
          ++count;
        });
        acc /= static_cast<double>(count);
        CHECK((acc - full).norm() <= 1e-12);
      }
    }
  }
}

TEST_CASE("minibatch variance identity for centered vectors (n=3, b=2, replacement)") {
  // For sum z_i = 0: E || (1/b) sum_{i in I} z_i ||^2 = (1/(bn)) sum ||z_i||^2.
  std::vector<Vec> z;
  Vec a(2), b2(2);
  a << 1.0, -2.0;
  b2 << 0.5, 1.0;
  z.push_back(a);
  z.push_back(b2);
  z.push_back(-(a + b2));  // centers the set

  const int n = 3, b = 2;
  double lhs = 0.0;
  long long count = 0;
  enumerate_batches(n, b, SamplingMode::WithReplacement, [&](const std::vector<int>& batch) {
    Vec avg = Vec::Zero(2);
    for (int i : batch) avg += z[i];
    lhs += (avg / static_cast<double>(b)).squaredNorm();
    ++count;
  });
  lhs /= static_cast<double>(count);
  CHECK(count == 9);

  double rhs = 0.0;
  for (const Vec& v : z) rhs += v.squaredNorm();
  rhs /= static_cast<double>(b * n);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("delta_n mode indicator") {
  CHECK(delta_n(SamplingMode::WithoutReplacement, 10, 10) == 0);
  CHECK(delta_n(SamplingMode::WithoutReplacement, 3, 10) == 1);
  CHECK(delta_n(SamplingMode::WithReplacement, 10, 10) == 1);
}

namespace {

Objective simple_quadratic(int n, int d) {
  Objective obj(n, d, [](int, const Vec& x) { return 0.5 * x.squaredNorm(); });
  obj.with_gradient([](int, const Vec& x) { return x; });
  return obj;
}

}  // namespace

TEST_CASE("objective: query counting is exact and atomic") {
  Objective obj = simple_quadratic(4, 3);
  const Vec x = Vec::Ones(3);
  for (int k = 0; k < 100; ++k) obj.eval_component(k % 4, x);
  CHECK(obj.queries() == 100);

  obj.reset_queries();
  const int threads = 8, per_thread = 5000;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&obj, &x]() {
      for (int k = 0; k < per_thread; ++k) obj.eval_component(0, x);
    });
  for (std::thread& th : pool) th.join();
  CHECK(obj.queries() == static_cast<long long>(threads) * per_thread);
}

TEST_CASE("objective: metric channel never touches the counter") {
  Objective obj = simple_quadratic(4, 3);
  const Vec x = Vec::Ones(3);
  CHECK(obj.metric_loss(x) == doctest::Approx(1.5));
  CHECK(obj.metric_grad_norm_sq(x).value() == doctest::Approx(3.0));
  CHECK(obj.queries() == 0);
}

TEST_CASE("objective: gradient trap blocks true gradients, metric path stays open") {
  Objective obj = simple_quadratic(2, 2);
  const Vec x = Vec::Ones(2);
  CHECK(obj.component_gradient(0, x).size() == 2);
  {
    GradientTrapGuard guard(obj);
    CHECK_THROWS_AS(obj.component_gradient(0, x), GradientAccessError);
    CHECK_THROWS_AS(obj.full_gradient(x), GradientAccessError);
    CHECK(obj.metric_grad_norm_sq(x).has_value());
  }
  CHECK(obj.component_gradient(0, x).size() == 2);
}

TEST_CASE("objective: non-finite values raise EvalError with component and probe") {
  Objective obj(2, 2, [](int i, const Vec& x) {
    return i == 1 ? std::numeric_limits<double>::infinity() : x.sum();
  });
  const Vec x = Vec::Constant(2, 3.0);
  CHECK(obj.eval_component(0, x) == doctest::Approx(6.0));
  try {
    obj.eval_component(1, x);
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.component() == 1);
    CHECK(e.probe()[0] == 3.0);
  }
}

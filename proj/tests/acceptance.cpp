// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Statistical checks use 5 standard errors of slack; exact checks use
// the stated tolerances. Run via ctest or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "zokit/experiment.hpp"
#include "zokit/optimizers.hpp"
#include "zokit/problems.hpp"
#include "zokit/theory.hpp"

using namespace zokit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const char* what, bool ok, double seconds) {
  std::printf("%s  criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion, what, seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - out.mean) * (x - out.mean);
  if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

// ---------------------------------------------------------------------------
// 1. Rand estimator unbiasedness on a d=10 quadratic finite sum.
bool criterion1() {
  const int d = 10, n = 4;
  const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(901, n, d);
  const Objective obj = prob.objective();
  Vec x(d);
  for (int j = 0; j < d; ++j) x[j] = std::cos(0.9 * j) - 0.2;
  Vec grad = Vec::Zero(d);
  for (int i = 0; i < n; ++i) grad += prob.component_grad(i, x);
  grad /= static_cast<double>(n);

  const EstimatorSpec spec = EstimatorSpec::rand_est(1e-3);
  MiniBatch full;
  full.mode = SamplingMode::WithoutReplacement;
  for (int i = 0; i < n; ++i) full.indices.push_back(i);

  const long long N = 1000000;
  Vec sum = Vec::Zero(d), sumsq = Vec::Zero(d);
  Rng root(4501);
  for (long long s = 0; s < N; ++s) {
    Rng rng = root.substream(1, static_cast<std::uint64_t>(s));
    const Vec g = estimate_batch(spec, obj, full, x, rng).grad;
    sum += g;
    sumsq += g.cwiseAbs2();
  }
  const Vec mean = sum / static_cast<double>(N);
  const Vec se =
      ((sumsq / static_cast<double>(N) - mean.cwiseAbs2()) / static_cast<double>(N))
          .cwiseMax(0.0)
          .cwiseSqrt();
  for (int j = 0; j < d; ++j)
    if (std::abs(mean[j] - grad[j]) > 5.0 * se[j]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// 2. Second moment of the rand estimator under 2d||g||^2 + mu^2 L^2 d^2 / 2.
bool criterion2() {
  for (int d : {2, 10}) {
    const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(903 + d, 1, d);
    const Objective obj = prob.objective();
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = std::sin(1.3 * j) + 0.4;
    const double gn = prob.component_grad(0, x).squaredNorm();
    for (double mu : {1e-3, 1e-1}) {
      const EstimatorSpec spec = EstimatorSpec::rand_est(mu);
      const long long N = 200000;
      double acc = 0.0, acc_sq = 0.0;
      Rng root(7013 + d);
      for (long long s = 0; s < N; ++s) {
        Rng rng = root.substream(2, static_cast<std::uint64_t>(s));
        const double nn = estimate_component(spec, obj, 0, x, rng).grad.squaredNorm();
        acc += nn;
        acc_sq += nn * nn;
      }
      const double mean = acc / static_cast<double>(N);
      const double se =
          std::sqrt(std::max(0.0, acc_sq / static_cast<double>(N) - mean * mean) /
                    static_cast<double>(N));
      const double L = prob.lipschitz;
      const double bound = 2.0 * d * gn + mu * mu * L * L * d * d / 2.0;
      if (mean > bound + 5.0 * se) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// 3. Coord exactness on quadratics; deterministic error bound on log-cosh.
bool criterion3() {
  const int d = 6, n = 3;
  const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(907, n, d);
  const Objective obj = prob.objective();
  Rng rng(11);
  Vec x(d);
  for (int j = 0; j < d; ++j) x[j] = rng.normal();
  for (int i = 0; i < n; ++i) {
    const GradientEstimate est =
        estimate_component(EstimatorSpec::coord_est(1e-3, d), obj, i, x, rng);
    if ((est.grad - prob.component_grad(i, x)).lpNorm<Eigen::Infinity>() > 1e-10) return false;
  }

  // Smooth non-quadratic with known L = 1: f(x) = sum_j log cosh x_j.
  const int dc = 5;
  Objective logcosh(1, dc, [](int, const Vec& p) {
    double acc = 0.0;
    for (int j = 0; j < p.size(); ++j) acc += std::log(std::cosh(p[j]));
    return acc;
  });
  Vec mu(dc);
  mu << 0.3, 0.05, 0.2, 0.01, 0.15;
  Vec y(dc);
  y << 0.7, -1.1, 0.2, 1.9, -0.4;
  Vec exact(dc);
  for (int j = 0; j < dc; ++j) exact[j] = std::tanh(y[j]);
  const EstimatorSpec spec = EstimatorSpec::coord_est(mu);
  const GradientEstimate est = estimate_component(spec, logcosh, 0, y, rng);
  return (est.grad - exact).squaredNorm() <= estimator_error_bound(spec, 1.0, dc, 0.0);
}

// ---------------------------------------------------------------------------
// 4. First-order blend is unbiased: exhaustive mini-batches, n=4, b=2.
bool criterion4() {
  const int n = 4, d = 5;
  const QuadraticSumProblem prob = QuadraticSumProblem::varied_hessians(911, n, d);
  const Objective obj = prob.objective();
  Vec x_k(d), x_0(d);
  for (int j = 0; j < d; ++j) {
    x_k[j] = std::sin(0.8 * j) + 0.3;
    x_0[j] = std::cos(1.1 * j) - 0.5;
  }
  const Vec g_anchor = obj.full_gradient(x_0);
  const Vec expected = obj.full_gradient(x_k);

  auto blend = [&](int i, int j) {
    Vec v = g_anchor;
    v += 0.5 * (obj.component_gradient(i, x_k) - obj.component_gradient(i, x_0));
    v += 0.5 * (obj.component_gradient(j, x_k) - obj.component_gradient(j, x_0));
    return v;
  };

  Vec acc = Vec::Zero(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += blend(i, j);
  if ((acc / 16.0 - expected).lpNorm<Eigen::Infinity>() > 1e-12) return false;

  acc.setZero();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) acc += blend(i, j);
  return (acc / 6.0 - expected).lpNorm<Eigen::Infinity>() <= 1e-12;
}

// ---------------------------------------------------------------------------
// 5. The blend's second-moment envelope dominates its Monte-Carlo estimate.
bool criterion5() {
  const int n = 10, d = 8, b = 2;
  const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(913, n, d);
  const Objective obj = prob.objective();
  const double mu = 1e-3;
  const EstimatorSpec spec = EstimatorSpec::rand_est(mu);
  MiniBatch fullset;
  fullset.mode = SamplingMode::WithReplacement;
  for (int i = 0; i < n; ++i) fullset.indices.push_back(i);

  Rng pair_rng(17);
  for (int pair = 0; pair < 3; ++pair) {
    Vec x_k(d), x_0(d);
    for (int j = 0; j < d; ++j) {
      x_k[j] = pair_rng.normal() * 0.8;
      x_0[j] = x_k[j] + pair_rng.normal() * 0.5;
    }
    Vec grad = Vec::Zero(d);
    for (int i = 0; i < n; ++i) grad += prob.component_grad(i, x_k);
    grad /= static_cast<double>(n);

    const long long N = 100000;
    double acc = 0.0, acc_sq = 0.0;
    Rng root(7700 + pair);
    for (long long s = 0; s < N; ++s) {
      Rng rng = root.substream(3, static_cast<std::uint64_t>(s));
      const MiniBatch batch = draw_minibatch(rng, n, b, SamplingMode::WithReplacement);
      const Vec anchor = estimate_batch(spec, obj, fullset, x_0, rng).grad;
      const Vec v = anchor + estimate_batch(spec, obj, batch, x_k, rng).grad -
                    estimate_batch(spec, obj, batch, x_0, rng).grad;
      const double nn = v.squaredNorm();
      acc += nn;
      acc_sq += nn * nn;
    }
    const double mean = acc / static_cast<double>(N);
    const double se = std::sqrt(
        std::max(0.0, acc_sq / static_cast<double>(N) - mean * mean) / static_cast<double>(N));
    const double envelope =
        theory::blend_second_moment_envelope(d, b, prob.lipschitz, prob.sigma_sq, mu, 1, grad.squaredNorm(),
                               (x_k - x_0).squaredNorm());
    if (mean > envelope + 5.0 * se) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Shared runs for criteria 6 and 7 (synthetic preset, calibrated settings).
struct PresetRuns {
  std::vector<double> gn_b1, gn_b10, gn_b40;
  std::vector<std::vector<double>> loss_svrg40, loss_ave, loss_coord, loss_sgd;
};

PresetRuns run_preset_experiments() {
  const int d = 145, m = 50;
  const long long T = 2500;
  const NllsProblem train = NllsProblem::synthetic_preset(42, 2.0).first;
  const Objective obj = train.objective();
  const double eta = 10.0 / d;
  const double eta_sgd = 10.0 * std::min(1.0 / d, 1.0 / std::sqrt(double(d) * double(T)));
  const double mu = 1.0 / std::sqrt(double(d) * double(T));

  auto run = [&](Algorithm algo, EstimatorSpec est, int b, double eta_use, std::uint64_t seed,
                 std::vector<double>* losses) {
    RunConfig cfg;
    cfg.T = T;
    cfg.m = m;
    cfg.eta = {eta_use};
    cfg.b = b;
    cfg.mode = SamplingMode::WithoutReplacement;
    cfg.estimator = est;
    cfg.x0 = Vec::Zero(d);
    cfg.seed = seed;
    cfg.output_rule = OutputRule::LastIterate;
    cfg.log_grad_norm = false;
    Objective o = obj;
    o.reset_queries();
    const RunTrace tr = run_algorithm(algo, cfg, o);
    if (losses)
      for (const TraceRecord& rec : tr.records) losses->push_back(rec.loss);
    return *o.metric_grad_norm_sq(tr.output_point);
  };

  PresetRuns out;
  for (int s = 1; s <= 10; ++s) {
    const std::uint64_t seed = 1000 + s;
    out.gn_b1.push_back(run(Algorithm::ZoSvrg, EstimatorSpec::rand_est(mu), 1, eta, seed, nullptr));
    out.gn_b10.push_back(
        run(Algorithm::ZoSvrg, EstimatorSpec::rand_est(mu), 10, eta, seed, nullptr));
    out.loss_svrg40.emplace_back();
    out.gn_b40.push_back(
        run(Algorithm::ZoSvrg, EstimatorSpec::rand_est(mu), 40, eta, seed, &out.loss_svrg40.back()));
    out.loss_ave.emplace_back();
    run(Algorithm::ZoSvrg, EstimatorSpec::avg_rand_est(mu, 10), 40, eta, seed,
        &out.loss_ave.back());
    out.loss_coord.emplace_back();
    run(Algorithm::ZoSvrg, EstimatorSpec::coord_est(mu, d), 40, eta, seed, &out.loss_coord.back());
    out.loss_sgd.emplace_back();
    run(Algorithm::ZoSgd, EstimatorSpec::rand_est(mu), 40, eta_sgd, seed, &out.loss_sgd.back());
  }
  return out;
}

// 6. Plateau effect: mean final ||grad f(xbar)||^2 strictly decreases in b.
bool criterion6(const PresetRuns& runs) {
  const double g1 = mean_se(runs.gn_b1).mean;
  const double g10 = mean_se(runs.gn_b10).mean;
  const double g40 = mean_se(runs.gn_b40).mean;
  std::printf("      b=1: %.6g  b=10: %.6g  b=40: %.6g\n", g1, g10, g40);
  return g1 > g10 && g10 > g40;
}

// 7. Iteration-complexity ordering at the 1.2x-best-loss threshold.
bool criterion7(const PresetRuns& runs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto* set : {&runs.loss_svrg40, &runs.loss_ave, &runs.loss_coord, &runs.loss_sgd})
    for (const auto& trace : *set)
      for (double v : trace) best = std::min(best, v);
  const double threshold = 1.2 * best;

  auto iters_to = [&](const std::vector<std::vector<double>>& set) {
    std::vector<double> hits;
    for (const auto& trace : set) {
      double hit = static_cast<double>(trace.size());
      for (std::size_t k = 0; k < trace.size(); ++k)
        if (trace[k] <= threshold) {
          hit = static_cast<double>(k);
          break;
        }
      hits.push_back(hit);
    }
    return mean_se(hits).mean;
  };
  const double coord = iters_to(runs.loss_coord);
  const double ave = iters_to(runs.loss_ave);
  const double svrg = iters_to(runs.loss_svrg40);
  const double sgd = iters_to(runs.loss_sgd);
  std::printf("      threshold=%.5g  coord=%.1f  ave(q=10)=%.1f  zo-svrg(b=40)=%.1f  zo-sgd=%.1f\n",
              threshold, coord, ave, svrg, sgd);
  // The race must be informative: the threshold sits below the common start.
  if (threshold >= runs.loss_svrg40[0][0]) return false;
  return coord <= ave && ave <= svrg && svrg <= sgd;
}

// ---------------------------------------------------------------------------
// 8. Query accounting equals the documented closed forms, exactly.
bool criterion8() {
  const int n = 6, d = 4;
  const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(917, n, d);
  const Objective proto = prob.objective();

  struct Case {
    Algorithm algo;
    EstimatorSpec est;
    long long T;
    int m, b;
  };
  const std::vector<Case> cases = {
      {Algorithm::ZoSvrg, EstimatorSpec::rand_est(1e-3), 40, 10, 2},
      {Algorithm::ZoSvrg, EstimatorSpec::avg_rand_est(1e-3, 5), 40, 10, 2},
      {Algorithm::ZoSvrg, EstimatorSpec::coord_est(1e-3, d), 40, 10, 2},
      {Algorithm::ZoSvrg, EstimatorSpec::rand_est(1e-3), 7, 3, 2},  // truncated epoch
      {Algorithm::ZoSgd, EstimatorSpec::rand_est(1e-3), 25, 5, 3},
      {Algorithm::ZoSgd, EstimatorSpec::avg_rand_est(1e-3, 4), 25, 5, 3},
      {Algorithm::Svrg, EstimatorSpec::rand_est(1e-3), 20, 5, 2},
      {Algorithm::Sgd, EstimatorSpec::rand_est(1e-3), 20, 5, 2},
  };
  for (const Case& c : cases) {
    Objective obj = proto;
    obj.reset_queries();
    RunConfig cfg;
    cfg.T = c.T;
    cfg.m = c.m;
    cfg.eta = {1e-3};
    cfg.b = c.b;
    cfg.mode = SamplingMode::WithoutReplacement;
    cfg.estimator = c.est;
    cfg.x0 = Vec::Zero(d);
    cfg.seed = 3;
    const RunTrace tr = run_algorithm(c.algo, cfg, obj);
    const long long expect = closed_form_queries(c.algo, c.est, n, d, c.T, c.m, c.b);
    if (tr.total_queries != expect) return false;
    if (obj.queries() != expect) return false;
    if (!tr.records.empty() && tr.records.back().queries != expect) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 9. The convergence bound with exact L, sigma^2 under the simplified-rate
//    setting (rho = 1/600) is finite, gamma-positive, and dominates 20 runs.
bool criterion9() {
  const int n = 8, d = 10, b = 2;
  const QuadraticSumProblem prob = QuadraticSumProblem::shared_hessian(919, n, d);
  const Objective obj = prob.objective();
  const double rho = 1.0 / 600.0;
  const int S = 2;

  const theory::RateSetting set =
      theory::simplified_rate_setting(theory::Variant::Rand, d, prob.lipschitz, rho, 1);
  const long long T = static_cast<long long>(S) * set.m;
  // mu depends on T; recompute at the final horizon.
  const double mu = 1.0 / std::sqrt(static_cast<double>(d) * static_cast<double>(T));

  theory::TheoryParams tp;
  tp.variant = theory::Variant::Rand;
  tp.d = d;
  tp.b = b;
  tp.n = n;
  tp.mode = SamplingMode::WithoutReplacement;
  tp.mu = mu;
  tp.eta = {set.eta};
  tp.beta = {set.beta};
  tp.m = set.m;
  tp.T = T;
  const theory::SmoothnessParams smooth{prob.lipschitz, prob.sigma_sq};
  const theory::CoefficientTrace coeffs = theory::coefficients(tp, smooth);
  if (!coeffs.gamma_positive) return false;

  const Vec x0 = Vec::Zero(d);
  const double f0_minus_fstar = obj.metric_loss(x0) - prob.optimal_value();
  const double bound = theory::convergence_bound(tp, coeffs, f0_minus_fstar, smooth);
  if (!std::isfinite(bound)) return false;

  std::vector<double> gns;
  for (int s = 1; s <= 20; ++s) {
    RunConfig cfg;
    cfg.T = T;
    cfg.m = set.m;
    cfg.eta = {set.eta};
    cfg.b = b;
    cfg.mode = SamplingMode::WithoutReplacement;
    cfg.estimator = EstimatorSpec::rand_est(mu);
    cfg.x0 = x0;
    cfg.seed = 2200 + s;
    cfg.output_rule = OutputRule::UniformRandomIterate;
    cfg.log_grad_norm = false;
    Objective o = obj;
    const RunTrace tr = run_zo_svrg(cfg, o);
    gns.push_back(*o.metric_grad_norm_sq(tr.output_point));
  }
  const double empirical = mean_se(gns).mean;
  std::printf("      gamma_bar=%.3g  bound=%.6g  empirical mean=%.6g\n", coeffs.gamma_bar, bound,
              empirical);
  return bound >= empirical;
}

// ---------------------------------------------------------------------------
// 10. Control-variate identities.
bool criterion10() {
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const int N = 20 + static_cast<int>(rng.below(200));
    const int d = 1 + static_cast<int>(rng.below(5));
    const double mix = 2.0 * rng.uniform() - 0.5;
    std::vector<Vec> g0, c;
    for (int i = 0; i < N; ++i) {
      Vec g(d), noise(d);
      for (int j = 0; j < d; ++j) {
        g[j] = rng.normal();
        noise[j] = rng.normal();
      }
      g0.push_back(g);
      c.push_back(mix * g + 0.4 * noise);
    }
    const theory::ControlVariateReport rep_out = theory::control_variate_analysis(g0, c);
    const double lhs = rep_out.variance_ratio;
    const double rhs = 1.0 - rep_out.rho_corr * rep_out.rho_corr;
    if (std::abs(lhs - rhs) > 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)})) return false;

    const theory::ControlVariateReport self = theory::control_variate_analysis(g0, g0);
    if (std::abs(self.eta_star - 1.0) > 1e-12) return false;
    if (std::abs(self.variance_ratio) > 1e-12) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// 11. Experiment determinism: equal seeds give bytewise-identical traces.
bool criterion11() {
  namespace zc = zokit::cli;
  const fs::path base = fs::path("acceptance_out");
  fs::remove_all(base);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };

  zc::ExperimentConfig cfg;
  cfg.problem = "quadratic";
  cfg.problem_seed = 7;
  cfg.n = 8;
  cfg.d = 5;
  cfg.algo = "zo-svrg-ave";
  cfg.q = 3;
  cfg.T = 30;
  cfg.m = 10;
  cfg.b = 2;
  cfg.eta = 0.02;
  cfg.mu = 1e-3;
  cfg.seeds = {11, 12};
  cfg.cadence = zc::TraceCadence::EveryIteration;

  cfg.out_dir = (base / "a").string();
  const zc::ExperimentSummary s1 = zc::run_experiment(cfg);
  cfg.out_dir = (base / "b").string();
  const zc::ExperimentSummary s2 = zc::run_experiment(cfg);

  bool ok = s1.per_seed.size() == s2.per_seed.size();
  for (std::size_t i = 0; ok && i < s1.per_seed.size(); ++i) {
    const std::string ta = slurp(base / "a" / s1.per_seed[i].trace_file);
    const std::string tb = slurp(base / "b" / s2.per_seed[i].trace_file);
    ok = !ta.empty() && ta == tb;
  }
  fs::remove_all(base);
  return ok;
}

}  // namespace

int main() {
  // Criteria 1, 2 and 6 carry runtime budgets (30 s, 30 s, 10 min); the
  // timer readings below enforce them.
  {
    Timer t;
    const bool ok = criterion1();
    const double sec = t.seconds();
    report(1, "rand estimator unbiasedness (1e6 draws, 5 SE componentwise)", ok && sec < 30.0,
           sec);
  }
  {
    Timer t;
    const bool ok = criterion2();
    const double sec = t.seconds();
    report(2, "rand second moment within 2d||g||^2 + mu^2 L^2 d^2 / 2", ok && sec < 30.0, sec);
  }
  {
    Timer t;
    const bool ok = criterion3();
    report(3, "coord exactness on quadratics and deterministic error bound", ok, t.seconds());
  }
  {
    Timer t;
    const bool ok = criterion4();
    report(4, "first-order blend unbiasedness by batch enumeration", ok, t.seconds());
  }
  {
    Timer t;
    const bool ok = criterion5();
    report(5, "blended second moment under the envelope (3 point pairs)", ok, t.seconds());
  }
  {
    Timer t;
    const PresetRuns runs = run_preset_experiments();
    const double prep = t.seconds();
    const bool ok6 = criterion6(runs);
    report(6, "plateau error strictly decreasing in b on the synthetic preset",
           ok6 && prep < 600.0, prep);
    Timer t7;
    const bool ok7 = criterion7(runs);
    report(7, "iterations-to-threshold: coord <= ave <= zo-svrg(b=40) <= zo-sgd", ok7,
           prep + t7.seconds());
  }
  {
    Timer t;
    const bool ok = criterion8();
    report(8, "query totals equal the closed-form costs (integer equality)", ok, t.seconds());
  }
  {
    Timer t;
    const bool ok = criterion9();
    report(9, "convergence bound finite and above the empirical mean (20 seeds)", ok, t.seconds());
  }
  {
    Timer t;
    const bool ok = criterion10();
    report(10, "control-variate identities to 1e-12", ok, t.seconds());
  }
  {
    Timer t;
    const bool ok = criterion11();
    report(11, "bytewise-identical traces under equal seeds", ok, t.seconds());
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

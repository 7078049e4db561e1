#include "zokit/optimizers.hpp"

#include <cmath>

namespace zokit {

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "zo-sgd") return Algorithm::ZoSgd;
  if (name == "zo-svrg" || name == "zo-svrg-ave" || name == "zo-svrg-coord")
    return Algorithm::ZoSvrg;
  if (name == "svrg") return Algorithm::Svrg;
  if (name == "sgd") return Algorithm::Sgd;
  throw ConfigError("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm algo, EstimatorKind kind) {
  switch (algo) {
    case Algorithm::ZoSgd: return "zo-sgd";
    case Algorithm::Svrg: return "svrg";
    case Algorithm::Sgd: return "sgd";
    case Algorithm::ZoSvrg:
      switch (kind) {
        case EstimatorKind::Rand: return "zo-svrg";
        case EstimatorKind::AvgRand: return "zo-svrg-ave";
        case EstimatorKind::Coord: return "zo-svrg-coord";
      }
  }
  return "?";
}

void RunConfig::validate(const Objective& obj) const {
  if (T < 1) throw ConfigError("run needs T >= 1 iterations");
  if (m < 1) throw ConfigError("run needs epoch length m >= 1");
  if (b < 1) throw ConfigError("run needs mini-batch size b >= 1");
  if (mode == SamplingMode::WithoutReplacement && b > obj.num_components())
    throw ConfigError("without-replacement batches need b <= n");
  if (eta.empty() || (eta.size() != 1 && static_cast<int>(eta.size()) != m))
    throw ConfigError("eta schedule must be constant or length m");
  for (double e : eta)
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("step sizes must be finite and >= 0");
  if (x0.size() != obj.dim()) throw ConfigError("x0 dimension does not match objective");
  if (!x0.allFinite()) throw ConfigError("x0 must be finite");
  estimator.validate(obj.dim());
}

namespace {

struct Runner {
  const RunConfig& cfg;
  const Objective& obj;
  RunTrace trace;
  long long base_queries;

  Runner(const RunConfig& c, const Objective& o) : cfg(c), obj(o) {
    cfg.validate(obj);
    base_queries = obj.queries();
  }

  long long spent() const { return obj.queries() - base_queries; }

  // Record the pre-update iterate with the queries consumed so far
  // (including this iteration's estimates). Metrics use the uncounted
  // instrumentation channel. Returns false (recording nothing, so the trace
  // stays finite) when the divergence guard trips.
  bool record(int epoch, long long iter, const Vec& x) {
    TraceRecord rec;
    rec.epoch = epoch;
    rec.iter = iter;
    rec.loss = obj.metric_loss(x);
    if (cfg.log_grad_norm) {
      if (auto g = obj.metric_grad_norm_sq(x)) {
        rec.grad_norm_sq = *g;
        rec.has_grad_norm = true;
      }
    }
    rec.queries = spent();
    const bool ok = std::isfinite(rec.loss) && x.allFinite() &&
                    std::abs(rec.loss) <= cfg.divergence_guard &&
                    x.lpNorm<Eigen::Infinity>() <= cfg.divergence_guard;
    if (!ok) return false;
    trace.records.push_back(rec);
    trace.iterates.push_back(x);
    return true;
  }

  RunTrace finish(Vec x_final, bool diverged) {
    trace.diverged = diverged;
    if (diverged) {
      trace.final_point = trace.iterates.empty() ? cfg.x0 : trace.iterates.back();
    } else {
      trace.final_point = std::move(x_final);
    }
    trace.total_queries = spent();
    if (trace.iterates.empty()) {
      trace.output_point = trace.final_point;
    } else {
      Rng out_rng = Rng(cfg.seed).substream(stream_role::kOutput);
      trace.output_point = select_output(trace, cfg.output_rule, out_rng);
    }
    return std::move(trace);
  }
};

}  // namespace

Vec zo_svrg_blend(const EstimatorSpec& spec, const Objective& obj, const MiniBatch& batch,
                  const Vec& x_k, const Vec& x_anchor, const Vec& g_anchor, Rng& dir_rng) {
  Vec v = g_anchor;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (int i : batch.indices) {
    const std::vector<Vec> dirs = draw_directions(spec, obj.dim(), dir_rng);
    const GradientEstimate at_k = estimate_component_with_directions(spec, obj, i, x_k, dirs);
    const GradientEstimate at_0 = estimate_component_with_directions(spec, obj, i, x_anchor, dirs);
    v += inv_b * (at_k.grad - at_0.grad);
  }
  return v;
}

RunTrace run_zo_svrg(const RunConfig& cfg, const Objective& obj) {
  Runner run(cfg, obj);
  GradientTrapGuard trap(obj);
  Rng root(cfg.seed);

  Vec x_tilde = cfg.x0;
  Vec x = cfg.x0;
  long long iter = 0;
  bool diverged = false;
  const int S = cfg.epochs();

  try {
    for (int s = 1; s <= S && iter < cfg.T && !diverged; ++s) {
      // Anchor estimate over the full component set, fresh directions.
      Rng full_rng = root.substream(stream_role::kFullPass, static_cast<std::uint64_t>(s));
      Vec g_anchor = Vec::Zero(obj.dim());
      for (int i = 0; i < obj.num_components(); ++i)
        g_anchor += estimate_component(cfg.estimator, obj, i, x_tilde, full_rng).grad;
      g_anchor /= static_cast<double>(obj.num_components());

      x = x_tilde;
      const long long steps = std::min<long long>(cfg.m, cfg.T - iter);
      for (long long k = 0; k < steps; ++k, ++iter) {
        Rng batch_rng = root.substream(stream_role::kBatch, static_cast<std::uint64_t>(s),
                                       static_cast<std::uint64_t>(k));
        Rng dir_rng = root.substream(stream_role::kDirection, static_cast<std::uint64_t>(s),
                                     static_cast<std::uint64_t>(k));
        const MiniBatch batch = draw_minibatch(batch_rng, obj.num_components(), cfg.b, cfg.mode);
        Vec v;
        if (cfg.shared_step_directions) {
          v = zo_svrg_blend(cfg.estimator, obj, batch, x, x_tilde, g_anchor, dir_rng);
        } else {
          v = g_anchor + estimate_batch(cfg.estimator, obj, batch, x, dir_rng).grad -
              estimate_batch(cfg.estimator, obj, batch, x_tilde, dir_rng).grad;
        }
        if (!run.record(s, iter, x)) {
          diverged = true;
          break;
        }
        x -= cfg.eta_at(k) * v;
      }
      x_tilde = x;
    }
  } catch (const EvalError&) {
    diverged = true;  // guard semantics: keep the partial trace
  }
  return run.finish(x, diverged);
}

RunTrace run_zo_sgd(const RunConfig& cfg, const Objective& obj) {
  Runner run(cfg, obj);
  GradientTrapGuard trap(obj);
  Rng root(cfg.seed);

  Vec x = cfg.x0;
  bool diverged = false;
  try {
    for (long long t = 0; t < cfg.T; ++t) {
      Rng batch_rng = root.substream(stream_role::kBatch, 0, static_cast<std::uint64_t>(t));
      Rng dir_rng = root.substream(stream_role::kDirection, 0, static_cast<std::uint64_t>(t));
      const MiniBatch batch = draw_minibatch(batch_rng, obj.num_components(), cfg.b, cfg.mode);
      const GradientEstimate est = estimate_batch(cfg.estimator, obj, batch, x, dir_rng);
      if (!run.record(static_cast<int>(t / cfg.m) + 1, t, x)) {
        diverged = true;
        break;
      }
      x -= cfg.eta_at(t % cfg.m) * est.grad;
    }
  } catch (const EvalError&) {
    diverged = true;
  }
  return run.finish(x, diverged);
}

RunTrace run_svrg(const RunConfig& cfg, const Objective& obj) {
  if (!obj.has_gradient())
    throw ConfigError("first-order SVRG needs an objective with true gradients");
  Runner run(cfg, obj);
  Rng root(cfg.seed);

  Vec x_tilde = cfg.x0;
  Vec x = cfg.x0;
  long long iter = 0;
  bool diverged = false;
  const int S = cfg.epochs();

  for (int s = 1; s <= S && iter < cfg.T && !diverged; ++s) {
    const Vec g_anchor = obj.full_gradient(x_tilde);
    x = x_tilde;
    const long long steps = std::min<long long>(cfg.m, cfg.T - iter);
    for (long long k = 0; k < steps; ++k, ++iter) {
      Rng batch_rng = root.substream(stream_role::kBatch, static_cast<std::uint64_t>(s),
                                     static_cast<std::uint64_t>(k));
      const MiniBatch batch = draw_minibatch(batch_rng, obj.num_components(), cfg.b, cfg.mode);
      Vec v = g_anchor;
      const double inv_b = 1.0 / static_cast<double>(batch.size());
      for (int i : batch.indices)
        v += inv_b * (obj.component_gradient(i, x) - obj.component_gradient(i, x_tilde));
      if (!run.record(s, iter, x)) {
        diverged = true;
        break;
      }
      x -= cfg.eta_at(k) * v;
    }
    x_tilde = x;
  }
  return run.finish(x, diverged);
}

RunTrace run_sgd(const RunConfig& cfg, const Objective& obj) {
  if (!obj.has_gradient())
    throw ConfigError("first-order SGD needs an objective with true gradients");
  Runner run(cfg, obj);
  Rng root(cfg.seed);

  Vec x = cfg.x0;
  bool diverged = false;
  for (long long t = 0; t < cfg.T; ++t) {
    Rng batch_rng = root.substream(stream_role::kBatch, 0, static_cast<std::uint64_t>(t));
    const MiniBatch batch = draw_minibatch(batch_rng, obj.num_components(), cfg.b, cfg.mode);
    Vec g = Vec::Zero(obj.dim());
    for (int i : batch.indices) g += obj.component_gradient(i, x);
    g /= static_cast<double>(batch.size());
    if (!run.record(static_cast<int>(t / cfg.m) + 1, t, x)) {
      diverged = true;
      break;
    }
    x -= cfg.eta_at(t % cfg.m) * g;
  }
  return run.finish(x, diverged);
}

RunTrace run_algorithm(Algorithm algo, const RunConfig& cfg, const Objective& obj) {
  switch (algo) {
    case Algorithm::ZoSgd: return run_zo_sgd(cfg, obj);
    case Algorithm::ZoSvrg: return run_zo_svrg(cfg, obj);
    case Algorithm::Svrg: return run_svrg(cfg, obj);
    case Algorithm::Sgd: return run_sgd(cfg, obj);
  }
  throw ConfigError("unhandled algorithm");
}

Vec select_output(const RunTrace& trace, OutputRule rule, Rng& rng) {
  if (trace.iterates.empty()) throw ConfigError("cannot select output from an empty trace");
  if (rule == OutputRule::LastIterate) return trace.final_point;
  const std::uint64_t idx = rng.below(trace.iterates.size());
  return trace.iterates[static_cast<std::size_t>(idx)];
}

long long closed_form_queries(Algorithm algo, const EstimatorSpec& est, int n, int d,
                              long long T, int m, int b) {
  const long long cpc = est.queries_per_component(d);
  const long long S = (T + m - 1) / m;
  switch (algo) {
    case Algorithm::ZoSvrg: return cpc * (static_cast<long long>(n) * S + 2LL * b * T);
    case Algorithm::ZoSgd: return cpc * static_cast<long long>(b) * T;
    case Algorithm::Svrg:
    case Algorithm::Sgd: return 0;
  }
  return 0;
}

}  // namespace zokit

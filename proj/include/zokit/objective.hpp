#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>

#include "zokit/errors.hpp"

namespace zokit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Finite-sum black-box objective f(x) = (1/n) sum_i f_i(x).
///
/// Only component evaluations are exposed to optimizers; every call to
/// eval_component bumps the atomic query counter by exactly one. An optional
/// per-component true-gradient evaluator exists for instrumentation and for
/// the first-order reference algorithms. Zeroth-order runs arm the gradient
/// trap for their duration: any component_gradient/full_gradient call while
/// the trap is armed throws GradientAccessError. Metric accessors
/// (metric_loss, metric_grad_norm_sq) bypass both the counter and the trap;
/// they exist for trace logging only and must never feed back into updates.
class Objective {
 public:
  using ComponentFn = std::function<double(int, const Vec&)>;
  using ComponentGradFn = std::function<Vec(int, const Vec&)>;

  Objective(int n, int d, ComponentFn component)
      : n_(n), d_(d), component_(std::move(component)) {
    if (n_ < 1) throw ConfigError("objective needs n >= 1 components");
    if (d_ < 1) throw ConfigError("objective needs dimension d >= 1");
  }

  Objective(const Objective& other)
      : n_(other.n_),
        d_(other.d_),
        component_(other.component_),
        gradient_(other.gradient_),
        smoothness_(other.smoothness_),
        variance_bound_(other.variance_bound_),
        queries_(other.queries_.load()),
        trap_depth_(other.trap_depth_.load()) {}

  Objective& with_gradient(ComponentGradFn g) {
    gradient_ = std::move(g);
    return *this;
  }
  Objective& with_smoothness(double L) {
    smoothness_ = L;
    return *this;
  }
  Objective& with_variance_bound(double sigma_sq) {
    variance_bound_ = sigma_sq;
    return *this;
  }

  int num_components() const { return n_; }
  int dim() const { return d_; }
  std::optional<double> smoothness() const { return smoothness_; }
  std::optional<double> variance_bound() const { return variance_bound_; }
  bool has_gradient() const { return static_cast<bool>(gradient_); }

  /// Counted black-box channel. Throws EvalError on a non-finite value.
  double eval_component(int i, const Vec& x) const {
    check_point(i, x);
    queries_.fetch_add(1, std::memory_order_relaxed);
    const double v = component_(i, x);
    if (!std::isfinite(v)) throw EvalError(i, x, v);
    return v;
  }

  /// True per-component gradient. Guarded by the black-box trap.
  Vec component_gradient(int i, const Vec& x) const {
    if (trap_depth_.load(std::memory_order_relaxed) > 0)
      throw GradientAccessError("true-gradient access during a zeroth-order run");
    if (!gradient_) throw ConfigError("objective exposes no true-gradient evaluator");
    check_point(i, x);
    return gradient_(i, x);
  }

  Vec full_gradient(const Vec& x) const {
    Vec g = component_gradient(0, x);
    for (int i = 1; i < n_; ++i) g += component_gradient(i, x);
    return g / static_cast<double>(n_);
  }

  /// Instrumentation: mean loss, outside the query budget.
  double metric_loss(const Vec& x) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += component_(i, x);
    return s / static_cast<double>(n_);
  }

  /// Instrumentation: ||grad f(x)||^2 when a gradient evaluator exists.
  std::optional<double> metric_grad_norm_sq(const Vec& x) const {
    if (!gradient_) return std::nullopt;
    Vec g = gradient_(0, x);
    for (int i = 1; i < n_; ++i) g += gradient_(i, x);
    g /= static_cast<double>(n_);
    return g.squaredNorm();
  }

  long long queries() const { return queries_.load(std::memory_order_relaxed); }
  void reset_queries() const { queries_.store(0, std::memory_order_relaxed); }

  void arm_gradient_trap() const { trap_depth_.fetch_add(1, std::memory_order_relaxed); }
  void disarm_gradient_trap() const { trap_depth_.fetch_sub(1, std::memory_order_relaxed); }
  bool gradient_trap_armed() const { return trap_depth_.load(std::memory_order_relaxed) > 0; }

 private:
  void check_point(int i, const Vec& x) const {
    if (i < 0 || i >= n_) throw ConfigError("component index out of range");
    if (x.size() != d_) throw ConfigError("point dimension does not match objective");
  }

  int n_;
  int d_;
  ComponentFn component_;
  ComponentGradFn gradient_;
  std::optional<double> smoothness_;
  std::optional<double> variance_bound_;
  mutable std::atomic<long long> queries_{0};
  mutable std::atomic<int> trap_depth_{0};
};

/// Scoped arming of the black-box trap (nestable).
class GradientTrapGuard {
 public:
  explicit GradientTrapGuard(const Objective& obj) : obj_(obj) { obj_.arm_gradient_trap(); }
  ~GradientTrapGuard() { obj_.disarm_gradient_trap(); }
  GradientTrapGuard(const GradientTrapGuard&) = delete;
  GradientTrapGuard& operator=(const GradientTrapGuard&) = delete;

 private:
  const Objective& obj_;
};

}  // namespace zokit

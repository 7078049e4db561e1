#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zokit/objective.hpp"
#include "zokit/rng.hpp"

namespace zokit {

/// Non-linear least squares over a logistic link:
/// f_i(x) = (y_i - phi(x; a_i))^2 with phi(x; a) = 1/(1 + exp(-a.x)).
/// The true gradient is attached for instrumentation only.
struct NllsProblem {
  Mat features;            // n x d
  Eigen::VectorXi labels;  // n entries in {0, 1}

  int n() const { return static_cast<int>(features.rows()); }
  int d() const { return static_cast<int>(features.cols()); }

  Objective objective() const;

  /// Balanced label clusters: labels come first, then features are standard
  /// Gaussian shifted by +-(separation/2) along a planted unit direction.
  /// separation = 0 makes features carry no label information.
  static NllsProblem synthetic(std::uint64_t seed, int n, int d, double separation);

  /// The d = 145, n = 500 train / 500 test shape used by the experiments.
  static std::pair<NllsProblem, NllsProblem> synthetic_preset(std::uint64_t seed = 42,
                                                              double separation = 2.0);

  /// Plain-text interchange: header row, then one comma-separated sample per
  /// line, label first and d feature columns after. No quoting, UTF-8.
  void save_csv(const std::string& path) const;
  static NllsProblem load_csv(const std::string& path);
};

/// Finite sum of quadratics f_i(x) = (1/2)(x - c_i)' A_i (x - c_i) with
/// symmetric PSD A_i. L equals max_i lambda_max(A_i) exactly. sigma_sq is the
/// max over a documented reference grid of the gradient variance
/// (1/n) sum_i ||grad f_i - grad f||^2; with a shared Hessian that variance is
/// constant in x, so the reported value is exact and A2 holds globally.
struct QuadraticSumProblem {
  std::vector<Mat> hessians;  // size 1 (shared) or n
  std::vector<Vec> centers;   // size n
  double lipschitz = 0.0;
  double sigma_sq = 0.0;
  // Reference grid used for sigma_sq: `grid_points` uniform draws from the box
  // grid_center +- grid_halfwidth per coordinate, seeded by grid_seed.
  Vec grid_center;
  double grid_halfwidth = 2.0;
  int grid_points = 1000;
  std::uint64_t grid_seed = 1234;

  int n() const { return static_cast<int>(centers.size()); }
  int d() const { return static_cast<int>(centers.empty() ? 0 : centers[0].size()); }
  const Mat& hessian(int i) const { return hessians.size() == 1 ? hessians[0] : hessians[i]; }

  Vec component_grad(int i, const Vec& x) const { return hessian(i) * (x - centers[i]); }
  double grad_variance_at(const Vec& x) const;

  Objective objective() const;

  static QuadraticSumProblem shared_hessian(std::uint64_t seed, int n, int d);
  static QuadraticSumProblem varied_hessians(std::uint64_t seed, int n, int d);

  /// min_x f(x) for the bound tests (solved from the stationarity condition).
  double optimal_value() const;
};

/// Score oracle for the attack loss: maps a point in image space to K class
/// scores (log-probabilities for the built-in softmax model).
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int num_classes() const = 0;
  virtual Vec scores(const Vec& z) const = 0;
};

/// Linear softmax scores: log_softmax(W z + bias). Weights are fixed at
/// construction (seeded Gaussian), so the model is deterministic and needs no
/// training stack.
class ToySoftmaxClassifier : public Classifier {
 public:
  ToySoftmaxClassifier(Mat weights, Vec bias);
  static std::shared_ptr<ToySoftmaxClassifier> seeded(std::uint64_t seed, int d, int k);

  int num_classes() const override { return static_cast<int>(bias_.size()); }
  Vec scores(const Vec& z) const override;

  const Mat& weights() const { return weights_; }
  const Vec& bias() const { return bias_; }

 private:
  Mat weights_;  // K x d
  Vec bias_;     // K
};

using ClassifierFactory = std::function<std::shared_ptr<Classifier>(int d, int k, std::uint64_t seed)>;

/// Plug-in registry: scores-for-point callables by name. "toy-softmax" is
/// pre-registered.
void register_classifier(const std::string& name, ClassifierFactory factory);
std::shared_ptr<Classifier> make_classifier(const std::string& name, int d, int k,
                                            std::uint64_t seed);

/// Universal-perturbation attack loss against a black-box classifier:
///   f_i(x) = c * max{F_{y_i}(h_i(x)) - max_{j != y_i} F_j(h_i(x)), 0}
///          + ||h_i(x) - a_i||^2,
/// h_i(x) = 0.5 tanh(atanh(2 a_i) + x) elementwise, which keeps the
/// adversarial example inside [-0.5, 0.5]^d by construction.
struct AttackProblem {
  Mat images;              // n x d, entries strictly inside (-0.5, 0.5)
  Eigen::VectorXi labels;  // original class per image
  std::shared_ptr<const Classifier> classifier;
  double reg_weight = 1.0;  // c

  int n() const { return static_cast<int>(images.rows()); }
  int d() const { return static_cast<int>(images.cols()); }

  void validate() const;

  Vec adversarial_example(int i, const Vec& x) const;
  double eval_loss(int i, const Vec& x) const;
  bool attack_succeeds(int i, const Vec& x) const;

  /// Mean over images of ||h_i(x) - a_i||_2; restricted to successfully
  /// misclassified images when successful_only is set (empty when none are).
  std::optional<double> mean_distortion(const Vec& x, bool successful_only) const;

  Objective objective() const;

  /// n images, d pixels, K classes, all classified "correctly" by definition
  /// (labels are the toy model's own argmax), strictly inside the pixel box.
  static AttackProblem toy(std::uint64_t seed, int n, int d, int k);
};

}  // namespace zokit

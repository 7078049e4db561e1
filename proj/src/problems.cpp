#include "zokit/problems.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "zokit/sampling.hpp"

namespace zokit {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::shared_ptr<Mat> shared_matrix(Mat m) { return std::make_shared<Mat>(std::move(m)); }

}  // namespace

// ---------------------------------------------------------------------------
// NllsProblem

Objective NllsProblem::objective() const {
  auto A = shared_matrix(features);
  auto y = std::make_shared<Eigen::VectorXi>(labels);
  Objective obj(n(), d(), [A, y](int i, const Vec& x) {
    const double phi = logistic(A->row(i).dot(x));
    const double r = static_cast<double>((*y)[i]) - phi;
    return r * r;
  });
  obj.with_gradient([A, y](int i, const Vec& x) -> Vec {
    const double phi = logistic(A->row(i).dot(x));
    const double coef = 2.0 * (phi - static_cast<double>((*y)[i])) * phi * (1.0 - phi);
    return coef * A->row(i).transpose();
  });
  return obj;
}

NllsProblem NllsProblem::synthetic(std::uint64_t seed, int n, int d, double separation) {
  if (n < 1 || d < 1) throw ConfigError("synthetic dataset needs n, d >= 1");
  Rng rng(seed);
  Rng dir_rng = rng.substream(1);
  Rng feat_rng = rng.substream(2);
  const Vec planted = sample_unit_sphere(dir_rng, d);

  NllsProblem p;
  p.features.resize(n, d);
  p.labels.resize(n);
  // Features are scaled by 1/sqrt(d) so sample norms are O(1) at any
  // dimension, keeping the logistic link in its active range.
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < n; ++i) {
    p.labels[i] = i % 2;  // balanced by construction
    const double shift = (p.labels[i] == 1 ? 0.5 : -0.5) * separation;
    for (int j = 0; j < d; ++j)
      p.features(i, j) = scale * (feat_rng.normal() + shift * planted[j]);
  }
  return p;
}

std::pair<NllsProblem, NllsProblem> NllsProblem::synthetic_preset(std::uint64_t seed,
                                                                  double separation) {
  NllsProblem all = synthetic(seed, 1000, 145, separation);
  NllsProblem train, test;
  train.features = all.features.topRows(500);
  train.labels = all.labels.head(500);
  test.features = all.features.bottomRows(500);
  test.labels = all.labels.tail(500);
  return {train, test};
}

void NllsProblem::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  out << "label";
  for (int j = 0; j < d(); ++j) out << ",x" << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < n(); ++i) {
    out << labels[i];
    for (int j = 0; j < d(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", features(i, j));
      out << buf;
    }
    out << "\n";
  }
}

NllsProblem NllsProblem::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty: " + path);
  const int d = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (d < 1) throw ConfigError("dataset header needs a label and at least one feature column");

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ',')) throw ConfigError("malformed dataset row");
    const int label = std::stoi(cell);
    if (label != 0 && label != 1) throw ConfigError("labels must be 0 or 1");
    labels.push_back(label);
    int count = 0;
    while (std::getline(ls, cell, ',')) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (count != d) throw ConfigError("dataset row has wrong number of features");
  }
  if (labels.empty()) throw ConfigError("dataset has no samples: " + path);

  NllsProblem p;
  const int n = static_cast<int>(labels.size());
  p.features.resize(n, d);
  p.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    p.labels[i] = labels[i];
    for (int j = 0; j < d; ++j) p.features(i, j) = values[static_cast<std::size_t>(i) * d + j];
  }
  return p;
}

// ---------------------------------------------------------------------------
// QuadraticSumProblem

double QuadraticSumProblem::grad_variance_at(const Vec& x) const {
  Vec mean = Vec::Zero(d());
  for (int i = 0; i < n(); ++i) mean += component_grad(i, x);
  mean /= static_cast<double>(n());
  double acc = 0.0;
  for (int i = 0; i < n(); ++i) acc += (component_grad(i, x) - mean).squaredNorm();
  return acc / static_cast<double>(n());
}

Objective QuadraticSumProblem::objective() const {
  auto self = std::make_shared<QuadraticSumProblem>(*this);
  Objective obj(n(), d(), [self](int i, const Vec& x) {
    const Vec r = x - self->centers[i];
    return 0.5 * r.dot(self->hessian(i) * r);
  });
  obj.with_gradient([self](int i, const Vec& x) { return self->component_grad(i, x); });
  obj.with_smoothness(lipschitz);
  obj.with_variance_bound(sigma_sq);
  return obj;
}

namespace {

Mat random_psd(Rng& rng, int d) {
  Mat B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = rng.normal();
  Mat A = (B.transpose() * B) / static_cast<double>(d);
  A += 0.1 * Mat::Identity(d, d);
  return A;
}

void finish_quadratic(QuadraticSumProblem& p) {
  double L = 0.0;
  for (const Mat& A : p.hessians) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    L = std::max(L, es.eigenvalues().maxCoeff());
  }
  p.lipschitz = L;
  p.grid_center = Vec::Zero(p.d());

  Rng grid_rng(p.grid_seed);
  double worst = 0.0;
  Vec x(p.d());
  for (int g = 0; g < p.grid_points; ++g) {
    for (int j = 0; j < p.d(); ++j)
      x[j] = p.grid_center[j] + (2.0 * grid_rng.uniform() - 1.0) * p.grid_halfwidth;
    worst = std::max(worst, p.grad_variance_at(x));
  }
  p.sigma_sq = worst;
}

}  // namespace

QuadraticSumProblem QuadraticSumProblem::shared_hessian(std::uint64_t seed, int n, int d) {
  if (n < 1 || d < 1) throw ConfigError("quadratic problem needs n, d >= 1");
  Rng rng(seed);
  Rng hess_rng = rng.substream(1);
  Rng center_rng = rng.substream(2);
  QuadraticSumProblem p;
  p.hessians.push_back(random_psd(hess_rng, d));
  for (int i = 0; i < n; ++i) {
    Vec c(d);
    for (int j = 0; j < d; ++j) c[j] = center_rng.normal();
    p.centers.push_back(std::move(c));
  }
  finish_quadratic(p);
  return p;
}

QuadraticSumProblem QuadraticSumProblem::varied_hessians(std::uint64_t seed, int n, int d) {
  if (n < 1 || d < 1) throw ConfigError("quadratic problem needs n, d >= 1");
  Rng rng(seed);
  Rng center_rng = rng.substream(2);
  QuadraticSumProblem p;
  for (int i = 0; i < n; ++i) {
    Rng hess_rng = rng.substream(1, static_cast<std::uint64_t>(i));
    p.hessians.push_back(random_psd(hess_rng, d));
    Vec c(d);
    for (int j = 0; j < d; ++j) c[j] = center_rng.normal();
    p.centers.push_back(std::move(c));
  }
  finish_quadratic(p);
  return p;
}

double QuadraticSumProblem::optimal_value() const {
  // grad f(x*) = (1/n) sum A_i (x* - c_i) = 0  =>  (sum A_i) x* = sum A_i c_i.
  Mat A_sum = Mat::Zero(d(), d());
  Vec rhs = Vec::Zero(d());
  for (int i = 0; i < n(); ++i) {
    A_sum += hessian(i);
    rhs += hessian(i) * centers[i];
  }
  const Vec x_star = A_sum.ldlt().solve(rhs);
  double v = 0.0;
  for (int i = 0; i < n(); ++i) {
    const Vec r = x_star - centers[i];
    v += 0.5 * r.dot(hessian(i) * r);
  }
  return v / static_cast<double>(n());
}

// ---------------------------------------------------------------------------
// Classifiers

ToySoftmaxClassifier::ToySoftmaxClassifier(Mat weights, Vec bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() != bias_.size() || weights_.rows() < 2)
    throw ConfigError("classifier needs K >= 2 rows of weights plus matching bias");
}

std::shared_ptr<ToySoftmaxClassifier> ToySoftmaxClassifier::seeded(std::uint64_t seed, int d,
                                                                   int k) {
  Rng rng(seed);
  Mat W(k, d);
  Vec b(k);
  for (int r = 0; r < k; ++r) {
    b[r] = 0.1 * rng.normal();
    for (int c = 0; c < d; ++c) W(r, c) = rng.normal();
  }
  return std::make_shared<ToySoftmaxClassifier>(std::move(W), std::move(b));
}

Vec ToySoftmaxClassifier::scores(const Vec& z) const {
  Vec s = weights_ * z + bias_;
  const double mx = s.maxCoeff();
  const double lse = mx + std::log((s.array() - mx).exp().sum());
  return s.array() - lse;  // log-probabilities
}

namespace {

std::map<std::string, ClassifierFactory>& classifier_registry() {
  static std::map<std::string, ClassifierFactory> reg = {
      {"toy-softmax",
       [](int d, int k, std::uint64_t seed) { return ToySoftmaxClassifier::seeded(seed, d, k); }},
  };
  return reg;
}

std::mutex& classifier_registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_classifier(const std::string& name, ClassifierFactory factory) {
  std::lock_guard<std::mutex> lock(classifier_registry_mutex());
  classifier_registry()[name] = std::move(factory);
}

std::shared_ptr<Classifier> make_classifier(const std::string& name, int d, int k,
                                            std::uint64_t seed) {
  std::lock_guard<std::mutex> lock(classifier_registry_mutex());
  auto it = classifier_registry().find(name);
  if (it == classifier_registry().end()) throw ConfigError("unknown classifier: " + name);
  return it->second(d, k, seed);
}

// ---------------------------------------------------------------------------
// AttackProblem

void AttackProblem::validate() const {
  if (!classifier) throw ConfigError("attack problem needs a classifier");
  if (labels.size() != images.rows()) throw ConfigError("attack labels/images size mismatch");
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < d(); ++j)
      if (!(std::abs(2.0 * images(i, j)) < 1.0))
        throw ConfigError("image pixels must satisfy |2 a| < 1 (atanh domain)");
}

Vec AttackProblem::adversarial_example(int i, const Vec& x) const {
  Vec h(d());
  for (int j = 0; j < d(); ++j) h[j] = 0.5 * std::tanh(std::atanh(2.0 * images(i, j)) + x[j]);
  return h;
}

double AttackProblem::eval_loss(int i, const Vec& x) const {
  const Vec h = adversarial_example(i, x);
  const Vec s = classifier->scores(h);
  const int y = labels[i];
  double best_other = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < s.size(); ++j)
    if (j != y) best_other = std::max(best_other, s[j]);
  const double hinge = std::max(s[y] - best_other, 0.0);
  return reg_weight * hinge + (h - images.row(i).transpose()).squaredNorm();
}

bool AttackProblem::attack_succeeds(int i, const Vec& x) const {
  const Vec s = classifier->scores(adversarial_example(i, x));
  int argmax = 0;
  for (int j = 1; j < s.size(); ++j)
    if (s[j] > s[argmax]) argmax = j;
  return argmax != labels[i];
}

std::optional<double> AttackProblem::mean_distortion(const Vec& x, bool successful_only) const {
  double acc = 0.0;
  int count = 0;
  for (int i = 0; i < n(); ++i) {
    if (successful_only && !attack_succeeds(i, x)) continue;
    acc += (adversarial_example(i, x) - images.row(i).transpose()).norm();
    ++count;
  }
  if (count == 0) return std::nullopt;
  return acc / static_cast<double>(count);
}

Objective AttackProblem::objective() const {
  validate();
  auto self = std::make_shared<AttackProblem>(*this);
  return Objective(n(), d(), [self](int i, const Vec& x) { return self->eval_loss(i, x); });
}

AttackProblem AttackProblem::toy(std::uint64_t seed, int n, int d, int k) {
  if (n < 1 || d < 1 || k < 2) throw ConfigError("toy attack needs n, d >= 1 and K >= 2 classes");
  Rng rng(seed);
  Rng pix_rng = rng.substream(1);
  AttackProblem p;
  p.classifier = ToySoftmaxClassifier::seeded(rng.substream(2).seed(), d, k);
  p.images.resize(n, d);
  p.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p.images(i, j) = 0.9 * (pix_rng.uniform() - 0.5);
    const Vec s = p.classifier->scores(p.images.row(i).transpose());
    int argmax = 0;
    for (int j = 1; j < k; ++j)
      if (s[j] > s[argmax]) argmax = j;
    p.labels[i] = argmax;  // originally "correctly classified" by definition
  }
  p.validate();
  return p;
}

}  // namespace zokit

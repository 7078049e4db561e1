#pragma once

#include <string>
#include <vector>

#include "zokit/estimators.hpp"
#include "zokit/objective.hpp"
#include "zokit/rng.hpp"
#include "zokit/sampling.hpp"

namespace zokit {

enum class OutputRule { UniformRandomIterate, LastIterate };

enum class Algorithm { ZoSgd, ZoSvrg, Svrg, Sgd };

Algorithm algorithm_from_name(const std::string& name);  // also fixes the estimator kind
std::string algorithm_name(Algorithm algo, EstimatorKind kind);

/// Run parameters shared by every optimizer. `eta` holds one value (constant
/// schedule) or m per-step values, all >= 0 (a zero step is legal and leaves
/// the iterate in place). When T is not a multiple of m the final epoch is
/// truncated to the remaining steps and S = ceil(T/m).
struct RunConfig {
  long long T = 1;
  int m = 1;
  std::vector<double> eta{1e-2};
  int b = 1;
  SamplingMode mode = SamplingMode::WithoutReplacement;
  EstimatorSpec estimator;
  Vec x0;
  std::uint64_t seed = 0;
  OutputRule output_rule = OutputRule::UniformRandomIterate;
  bool log_grad_norm = true;       // uses the instrumentation channel only
  double divergence_guard = 1e12;  // abort threshold on |f| and ||x||_inf
  // Direction policy for the blended step. The default draws fresh directions
  // for the mini-batch estimates at x_k and at the anchor, which is the model
  // behind the second-moment envelope and gives the batch-size-dependent
  // noise floor. Sharing directions instead makes the two estimates cancel
  // exactly at x_k = x_0 (see zo_svrg_blend) but removes that floor.
  bool shared_step_directions = false;

  int epochs() const { return static_cast<int>((T + m - 1) / m); }
  double eta_at(long long k) const {
    return eta.size() == 1 ? eta[0] : eta.at(static_cast<std::size_t>(k));
  }
  void validate(const Objective& obj) const;
};

struct TraceRecord {
  int epoch;        // 1-based epoch index s
  long long iter;   // global iteration index, 0-based
  double loss;      // f(x_k^s), instrumentation channel
  double grad_norm_sq = 0.0;
  bool has_grad_norm = false;
  long long queries;  // cumulative component queries after this iteration
};

/// One record and one stored iterate x_k^s per executed iteration; the
/// cumulative query column is nondecreasing and its last entry equals the
/// run's total. `final_point` is the post-update iterate x_m^S while
/// `output_point` follows the configured output rule. A run that trips the
/// divergence guard stops early and reports diverged = true instead of
/// propagating non-finite values.
struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<Vec> iterates;  // x_k^s per record
  Vec final_point;
  Vec output_point;
  bool diverged = false;
  long long total_queries = 0;
};

// Sub-stream roles used by the runners; fixed so runs are replayable.
namespace stream_role {
inline constexpr std::uint64_t kFullPass = 1;   // epoch anchor estimate, keyed by s
inline constexpr std::uint64_t kBatch = 2;      // mini-batch draw, keyed by (s, k)
inline constexpr std::uint64_t kDirection = 3;  // step directions, keyed by (s, k)
inline constexpr std::uint64_t kOutput = 4;     // output-rule draw
}  // namespace stream_role

/// One blended estimate v = est_I(x_k) - est_I(x_anchor) + g_anchor where the
/// two mini-batch estimates reuse the same per-component directions (fresh
/// each step). With x_k == x_anchor the mini-batch terms cancel bitwise.
Vec zo_svrg_blend(const EstimatorSpec& spec, const Objective& obj, const MiniBatch& batch,
                  const Vec& x_k, const Vec& x_anchor, const Vec& g_anchor, Rng& dir_rng);

RunTrace run_zo_svrg(const RunConfig& cfg, const Objective& obj);
RunTrace run_zo_sgd(const RunConfig& cfg, const Objective& obj);

/// First-order reference algorithms; require a true-gradient evaluator.
RunTrace run_svrg(const RunConfig& cfg, const Objective& obj);
RunTrace run_sgd(const RunConfig& cfg, const Objective& obj);

RunTrace run_algorithm(Algorithm algo, const RunConfig& cfg, const Objective& obj);

/// Output rule applied to a finished trace (UniformRandomIterate draws over
/// the recorded iterates with the supplied stream).
Vec select_output(const RunTrace& trace, OutputRule rule, Rng& rng);

/// Exact query cost of a full (non-diverged) run, with the two-point
/// constants written out. With per-estimate cost
/// cpc = 2 (Rand), q+1 (AvgRand) or 2d (Coord):
///   ZO-SVRG:  cpc * (n S + 2 b T)   (full pass per epoch + two mini-batch
///                                    estimates per blended step)
///   ZO-SGD:   cpc * b T
///   SVRG/SGD: 0                      (no function queries at all)
long long closed_form_queries(Algorithm algo, const EstimatorSpec& est, int n, int d,
                              long long T, int m, int b);

}  // namespace zokit

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zokit/optimizers.hpp"
#include "zokit/problems.hpp"

namespace zokit::cli {

enum class TraceCadence { EveryIteration, EveryEpoch };

/// Flat experiment description. Everything here maps 1:1 onto the key=value
/// config format and the command-line overrides (last write wins).
struct ExperimentConfig {
  // problem selection
  std::string problem = "synthetic-nlls";  // synthetic-nlls | quadratic | quadratic-varied | toy-attack
  std::string data_path;                   // external NLLS dataset; overrides `problem`
  std::uint64_t problem_seed = 42;
  int n = 500;
  int d = 145;
  double separation = 2.0;  // synthetic-nlls cluster separation
  int classes = 3;          // toy-attack class count

  // algorithm + run shape
  std::string algo = "zo-svrg";
  std::string estimator;  // rand | avg-rand | coord; defaults per algorithm
  long long T = 100;
  int m = 50;
  int b = 10;
  double eta = -1.0;  // < 0: default 10 / d
  double mu = -1.0;   // < 0: default 1 / sqrt(d T)
  int q = 10;
  std::string sampling = "without";     // with | without
  std::string output_rule = "uniform";  // uniform | last
  bool log_grad_norm = true;
  double x0_fill = 0.0;

  // execution
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  TraceCadence cadence = TraceCadence::EveryEpoch;

  void validate() const;
  Algorithm algorithm() const;
  EstimatorKind estimator_kind() const;
  double resolved_eta(int dim) const;
  double resolved_mu(int dim) const;
  RunConfig run_config(int dim) const;
};

/// Parse a flat key=value file ('#' comments, blank lines skipped). Errors
/// carry the offending line number.
ExperimentConfig parse_config_file(const std::string& path);

/// Apply one key=value override; throws ConfigError on unknown keys or
/// unparsable values.
void apply_key_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Build the configured black-box objective (one instance; copy per worker).
Objective build_objective(const ExperimentConfig& cfg);

// Trace files: CSV with the fixed header epoch,iter,loss,grad_norm_sq,queries.
// Doubles are written with %.17g so rows parse back losslessly; the
// grad_norm_sq cell is empty when the objective has no gradient channel.
// Epoch cadence keeps one row per epoch (its last iteration) plus the final
// row.
void write_trace_csv(const std::string& path, const RunTrace& trace, TraceCadence cadence);
std::vector<TraceRecord> read_trace_csv(const std::string& path);

struct SeedResult {
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  std::optional<double> final_grad_norm_sq;
  long long queries = 0;
  bool diverged = false;
  std::string trace_file;  // relative to out_dir
};

struct ExperimentSummary {
  ExperimentConfig cfg;
  int dim = 0;
  int num_components = 0;
  std::vector<SeedResult> per_seed;
  double mean_final_loss = 0.0;
  double stddev_final_loss = 0.0;
  std::optional<double> mean_final_grad_norm_sq;
  std::optional<double> stddev_final_grad_norm_sq;
  long long total_queries = 0;  // per run; equal across seeds by construction
  long long closed_form = 0;
  int diverged_seeds = 0;
  std::string summary_file;

  bool all_diverged() const {
    return diverged_seeds == static_cast<int>(per_seed.size()) && !per_seed.empty();
  }
};

/// Run every seed (bounded worker pool, ZO_KIT_THREADS caps the width), write
/// one trace file per seed plus a key=value summary record. The summary
/// aggregates are recomputed from the written trace files, so they are
/// re-derivable from disk by construction.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

/// Comparison table over completed experiments (summary files): measured
/// query totals, measured mean iterations-to-threshold (threshold = 1.2x the
/// best loss reached by any run in the set) and the theoretical dominant rate
/// terms. Missing or unreadable entries appear as gaps.
struct Table1Row {
  std::string algo;
  std::string queries = "-";
  std::string iters_to_threshold = "-";
  std::string rate_d_over_T = "-";
  std::string rate_residual = "-";
};
std::vector<Table1Row> emit_table1(const std::vector<std::string>& summary_paths,
                                   std::ostream& out);

}  // namespace zokit::cli

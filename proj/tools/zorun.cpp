// Experiment runner: `zorun run` executes one experiment (multi-seed) and
// writes trace and summary files; `zorun table1` compares completed
// experiments side by side.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "zokit/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitAllDiverged = 3;

struct RunFlags {
  std::string config_path;
  std::string algo;
  std::string seeds;
  std::string out_dir;
  std::string cadence;
  std::string preset;
  std::string data_path;
  std::vector<std::string> overrides;
};

zokit::cli::ExperimentConfig resolve_config(const RunFlags& flags) {
  zokit::cli::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = zokit::cli::parse_config_file(flags.config_path);
  // Command-line flags win over the file; later --set wins over earlier.
  if (!flags.preset.empty()) zokit::cli::apply_key_value(cfg, "problem", flags.preset);
  if (!flags.data_path.empty()) zokit::cli::apply_key_value(cfg, "data", flags.data_path);
  if (!flags.algo.empty()) zokit::cli::apply_key_value(cfg, "algo", flags.algo);
  if (!flags.seeds.empty()) zokit::cli::apply_key_value(cfg, "seeds", flags.seeds);
  if (!flags.out_dir.empty()) zokit::cli::apply_key_value(cfg, "out", flags.out_dir);
  if (!flags.cadence.empty()) zokit::cli::apply_key_value(cfg, "cadence", flags.cadence);
  for (const std::string& kv : flags.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw zokit::ConfigError("--set expects key=value, got " + kv);
    zokit::cli::apply_key_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zeroth-order optimization experiment runner"};
  app.require_subcommand(1);

  RunFlags flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment over a seed list");
  run->add_option("--config", flags.config_path, "key=value config file");
  run->add_option("--algo", flags.algo,
                  "zo-sgd | zo-svrg | zo-svrg-ave | zo-svrg-coord | svrg | sgd");
  run->add_option("--seed", flags.seeds, "comma-separated seed list");
  run->add_option("--out", flags.out_dir, "output directory");
  run->add_option("--trace-cadence", flags.cadence, "iter | epoch");
  run->add_option("--preset", flags.preset,
                  "synthetic-nlls | quadratic | quadratic-varied | toy-attack");
  run->add_option("--data", flags.data_path, "external dataset (CSV, label first)");
  run->add_option("--set", flags.overrides, "extra key=value override (repeatable)");

  std::vector<std::string> summary_paths;
  std::string table_dir;
  CLI::App* table = app.add_subcommand("table1", "comparison table over finished experiments");
  table->add_option("--summary", summary_paths, "summary files to include");
  table->add_option("--out", table_dir, "directory to scan for *_summary.txt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const zokit::cli::ExperimentConfig cfg = resolve_config(flags);
      const zokit::cli::ExperimentSummary sum = zokit::cli::run_experiment(cfg);
      std::cout << "wrote " << sum.summary_file << " (" << sum.per_seed.size() << " seeds, "
                << sum.total_queries << " queries/run";
      if (sum.diverged_seeds > 0) std::cout << ", " << sum.diverged_seeds << " diverged";
      std::cout << ")\n";
      if (sum.all_diverged()) {
        std::cerr << "all seeds diverged\n";
        return kExitAllDiverged;
      }
      return 0;
    }
    if (table->parsed()) {
      if (!table_dir.empty()) {
        for (const auto& entry : std::filesystem::directory_iterator(table_dir)) {
          const std::string name = entry.path().filename().string();
          if (name.size() > 12 && name.substr(name.size() - 12) == "_summary.txt")
            summary_paths.push_back(entry.path().string());
        }
        std::sort(summary_paths.begin(), summary_paths.end());
      }
      if (summary_paths.empty())
        throw zokit::ConfigError("table1 needs --summary files or --out directory");
      zokit::cli::emit_table1(summary_paths, std::cout);
      return 0;
    }
  } catch (const zokit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pinncert/net.hpp"
#include "pinncert/problems.hpp"

namespace pinncert {

// Flat key=value experiment description. Sample counts are per program grid
// and must have integral per-axis roots for the grid dimension.
struct ExperimentConfig {
  ProblemId problem = ProblemId::heat;
  double p = 2;
  double q = 2;  // must equal p
  std::uint64_t seed = 1;
  int width = 20;
  int depth = 2;  // hidden tanh layers
  int epochs = 2000;
  double lr = 1e-3;
  int checkpoint_stride = 50;
  std::array<double, 5> weight{1, 1, 1, 1, 1};        // loss weights per residual kind
  std::array<long long, 5> samples{4096, 1024, 1024, 1024, 1024};  // M per kind
  double pi_2_tr = 1.0;
  int eval_factor = 2;  // evaluation grid refinement per axis
  int sup_factor = 4;   // sup probe refinement, total point multiplier
  std::string output_dir = "out";
  std::string run_name;  // default <problem>_seed<seed>

  std::vector<int> mlp_sizes(const Problem& prob) const;
};

// Parses the key=value text; rejects unknown keys (all listed), duplicates,
// malformed lines, and inconsistent values.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_text(const ExperimentConfig& cfg);

// Grid-dimension check plus problem-specific sampling rules.
std::array<int, 3> counts_for_box(long long M, const Box& box, const char* what,
                                  ProblemId problem);

// Environment PINNCERT_OUT_DIR wins over the flag, which wins over the config.
std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& flag_override);

struct CsvRow {
  int epoch = 0;
  std::array<double, 5> Et{};  // NaN where the problem has no such family
  double E_true = 0, E_exact = 0, E_training = 0, E_asymp = 0, ratio = 0;
};

extern const char kCsvHeader[];

std::string csv_line(const CsvRow& row);
std::vector<CsvRow> read_metrics_csv(const std::string& path);

// Recomputes one metrics row from the parameters alone: training-grid norms,
// evaluation-grid norms with certified quadrature error, derivative sups,
// certificates, and the reference error against the closed-form solution.
CsvRow evaluate_checkpoint(const Problem& prob, const ExperimentConfig& cfg,
                           const MlpParams& params, int epoch);

struct RunResult {
  std::string run_dir;
  std::vector<CsvRow> rows;
  std::vector<double> loss_history;  // one entry per epoch, pre-step loss
};

// Trains, writes config copy, checkpoints, metrics.csv, and both plots.
RunResult run_experiment(const ExperimentConfig& cfg,
                         const std::string& out_dir_flag = "", bool quiet = false);

// Re-evaluates every checkpoint in a run directory, writes
// metrics_replay.csv, and compares it byte for byte with metrics.csv.
// Returns 0 on an exact match.
int replay_run(const std::string& run_dir, bool quiet = false);

// curves.svg (log10 magnitudes; zeros clamped to 1e-300 with a warning) and
// ratio.svg next to out_dir.
void write_plots(const std::string& csv_path, const std::string& out_dir);

void write_constants_csv(std::ostream& os);

}  // namespace pinncert

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/training.hpp"

namespace agcnet {

/// Every run hyperparameter, serialized as `key: value` lines. Unknown keys
/// are rejected on parse. Key names and defaults are documented in
/// docs/FORMATS.md and in the README.
struct RunConfig {
  int k = 8;             // K: number of wavelet scales
  int layers = 2;        // L
  int c_enc = 32;        // C_enc
  int d_h = 64;          // d_h
  int dim_s = 16;        // S
  int r = 30;            // shift rank
  double alpha = 0.01;   // shift contribution
  double lambda_f = 1e-4;
  int history = 12;      // H
  int horizon = 12;      // P
  double lr = 0.002;
  double weight_decay = 0.0001;
  int batch = 128;
  int epochs = 200;
  std::uint64_t seed = 1;
  std::string mode = "attention";       // attention | weighted
  bool shift = true;
  bool periodic = false;
  std::string conv_kernel = "wavelet";  // wavelet | adjacency
  double grad_clip = 0.0;               // 0 = off
  double lr_decay = 1.0;                // 1 = off
  // synth command
  int synth_nodes = 15;
  int synth_steps = 2000;
  std::string synth_graph = "random";   // random | cycle4 | path
  // ablate command
  int ablate_seeds = 10;
  bool ablate_periodic = false;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);
/// Applies a single `key value` override with the same validation as parsing.
void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

ModelConfig model_config_from_run(const RunConfig& cfg, int nodes, int channels);

/// Everything loaded and windowed from a data directory.
struct PreparedData {
  RoadGraph graph;
  LaplacianSpectrum spectrum;
  DatasetMeta meta;
  PeriodicConfig periodic;
  SlidingWindowDataset train, val, test;
  int channels = 1;
};

/// Loads adjacency.csv / signals.csv / metadata.txt, validates N, splits
/// 70/10/20, fits stats on train only and windows every split.
PreparedData prepare_data(const RunConfig& cfg, const std::string& data_dir);

struct TrainedModel {
  std::unique_ptr<AGCNet> net;
  TrainHistory history;
};

TrainedModel train_model(const RunConfig& cfg, const PreparedData& data,
                         const EpochCallback& on_epoch = nullptr);

// ---- command entry points (shared by the C API and the CLI) -----------------

/// Writes adjacency.csv, signals.csv, metadata.txt into out_dir.
void run_synth(const RunConfig& cfg, const std::string& out_dir);

/// Trains on a data dir; writes config.txt, init.ckpt, best.ckpt,
/// history.jsonl and final.json (test metrics next to the persistence
/// baseline) into run_dir.
void run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& run_dir);

/// Evaluates a checkpoint on the test split of a data dir; writes report.txt
/// and report.json (model and baseline side by side) into out_dir.
void run_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& out_dir);

/// Finite-difference gate on the pinned tiny instance (N=5, H=4, P=2, K=2,
/// L=1). Returns the report; writes it to report_path when non-empty.
/// corrupt_param is a fault-injection hook used by tests.
GradCheckReport run_gradcheck(const RunConfig& cfg, const std::string& report_path,
                              const std::string& corrupt_param = "");

std::string format_gradcheck_report(const GradCheckReport& report);

struct AblateSetting {
  std::string name;
  std::string mode;
  bool shift = false;
  bool periodic = false;
  std::vector<std::uint64_t> seeds;
  std::vector<double> test_maes;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AblateComparison {
  std::string a, b;
  WelchResult welch;
};

struct AblateReport {
  std::vector<AblateSetting> settings;
  std::vector<AblateComparison> comparisons;
};

/// Runs the expressible ablation settings (weighted / attention /
/// attention+shift, optionally each with periodic channels) under shared
/// seeds; writes ablate.json and ablate_report.txt into out_dir.
AblateReport run_ablate(const RunConfig& cfg, const std::string& data_dir,
                        const std::string& out_dir);

struct TTestReport {
  std::vector<double> maes_a, maes_b;
  WelchResult welch;
};

/// Collects final test MAEs (final.json) from two groups of run dirs and
/// compares them with Welch's t-test. Writes a text report when
/// report_path is non-empty.
TTestReport run_ttest(const std::vector<std::string>& run_dirs_a,
                      const std::vector<std::string>& run_dirs_b,
                      const std::string& report_path);

/// Deterministic graph builders for the synth command.
RoadGraph make_synth_graph(const std::string& kind, int nodes, std::uint64_t seed);

}  // namespace agcnet

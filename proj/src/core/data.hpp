#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/graph.hpp"

namespace agcnet {

/// Missing readings are encoded as this sentinel in raw units and skipped by
/// normalization and by the masked metrics.
inline constexpr double kMaskValue = 0.0;

/// One sensor signal table: rows are time steps, columns are sensors.
struct SignalTable {
  Eigen::MatrixXd values;  // T x N
  int interval_minutes = 5;
  std::string start_timestamp = "1970-01-01T00:00:00";
  std::vector<std::string> sensor_ids;

  Eigen::Index steps() const { return values.rows(); }
  Eigen::Index sensors() const { return values.cols(); }
};

/// Signals CSV: header row of sensor ids, then one comma-separated row per
/// time step. Strictly rectangular; non-numeric cells are rejected with
/// row/column diagnostics.
SignalTable load_signals(const std::string& csv_path);
void save_signals(const SignalTable& table, const std::string& csv_path);

/// Side-car metadata, `key: value` lines (see docs/FORMATS.md).
struct DatasetMeta {
  int interval_minutes = 5;
  std::string start_timestamp = "1970-01-01T00:00:00";
  std::string target_condition = "flow";
};

DatasetMeta load_metadata(const std::string& path);
void save_metadata(const DatasetMeta& meta, const std::string& path);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

/// Contiguous, order-preserving split with lengths floor(f_train*T),
/// floor(f_val*T) and the remainder. Rejects any part shorter than min_len.
std::array<SignalTable, 3> chronological_split(const SignalTable& table, SplitFractions fractions,
                                               Eigen::Index min_len);

/// Per-channel z-score statistics fitted on the training split only.
/// Constant channels fall back to stddev 1 (flagged).
struct NormalizationStats {
  double mean = 0.0;
  double stddev = 1.0;
  bool constant_fallback = false;
  double mask_value = kMaskValue;
};

NormalizationStats zscore_fit(const Eigen::MatrixXd& train_values,
                              double mask_value = kMaskValue);
/// (x - mean) / std on unmasked entries; masked entries pass through unchanged.
Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& values, const NormalizationStats& stats);
Eigen::MatrixXd zscore_invert(const Eigen::MatrixXd& values, const NormalizationStats& stats);
/// Unconditional affine inverse for model outputs, where 0.0 is a value and
/// not the missing-data sentinel.
Eigen::MatrixXd denormalize(const Eigen::MatrixXd& values, const NormalizationStats& stats);

struct PeriodicConfig {
  bool enabled = false;
  int daily_period_steps = 0;
  int weekly_period_steps = 0;

  int max_lookback() const {
    return enabled ? std::max(daily_period_steps, weekly_period_steps) : 0;
  }
};

/// One training example: x is H frames of N x C (normalized, channel 0 the
/// recent window, channels 1..2 the daily/weekly lagged copies when enabled);
/// y is the raw N x P target block immediately after the window.
/// last_observed keeps the raw recent-channel values at the final history
/// step (the persistence forecast), immune to sentinel collisions under
/// normalization.
struct WindowSample {
  std::vector<Eigen::MatrixXd> x;
  Eigen::MatrixXd y;
  Eigen::VectorXd last_observed;
};

struct SlidingWindowDataset {
  std::vector<WindowSample> samples;
  int history = 0;
  int horizon = 0;
  int channels = 1;
  std::string split;
  NormalizationStats stats;

  std::size_t size() const { return samples.size(); }
};

/// Windows a split: sample count is T' - H - P + 1, reduced by the periodic
/// lookback (windows whose lag precedes the series start are dropped).
SlidingWindowDataset make_windows(const SignalTable& raw_split, int history, int horizon,
                                  const PeriodicConfig& periodic, const NormalizationStats& stats,
                                  const std::string& split_tag);

struct SynthOptions {
  double noise_std = 0.01;
  std::optional<double> constant_x0;  // overrides the uniform [0,1) init
};

/// Deterministic diffusion benchmark on a connected graph:
///   x_{t+1} = x_t - 0.1 L' x_t + 0.05 sin(2 pi t / 24) * 1 + noise,
/// x_0 ~ U[0,1)^N, noise ~ N(0, noise_std^2) per node, both drawn from the
/// documented Rng stream (docs/FORMATS.md) so the table is reproducible
/// bit-for-bit from the seed.
SignalTable synth_diffusion(const RoadGraph& graph, Eigen::Index steps, std::uint64_t seed,
                            const SynthOptions& options = {});

}  // namespace agcnet

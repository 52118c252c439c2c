#include "core/data.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace agcnet {

SignalTable load_signals(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open signals file: " + csv_path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(csv_path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  SignalTable table;
  {
    std::istringstream hs(line);
    std::string id;
    while (std::getline(hs, id, ',')) table.sensor_ids.push_back(id);
  }
  const std::size_t n = table.sensor_ids.size();
  if (n == 0) throw ParseError(csv_path + ": header has no sensor ids");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      ++col;
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(csv_path + ":" + std::to_string(lineno) + ": column " +
                         std::to_string(col) + ": non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() != n) {
      throw ParseError(csv_path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(n) + " cells, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(csv_path + ": no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

void save_signals(const SignalTable& table, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write signals file: " + csv_path);
  for (std::size_t i = 0; i < table.sensor_ids.size(); ++i) {
    if (i) out << ",";
    out << table.sensor_ids[i];
  }
  out << "\n";
  out.precision(17);
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      if (c) out << ",";
      out << table.values(r, c);
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + csv_path);
}

DatasetMeta load_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metadata file: " + path);
  DatasetMeta meta;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key: value'");
    }
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    const auto strip = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    strip(key);
    strip(value);
    if (key == "interval_minutes") {
      meta.interval_minutes = std::stoi(value);
      if (meta.interval_minutes <= 0) {
        throw ParseError(path + ": interval_minutes must be positive");
      }
    } else if (key == "start_timestamp") {
      meta.start_timestamp = value;
    } else if (key == "target_condition") {
      meta.target_condition = value;
    } else {
      throw ParseError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return meta;
}

void save_metadata(const DatasetMeta& meta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metadata file: " + path);
  out << "interval_minutes: " << meta.interval_minutes << "\n";
  out << "start_timestamp: " << meta.start_timestamp << "\n";
  out << "target_condition: " << meta.target_condition << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::array<SignalTable, 3> chronological_split(const SignalTable& table, SplitFractions fractions,
                                               Eigen::Index min_len) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1, got " + std::to_string(sum));
  }
  const Eigen::Index t = table.steps();
  const auto n_train = static_cast<Eigen::Index>(std::floor(fractions.train * static_cast<double>(t)));
  const auto n_val = static_cast<Eigen::Index>(std::floor(fractions.val * static_cast<double>(t)));
  const Eigen::Index n_test = t - n_train - n_val;

  for (Eigen::Index len : {n_train, n_val, n_test}) {
    if (len < min_len) {
      throw std::invalid_argument("split of length " + std::to_string(len) +
                                  " is shorter than the required minimum " +
                                  std::to_string(min_len));
    }
  }

  auto slice = [&table](Eigen::Index start, Eigen::Index len) {
    SignalTable part;
    part.values = table.values.middleRows(start, len);
    part.interval_minutes = table.interval_minutes;
    part.start_timestamp = table.start_timestamp;  // label only; offsets tracked by callers
    part.sensor_ids = table.sensor_ids;
    return part;
  };
  return {slice(0, n_train), slice(n_train, n_val), slice(n_train + n_val, n_test)};
}

NormalizationStats zscore_fit(const Eigen::MatrixXd& train_values, double mask_value) {
  NormalizationStats stats;
  stats.mask_value = mask_value;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t count = 0;
  for (Eigen::Index r = 0; r < train_values.rows(); ++r) {
    for (Eigen::Index c = 0; c < train_values.cols(); ++c) {
      const double v = train_values(r, c);
      if (v == mask_value) continue;
      sum += v;
      sum_sq += v * v;
      ++count;
    }
  }
  if (count == 0) {
    stats.constant_fallback = true;
    std::cerr << "[agcnet] warning: all entries masked while fitting normalization; "
                 "using mean 0, std 1\n";
    return stats;
  }
  stats.mean = sum / static_cast<double>(count);
  const double var = sum_sq / static_cast<double>(count) - stats.mean * stats.mean;
  if (var <= 0.0) {
    stats.stddev = 1.0;
    stats.constant_fallback = true;
    std::cerr << "[agcnet] warning: constant channel, normalization stddev fell back to 1\n";
  } else {
    stats.stddev = std::sqrt(var);
  }
  return stats;
}

Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& values, const NormalizationStats& stats) {
  Eigen::MatrixXd out = values;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      if (out(r, c) == stats.mask_value) continue;
      out(r, c) = (out(r, c) - stats.mean) / stats.stddev;
    }
  }
  return out;
}

Eigen::MatrixXd zscore_invert(const Eigen::MatrixXd& values, const NormalizationStats& stats) {
  Eigen::MatrixXd out = values;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      if (out(r, c) == stats.mask_value) continue;
      out(r, c) = out(r, c) * stats.stddev + stats.mean;
    }
  }
  return out;
}

Eigen::MatrixXd denormalize(const Eigen::MatrixXd& values, const NormalizationStats& stats) {
  return (values.array() * stats.stddev + stats.mean).matrix();
}

SlidingWindowDataset make_windows(const SignalTable& raw_split, int history, int horizon,
                                  const PeriodicConfig& periodic, const NormalizationStats& stats,
                                  const std::string& split_tag) {
  if (history < 1 || horizon < 1) {
    throw std::invalid_argument("make_windows: history and horizon must be >= 1");
  }
  if (periodic.enabled && (periodic.daily_period_steps <= 0 || periodic.weekly_period_steps <= 0)) {
    throw std::invalid_argument("make_windows: periodic lags must be positive when enabled");
  }
  const Eigen::Index t_len = raw_split.steps();
  const Eigen::Index n = raw_split.sensors();
  const Eigen::Index lookback = periodic.max_lookback();
  const Eigen::Index first_start = lookback;
  const Eigen::Index last_start = t_len - history - horizon;
  if (last_start < first_start) {
    throw std::invalid_argument("make_windows: split of length " + std::to_string(t_len) +
                                " cannot fit history " + std::to_string(history) + " + horizon " +
                                std::to_string(horizon) +
                                (lookback > 0 ? " + lookback " + std::to_string(lookback) : ""));
  }

  SlidingWindowDataset ds;
  ds.history = history;
  ds.horizon = horizon;
  ds.channels = periodic.enabled ? 3 : 1;
  ds.split = split_tag;
  ds.stats = stats;
  ds.samples.reserve(static_cast<std::size_t>(last_start - first_start + 1));

  for (Eigen::Index start = first_start; start <= last_start; ++start) {
    WindowSample sample;
    sample.x.reserve(static_cast<std::size_t>(history));
    for (Eigen::Index u = start; u < start + history; ++u) {
      Eigen::MatrixXd frame(n, ds.channels);
      frame.col(0) = raw_split.values.row(u).transpose();
      if (periodic.enabled) {
        frame.col(1) = raw_split.values.row(u - periodic.daily_period_steps).transpose();
        frame.col(2) = raw_split.values.row(u - periodic.weekly_period_steps).transpose();
      }
      for (Eigen::Index c = 0; c < ds.channels; ++c) {
        frame.col(c) = zscore_apply(frame.col(c), stats);
      }
      sample.x.push_back(std::move(frame));
    }
    sample.y.resize(n, horizon);
    for (Eigen::Index j = 0; j < horizon; ++j) {
      sample.y.col(j) = raw_split.values.row(start + history + j).transpose();
    }
    sample.last_observed = raw_split.values.row(start + history - 1).transpose();
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

SignalTable synth_diffusion(const RoadGraph& graph, Eigen::Index steps, std::uint64_t seed,
                            const SynthOptions& options) {
  if (!is_connected(graph)) {
    throw std::invalid_argument("synth_diffusion: graph must be connected");
  }
  if (steps < 1) throw std::invalid_argument("synth_diffusion: steps must be >= 1");

  const Eigen::Index n = graph.node_count;
  const Eigen::MatrixXd lap = normalized_laplacian(graph);
  Rng rng(seed);

  SignalTable table;
  table.interval_minutes = 60;
  table.start_timestamp = "2012-03-01T00:00:00";
  table.sensor_ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) table.sensor_ids.push_back("s" + std::to_string(i));
  table.values.resize(steps, n);

  Eigen::VectorXd x(n);
  if (options.constant_x0) {
    x.setConstant(*options.constant_x0);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.uniform();
  }
  table.values.row(0) = x.transpose();

  for (Eigen::Index t = 0; t + 1 < steps; ++t) {
    const double forcing = 0.05 * std::sin(2.0 * M_PI * static_cast<double>(t) / 24.0);
    Eigen::VectorXd next = x - 0.1 * (lap * x);
    next.array() += forcing;
    if (options.noise_std > 0.0) {
      for (Eigen::Index i = 0; i < n; ++i) next(i) += options.noise_std * rng.gaussian();
    }
    x = std::move(next);
    table.values.row(t + 1) = x.transpose();
  }
  return table;
}

}  // namespace agcnet

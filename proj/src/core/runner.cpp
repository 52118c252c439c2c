#include "core/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace agcnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on") return true;
  if (value == "off") return false;
  throw ParseError("config key '" + key + "' expects on|off, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value, int min_value) {
  int v = 0;
  try {
    std::size_t pos = 0;
    v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  if (v < min_value) {
    throw ParseError("config key '" + key + "' must be >= " + std::to_string(min_value));
  }
  return v;
}

double parse_double(const std::string& key, const std::string& value, double min_value) {
  double v = 0.0;
  try {
    std::size_t pos = 0;
    v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' expects a number, got '" + value + "'");
  }
  if (v < min_value) {
    throw ParseError("config key '" + key + "' must be >= " + std::to_string(min_value));
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "K") cfg.k = parse_int(key, value, 1);
  else if (key == "L") cfg.layers = parse_int(key, value, 1);
  else if (key == "C_enc") cfg.c_enc = parse_int(key, value, 1);
  else if (key == "d_h") cfg.d_h = parse_int(key, value, 1);
  else if (key == "S") cfg.dim_s = parse_int(key, value, 1);
  else if (key == "r") cfg.r = parse_int(key, value, 1);
  else if (key == "alpha") cfg.alpha = parse_double(key, value, 0.0);
  else if (key == "lambda_f") cfg.lambda_f = parse_double(key, value, 0.0);
  else if (key == "H") cfg.history = parse_int(key, value, 1);
  else if (key == "P") cfg.horizon = parse_int(key, value, 1);
  else if (key == "lr") cfg.lr = parse_double(key, value, 0.0);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value, 0.0);
  else if (key == "batch") cfg.batch = parse_int(key, value, 1);
  else if (key == "epochs") cfg.epochs = parse_int(key, value, 0);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "mode") {
    if (value != "attention" && value != "weighted") {
      throw ParseError("config key 'mode' expects attention|weighted, got '" + value + "'");
    }
    cfg.mode = value;
  } else if (key == "shift") cfg.shift = parse_bool(key, value);
  else if (key == "periodic") cfg.periodic = parse_bool(key, value);
  else if (key == "conv_kernel") {
    if (value != "wavelet" && value != "adjacency") {
      throw ParseError("config key 'conv_kernel' expects wavelet|adjacency, got '" + value + "'");
    }
    cfg.conv_kernel = value;
  } else if (key == "grad_clip") cfg.grad_clip = parse_double(key, value, 0.0);
  else if (key == "lr_decay") cfg.lr_decay = parse_double(key, value, 0.0);
  else if (key == "synth_nodes") cfg.synth_nodes = parse_int(key, value, 2);
  else if (key == "synth_steps") cfg.synth_steps = parse_int(key, value, 1);
  else if (key == "synth_graph") {
    if (value != "random" && value != "cycle4" && value != "path") {
      throw ParseError("config key 'synth_graph' expects random|cycle4|path, got '" + value + "'");
    }
    cfg.synth_graph = value;
  } else if (key == "ablate_seeds") cfg.ablate_seeds = parse_int(key, value, 1);
  else if (key == "ablate_periodic") cfg.ablate_periodic = parse_bool(key, value);
  else throw ParseError("unknown config key '" + key + "'");
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  if (key == "K") return std::to_string(cfg.k);
  if (key == "L") return std::to_string(cfg.layers);
  if (key == "C_enc") return std::to_string(cfg.c_enc);
  if (key == "d_h") return std::to_string(cfg.d_h);
  if (key == "S") return std::to_string(cfg.dim_s);
  if (key == "r") return std::to_string(cfg.r);
  if (key == "alpha") return format_double(cfg.alpha);
  if (key == "lambda_f") return format_double(cfg.lambda_f);
  if (key == "H") return std::to_string(cfg.history);
  if (key == "P") return std::to_string(cfg.horizon);
  if (key == "lr") return format_double(cfg.lr);
  if (key == "weight_decay") return format_double(cfg.weight_decay);
  if (key == "batch") return std::to_string(cfg.batch);
  if (key == "epochs") return std::to_string(cfg.epochs);
  if (key == "seed") return std::to_string(cfg.seed);
  if (key == "mode") return cfg.mode;
  if (key == "shift") return cfg.shift ? "on" : "off";
  if (key == "periodic") return cfg.periodic ? "on" : "off";
  if (key == "conv_kernel") return cfg.conv_kernel;
  if (key == "grad_clip") return format_double(cfg.grad_clip);
  if (key == "lr_decay") return format_double(cfg.lr_decay);
  if (key == "synth_nodes") return std::to_string(cfg.synth_nodes);
  if (key == "synth_steps") return std::to_string(cfg.synth_steps);
  if (key == "synth_graph") return cfg.synth_graph;
  if (key == "ablate_seeds") return std::to_string(cfg.ablate_seeds);
  if (key == "ablate_periodic") return cfg.ablate_periodic ? "on" : "off";
  throw ParseError("unknown config key '" + key + "'");
}

namespace {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "K",         "L",         "C_enc",       "d_h",        "S",
      "r",         "alpha",     "lambda_f",    "H",          "P",
      "lr",        "weight_decay", "batch",    "epochs",     "seed",
      "mode",      "shift",     "periodic",    "conv_kernel", "grad_clip",
      "lr_decay",  "synth_nodes", "synth_steps", "synth_graph", "ablate_seeds",
      "ablate_periodic"};
  return keys;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected 'key: value'");
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
    apply_config_override(cfg, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& key : config_keys()) {
    out << key << ": " << get_config_value(cfg, key) << "\n";
  }
  return out.str();
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << serialize_config(cfg);
  if (!out) throw IoError("write failed: " + path);
}

ModelConfig model_config_from_run(const RunConfig& cfg, int nodes, int channels) {
  ModelConfig mc;
  mc.nodes = nodes;
  mc.channels = channels;
  mc.history = cfg.history;
  mc.horizon = cfg.horizon;
  mc.k_scales = cfg.k;
  mc.layers = cfg.layers;
  mc.c_enc = cfg.c_enc;
  mc.d_h = cfg.d_h;
  mc.dim_s = cfg.dim_s;
  mc.shift_rank = cfg.r;
  mc.alpha = cfg.alpha;
  mc.mode = cfg.mode == "attention" ? MixMode::Attention : MixMode::Weighted;
  mc.use_shift = cfg.shift;
  mc.kernel = cfg.conv_kernel == "wavelet" ? KernelMode::Wavelet : KernelMode::Adjacency;
  return mc;
}

RoadGraph make_synth_graph(const std::string& kind, int nodes, std::uint64_t seed) {
  std::vector<WeightedEdge> edges;
  if (kind == "cycle4") {
    nodes = 4;
    edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}};
  } else if (kind == "path") {
    for (int i = 0; i + 1 < nodes; ++i) edges.push_back({i, i + 1, 1.0});
  } else if (kind == "random") {
    // random spanning tree plus ~N/2 extra chords
    Rng rng(seed);
    std::set<std::pair<int, int>> present;
    for (int i = 1; i < nodes; ++i) {
      const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
      edges.push_back({parent, i, 1.0});
      present.insert({std::min(parent, i), std::max(parent, i)});
    }
    const int extra = nodes / 2;
    int added = 0;
    int attempts = 0;
    while (added < extra && attempts < 20 * extra + 100) {
      ++attempts;
      const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes)));
      const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes)));
      if (a == b) continue;
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (present.count(key)) continue;
      present.insert(key);
      edges.push_back({key.first, key.second, 0.5 + rng.uniform()});
      ++added;
    }
  } else {
    throw std::invalid_argument("unknown synth graph kind '" + kind + "'");
  }
  return build_from_edge_list(edges, nodes);
}

void run_synth(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const RoadGraph graph = make_synth_graph(cfg.synth_graph, cfg.synth_nodes, cfg.seed);
  const SignalTable table = synth_diffusion(graph, cfg.synth_steps, cfg.seed);

  save_edge_list((fs::path(out_dir) / "adjacency.csv").string(), graph.edges);
  save_signals(table, (fs::path(out_dir) / "signals.csv").string());
  DatasetMeta meta;
  meta.interval_minutes = table.interval_minutes;
  meta.start_timestamp = table.start_timestamp;
  meta.target_condition = "flow";
  save_metadata(meta, (fs::path(out_dir) / "metadata.txt").string());
}

PreparedData prepare_data(const RunConfig& cfg, const std::string& data_dir) {
  PreparedData data;
  data.meta = load_metadata((fs::path(data_dir) / "metadata.txt").string());
  SignalTable table = load_signals((fs::path(data_dir) / "signals.csv").string());
  table.interval_minutes = data.meta.interval_minutes;
  table.start_timestamp = data.meta.start_timestamp;

  const int nodes = static_cast<int>(table.sensors());
  data.graph = load_graph((fs::path(data_dir) / "adjacency.csv").string(), nodes);
  data.spectrum = eigendecompose(normalized_laplacian(data.graph));

  if (cfg.periodic) {
    const int steps_per_day = std::max(1, 1440 / data.meta.interval_minutes);
    data.periodic.enabled = true;
    data.periodic.daily_period_steps = steps_per_day;
    data.periodic.weekly_period_steps = 7 * steps_per_day;
  }
  data.channels = data.periodic.enabled ? 3 : 1;

  const Eigen::Index min_len =
      static_cast<Eigen::Index>(cfg.history + cfg.horizon + data.periodic.max_lookback());
  const auto splits = chronological_split(table, SplitFractions{}, min_len);

  const NormalizationStats stats = zscore_fit(splits[0].values);
  data.train = make_windows(splits[0], cfg.history, cfg.horizon, data.periodic, stats, "train");
  data.val = make_windows(splits[1], cfg.history, cfg.horizon, data.periodic, stats, "val");
  data.test = make_windows(splits[2], cfg.history, cfg.horizon, data.periodic, stats, "test");
  return data;
}

namespace {

FitConfig make_fit_config(const RunConfig& cfg, int interval_minutes, int horizon) {
  FitConfig fc;
  fc.epochs = cfg.epochs;
  fc.batch_size = cfg.batch;
  fc.seed = cfg.seed;
  fc.adam.lr = cfg.lr;
  fc.adam.weight_decay = cfg.weight_decay;
  fc.loss.frobenius_weight = cfg.lambda_f;
  fc.grad_clip_norm = cfg.grad_clip;
  fc.lr_decay = cfg.lr_decay;
  fc.eval_horizon_steps = default_horizon_steps(horizon);
  fc.interval_minutes = interval_minutes;
  return fc;
}

json metrics_to_json(const MaskedMetrics& m) {
  json j;
  j["mae"] = m.mae.has_value() ? json(*m.mae) : json(nullptr);
  j["rmse"] = m.rmse.has_value() ? json(*m.rmse) : json(nullptr);
  j["mape_pct"] = m.mape_pct.has_value() ? json(*m.mape_pct) : json(nullptr);
  j["count"] = m.count;
  j["mape_count"] = m.mape_count;
  return j;
}

json report_to_json(const HorizonReport& report) {
  json j;
  j["overall"] = metrics_to_json(report.overall);
  j["horizons"] = json::array();
  for (const auto& h : report.horizons) {
    json e = metrics_to_json(h.metrics);
    e["label"] = h.label;
    e["step"] = h.step;
    j["horizons"].push_back(std::move(e));
  }
  return j;
}

std::string fmt_opt(const std::optional<double>& v, int width) {
  std::ostringstream os;
  if (v.has_value()) {
    os << std::setw(width) << std::fixed << std::setprecision(4) << *v;
  } else {
    os << std::setw(width) << "-";
  }
  return os.str();
}

void write_report_text(std::ostream& out, const std::string& title, const HorizonReport& model,
                       const HorizonReport& baseline) {
  out << "report: " << title << "\n";
  out << std::left << std::setw(10) << "horizon" << std::right << std::setw(12) << "mae"
      << std::setw(12) << "rmse" << std::setw(12) << "mape%" << std::setw(14) << "base_mae"
      << std::setw(12) << "base_rmse" << std::setw(12) << "base_mape%" << std::setw(10) << "count"
      << "\n";
  for (std::size_t i = 0; i < model.horizons.size(); ++i) {
    const auto& m = model.horizons[i];
    const auto& b = baseline.horizons[i];
    out << std::left << std::setw(10) << m.label << std::right << fmt_opt(m.metrics.mae, 12)
        << fmt_opt(m.metrics.rmse, 12) << fmt_opt(m.metrics.mape_pct, 12)
        << fmt_opt(b.metrics.mae, 14) << fmt_opt(b.metrics.rmse, 12)
        << fmt_opt(b.metrics.mape_pct, 12) << std::setw(10) << m.metrics.count << "\n";
  }
  out << std::left << std::setw(10) << "overall" << std::right << fmt_opt(model.overall.mae, 12)
      << fmt_opt(model.overall.rmse, 12) << fmt_opt(model.overall.mape_pct, 12)
      << fmt_opt(baseline.overall.mae, 14) << fmt_opt(baseline.overall.rmse, 12)
      << fmt_opt(baseline.overall.mape_pct, 12) << std::setw(10) << model.overall.count << "\n";
}

json epoch_to_json(const EpochRecord& rec) {
  json j;
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  j["val_mae"] = rec.val_mae;
  j["val"] = json::array();
  for (const auto& h : rec.val_horizons) {
    json e = metrics_to_json(h.metrics);
    e["label"] = h.label;
    e["step"] = h.step;
    j["val"].push_back(std::move(e));
  }
  j["wall_seconds"] = rec.wall_seconds;
  return j;
}

}  // namespace

TrainedModel train_model(const RunConfig& cfg, const PreparedData& data,
                         const EpochCallback& on_epoch) {
  TrainedModel out;
  const int nodes = data.graph.node_count;
  const ModelConfig mc = model_config_from_run(cfg, nodes, data.channels);
  out.net = std::make_unique<AGCNet>(mc, data.spectrum, cfg.seed);
  const FitConfig fc = make_fit_config(cfg, data.meta.interval_minutes, cfg.horizon);
  out.history = fit(*out.net, data.train, data.val, fc, on_epoch);
  return out;
}

void run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& run_dir) {
  fs::create_directories(run_dir);
  const std::string echo = serialize_config(cfg);
  save_config(cfg, (fs::path(run_dir) / "config.txt").string());

  const PreparedData data = prepare_data(cfg, data_dir);
  const ModelConfig mc = model_config_from_run(cfg, data.graph.node_count, data.channels);
  AGCNet net(mc, data.spectrum, cfg.seed);
  save_checkpoint((fs::path(run_dir) / "init.ckpt").string(), net, echo);

  std::ofstream history_out((fs::path(run_dir) / "history.jsonl").string());
  if (!history_out) throw IoError("cannot write history: " + run_dir);
  const FitConfig fc = make_fit_config(cfg, data.meta.interval_minutes, cfg.horizon);
  const TrainHistory history = fit(net, data.train, data.val, fc, [&](const EpochRecord& rec) {
    history_out << epoch_to_json(rec).dump() << "\n";
    history_out.flush();
  });

  save_checkpoint((fs::path(run_dir) / "best.ckpt").string(), net, echo);

  const std::vector<int> steps = default_horizon_steps(cfg.horizon);
  const HorizonReport test_report =
      horizon_eval(net, data.test, steps, data.meta.interval_minutes);
  const HorizonReport base_report =
      persistence_baseline(data.test, steps, data.meta.interval_minutes);

  json final;
  final["best_epoch"] = history.best_epoch;
  final["best_val_mae"] = history.best_val_mae;
  final["epochs_run"] = history.epochs.size();
  final["interval_minutes"] = data.meta.interval_minutes;
  final["test"] = report_to_json(test_report);
  final["baseline"] = report_to_json(base_report);
  std::ofstream final_out((fs::path(run_dir) / "final.json").string());
  if (!final_out) throw IoError("cannot write final.json: " + run_dir);
  final_out << final.dump(2) << "\n";
}

void run_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  const CheckpointData ckpt = load_checkpoint(checkpoint_path);
  const RunConfig cfg = parse_config_text(ckpt.config_echo);

  const PreparedData data = prepare_data(cfg, data_dir);
  const ModelConfig mc = model_config_from_run(cfg, data.graph.node_count, data.channels);
  AGCNet net(mc, data.spectrum, cfg.seed);
  apply_checkpoint(net, ckpt);

  const std::vector<int> steps = default_horizon_steps(cfg.horizon);
  const HorizonReport model_report =
      horizon_eval(net, data.test, steps, data.meta.interval_minutes);
  const HorizonReport base_report =
      persistence_baseline(data.test, steps, data.meta.interval_minutes);

  json j;
  j["checkpoint"] = checkpoint_path;
  j["data_dir"] = data_dir;
  j["interval_minutes"] = data.meta.interval_minutes;
  j["model"] = report_to_json(model_report);
  j["baseline"] = report_to_json(base_report);
  std::ofstream json_out((fs::path(out_dir) / "report.json").string());
  if (!json_out) throw IoError("cannot write report.json: " + out_dir);
  json_out << j.dump(2) << "\n";

  std::ofstream text_out((fs::path(out_dir) / "report.txt").string());
  if (!text_out) throw IoError("cannot write report.txt: " + out_dir);
  write_report_text(text_out, checkpoint_path, model_report, base_report);
}

GradCheckReport run_gradcheck(const RunConfig& cfg, const std::string& report_path,
                              const std::string& corrupt_param) {
  // Pinned tiny instance: N=5, H=4, P=2, K=2, L=1, slim widths. alpha and
  // lambda_f are pinned high enough that the shift path contributes at the
  // same magnitude as the rest; with the production defaults its gradient
  // is ~1e-7 and central differences bottom out in roundoff.
  RunConfig tiny = cfg;
  tiny.k = 2;
  tiny.layers = 1;
  tiny.history = 4;
  tiny.horizon = 2;
  tiny.c_enc = 4;
  tiny.d_h = 4;
  tiny.dim_s = 3;
  tiny.r = 2;
  tiny.alpha = 0.5;
  tiny.lambda_f = 0.05;

  const RoadGraph graph = make_synth_graph("random", 5, tiny.seed);
  const LaplacianSpectrum spectrum = eigendecompose(normalized_laplacian(graph));
  const ModelConfig mc = model_config_from_run(tiny, 5, 1);
  AGCNet net(mc, spectrum, tiny.seed);

  // Check at a generic parameter point. The initialization is a stationary
  // manifold for the scales (theta = 1 turns every spectral operator into the
  // identity for any s, so the true scale gradient is exactly zero there) and
  // central differences degenerate to roundoff noise against it.
  Rng perturb(tiny.seed + 99);
  for (Param* p : net.params()) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        p->value(r, c) += 0.3 * perturb.gaussian();
      }
    }
  }

  // Deterministic random batch; one target entry masked to exercise the rule.
  Rng rng(tiny.seed + 17);
  SlidingWindowDataset ds;
  ds.history = tiny.history;
  ds.horizon = tiny.horizon;
  ds.channels = 1;
  ds.split = "gradcheck";
  for (int i = 0; i < 2; ++i) {
    WindowSample sample;
    for (int t = 0; t < tiny.history; ++t) {
      Eigen::MatrixXd frame(5, 1);
      for (Eigen::Index r = 0; r < 5; ++r) frame(r, 0) = rng.gaussian();
      sample.x.push_back(std::move(frame));
    }
    sample.y.resize(5, tiny.horizon);
    for (Eigen::Index r = 0; r < 5; ++r) {
      for (Eigen::Index c = 0; c < tiny.horizon; ++c) {
        sample.y(r, c) = 1.0 + rng.gaussian();
      }
    }
    if (i == 0) sample.y(0, 0) = kMaskValue;
    ds.samples.push_back(std::move(sample));
  }

  Batch batch;
  batch.dataset = &ds;
  batch.indices = {0, 1};
  LossConfig loss;
  loss.frobenius_weight = tiny.lambda_f;

  const GradCheckReport report = finite_difference_check(net, batch, loss, 1e-6, corrupt_param);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot write gradcheck report: " + report_path);
    out << format_gradcheck_report(report);
  }
  return report;
}

std::string format_gradcheck_report(const GradCheckReport& report) {
  std::ostringstream out;
  out << "gradient check (threshold " << report.threshold << ")\n";
  for (const auto& e : report.entries) {
    out << (e.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(24) << e.name
        << " max_rel_err=" << std::scientific << std::setprecision(3) << e.max_rel_err
        << std::defaultfloat << " coords=" << e.coords_checked << "\n";
  }
  out << (report.pass ? "RESULT: PASS" : "RESULT: FAIL") << " (" << report.entries.size()
      << " parameters)\n";
  return out.str();
}

namespace {

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

AblateReport run_ablate(const RunConfig& cfg, const std::string& data_dir,
                        const std::string& out_dir) {
  fs::create_directories(out_dir);

  struct SettingSpec {
    std::string name;
    std::string mode;
    bool shift;
    bool periodic;
  };
  std::vector<SettingSpec> specs;
  const std::vector<bool> periodic_variants =
      cfg.ablate_periodic ? std::vector<bool>{false, true} : std::vector<bool>{cfg.periodic};
  for (bool periodic : periodic_variants) {
    const std::string suffix = periodic ? "+periodic" : "";
    specs.push_back({"weighted" + suffix, "weighted", false, periodic});
    specs.push_back({"attention" + suffix, "attention", false, periodic});
    specs.push_back({"attention+shift" + suffix, "attention", true, periodic});
  }

  // data prepared once per periodic flag
  std::map<bool, PreparedData> prepared;
  for (bool periodic : periodic_variants) {
    RunConfig data_cfg = cfg;
    data_cfg.periodic = periodic;
    prepared.emplace(periodic, prepare_data(data_cfg, data_dir));
  }

  AblateReport report;
  for (const auto& spec : specs) {
    AblateSetting setting;
    setting.name = spec.name;
    setting.mode = spec.mode;
    setting.shift = spec.shift;
    setting.periodic = spec.periodic;
    for (int i = 0; i < cfg.ablate_seeds; ++i) {
      RunConfig run_cfg = cfg;
      run_cfg.mode = spec.mode;
      run_cfg.shift = spec.shift;
      run_cfg.periodic = spec.periodic;
      run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
      const PreparedData& data = prepared.at(spec.periodic);
      TrainedModel trained = train_model(run_cfg, data);
      const HorizonReport test_report = horizon_eval(
          *trained.net, data.test, default_horizon_steps(cfg.horizon), data.meta.interval_minutes);
      if (!test_report.overall.mae.has_value()) {
        throw NumericError("ablate: test split has no unmasked targets");
      }
      setting.seeds.push_back(run_cfg.seed);
      setting.test_maes.push_back(*test_report.overall.mae);
    }
    setting.mean = sample_mean(setting.test_maes);
    setting.stddev = sample_std(setting.test_maes);
    report.settings.push_back(std::move(setting));
  }

  // pairwise comparisons within each periodic variant
  if (cfg.ablate_seeds >= 2) {
    for (bool periodic : periodic_variants) {
      const std::string suffix = periodic ? "+periodic" : "";
      const auto find = [&](const std::string& name) -> const AblateSetting& {
        for (const auto& s : report.settings) {
          if (s.name == name) return s;
        }
        throw std::logic_error("ablate: missing setting " + name);
      };
      const std::vector<std::pair<std::string, std::string>> pairs = {
          {"weighted" + suffix, "attention" + suffix},
          {"attention" + suffix, "attention+shift" + suffix},
          {"weighted" + suffix, "attention+shift" + suffix}};
      for (const auto& [a, b] : pairs) {
        AblateComparison cmp;
        cmp.a = a;
        cmp.b = b;
        cmp.welch = welch_ttest(find(a).test_maes, find(b).test_maes);
        report.comparisons.push_back(std::move(cmp));
      }
    }
  }

  json j;
  j["settings"] = json::array();
  for (const auto& s : report.settings) {
    json e;
    e["name"] = s.name;
    e["mode"] = s.mode;
    e["shift"] = s.shift;
    e["periodic"] = s.periodic;
    e["seeds"] = s.seeds;
    e["test_maes"] = s.test_maes;
    e["mean_mae"] = s.mean;
    e["std_mae"] = s.stddev;
    j["settings"].push_back(std::move(e));
  }
  j["comparisons"] = json::array();
  for (const auto& c : report.comparisons) {
    json e;
    e["a"] = c.a;
    e["b"] = c.b;
    e["t"] = c.welch.t;
    e["p"] = c.welch.p;
    e["df"] = c.welch.df;
    e["mean_a"] = c.welch.mean_a;
    e["mean_b"] = c.welch.mean_b;
    j["comparisons"].push_back(std::move(e));
  }
  std::ofstream json_out((fs::path(out_dir) / "ablate.json").string());
  if (!json_out) throw IoError("cannot write ablate.json: " + out_dir);
  json_out << j.dump(2) << "\n";

  std::ofstream text_out((fs::path(out_dir) / "ablate_report.txt").string());
  if (!text_out) throw IoError("cannot write ablate_report.txt: " + out_dir);
  text_out << std::left << std::setw(22) << "setting" << std::right << std::setw(12) << "mean_mae"
           << std::setw(12) << "std_mae" << std::setw(8) << "runs"
           << "\n";
  for (const auto& s : report.settings) {
    text_out << std::left << std::setw(22) << s.name << std::right << std::setw(12) << std::fixed
             << std::setprecision(4) << s.mean << std::setw(12) << s.stddev << std::setw(8)
             << s.test_maes.size() << "\n";
  }
  for (const auto& c : report.comparisons) {
    text_out << c.a << " vs " << c.b << ": t=" << std::setprecision(4) << c.welch.t
             << " p=" << std::scientific << std::setprecision(3) << c.welch.p << std::defaultfloat
             << "\n";
  }
  return report;
}

TTestReport run_ttest(const std::vector<std::string>& run_dirs_a,
                      const std::vector<std::string>& run_dirs_b,
                      const std::string& report_path) {
  if (run_dirs_a.size() < 2 || run_dirs_b.size() < 2) {
    throw std::invalid_argument("ttest: need at least 2 completed runs per group");
  }
  const auto collect = [](const std::vector<std::string>& dirs) {
    std::vector<double> maes;
    for (const auto& dir : dirs) {
      const std::string path = (fs::path(dir) / "final.json").string();
      std::ifstream in(path);
      if (!in) throw IoError("cannot open " + path);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
      }
      if (!j.contains("test") || !j["test"].contains("overall") ||
          !j["test"]["overall"].contains("mae") || j["test"]["overall"]["mae"].is_null()) {
        throw ParseError(path + ": missing test.overall.mae");
      }
      maes.push_back(j["test"]["overall"]["mae"].get<double>());
    }
    return maes;
  };

  TTestReport report;
  report.maes_a = collect(run_dirs_a);
  report.maes_b = collect(run_dirs_b);
  report.welch = welch_ttest(report.maes_a, report.maes_b);

  std::ostringstream text;
  text << "group A (" << report.maes_a.size() << " runs): mean=" << std::setprecision(6)
       << report.welch.mean_a << " std=" << report.welch.std_a << "\n  per-run:";
  for (double v : report.maes_a) text << " " << v;
  text << "\ngroup B (" << report.maes_b.size() << " runs): mean=" << report.welch.mean_b
       << " std=" << report.welch.std_b << "\n  per-run:";
  for (double v : report.maes_b) text << " " << v;
  text << "\nWelch t=" << report.welch.t << " df=" << report.welch.df
       << " p=" << std::scientific << std::setprecision(4) << report.welch.p << "\n";

  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot write ttest report: " + report_path);
    out << text.str();
  }
  return report;
}

}  // namespace agcnet

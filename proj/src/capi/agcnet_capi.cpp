#include "agcnet.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "core/errors.hpp"
#include "core/runner.hpp"

using namespace agcnet;

namespace {

thread_local std::string g_last_error;

agc_status to_status(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const ParseError*>(&e)) return AGC_ERR_PARSE;
  if (dynamic_cast<const IoError*>(&e)) return AGC_ERR_IO;
  if (dynamic_cast<const NumericError*>(&e)) return AGC_ERR_NUMERIC;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return AGC_ERR_INVALID_ARGUMENT;
  return AGC_ERR_INTERNAL;
}

template <typename Fn>
agc_status guarded(Fn&& fn) {
  try {
    fn();
    return AGC_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    g_last_error = "unknown error";
    return AGC_ERR_INTERNAL;
  }
}

agc_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return AGC_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct agc_config {
  RunConfig cfg;
};

struct agc_model {
  std::unique_ptr<AGCNet> net;
  RunConfig cfg;
};

extern "C" {

const char* agc_version(void) { return "0.1.0"; }

const char* agc_status_name(agc_status status) {
  switch (status) {
    case AGC_OK: return "ok";
    case AGC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case AGC_ERR_IO: return "io_error";
    case AGC_ERR_PARSE: return "parse_error";
    case AGC_ERR_NUMERIC: return "numeric_error";
    case AGC_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* agc_last_error(void) { return g_last_error.c_str(); }

agc_status agc_config_create(agc_config** out) {
  if (out == nullptr) return fail_invalid("agc_config_create: out is NULL");
  return guarded([&] { *out = new agc_config(); });
}

agc_status agc_config_load(const char* path, agc_config** out) {
  if (path == nullptr || out == nullptr) return fail_invalid("agc_config_load: NULL argument");
  return guarded([&] {
    auto handle = std::make_unique<agc_config>();
    handle->cfg = load_config(path);
    *out = handle.release();
  });
}

agc_status agc_config_set(agc_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return fail_invalid("agc_config_set: NULL argument");
  }
  return guarded([&] { apply_config_override(config->cfg, key, value); });
}

agc_status agc_config_get(const agc_config* config, const char* key, char* buf, size_t buf_len) {
  if (config == nullptr || key == nullptr || buf == nullptr) {
    return fail_invalid("agc_config_get: NULL argument");
  }
  return guarded([&] {
    const std::string value = get_config_value(config->cfg, key);
    if (value.size() + 1 > buf_len) {
      throw std::invalid_argument("agc_config_get: buffer too small for value of '" +
                                  std::string(key) + "'");
    }
    std::memcpy(buf, value.c_str(), value.size() + 1);
  });
}

agc_status agc_config_save(const agc_config* config, const char* path) {
  if (config == nullptr || path == nullptr) return fail_invalid("agc_config_save: NULL argument");
  return guarded([&] { save_config(config->cfg, path); });
}

void agc_config_free(agc_config* config) { delete config; }

agc_status agc_run_synth(const agc_config* config, const char* out_dir) {
  if (config == nullptr || out_dir == nullptr) return fail_invalid("agc_run_synth: NULL argument");
  return guarded([&] { run_synth(config->cfg, out_dir); });
}

agc_status agc_run_train(const agc_config* config, const char* data_dir, const char* run_dir) {
  if (config == nullptr || data_dir == nullptr || run_dir == nullptr) {
    return fail_invalid("agc_run_train: NULL argument");
  }
  return guarded([&] { run_train(config->cfg, data_dir, run_dir); });
}

agc_status agc_run_eval(const char* checkpoint_path, const char* data_dir, const char* out_dir) {
  if (checkpoint_path == nullptr || data_dir == nullptr || out_dir == nullptr) {
    return fail_invalid("agc_run_eval: NULL argument");
  }
  return guarded([&] { run_eval(checkpoint_path, data_dir, out_dir); });
}

agc_status agc_run_gradcheck(const agc_config* config, const char* report_path,
                             const char* corrupt_param, int* passed) {
  if (config == nullptr || passed == nullptr) {
    return fail_invalid("agc_run_gradcheck: NULL argument");
  }
  return guarded([&] {
    const GradCheckReport report =
        run_gradcheck(config->cfg, report_path == nullptr ? "" : report_path,
                      corrupt_param == nullptr ? "" : corrupt_param);
    *passed = report.pass ? 1 : 0;
  });
}

agc_status agc_run_ablate(const agc_config* config, const char* data_dir, const char* out_dir) {
  if (config == nullptr || data_dir == nullptr || out_dir == nullptr) {
    return fail_invalid("agc_run_ablate: NULL argument");
  }
  return guarded([&] { run_ablate(config->cfg, data_dir, out_dir); });
}

agc_status agc_run_ttest(const char* const* run_dirs_a, size_t n_a, const char* const* run_dirs_b,
                         size_t n_b, const char* report_path, double* t_out, double* p_out) {
  if (run_dirs_a == nullptr || run_dirs_b == nullptr) {
    return fail_invalid("agc_run_ttest: NULL argument");
  }
  return guarded([&] {
    std::vector<std::string> a(run_dirs_a, run_dirs_a + n_a);
    std::vector<std::string> b(run_dirs_b, run_dirs_b + n_b);
    const TTestReport report = run_ttest(a, b, report_path == nullptr ? "" : report_path);
    if (t_out != nullptr) *t_out = report.welch.t;
    if (p_out != nullptr) *p_out = report.welch.p;
  });
}

agc_status agc_model_open(const char* checkpoint_path, const char* adjacency_path,
                          agc_model** out) {
  if (checkpoint_path == nullptr || adjacency_path == nullptr || out == nullptr) {
    return fail_invalid("agc_model_open: NULL argument");
  }
  return guarded([&] {
    const CheckpointData ckpt = load_checkpoint(checkpoint_path);
    RunConfig cfg = parse_config_text(ckpt.config_echo);

    // The node count is recovered from the first per-node tensor.
    int nodes = -1;
    for (const auto& name : ckpt.names) {
      if (name.size() > 6 && name.substr(name.size() - 6) == ".theta") {
        nodes = static_cast<int>(ckpt.tensors.at(name).rows());
        break;
      }
    }
    if (nodes <= 0) throw ParseError("checkpoint has no per-node tensors");

    const RoadGraph graph = load_graph(adjacency_path, nodes);
    const LaplacianSpectrum spectrum = eigendecompose(normalized_laplacian(graph));
    const int channels = cfg.periodic ? 3 : 1;
    const ModelConfig mc = model_config_from_run(cfg, nodes, channels);
    auto handle = std::make_unique<agc_model>();
    handle->net = std::make_unique<AGCNet>(mc, spectrum, cfg.seed);
    apply_checkpoint(*handle->net, ckpt);
    handle->cfg = cfg;
    *out = handle.release();
  });
}

agc_status agc_model_dims(const agc_model* model, int32_t* nodes, int32_t* history,
                          int32_t* horizon, int32_t* channels) {
  if (model == nullptr) return fail_invalid("agc_model_dims: model is NULL");
  const ModelConfig& mc = model->net->config();
  if (nodes != nullptr) *nodes = mc.nodes;
  if (history != nullptr) *history = mc.history;
  if (horizon != nullptr) *horizon = mc.horizon;
  if (channels != nullptr) *channels = mc.channels;
  return AGC_OK;
}

agc_status agc_model_predict(const agc_model* model, const double* x, size_t x_len, double* out,
                             size_t out_len) {
  if (model == nullptr || x == nullptr || out == nullptr) {
    return fail_invalid("agc_model_predict: NULL argument");
  }
  return guarded([&] {
    const ModelConfig& mc = model->net->config();
    const auto want_x = static_cast<size_t>(mc.history) * static_cast<size_t>(mc.nodes) *
                        static_cast<size_t>(mc.channels);
    const auto want_out = static_cast<size_t>(mc.nodes) * static_cast<size_t>(mc.horizon);
    if (x_len != want_x) {
      throw std::invalid_argument("agc_model_predict: x_len must be H*N*C = " +
                                  std::to_string(want_x));
    }
    if (out_len != want_out) {
      throw std::invalid_argument("agc_model_predict: out_len must be N*P = " +
                                  std::to_string(want_out));
    }
    std::vector<Eigen::MatrixXd> seq;
    seq.reserve(static_cast<std::size_t>(mc.history));
    for (int t = 0; t < mc.history; ++t) {
      Eigen::MatrixXd frame(mc.nodes, mc.channels);
      for (int n = 0; n < mc.nodes; ++n) {
        for (int c = 0; c < mc.channels; ++c) {
          frame(n, c) = x[(static_cast<size_t>(t) * mc.nodes + n) * mc.channels + c];
        }
      }
      seq.push_back(std::move(frame));
    }
    const Eigen::MatrixXd pred = model->net->forward(seq);
    for (int n = 0; n < mc.nodes; ++n) {
      for (int p = 0; p < mc.horizon; ++p) {
        out[static_cast<size_t>(n) * mc.horizon + p] = pred(n, p);
      }
    }
  });
}

void agc_model_free(agc_model* model) { delete model; }

}  // extern "C"

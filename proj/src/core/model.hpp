#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/param.hpp"
#include "core/spectral_conv.hpp"
#include "core/wavelet.hpp"

namespace agcnet {

struct ModelConfig {
  int nodes = 0;        // N
  int channels = 1;     // C, input channels per node per step
  int history = 12;     // H
  int horizon = 12;     // P
  int k_scales = 8;     // K
  int layers = 2;       // L
  int c_enc = 32;       // AGC layer width
  int d_h = 64;         // GRU hidden size
  int dim_s = 16;       // attention similarity dim S
  int shift_rank = 30;  // r
  double alpha = 0.01;
  MixMode mode = MixMode::Attention;
  bool use_shift = true;
  KernelMode kernel = KernelMode::Wavelet;
};

/// Shared-across-nodes GRU cell. Column convention: one node per column.
struct GRUDecoder {
  Param w_xz, w_hz, b_z;
  Param w_xr, w_hr, b_r;
  Param w_xc, w_hc, b_c;
  int input_dim = 0;
  int hidden_dim = 0;
};

/// z = sigma(W_xz x + W_hz h + b_z), r = sigma(...), c = tanh(W_xc x + W_hc (r.h) + b_c),
/// h' = (1 - z).h + z.c
Eigen::VectorXd gru_step(const GRUDecoder& dec, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& h);

struct ForecastHead {
  Param weight;  // P x d_h
  Param bias;    // P x 1
};

/// Per-sample intermediates for one forward pass (training path).
struct SampleCache {
  // encoder: [time][layer]
  std::vector<std::vector<LayerCache>> enc;
  // decoder (columns = nodes): inputs X_t, hidden states H_t, gate values
  std::vector<Eigen::MatrixXd> dec_x;  // H of C_enc x N
  std::vector<Eigen::MatrixXd> dec_h;  // H+1 of d_h x N (index 0 = initial zeros)
  std::vector<Eigen::MatrixXd> dec_z, dec_r, dec_c;
};

/// Per-pass gradient accumulators that are scattered to parameters once per
/// batch: spectral operator grads per layer and basis grads per scale.
struct PassGradAccum {
  std::vector<LayerGradAccum> layers;
  std::vector<Eigen::MatrixXd> basis_forward;  // K of N x N
  std::vector<Eigen::MatrixXd> basis_inverse;  // K of N x N
};

/// Bases and per-layer operators assembled from the current parameters.
/// Valid until any parameter changes.
struct ModelPass {
  std::vector<WaveletBasis> bases;    // K (wavelet mode)
  std::vector<LayerOperators> ops;    // L
};

/// Encoder of stacked AGC layers applied per time step with shared weights,
/// GRU decoder over the encoded sequence, linear multi-horizon head.
class AGCNet {
public:
  AGCNet(const ModelConfig& config, const LaplacianSpectrum& spectrum, std::uint64_t init_seed);

  // the registry points into members
  AGCNet(const AGCNet&) = delete;
  AGCNet& operator=(const AGCNet&) = delete;
  AGCNet(AGCNet&&) = delete;
  AGCNet& operator=(AGCNet&&) = delete;

  const ModelConfig& config() const { return config_; }
  const LaplacianSpectrum& spectrum() const { return spectrum_; }
  const std::vector<MGCLayer>& encoder() const { return encoder_; }
  std::vector<MGCLayer>& encoder() { return encoder_; }
  const GRUDecoder& decoder() const { return decoder_; }
  const ForecastHead& head() const { return head_; }
  const Param& scale_raw() const { return scales_raw_; }

  /// Names every trainable tensor exactly once, in a fixed order.
  const ParamRegistry& params() const { return registry_; }
  ParamRegistry& params() { return registry_; }

  Eigen::VectorXd flatten_params() const;
  void restore_params(const Eigen::VectorXd& flat);

  Eigen::VectorXd current_scales() const;

  /// Rebuilds wavelet bases from the current scales and assembles the
  /// per-layer spectral operators.
  ModelPass prepare_pass() const;

  /// x_seq: H matrices of N x C. Returns H matrices of N x C_enc.
  std::vector<Eigen::MatrixXd> encode_sequence(const std::vector<Eigen::MatrixXd>& x_seq) const;

  /// Runs the GRU over the encoded steps per node (zero initial state) and
  /// applies the head to the final hidden state. Returns N x P.
  Eigen::MatrixXd decode(const std::vector<Eigen::MatrixXd>& encoded) const;

  Eigen::MatrixXd forward(const std::vector<Eigen::MatrixXd>& x_seq) const;

  // training path: forward with cache, backward accumulating into Param::grad
  Eigen::MatrixXd forward_cached(const ModelPass& pass, const std::vector<Eigen::MatrixXd>& x_seq,
                                 SampleCache& cache) const;
  void backward(const ModelPass& pass, const SampleCache& cache, const Eigen::MatrixXd& g_pred,
                PassGradAccum& accum);

  PassGradAccum make_accum() const;

  /// Converts accumulated operator/basis grads into theta, shift and scale
  /// gradients. Call once per batch after all backward() calls.
  void finalize_grads(const ModelPass& pass, PassGradAccum& accum);

private:
  void build_registry();
  void init_params(std::uint64_t seed);

  ModelConfig config_;
  LaplacianSpectrum spectrum_;
  Eigen::MatrixXd adjacency_op_;  // normalized adjacency (KernelMode::Adjacency)
  Param scales_raw_;              // K x 1
  std::vector<MGCLayer> encoder_;
  GRUDecoder decoder_;
  ForecastHead head_;
  ParamRegistry registry_;
};

// ---- checkpoint container ---------------------------------------------------
//
// Self-describing binary file; layout documented in docs/FORMATS.md.
// All integers little-endian, parameter payloads 64-bit floats, row-major.

void save_checkpoint(const std::string& path, const AGCNet& net, const std::string& config_echo);

struct CheckpointData {
  std::uint32_t version = 0;
  std::string config_echo;
  std::vector<std::string> names;                 // in file order
  std::map<std::string, Eigen::MatrixXd> tensors; // name -> row-major-decoded matrix
};

CheckpointData load_checkpoint(const std::string& path);

/// Restores every registry parameter from the checkpoint by name.
/// Throws ParseError on missing names or shape mismatches.
void apply_checkpoint(AGCNet& net, const CheckpointData& data);

}  // namespace agcnet

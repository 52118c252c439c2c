#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "core/param.hpp"
#include "core/wavelet.hpp"

namespace agcnet {

/// Kernel of one single-range graph convolution:
///   (Psi theta Psi^{-1} [+ alpha D~]) X W + bias.
struct SingleRangeKernel {
  Param theta;   // N x 1, diagonal spectral filter
  Param weight;  // C_in x C_out feature map
  Param bias;    // N x C_out, per-node bias
  int scale_index = 0;
};

/// Two affine maps projecting pooled context (C_in) and pooled convolution
/// output (C_out) into a shared similarity space of dimension S.
struct AttentionBlock {
  Param w_q;  // S x C_in
  Param b_q;  // S x 1
  Param w_v;  // S x C_out
  Param b_v;  // S x 1
  int dim_s = 0;
};

/// Low-rank additive topology correction alpha * (l1 * l2).
struct ShiftKernel {
  Param l1;  // N x r
  Param l2;  // r x N
  double alpha = 0.01;
  int rank_bound = 0;

  Eigen::MatrixXd product() const { return l1.value * l2.value; }
};

/// Sum of squared entries of l1 * l2 (the sparsity penalty fed to the loss).
double shift_frobenius_sq(const ShiftKernel& shift);

enum class MixMode { Attention, Weighted };

/// Convolution operator family: wavelet-basis spectral operators, or the
/// symmetric normalized adjacency (the ablation baseline kernel).
enum class KernelMode { Wavelet, Adjacency };

/// One adaptive graph convolution layer: K single-range kernels mixed by
/// per-step attention weights (or a fixed learnable mix), optionally shifted,
/// followed by ReLU.
struct MGCLayer {
  std::vector<SingleRangeKernel> kernels;
  std::optional<AttentionBlock> attention;  // MixMode::Attention
  std::optional<Param> mix_coeffs;          // MixMode::Weighted, K x 1
  std::optional<ShiftKernel> shift;
  MixMode mode = MixMode::Attention;
  int c_in = 0;
  int c_out = 0;

  int k_count() const { return static_cast<int>(kernels.size()); }
};

// ---- stateless building blocks -------------------------------------------

Eigen::MatrixXd single_range_conv(const SingleRangeKernel& kernel, const WaveletBasis& basis,
                                  const ShiftKernel* shift, const Eigen::MatrixXd& x);

/// Normalized similarity between pooled context and each pooled convolution
/// output: s_k = (Q . V_k) / (S |Q| |V_k|), 0 when either norm vanishes.
/// Pooling is the mean over the node axis.
Eigen::VectorXd context_scores(const AttentionBlock& att, const Eigen::MatrixXd& context,
                               const std::vector<Eigen::MatrixXd>& conv_outputs);

/// Numerically stable softmax (max subtraction).
Eigen::VectorXd attention_weights(const Eigen::VectorXd& scores);

Eigen::MatrixXd mgc_compose(const std::vector<Eigen::MatrixXd>& conv_outputs,
                            const Eigen::VectorXd& pi);

/// Full layer application against explicit bases. Returns the ReLU output and
/// the mixing weights that were used.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> agc_forward(const MGCLayer& layer,
                                                        const std::vector<WaveletBasis>& bases,
                                                        const Eigen::MatrixXd& z_prev);

// ---- training fast path ---------------------------------------------------
//
// The N x N spectral operators of a layer depend only on parameters, so they
// are assembled once per pass and reused across time steps and samples.

struct LayerOperators {
  std::vector<Eigen::MatrixXd> p;  // K of N x N: Psi theta Psi^{-1} (+ alpha D~)
};

/// bases is ignored under KernelMode::Adjacency, where `adjacency_op` (the
/// normalized adjacency) drives every kernel instead.
LayerOperators prepare_layer_operators(const MGCLayer& layer, KernelMode mode,
                                       const std::vector<WaveletBasis>& bases,
                                       const Eigen::MatrixXd* adjacency_op);

/// Per-step intermediates kept for the backward pass.
struct LayerCache {
  Eigen::MatrixXd x;                       // N x C_in input
  std::vector<Eigen::MatrixXd> t;          // K of N x C_in, P_k x
  std::vector<Eigen::MatrixXd> conv;       // K of N x C_out
  Eigen::VectorXd q_pool;                  // C_in
  Eigen::VectorXd q;                       // S
  std::vector<Eigen::VectorXd> v_pool;     // K of C_out
  std::vector<Eigen::VectorXd> v;          // K of S
  Eigen::VectorXd scores;                  // K
  Eigen::VectorXd pi;                      // K
  Eigen::MatrixXd mixed;                   // N x C_out, pre-ReLU
};

Eigen::MatrixXd layer_forward(const MGCLayer& layer, const LayerOperators& ops,
                              const Eigen::MatrixXd& x, LayerCache* cache);

/// Gradient accumulators that cannot be scattered to parameters until the
/// pass ends: the per-kernel operator gradients dLoss/dP_k.
struct LayerGradAccum {
  std::vector<Eigen::MatrixXd> p_grad;  // K of N x N

  void init(int k, int n) {
    p_grad.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(n, n));
  }
};

/// Backpropagates one cached step. Parameter gradients (weights, biases,
/// attention, mix coefficients) accumulate into the layer's Param::grad;
/// operator gradients accumulate into `accum`. Returns dLoss/dx.
Eigen::MatrixXd layer_backward(MGCLayer& layer, const LayerOperators& ops,
                               const LayerCache& cache, const Eigen::MatrixXd& g_out,
                               LayerGradAccum& accum);

/// Splits the accumulated operator gradients into theta / shift gradients and
/// (in wavelet mode) basis gradients for the scale chain. g_forward/g_inverse
/// are K accumulators of dLoss/dPsi_k and dLoss/dPsi_k^{-1}; pass nullptr in
/// adjacency mode.
void scatter_operator_grads(MGCLayer& layer, KernelMode mode,
                            const std::vector<WaveletBasis>& bases,
                            const Eigen::MatrixXd* adjacency_op, const LayerGradAccum& accum,
                            std::vector<Eigen::MatrixXd>* g_forward,
                            std::vector<Eigen::MatrixXd>* g_inverse);

}  // namespace agcnet

#include "core/spectral_conv.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace agcnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Eigen::MatrixXd spectral_operator(const SingleRangeKernel& kernel, const WaveletBasis& basis) {
  return basis.forward * kernel.theta.value.col(0).asDiagonal() * basis.inverse;
}

}  // namespace

double shift_frobenius_sq(const ShiftKernel& shift) {
  return shift.product().squaredNorm();
}

Eigen::MatrixXd single_range_conv(const SingleRangeKernel& kernel, const WaveletBasis& basis,
                                  const ShiftKernel* shift, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  require(basis.forward.rows() == n && basis.inverse.rows() == n,
          "single_range_conv: basis size does not match input rows");
  require(kernel.theta.value.rows() == n, "single_range_conv: theta size mismatch");
  require(kernel.weight.value.rows() == x.cols(), "single_range_conv: weight rows != C_in");
  require(kernel.bias.value.rows() == n && kernel.bias.value.cols() == kernel.weight.value.cols(),
          "single_range_conv: bias shape mismatch");

  Eigen::MatrixXd op = spectral_operator(kernel, basis);
  if (shift != nullptr) {
    require(shift->l1.value.rows() == n && shift->l2.value.cols() == n,
            "single_range_conv: shift kernel size mismatch");
    op.noalias() += shift->alpha * (shift->l1.value * shift->l2.value);
  }
  return op * x * kernel.weight.value + kernel.bias.value;
}

Eigen::VectorXd context_scores(const AttentionBlock& att, const Eigen::MatrixXd& context,
                               const std::vector<Eigen::MatrixXd>& conv_outputs) {
  const int k = static_cast<int>(conv_outputs.size());
  require(k >= 1, "context_scores: need at least one convolution output");
  require(att.w_q.value.cols() == context.cols(), "context_scores: w_q input dim mismatch");

  const double s_dim = static_cast<double>(att.dim_s);
  const Eigen::VectorXd q_pool = context.colwise().mean();
  const Eigen::VectorXd q = att.w_q.value * q_pool + att.b_q.value.col(0);
  const double q_norm = q.norm();

  Eigen::VectorXd scores = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    require(att.w_v.value.cols() == conv_outputs[i].cols(),
            "context_scores: w_v input dim mismatch");
    const Eigen::VectorXd v_pool = conv_outputs[i].colwise().mean();
    const Eigen::VectorXd v = att.w_v.value * v_pool + att.b_v.value.col(0);
    const double v_norm = v.norm();
    const double denom = s_dim * q_norm * v_norm;
    scores(i) = denom == 0.0 ? 0.0 : q.dot(v) / denom;
  }
  return scores;
}

Eigen::VectorXd attention_weights(const Eigen::VectorXd& scores) {
  require(scores.size() >= 1, "attention_weights: empty score vector");
  require(scores.allFinite(), "attention_weights: scores must be finite");
  const Eigen::ArrayXd shifted = scores.array() - scores.maxCoeff();
  Eigen::ArrayXd e = shifted.exp();
  return (e / e.sum()).matrix();
}

Eigen::MatrixXd mgc_compose(const std::vector<Eigen::MatrixXd>& conv_outputs,
                            const Eigen::VectorXd& pi) {
  require(!conv_outputs.empty(), "mgc_compose: no outputs");
  require(static_cast<Eigen::Index>(conv_outputs.size()) == pi.size(),
          "mgc_compose: pi length != number of outputs");
  for (const auto& m : conv_outputs) {
    require(m.rows() == conv_outputs[0].rows() && m.cols() == conv_outputs[0].cols(),
            "mgc_compose: inconsistent output shapes");
  }

  // Exact one-hot selection passes the chosen output through unchanged.
  Eigen::Index hot = -1;
  bool one_hot = true;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi(i) == 1.0 && hot < 0) {
      hot = i;
    } else if (pi(i) != 0.0) {
      one_hot = false;
      break;
    }
  }
  if (one_hot && hot >= 0) return conv_outputs[static_cast<std::size_t>(hot)];

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(conv_outputs[0].rows(), conv_outputs[0].cols());
  for (std::size_t i = 0; i < conv_outputs.size(); ++i) {
    const double w = pi(static_cast<Eigen::Index>(i));
    if (w == 0.0) continue;
    out.noalias() += w * conv_outputs[i];
  }
  return out;
}

LayerOperators prepare_layer_operators(const MGCLayer& layer, KernelMode mode,
                                       const std::vector<WaveletBasis>& bases,
                                       const Eigen::MatrixXd* adjacency_op) {
  LayerOperators ops;
  ops.p.reserve(layer.kernels.size());
  if (mode == KernelMode::Wavelet) {
    require(bases.size() == layer.kernels.size(),
            "prepare_layer_operators: bases count != kernel count");
  } else {
    require(adjacency_op != nullptr, "prepare_layer_operators: adjacency operator required");
  }

  Eigen::MatrixXd shift_term;
  if (layer.shift) {
    shift_term = layer.shift->alpha * layer.shift->product();
  }
  for (std::size_t k = 0; k < layer.kernels.size(); ++k) {
    Eigen::MatrixXd p;
    if (mode == KernelMode::Wavelet) {
      p = spectral_operator(layer.kernels[k], bases[k]);
    } else {
      p = (*adjacency_op) * layer.kernels[k].theta.value.col(0).asDiagonal();
    }
    if (layer.shift) p += shift_term;
    ops.p.push_back(std::move(p));
  }
  return ops;
}

Eigen::MatrixXd layer_forward(const MGCLayer& layer, const LayerOperators& ops,
                              const Eigen::MatrixXd& x, LayerCache* cache) {
  const int k_count = layer.k_count();
  require(static_cast<int>(ops.p.size()) == k_count, "layer_forward: operator count mismatch");
  require(x.cols() == layer.c_in, "layer_forward: input channel mismatch");

  std::vector<Eigen::MatrixXd> t(k_count);
  std::vector<Eigen::MatrixXd> conv(k_count);
  for (int k = 0; k < k_count; ++k) {
    t[k].noalias() = ops.p[k] * x;
    conv[k].noalias() = t[k] * layer.kernels[k].weight.value;
    conv[k] += layer.kernels[k].bias.value;
  }

  Eigen::VectorXd pi;
  Eigen::VectorXd scores;
  Eigen::VectorXd q_pool, q;
  std::vector<Eigen::VectorXd> v_pool, v;
  if (layer.mode == MixMode::Attention) {
    const AttentionBlock& att = *layer.attention;
    const double s_dim = static_cast<double>(att.dim_s);
    q_pool = x.colwise().mean();
    q = att.w_q.value * q_pool + att.b_q.value.col(0);
    const double q_norm = q.norm();
    scores = Eigen::VectorXd::Zero(k_count);
    v_pool.resize(k_count);
    v.resize(k_count);
    for (int k = 0; k < k_count; ++k) {
      v_pool[k] = conv[k].colwise().mean();
      v[k] = att.w_v.value * v_pool[k] + att.b_v.value.col(0);
      const double denom = s_dim * q_norm * v[k].norm();
      scores(k) = denom == 0.0 ? 0.0 : q.dot(v[k]) / denom;
    }
    pi = attention_weights(scores);
  } else {
    scores = layer.mix_coeffs->value.col(0);
    pi = attention_weights(scores);
  }

  Eigen::MatrixXd mixed = mgc_compose(conv, pi);
  Eigen::MatrixXd out = mixed.cwiseMax(0.0);

  if (cache != nullptr) {
    cache->x = x;
    cache->t = std::move(t);
    cache->conv = std::move(conv);
    cache->q_pool = std::move(q_pool);
    cache->q = std::move(q);
    cache->v_pool = std::move(v_pool);
    cache->v = std::move(v);
    cache->scores = std::move(scores);
    cache->pi = pi;
    cache->mixed = std::move(mixed);
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> agc_forward(const MGCLayer& layer,
                                                        const std::vector<WaveletBasis>& bases,
                                                        const Eigen::MatrixXd& z_prev) {
  LayerOperators ops = prepare_layer_operators(layer, KernelMode::Wavelet, bases, nullptr);
  LayerCache cache;
  Eigen::MatrixXd out = layer_forward(layer, ops, z_prev, &cache);
  return {std::move(out), std::move(cache.pi)};
}

Eigen::MatrixXd layer_backward(MGCLayer& layer, const LayerOperators& ops,
                               const LayerCache& cache, const Eigen::MatrixXd& g_out,
                               LayerGradAccum& accum) {
  const int k_count = layer.k_count();
  const Eigen::Index n = cache.x.rows();

  // ReLU
  const Eigen::MatrixXd g_mixed =
      (cache.mixed.array() > 0.0).select(g_out, Eigen::MatrixXd::Zero(n, layer.c_out));

  // Mixing weights
  Eigen::VectorXd g_pi(k_count);
  for (int k = 0; k < k_count; ++k) {
    g_pi(k) = g_mixed.cwiseProduct(cache.conv[k]).sum();
  }
  const double pi_dot = cache.pi.dot(g_pi);
  const Eigen::VectorXd g_scores =
      cache.pi.cwiseProduct(g_pi - Eigen::VectorXd::Constant(k_count, pi_dot));

  std::vector<Eigen::MatrixXd> g_conv(k_count);
  for (int k = 0; k < k_count; ++k) {
    g_conv[k] = cache.pi(k) * g_mixed;
  }

  Eigen::MatrixXd g_x = Eigen::MatrixXd::Zero(n, layer.c_in);

  if (layer.mode == MixMode::Weighted) {
    layer.mix_coeffs->grad.col(0) += g_scores;
  } else {
    AttentionBlock& att = *layer.attention;
    const double s_dim = static_cast<double>(att.dim_s);
    const double q_norm = cache.q.norm();
    Eigen::VectorXd g_q = Eigen::VectorXd::Zero(cache.q.size());
    for (int k = 0; k < k_count; ++k) {
      const double v_norm = cache.v[k].norm();
      const double denom = s_dim * q_norm * v_norm;
      if (denom == 0.0) continue;  // score was pinned to 0, no gradient
      const double a = cache.q.dot(cache.v[k]);
      const double gs = g_scores(k);
      const double d_a = gs / denom;
      const double d_qn = -gs * a / (s_dim * q_norm * q_norm * v_norm);
      const double d_vn = -gs * a / (s_dim * q_norm * v_norm * v_norm);
      g_q += d_a * cache.v[k] + (d_qn / q_norm) * cache.q;
      const Eigen::VectorXd g_v = d_a * cache.q + (d_vn / v_norm) * cache.v[k];
      att.w_v.grad.noalias() += g_v * cache.v_pool[k].transpose();
      att.b_v.grad.col(0) += g_v;
      const Eigen::VectorXd g_v_pool = att.w_v.value.transpose() * g_v;
      g_conv[k].noalias() += Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)) *
                             g_v_pool.transpose();
    }
    att.w_q.grad.noalias() += g_q * cache.q_pool.transpose();
    att.b_q.grad.col(0) += g_q;
    const Eigen::VectorXd g_q_pool = att.w_q.value.transpose() * g_q;
    g_x.noalias() += Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)) *
                     g_q_pool.transpose();
  }

  for (int k = 0; k < k_count; ++k) {
    SingleRangeKernel& kernel = layer.kernels[k];
    kernel.bias.grad += g_conv[k];
    kernel.weight.grad.noalias() += cache.t[k].transpose() * g_conv[k];
    const Eigen::MatrixXd g_t = g_conv[k] * kernel.weight.value.transpose();
    accum.p_grad[k].noalias() += g_t * cache.x.transpose();
    g_x.noalias() += ops.p[k].transpose() * g_t;
  }
  return g_x;
}

void scatter_operator_grads(MGCLayer& layer, KernelMode mode,
                            const std::vector<WaveletBasis>& bases,
                            const Eigen::MatrixXd* adjacency_op, const LayerGradAccum& accum,
                            std::vector<Eigen::MatrixXd>* g_forward,
                            std::vector<Eigen::MatrixXd>* g_inverse) {
  const int k_count = layer.k_count();
  Eigen::MatrixXd g_dtilde;

  for (int k = 0; k < k_count; ++k) {
    const Eigen::MatrixXd& g_p = accum.p_grad[k];
    SingleRangeKernel& kernel = layer.kernels[k];
    if (mode == KernelMode::Wavelet) {
      const Eigen::MatrixXd& psi = bases[k].forward;
      const Eigen::MatrixXd& phi = bases[k].inverse;
      const Eigen::MatrixXd g_p_phit = g_p * phi.transpose();
      kernel.theta.grad.col(0) += (psi.transpose() * g_p_phit).diagonal();
      if (g_forward != nullptr) {
        (*g_forward)[k].noalias() +=
            g_p_phit * kernel.theta.value.col(0).asDiagonal();
      }
      if (g_inverse != nullptr) {
        (*g_inverse)[k].noalias() += kernel.theta.value.col(0).asDiagonal() *
                                     (psi.transpose() * g_p);
      }
    } else {
      kernel.theta.grad.col(0) +=
          adjacency_op->cwiseProduct(g_p).colwise().sum().transpose();
    }
    if (layer.shift) {
      if (g_dtilde.size() == 0) {
        g_dtilde = layer.shift->alpha * g_p;
      } else {
        g_dtilde += layer.shift->alpha * g_p;
      }
    }
  }

  if (layer.shift && g_dtilde.size() != 0) {
    layer.shift->l1.grad.noalias() += g_dtilde * layer.shift->l2.value.transpose();
    layer.shift->l2.grad.noalias() += layer.shift->l1.value.transpose() * g_dtilde;
  }
}

}  // namespace agcnet

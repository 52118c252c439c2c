#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/param.hpp"
#include "core/rng.hpp"
#include "core/spectral_conv.hpp"

namespace agcnet::testutil {

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = scale * rng.gaussian();
    }
  }
  return m;
}

inline Param make_param(const std::string& name, const Eigen::MatrixXd& value) {
  Param p(name, value.rows(), value.cols());
  p.value = value;
  return p;
}

/// A fully randomized layer for gradient tests.
inline MGCLayer random_layer(Rng& rng, int n, int k, int c_in, int c_out, int dim_s, int rank,
                             MixMode mode, bool with_shift) {
  MGCLayer layer;
  layer.mode = mode;
  layer.c_in = c_in;
  layer.c_out = c_out;
  for (int i = 0; i < k; ++i) {
    SingleRangeKernel kernel;
    kernel.theta = make_param("k" + std::to_string(i) + ".theta", random_matrix(rng, n, 1, 0.5));
    kernel.theta.value.array() += 1.0;
    kernel.weight = make_param("k" + std::to_string(i) + ".weight",
                               random_matrix(rng, c_in, c_out, 0.6));
    kernel.bias = make_param("k" + std::to_string(i) + ".bias", random_matrix(rng, n, c_out, 0.3));
    kernel.scale_index = i;
    layer.kernels.push_back(std::move(kernel));
  }
  if (mode == MixMode::Attention) {
    AttentionBlock att;
    att.dim_s = dim_s;
    att.w_q = make_param("attn.w_q", random_matrix(rng, dim_s, c_in, 0.7));
    att.b_q = make_param("attn.b_q", random_matrix(rng, dim_s, 1, 0.2));
    att.w_v = make_param("attn.w_v", random_matrix(rng, dim_s, c_out, 0.7));
    att.b_v = make_param("attn.b_v", random_matrix(rng, dim_s, 1, 0.2));
    layer.attention = std::move(att);
  } else {
    layer.mix_coeffs = make_param("mix_coeffs", random_matrix(rng, k, 1, 0.5));
  }
  if (with_shift) {
    ShiftKernel shift;
    shift.alpha = 0.3;
    shift.rank_bound = rank;
    shift.l1 = make_param("shift.l1", random_matrix(rng, n, rank, 0.4));
    shift.l2 = make_param("shift.l2", random_matrix(rng, rank, n, 0.4));
    layer.shift = std::move(shift);
  }
  return layer;
}

inline std::vector<Param*> layer_params(MGCLayer& layer) {
  std::vector<Param*> params;
  for (auto& kernel : layer.kernels) {
    params.push_back(&kernel.theta);
    params.push_back(&kernel.weight);
    params.push_back(&kernel.bias);
  }
  if (layer.attention) {
    params.push_back(&layer.attention->w_q);
    params.push_back(&layer.attention->b_q);
    params.push_back(&layer.attention->w_v);
    params.push_back(&layer.attention->b_v);
  }
  if (layer.mix_coeffs) params.push_back(&*layer.mix_coeffs);
  if (layer.shift) {
    params.push_back(&layer.shift->l1);
    params.push_back(&layer.shift->l2);
  }
  return params;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

}  // namespace agcnet::testutil

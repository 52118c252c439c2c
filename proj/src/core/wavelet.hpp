#pragma once

#include <Eigen/Dense>

#include "core/graph.hpp"

namespace agcnet {

/// Positivity-preserving reparameterization used for trainable scales.
double softplus(double x);
double softplus_inverse(double s);
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// K diffusion scales s_k = softplus(raw_params_k), kept positive under
/// unconstrained optimization of raw_params.
struct ScaleSet {
  Eigen::VectorXd raw_params;
  bool trainable = true;

  int count() const { return static_cast<int>(raw_params.size()); }
  Eigen::VectorXd scales() const;

  /// Raw params chosen so the scales are log-spaced over [lo, hi]
  /// (K = 1 degenerates to lo).
  static ScaleSet log_spaced(int k, double lo = 0.1, double hi = 2.0);
};

/// Wavelet change-of-basis pair at one diffusion scale. forward * inverse
/// recovers the identity (up to rounding) while sparsity_threshold is 0.
struct WaveletBasis {
  Eigen::MatrixXd forward;   // U diag(e^{-s lambda}) U^T
  Eigen::MatrixXd inverse;   // U diag(e^{+s lambda}) U^T
  double scale = 0.0;
  double sparsity_threshold = 0.0;
};

enum class FilterDirection { Forward, Inverse };

/// exp(sλ) overflow guard: build_basis / basis_scale_gradient reject
/// s * lambda_max above this bound.
inline constexpr double kMaxScaleEigenvalueProduct = 30.0;

/// Diagonal heat-kernel response per eigenvalue: e^{-s λ} forward,
/// e^{+s λ} inverse. s = 0 is allowed as the degenerate all-ones filter.
Eigen::VectorXd heat_filter(const Eigen::VectorXd& eigenvalues, double s, FilterDirection dir);

WaveletBasis build_basis(const LaplacianSpectrum& spectrum, double s);

/// Zeroes entries below |threshold| in both matrices. Intended for inference
/// paths only; training uses dense bases so gradients stay exact.
WaveletBasis sparsify(const WaveletBasis& basis, double threshold);

struct BasisScaleGradient {
  Eigen::MatrixXd forward;  // d(forward)/ds = U diag(-λ e^{-sλ}) U^T
  Eigen::MatrixXd inverse;  // d(inverse)/ds = U diag(+λ e^{+sλ}) U^T
};

BasisScaleGradient basis_scale_gradient(const LaplacianSpectrum& spectrum, double s);

}  // namespace agcnet

#include "core/wavelet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "core/errors.hpp"

namespace agcnet {

double softplus(double x) {
  // log(1 + e^x), evaluated without overflow for large |x|.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_inverse(double s) {
  if (!(s > 0.0)) {
    throw std::invalid_argument("softplus_inverse requires s > 0");
  }
  // log(e^s - 1)
  return s + std::log(-std::expm1(-s));
}

Eigen::VectorXd ScaleSet::scales() const {
  Eigen::VectorXd out(raw_params.size());
  for (int i = 0; i < raw_params.size(); ++i) out(i) = softplus(raw_params(i));
  return out;
}

ScaleSet ScaleSet::log_spaced(int k, double lo, double hi) {
  if (k < 1) throw std::invalid_argument("ScaleSet needs K >= 1");
  ScaleSet set;
  set.raw_params.resize(k);
  for (int i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
    const double s = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    set.raw_params(i) = softplus_inverse(s);
  }
  return set;
}

Eigen::VectorXd heat_filter(const Eigen::VectorXd& eigenvalues, double s, FilterDirection dir) {
  if (!std::isfinite(s) || s < 0.0) {
    throw std::invalid_argument("heat_filter: scale must be finite and >= 0, got " +
                                std::to_string(s));
  }
  const double sign = dir == FilterDirection::Forward ? -1.0 : 1.0;
  return (sign * s * eigenvalues.array()).exp();
}

namespace {

void check_overflow_bound(const LaplacianSpectrum& spectrum, double s, const char* what) {
  const double lambda_max = spectrum.eigenvalues.size() > 0
                                ? spectrum.eigenvalues(spectrum.eigenvalues.size() - 1)
                                : 0.0;
  if (s * lambda_max > kMaxScaleEigenvalueProduct) {
    throw NumericError(std::string(what) + ": s * lambda_max = " + std::to_string(s * lambda_max) +
                       " exceeds the overflow bound " +
                       std::to_string(kMaxScaleEigenvalueProduct));
  }
}

Eigen::MatrixXd spectral_product(const LaplacianSpectrum& spec, const Eigen::VectorXd& diag) {
  return spec.eigenvectors * diag.asDiagonal() * spec.eigenvectors.transpose();
}

}  // namespace

WaveletBasis build_basis(const LaplacianSpectrum& spectrum, double s) {
  check_overflow_bound(spectrum, s, "build_basis");
  WaveletBasis basis;
  basis.scale = s;
  basis.forward = spectral_product(spectrum, heat_filter(spectrum.eigenvalues, s, FilterDirection::Forward));
  basis.inverse = spectral_product(spectrum, heat_filter(spectrum.eigenvalues, s, FilterDirection::Inverse));
  return basis;
}

WaveletBasis sparsify(const WaveletBasis& basis, double threshold) {
  if (threshold < 0.0) {
    throw std::invalid_argument("sparsify: threshold must be >= 0");
  }
  WaveletBasis out = basis;
  out.sparsity_threshold = threshold;
  auto truncate = [threshold](Eigen::MatrixXd& m) {
    m = (m.cwiseAbs().array() < threshold).select(0.0, m);
  };
  truncate(out.forward);
  truncate(out.inverse);
  return out;
}

BasisScaleGradient basis_scale_gradient(const LaplacianSpectrum& spectrum, double s) {
  if (!std::isfinite(s) || s < 0.0) {
    throw std::invalid_argument("basis_scale_gradient: scale must be finite and >= 0");
  }
  check_overflow_bound(spectrum, s, "basis_scale_gradient");
  const Eigen::ArrayXd lambda = spectrum.eigenvalues.array();
  BasisScaleGradient grad;
  grad.forward = spectral_product(spectrum, (-lambda * (-s * lambda).exp()).matrix());
  grad.inverse = spectral_product(spectrum, (lambda * (s * lambda).exp()).matrix());
  return grad;
}

}  // namespace agcnet

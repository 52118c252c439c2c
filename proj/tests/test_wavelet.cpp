#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/graph.hpp"
#include "core/runner.hpp"
#include "core/wavelet.hpp"

using namespace agcnet;

namespace {

LaplacianSpectrum spectrum_of(const RoadGraph& g) {
  return eigendecompose(normalized_laplacian(g));
}

RoadGraph path_graph(int n) {
  std::vector<WeightedEdge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return build_from_edge_list(edges, n);
}

}  // namespace

TEST_CASE("softplus reparameterization") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(30.0) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(softplus(-40.0) > 0.0);
  for (double s : {0.1, 0.5, 1.0, 2.0}) {
    CHECK(softplus(softplus_inverse(s)) == doctest::Approx(s).epsilon(1e-12));
  }

  const ScaleSet set = ScaleSet::log_spaced(4);
  const Eigen::VectorXd scales = set.scales();
  REQUIRE(scales.size() == 4);
  CHECK(scales(0) == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(scales(3) == doctest::Approx(2.0).epsilon(1e-10));
  // log-spacing: constant ratio
  CHECK(scales(1) / scales(0) == doctest::Approx(scales(2) / scales(1)).epsilon(1e-9));

  const ScaleSet single = ScaleSet::log_spaced(1);
  CHECK(single.scales()(0) == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("heat filter values and cancellation") {
  Eigen::VectorXd lambda(3);
  lambda << 0.0, 1.0, 2.0;

  const Eigen::VectorXd ones = heat_filter(lambda, 0.0, FilterDirection::Forward);
  CHECK(ones.isOnes(0.0));

  const Eigen::VectorXd fwd = heat_filter(lambda, 0.5, FilterDirection::Forward);
  CHECK(fwd(2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  const Eigen::VectorXd inv = heat_filter(lambda, 0.5, FilterDirection::Inverse);
  CHECK((fwd.cwiseProduct(inv) - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(heat_filter(lambda, -1.0, FilterDirection::Forward), std::invalid_argument);
  CHECK_THROWS_AS(heat_filter(lambda, std::nan(""), FilterDirection::Forward),
                  std::invalid_argument);
}

TEST_CASE("degenerate scale gives the identity basis") {
  const WaveletBasis basis = build_basis(spectrum_of(path_graph(3)), 0.0);
  CHECK(basis.forward.isIdentity(1e-12));
  CHECK(basis.inverse.isIdentity(1e-12));
}

TEST_CASE("basis invertibility on P3") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(3));
  const WaveletBasis basis = build_basis(spec, 0.7);
  CHECK((basis.forward * basis.inverse - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("invertibility across random graphs and scales") {
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 18;
    const LaplacianSpectrum spec = spectrum_of(make_synth_graph("random", n, 50 + trial));
    for (double s : {0.1, 0.5, 1.0, 2.0}) {
      const WaveletBasis basis = build_basis(spec, s);
      CHECK((basis.forward * basis.inverse - Eigen::MatrixXd::Identity(n, n))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      CHECK(basis.forward.allFinite());
      CHECK(basis.inverse.allFinite());
    }
  }
}

TEST_CASE("rows of the 4-cycle basis sum to one") {
  // regular graph: constant eigenvector is exact, so e^{-s*0} fixes row sums
  const LaplacianSpectrum spec = spectrum_of(make_synth_graph("cycle4", 4, 0));
  const WaveletBasis basis = build_basis(spec, 0.8);
  const Eigen::VectorXd row_sums = basis.forward.rowwise().sum();
  CHECK((row_sums - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("overflow guard rejects oversized scales") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(3));  // lambda_max = 2
  CHECK_THROWS_AS(build_basis(spec, 15.1), NumericError);
  CHECK_NOTHROW(build_basis(spec, 14.9));
  CHECK_THROWS_AS(basis_scale_gradient(spec, 15.1), NumericError);
}

TEST_CASE("sparsify") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(3));
  const WaveletBasis basis = build_basis(spec, 0.4);

  const WaveletBasis same = sparsify(basis, 0.0);
  CHECK(same.forward == basis.forward);
  CHECK(same.inverse == basis.inverse);

  const double huge = basis.inverse.cwiseAbs().maxCoeff() + 1.0;
  const WaveletBasis zeroed = sparsify(basis, huge);
  CHECK(zeroed.forward.isZero(0.0));
  CHECK(zeroed.inverse.isZero(0.0));
  CHECK(zeroed.sparsity_threshold == huge);

  CHECK_THROWS_AS(sparsify(basis, -1.0), std::invalid_argument);
}

TEST_CASE("small-scale sparsified basis stays graph-local on P3") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(3));
  const WaveletBasis basis = build_basis(spec, 0.05);
  // strongest couplings sit on the diagonal and graph edges; the distance-2
  // pair (0,2) is the weakest entry
  const double far = std::abs(basis.forward(0, 2));
  CHECK(far < std::abs(basis.forward(0, 1)));
  CHECK(far < std::abs(basis.forward(0, 0)));
  const WaveletBasis sparse = sparsify(basis, far * 1.5);
  CHECK(sparse.forward(0, 2) == 0.0);
  CHECK(sparse.forward(0, 1) != 0.0);
}

TEST_CASE("larger scales diffuse farther on P4") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(4));
  const WaveletBasis near = build_basis(spec, 0.1);
  const WaveletBasis wide = build_basis(spec, 1.0);
  // (0,3) has shortest path 3, (0,2) has shortest path 2
  CHECK(std::abs(near.forward(0, 3)) <= std::abs(wide.forward(0, 3)));
  CHECK(std::abs(near.forward(0, 2)) <= std::abs(wide.forward(0, 2)));
}

TEST_CASE("scale gradient vanishes on an all-zero spectrum") {
  // lambda factor annihilates every diagonal entry
  const LaplacianSpectrum zero_spec = eigendecompose(Eigen::MatrixXd::Zero(3, 3));
  CHECK(zero_spec.eigenvalues.isZero(0.0));
  const BasisScaleGradient grad = basis_scale_gradient(zero_spec, 0.9);
  CHECK(grad.forward.isZero(1e-14));
  CHECK(grad.inverse.isZero(1e-14));
}

TEST_CASE("scale gradient matches central differences") {
  const LaplacianSpectrum spec = spectrum_of(path_graph(3));
  const double h = 1e-6;
  for (double s : {0.3, 1.0, 1.7}) {
    const BasisScaleGradient grad = basis_scale_gradient(spec, s);
    const WaveletBasis plus = build_basis(spec, s + h);
    const WaveletBasis minus = build_basis(spec, s - h);
    const Eigen::MatrixXd fd_fwd = (plus.forward - minus.forward) / (2.0 * h);
    const Eigen::MatrixXd fd_inv = (plus.inverse - minus.inverse) / (2.0 * h);
    const double rel_fwd =
        (grad.forward - fd_fwd).cwiseAbs().maxCoeff() / fd_fwd.cwiseAbs().maxCoeff();
    const double rel_inv =
        (grad.inverse - fd_inv).cwiseAbs().maxCoeff() / fd_inv.cwiseAbs().maxCoeff();
    CHECK(rel_fwd < 1e-5);
    CHECK(rel_inv < 1e-5);

    CHECK((grad.forward - grad.forward.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((grad.inverse - grad.inverse.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "core/errors.hpp"
#include "core/model.hpp"
#include "core/runner.hpp"
#include "test_util.hpp"

using namespace agcnet;
using namespace agcnet::testutil;

namespace {

LaplacianSpectrum spectrum_for(int n, std::uint64_t seed) {
  return eigendecompose(normalized_laplacian(make_synth_graph("random", n, seed)));
}

ModelConfig tiny_config(int n) {
  ModelConfig mc;
  mc.nodes = n;
  mc.channels = 1;
  mc.history = 4;
  mc.horizon = 2;
  mc.k_scales = 2;
  mc.layers = 1;
  mc.c_enc = 4;
  mc.d_h = 4;
  mc.dim_s = 3;
  mc.shift_rank = 2;
  mc.mode = MixMode::Attention;
  mc.use_shift = true;
  return mc;
}

Param* find_param(AGCNet& net, const std::string& name) {
  for (Param* p : net.params()) {
    if (p->name == name) return p;
  }
  REQUIRE_MESSAGE(false, "missing param ", name);
  return nullptr;
}

std::vector<Eigen::MatrixXd> random_sequence(Rng& rng, int h, int n, int c) {
  std::vector<Eigen::MatrixXd> seq;
  for (int t = 0; t < h; ++t) seq.push_back(random_matrix(rng, n, c));
  return seq;
}

}  // namespace

TEST_CASE("gru_step with zero parameters halves the hidden state") {
  GRUDecoder dec;
  dec.input_dim = 3;
  dec.hidden_dim = 2;
  dec.w_xz = Param("w_xz", 2, 3);
  dec.w_hz = Param("w_hz", 2, 2);
  dec.b_z = Param("b_z", 2, 1);
  dec.w_xr = Param("w_xr", 2, 3);
  dec.w_hr = Param("w_hr", 2, 2);
  dec.b_r = Param("b_r", 2, 1);
  dec.w_xc = Param("w_xc", 2, 3);
  dec.w_hc = Param("w_hc", 2, 2);
  dec.b_c = Param("b_c", 2, 1);

  Eigen::VectorXd h(2);
  h << 0.8, -0.4;
  const Eigen::VectorXd out = gru_step(dec, Eigen::VectorXd::Ones(3), h);
  CHECK(out(0) == doctest::Approx(0.4));
  CHECK(out(1) == doctest::Approx(-0.2));

  const Eigen::VectorXd fixed = gru_step(dec, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(2));
  CHECK(fixed.isZero(0.0));
}

TEST_CASE("production GRU gradients of |h'|^2 match finite differences") {
  // Head configured as the identity over d_h so pred == h_final^T and
  // sum(pred^2) == |h'|^2; the analytic path is the production backward.
  const int n = 3;
  ModelConfig mc = tiny_config(n);
  mc.history = 1;
  mc.horizon = mc.d_h;
  const LaplacianSpectrum spec = spectrum_for(n, 61);
  AGCNet net(mc, spec, 7);
  find_param(net, "head.weight")->value = Eigen::MatrixXd::Identity(mc.d_h, mc.d_h);
  find_param(net, "head.bias")->value.setZero();

  Rng rng(62);
  const auto x_seq = random_sequence(rng, mc.history, n, 1);

  const auto loss_fn = [&] {
    const Eigen::MatrixXd pred = net.forward(x_seq);
    return pred.squaredNorm();
  };

  zero_grads(net.params());
  const ModelPass pass = net.prepare_pass();
  SampleCache cache;
  const Eigen::MatrixXd pred = net.forward_cached(pass, x_seq, cache);
  PassGradAccum accum = net.make_accum();
  net.backward(pass, cache, 2.0 * pred, accum);
  net.finalize_grads(pass, accum);

  const double h = 1e-6;
  for (const char* name : {"dec.w_xz", "dec.w_hz", "dec.b_z", "dec.w_xr", "dec.w_hr", "dec.b_r",
                           "dec.w_xc", "dec.w_hc", "dec.b_c"}) {
    Param* p = find_param(net, name);
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double orig = p->value(r, c);
        const double step = h * std::max(1.0, std::abs(orig));
        p->value(r, c) = orig + step;
        const double plus = loss_fn();
        p->value(r, c) = orig - step;
        const double minus = loss_fn();
        p->value(r, c) = orig;
        const double fd = (plus - minus) / (2.0 * step);
        INFO("param ", name, " (", r, ",", c, ")");
        CHECK(rel_err(p->grad(r, c), fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("decode: zero everything gives zero predictions") {
  const int n = 4;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 71), 5);
  for (const char* name : {"dec.w_xz", "dec.w_hz", "dec.b_z", "dec.w_xr", "dec.w_hr", "dec.b_r",
                           "dec.w_xc", "dec.w_hc", "dec.b_c", "head.weight", "head.bias"}) {
    find_param(net, name)->value.setZero();
  }
  std::vector<Eigen::MatrixXd> encoded(3, Eigen::MatrixXd::Zero(n, mc.c_enc));
  CHECK(net.decode(encoded).isZero(0.0));
}

TEST_CASE("decode is node-permutation equivariant") {
  const int n = 5;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 73), 9);

  Rng rng(74);
  std::vector<Eigen::MatrixXd> encoded = random_sequence(rng, 3, n, mc.c_enc);
  const Eigen::MatrixXd base = net.decode(encoded);

  std::vector<int> perm = {3, 0, 4, 1, 2};
  std::vector<Eigen::MatrixXd> permuted;
  for (const auto& frame : encoded) {
    Eigen::MatrixXd pf(n, mc.c_enc);
    for (int i = 0; i < n; ++i) pf.row(i) = frame.row(perm[i]);
    permuted.push_back(std::move(pf));
  }
  const Eigen::MatrixXd out = net.decode(permuted);
  for (int i = 0; i < n; ++i) {
    CHECK((out.row(i) - base.row(perm[i])).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("decode of a single step reduces to head(gru_step(x, 0))") {
  const int n = 3;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 79), 11);

  Rng rng(80);
  const Eigen::MatrixXd frame = random_matrix(rng, n, mc.c_enc);
  const Eigen::MatrixXd pred = net.decode({frame});

  for (int node = 0; node < n; ++node) {
    const Eigen::VectorXd h = gru_step(net.decoder(), frame.row(node).transpose(),
                                       Eigen::VectorXd::Zero(mc.d_h));
    const Eigen::VectorXd y =
        net.head().weight.value * h + net.head().bias.value.col(0);
    CHECK((pred.row(node).transpose() - y).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("encode_sequence: degenerate and repeated frames") {
  const int n = 4;
  ModelConfig mc = tiny_config(n);
  mc.history = 1;
  AGCNet net(mc, spectrum_for(n, 83), 13);
  Rng rng(84);
  const Eigen::MatrixXd frame = random_matrix(rng, n, 1);
  const auto encoded = net.encode_sequence({frame});
  CHECK(encoded.size() == 1);

  ModelConfig mc2 = tiny_config(n);
  mc2.history = 2;
  AGCNet net2(mc2, spectrum_for(n, 83), 13);
  const auto two = net2.encode_sequence({frame, frame});
  CHECK(two[0] == two[1]);
}

TEST_CASE("identity-configured single layer passes nonnegative input through") {
  // spectrum with all-zero eigenvalues makes every basis the identity
  const int n = 3;
  LaplacianSpectrum spec = eigendecompose(Eigen::MatrixXd::Zero(n, n));
  ModelConfig mc;
  mc.nodes = n;
  mc.channels = 1;
  mc.history = 2;
  mc.horizon = 1;
  mc.k_scales = 1;
  mc.layers = 1;
  mc.c_enc = 1;
  mc.d_h = 3;
  mc.dim_s = 2;
  mc.mode = MixMode::Attention;
  mc.use_shift = false;
  AGCNet net(mc, spec, 3);
  find_param(net, "enc0.k0.weight")->value = Eigen::MatrixXd::Identity(1, 1);

  Rng rng(85);
  Eigen::MatrixXd frame = random_matrix(rng, n, 1).cwiseAbs();  // nonnegative
  const auto encoded = net.encode_sequence({frame, frame});
  CHECK((encoded[0] - frame).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward determinism and output shape") {
  const int n = 6;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 89), 17);
  Rng rng(90);
  const auto x_seq = random_sequence(rng, mc.history, n, 1);
  const Eigen::MatrixXd a = net.forward(x_seq);
  const Eigen::MatrixXd b = net.forward(x_seq);
  CHECK(a == b);
  CHECK(a.rows() == n);
  CHECK(a.cols() == mc.horizon);
}

TEST_CASE("registry is unique, ordered, and round-trips bit-exactly") {
  const int n = 5;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 97), 19);

  std::set<std::string> names;
  for (const Param* p : net.params()) {
    CHECK(names.insert(p->name).second);  // no duplicates
  }
  CHECK(names.count("scales.raw") == 1);
  CHECK(names.count("enc0.k0.theta") == 1);
  CHECK(names.count("enc0.attn.w_q") == 1);
  CHECK(names.count("enc0.shift.l1") == 1);
  CHECK(names.count("dec.w_hc") == 1);
  CHECK(names.count("head.bias") == 1);

  Rng rng(98);
  const auto x_seq = random_sequence(rng, mc.history, n, 1);
  const Eigen::MatrixXd before = net.forward(x_seq);
  const Eigen::VectorXd flat = net.flatten_params();
  net.restore_params(flat);
  const Eigen::MatrixXd after = net.forward(x_seq);
  CHECK(before == after);
}

TEST_CASE("weighted mode registers mix coefficients instead of attention") {
  ModelConfig mc = tiny_config(4);
  mc.mode = MixMode::Weighted;
  AGCNet net(mc, spectrum_for(4, 101), 23);
  std::set<std::string> names;
  for (const Param* p : net.params()) names.insert(p->name);
  CHECK(names.count("enc0.mix_coeffs") == 1);
  CHECK(names.count("enc0.attn.w_q") == 0);
}

TEST_CASE("adjacency kernel mode drops the scale parameters") {
  ModelConfig mc = tiny_config(4);
  mc.kernel = KernelMode::Adjacency;
  AGCNet net(mc, spectrum_for(4, 103), 29);
  for (const Param* p : net.params()) CHECK(p->name != "scales.raw");
  Rng rng(104);
  const auto x_seq = random_sequence(rng, mc.history, 4, 1);
  CHECK(net.forward(x_seq).allFinite());
}

TEST_CASE("checkpoint round trip preserves the forward pass bit-exactly") {
  const auto dir = std::filesystem::temp_directory_path() / "agcnet_test_model";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();

  const int n = 5;
  const ModelConfig mc = tiny_config(n);
  AGCNet net(mc, spectrum_for(n, 107), 31);
  save_checkpoint(path, net, "echo: test\n");

  const CheckpointData data = load_checkpoint(path);
  CHECK(data.version == 1);
  CHECK(data.config_echo == "echo: test\n");
  CHECK(data.names.size() == net.params().size());

  AGCNet other(mc, spectrum_for(n, 107), 999);  // different init
  Rng rng(108);
  const auto x_seq = random_sequence(rng, mc.history, n, 1);
  CHECK(net.forward(x_seq) != other.forward(x_seq));
  apply_checkpoint(other, data);
  CHECK(net.forward(x_seq) == other.forward(x_seq));
}

TEST_CASE("checkpoint errors: bad magic, shape mismatch") {
  const auto dir = std::filesystem::temp_directory_path() / "agcnet_test_model";
  std::filesystem::create_directories(dir);
  const std::string bad = (dir / "bad.ckpt").string();
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTACKPTxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(load_checkpoint(bad), ParseError);

  const std::string path = (dir / "mismatch.ckpt").string();
  const ModelConfig mc = tiny_config(5);
  AGCNet net(mc, spectrum_for(5, 109), 37);
  save_checkpoint(path, net, "");
  const CheckpointData data = load_checkpoint(path);

  ModelConfig bigger = mc;
  bigger.nodes = 6;
  AGCNet other(bigger, spectrum_for(6, 110), 37);
  CHECK_THROWS_AS(apply_checkpoint(other, data), ParseError);
}

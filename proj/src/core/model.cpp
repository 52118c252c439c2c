#include "core/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace agcnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

// Row-major draws keep the init stream layout-independent.
template <typename Draw>
void fill_rowmajor(Eigen::MatrixXd& m, Draw draw) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = draw();
    }
  }
}

}  // namespace

AGCNet::AGCNet(const ModelConfig& config, const LaplacianSpectrum& spectrum,
               std::uint64_t init_seed)
    : config_(config), spectrum_(spectrum) {
  require(config.nodes >= 1, "AGCNet: nodes must be >= 1");
  require(spectrum.size() == config.nodes, "AGCNet: spectrum size != node count");
  require(config.channels >= 1 && config.history >= 1 && config.horizon >= 1,
          "AGCNet: channels/history/horizon must be >= 1");
  require(config.k_scales >= 1 && config.layers >= 1, "AGCNet: K and L must be >= 1");
  require(config.c_enc >= 1 && config.d_h >= 1 && config.dim_s >= 1,
          "AGCNet: c_enc/d_h/dim_s must be >= 1");
  if (config.use_shift) {
    require(config.shift_rank >= 1, "AGCNet: shift rank must be >= 1 when the shift is enabled");
    require(config.shift_rank <= config.nodes,
            "AGCNet: shift rank must not exceed the node count");
  }

  adjacency_op_ =
      Eigen::MatrixXd::Identity(config.nodes, config.nodes) - spectrum.laplacian;

  const int n = config.nodes;
  scales_raw_ = Param("scales.raw", config.k_scales, 1);

  encoder_.reserve(config.layers);
  for (int l = 0; l < config.layers; ++l) {
    MGCLayer layer;
    layer.mode = config.mode;
    layer.c_in = l == 0 ? config.channels : config.c_enc;
    layer.c_out = config.c_enc;
    const std::string prefix = "enc" + std::to_string(l) + ".";
    for (int k = 0; k < config.k_scales; ++k) {
      SingleRangeKernel kernel;
      const std::string kp = prefix + "k" + std::to_string(k) + ".";
      kernel.theta = Param(kp + "theta", n, 1);
      kernel.weight = Param(kp + "weight", layer.c_in, layer.c_out);
      kernel.bias = Param(kp + "bias", n, layer.c_out);
      kernel.scale_index = k;
      layer.kernels.push_back(std::move(kernel));
    }
    if (config.mode == MixMode::Attention) {
      AttentionBlock att;
      att.dim_s = config.dim_s;
      att.w_q = Param(prefix + "attn.w_q", config.dim_s, layer.c_in);
      att.b_q = Param(prefix + "attn.b_q", config.dim_s, 1);
      att.w_v = Param(prefix + "attn.w_v", config.dim_s, layer.c_out);
      att.b_v = Param(prefix + "attn.b_v", config.dim_s, 1);
      layer.attention = std::move(att);
    } else {
      layer.mix_coeffs = Param(prefix + "mix_coeffs", config.k_scales, 1);
    }
    if (config.use_shift) {
      ShiftKernel shift;
      shift.alpha = config.alpha;
      shift.rank_bound = config.shift_rank;
      shift.l1 = Param(prefix + "shift.l1", n, config.shift_rank);
      shift.l2 = Param(prefix + "shift.l2", config.shift_rank, n);
      layer.shift = std::move(shift);
    }
    encoder_.push_back(std::move(layer));
  }

  decoder_.input_dim = config.c_enc;
  decoder_.hidden_dim = config.d_h;
  decoder_.w_xz = Param("dec.w_xz", config.d_h, config.c_enc);
  decoder_.w_hz = Param("dec.w_hz", config.d_h, config.d_h);
  decoder_.b_z = Param("dec.b_z", config.d_h, 1);
  decoder_.w_xr = Param("dec.w_xr", config.d_h, config.c_enc);
  decoder_.w_hr = Param("dec.w_hr", config.d_h, config.d_h);
  decoder_.b_r = Param("dec.b_r", config.d_h, 1);
  decoder_.w_xc = Param("dec.w_xc", config.d_h, config.c_enc);
  decoder_.w_hc = Param("dec.w_hc", config.d_h, config.d_h);
  decoder_.b_c = Param("dec.b_c", config.d_h, 1);

  head_.weight = Param("head.weight", config.horizon, config.d_h);
  head_.bias = Param("head.bias", config.horizon, 1);

  build_registry();
  init_params(init_seed);
}

void AGCNet::build_registry() {
  registry_.clear();
  if (config_.kernel == KernelMode::Wavelet) {
    registry_.push_back(&scales_raw_);
  }
  for (auto& layer : encoder_) {
    for (auto& kernel : layer.kernels) {
      registry_.push_back(&kernel.theta);
      registry_.push_back(&kernel.weight);
      registry_.push_back(&kernel.bias);
    }
    if (layer.attention) {
      registry_.push_back(&layer.attention->w_q);
      registry_.push_back(&layer.attention->b_q);
      registry_.push_back(&layer.attention->w_v);
      registry_.push_back(&layer.attention->b_v);
    }
    if (layer.mix_coeffs) {
      registry_.push_back(&*layer.mix_coeffs);
    }
    if (layer.shift) {
      registry_.push_back(&layer.shift->l1);
      registry_.push_back(&layer.shift->l2);
    }
  }
  for (Param* p : {&decoder_.w_xz, &decoder_.w_hz, &decoder_.b_z, &decoder_.w_xr, &decoder_.w_hr,
                   &decoder_.b_r, &decoder_.w_xc, &decoder_.w_hc, &decoder_.b_c}) {
    registry_.push_back(p);
  }
  registry_.push_back(&head_.weight);
  registry_.push_back(&head_.bias);
}

void AGCNet::init_params(std::uint64_t seed) {
  Rng rng(seed);

  ScaleSet scale_init = ScaleSet::log_spaced(config_.k_scales);
  scales_raw_.value = scale_init.raw_params;

  for (auto& layer : encoder_) {
    const double w_bound = 1.0 / std::sqrt(static_cast<double>(layer.c_in));
    for (auto& kernel : layer.kernels) {
      kernel.theta.value.setOnes();  // identity spectral filter at start
      fill_rowmajor(kernel.weight.value, [&] { return rng.symmetric_uniform(w_bound); });
      kernel.bias.value.setZero();
    }
    if (layer.attention) {
      const double q_bound = 1.0 / std::sqrt(static_cast<double>(layer.c_in));
      const double v_bound = 1.0 / std::sqrt(static_cast<double>(layer.c_out));
      fill_rowmajor(layer.attention->w_q.value, [&] { return rng.symmetric_uniform(q_bound); });
      layer.attention->b_q.value.setZero();
      fill_rowmajor(layer.attention->w_v.value, [&] { return rng.symmetric_uniform(v_bound); });
      layer.attention->b_v.value.setZero();
    }
    if (layer.mix_coeffs) {
      layer.mix_coeffs->value.setZero();  // softmax -> uniform mix
    }
    if (layer.shift) {
      // near-zero correction at start
      fill_rowmajor(layer.shift->l1.value, [&] { return 0.01 * rng.gaussian(); });
      fill_rowmajor(layer.shift->l2.value, [&] { return 0.01 * rng.gaussian(); });
    }
  }

  const double x_bound = 1.0 / std::sqrt(static_cast<double>(decoder_.input_dim));
  const double h_bound = 1.0 / std::sqrt(static_cast<double>(decoder_.hidden_dim));
  for (Param* p : {&decoder_.w_xz, &decoder_.w_xr, &decoder_.w_xc}) {
    fill_rowmajor(p->value, [&] { return rng.symmetric_uniform(x_bound); });
  }
  for (Param* p : {&decoder_.w_hz, &decoder_.w_hr, &decoder_.w_hc}) {
    fill_rowmajor(p->value, [&] { return rng.symmetric_uniform(h_bound); });
  }
  decoder_.b_z.value.setZero();
  decoder_.b_r.value.setZero();
  decoder_.b_c.value.setZero();

  fill_rowmajor(head_.weight.value, [&] { return rng.symmetric_uniform(h_bound); });
  head_.bias.value.setZero();
}

Eigen::VectorXd AGCNet::flatten_params() const {
  Eigen::Index total = 0;
  for (const Param* p : registry_) total += p->size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (const Param* p : registry_) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        flat(at++) = p->value(r, c);
      }
    }
  }
  return flat;
}

void AGCNet::restore_params(const Eigen::VectorXd& flat) {
  Eigen::Index total = 0;
  for (const Param* p : registry_) total += p->size();
  require(flat.size() == total, "restore_params: flat vector length mismatch");
  Eigen::Index at = 0;
  for (Param* p : registry_) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        p->value(r, c) = flat(at++);
      }
    }
  }
}

Eigen::VectorXd AGCNet::current_scales() const {
  Eigen::VectorXd s(scales_raw_.value.rows());
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = softplus(scales_raw_.value(i, 0));
  return s;
}

ModelPass AGCNet::prepare_pass() const {
  ModelPass pass;
  if (config_.kernel == KernelMode::Wavelet) {
    const Eigen::VectorXd s = current_scales();
    pass.bases.reserve(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      pass.bases.push_back(build_basis(spectrum_, s(k)));
    }
  }
  pass.ops.reserve(encoder_.size());
  for (const auto& layer : encoder_) {
    pass.ops.push_back(
        prepare_layer_operators(layer, config_.kernel, pass.bases, &adjacency_op_));
  }
  return pass;
}

std::vector<Eigen::MatrixXd> AGCNet::encode_sequence(
    const std::vector<Eigen::MatrixXd>& x_seq) const {
  require(static_cast<int>(x_seq.size()) == config_.history,
          "encode_sequence: sequence length != configured history");
  const ModelPass pass = prepare_pass();
  std::vector<Eigen::MatrixXd> out;
  out.reserve(x_seq.size());
  for (const auto& frame : x_seq) {
    require(frame.rows() == config_.nodes && frame.cols() == config_.channels,
            "encode_sequence: frame shape mismatch");
    Eigen::MatrixXd z = frame;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      z = layer_forward(encoder_[l], pass.ops[l], z, nullptr);
    }
    out.push_back(std::move(z));
  }
  return out;
}

Eigen::VectorXd gru_step(const GRUDecoder& dec, const Eigen::VectorXd& input,
                         const Eigen::VectorXd& h) {
  require(input.size() == dec.input_dim && h.size() == dec.hidden_dim,
          "gru_step: dimension mismatch");
  const Eigen::VectorXd z =
      sigmoid_m(dec.w_xz.value * input + dec.w_hz.value * h + dec.b_z.value.col(0));
  const Eigen::VectorXd r =
      sigmoid_m(dec.w_xr.value * input + dec.w_hr.value * h + dec.b_r.value.col(0));
  const Eigen::VectorXd c =
      (dec.w_xc.value * input + dec.w_hc.value * r.cwiseProduct(h) + dec.b_c.value.col(0))
          .array()
          .tanh();
  return (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
}

namespace {

struct GruStepOut {
  Eigen::MatrixXd z, r, c, h;
};

// Columns are nodes; shared weights across columns.
GruStepOut gru_step_matrix(const GRUDecoder& dec, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& h) {
  GruStepOut out;
  Eigen::MatrixXd az = dec.w_xz.value * x + dec.w_hz.value * h;
  az.colwise() += dec.b_z.value.col(0);
  out.z = sigmoid_m(az);
  Eigen::MatrixXd ar = dec.w_xr.value * x + dec.w_hr.value * h;
  ar.colwise() += dec.b_r.value.col(0);
  out.r = sigmoid_m(ar);
  Eigen::MatrixXd ac = dec.w_xc.value * x + dec.w_hc.value * out.r.cwiseProduct(h);
  ac.colwise() += dec.b_c.value.col(0);
  out.c = ac.array().tanh().matrix();
  out.h = (1.0 - out.z.array()).matrix().cwiseProduct(h) + out.z.cwiseProduct(out.c);
  return out;
}

}  // namespace

Eigen::MatrixXd AGCNet::decode(const std::vector<Eigen::MatrixXd>& encoded) const {
  require(!encoded.empty(), "decode: empty sequence");
  const int n = config_.nodes;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(config_.d_h, n);
  for (const auto& frame : encoded) {
    require(frame.rows() == n && frame.cols() == config_.c_enc, "decode: frame shape mismatch");
    const Eigen::MatrixXd x = frame.transpose();
    h = gru_step_matrix(decoder_, x, h).h;
  }
  Eigen::MatrixXd y = head_.weight.value * h;  // P x N
  y.colwise() += head_.bias.value.col(0);
  return y.transpose();
}

Eigen::MatrixXd AGCNet::forward(const std::vector<Eigen::MatrixXd>& x_seq) const {
  return decode(encode_sequence(x_seq));
}

Eigen::MatrixXd AGCNet::forward_cached(const ModelPass& pass,
                                       const std::vector<Eigen::MatrixXd>& x_seq,
                                       SampleCache& cache) const {
  const int h_steps = config_.history;
  require(static_cast<int>(x_seq.size()) == h_steps,
          "forward_cached: sequence length != configured history");

  cache.enc.assign(h_steps, std::vector<LayerCache>(encoder_.size()));
  cache.dec_x.resize(h_steps);
  cache.dec_h.assign(h_steps + 1, Eigen::MatrixXd::Zero(config_.d_h, config_.nodes));
  cache.dec_z.resize(h_steps);
  cache.dec_r.resize(h_steps);
  cache.dec_c.resize(h_steps);

  for (int t = 0; t < h_steps; ++t) {
    Eigen::MatrixXd z = x_seq[t];
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      z = layer_forward(encoder_[l], pass.ops[l], z, &cache.enc[t][l]);
    }
    cache.dec_x[t] = z.transpose();
    GruStepOut step = gru_step_matrix(decoder_, cache.dec_x[t], cache.dec_h[t]);
    cache.dec_z[t] = std::move(step.z);
    cache.dec_r[t] = std::move(step.r);
    cache.dec_c[t] = std::move(step.c);
    cache.dec_h[t + 1] = std::move(step.h);
  }

  Eigen::MatrixXd y = head_.weight.value * cache.dec_h[h_steps];
  y.colwise() += head_.bias.value.col(0);
  return y.transpose();
}

PassGradAccum AGCNet::make_accum() const {
  PassGradAccum accum;
  accum.layers.resize(encoder_.size());
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    accum.layers[l].init(config_.k_scales, config_.nodes);
  }
  if (config_.kernel == KernelMode::Wavelet) {
    accum.basis_forward.assign(config_.k_scales,
                               Eigen::MatrixXd::Zero(config_.nodes, config_.nodes));
    accum.basis_inverse.assign(config_.k_scales,
                               Eigen::MatrixXd::Zero(config_.nodes, config_.nodes));
  }
  return accum;
}

void AGCNet::backward(const ModelPass& pass, const SampleCache& cache,
                      const Eigen::MatrixXd& g_pred, PassGradAccum& accum) {
  const int h_steps = config_.history;

  // head
  const Eigen::MatrixXd g_y = g_pred.transpose();  // P x N
  head_.weight.grad.noalias() += g_y * cache.dec_h[h_steps].transpose();
  head_.bias.grad.col(0) += g_y.rowwise().sum();
  Eigen::MatrixXd g_h = head_.weight.value.transpose() * g_y;  // d_h x N

  // GRU backward through time
  std::vector<Eigen::MatrixXd> g_enc(h_steps);
  for (int t = h_steps - 1; t >= 0; --t) {
    const Eigen::MatrixXd& h_prev = cache.dec_h[t];
    const Eigen::MatrixXd& z = cache.dec_z[t];
    const Eigen::MatrixXd& r = cache.dec_r[t];
    const Eigen::MatrixXd& c = cache.dec_c[t];
    const Eigen::MatrixXd& x = cache.dec_x[t];

    const Eigen::MatrixXd g_z = g_h.cwiseProduct(c - h_prev);
    const Eigen::MatrixXd g_c = g_h.cwiseProduct(z);
    Eigen::MatrixXd g_hprev = g_h.cwiseProduct((1.0 - z.array()).matrix());

    const Eigen::MatrixXd g_ac = g_c.cwiseProduct((1.0 - c.array().square()).matrix());
    decoder_.w_xc.grad.noalias() += g_ac * x.transpose();
    decoder_.w_hc.grad.noalias() += g_ac * r.cwiseProduct(h_prev).transpose();
    decoder_.b_c.grad.col(0) += g_ac.rowwise().sum();
    const Eigen::MatrixXd g_rh = decoder_.w_hc.value.transpose() * g_ac;
    const Eigen::MatrixXd g_r = g_rh.cwiseProduct(h_prev);
    g_hprev += g_rh.cwiseProduct(r);

    const Eigen::MatrixXd g_ar =
        g_r.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
    decoder_.w_xr.grad.noalias() += g_ar * x.transpose();
    decoder_.w_hr.grad.noalias() += g_ar * h_prev.transpose();
    decoder_.b_r.grad.col(0) += g_ar.rowwise().sum();
    g_hprev.noalias() += decoder_.w_hr.value.transpose() * g_ar;

    const Eigen::MatrixXd g_az =
        g_z.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
    decoder_.w_xz.grad.noalias() += g_az * x.transpose();
    decoder_.w_hz.grad.noalias() += g_az * h_prev.transpose();
    decoder_.b_z.grad.col(0) += g_az.rowwise().sum();
    g_hprev.noalias() += decoder_.w_hz.value.transpose() * g_az;

    Eigen::MatrixXd g_x = decoder_.w_xz.value.transpose() * g_az;
    g_x.noalias() += decoder_.w_xr.value.transpose() * g_ar;
    g_x.noalias() += decoder_.w_xc.value.transpose() * g_ac;
    g_enc[t] = g_x.transpose();  // N x C_enc

    g_h = std::move(g_hprev);
  }

  // encoder backward, layers in reverse per time step
  for (int t = 0; t < h_steps; ++t) {
    Eigen::MatrixXd g = std::move(g_enc[t]);
    for (int l = static_cast<int>(encoder_.size()) - 1; l >= 0; --l) {
      g = layer_backward(encoder_[l], pass.ops[l],
                         cache.enc[t][static_cast<std::size_t>(l)], g,
                         accum.layers[static_cast<std::size_t>(l)]);
    }
  }
}

void AGCNet::finalize_grads(const ModelPass& pass, PassGradAccum& accum) {
  std::vector<Eigen::MatrixXd>* g_fwd = nullptr;
  std::vector<Eigen::MatrixXd>* g_inv = nullptr;
  if (config_.kernel == KernelMode::Wavelet) {
    g_fwd = &accum.basis_forward;
    g_inv = &accum.basis_inverse;
  }
  for (std::size_t l = 0; l < encoder_.size(); ++l) {
    scatter_operator_grads(encoder_[l], config_.kernel, pass.bases, &adjacency_op_,
                           accum.layers[l], g_fwd, g_inv);
  }
  if (config_.kernel == KernelMode::Wavelet) {
    const Eigen::VectorXd s = current_scales();
    for (int k = 0; k < config_.k_scales; ++k) {
      const BasisScaleGradient bsg = basis_scale_gradient(spectrum_, s(k));
      const double ds = accum.basis_forward[k].cwiseProduct(bsg.forward).sum() +
                        accum.basis_inverse[k].cwiseProduct(bsg.inverse).sum();
      scales_raw_.grad(k, 0) += ds * sigmoid(scales_raw_.value(k, 0));
    }
  }
}

// ---- checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'A', 'G', 'C', 'N', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(path + ": truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError(path + ": truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& path) {
  const std::uint64_t bits = get_u64(in, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const AGCNet& net, const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);

  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_u64(out, config_echo.size());
  out.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
  put_u64(out, net.params().size());
  for (const Param* p : net.params()) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, 2);
    put_u64(out, static_cast<std::uint64_t>(p->value.rows()));
    put_u64(out, static_cast<std::uint64_t>(p->value.cols()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        put_f64(out, p->value(r, c));
      }
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError(path + ": not a checkpoint file (bad magic)");
  }
  CheckpointData data;
  data.version = get_u32(in, path);
  if (data.version != kVersion) {
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(data.version));
  }
  const std::uint64_t echo_len = get_u64(in, path);
  data.config_echo.resize(echo_len);
  if (echo_len > 0 && !in.read(data.config_echo.data(), static_cast<std::streamsize>(echo_len))) {
    throw ParseError(path + ": truncated checkpoint");
  }
  const std::uint64_t count = get_u64(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    if (name_len > 0 && !in.read(name.data(), name_len)) {
      throw ParseError(path + ": truncated checkpoint");
    }
    const std::uint32_t ndim = get_u32(in, path);
    if (ndim != 2) throw ParseError(path + ": unsupported tensor rank");
    const auto rows = static_cast<Eigen::Index>(get_u64(in, path));
    const auto cols = static_cast<Eigen::Index>(get_u64(in, path));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = get_f64(in, path);
      }
    }
    data.names.push_back(name);
    data.tensors[name] = std::move(m);
  }
  return data;
}

void apply_checkpoint(AGCNet& net, const CheckpointData& data) {
  if (data.tensors.size() != net.params().size()) {
    throw ParseError("checkpoint parameter count " + std::to_string(data.tensors.size()) +
                     " does not match model registry size " +
                     std::to_string(net.params().size()));
  }
  for (Param* p : net.params()) {
    auto it = data.tensors.find(p->name);
    if (it == data.tensors.end()) {
      throw ParseError("checkpoint missing parameter '" + p->name + "'");
    }
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw ParseError("checkpoint shape mismatch for '" + p->name + "'");
    }
    p->value = it->second;
  }
}

}  // namespace agcnet

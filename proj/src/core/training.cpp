#include "core/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace agcnet {

std::int64_t masked_count(const Eigen::MatrixXd& target, double mask_value) {
  std::int64_t count = 0;
  for (Eigen::Index r = 0; r < target.rows(); ++r) {
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      if (target(r, c) != mask_value) ++count;
    }
  }
  return count;
}

double masked_mae_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                       const LossConfig& cfg, const ShiftKernel* shift) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("masked_mae_loss: shape mismatch");
  }
  double abs_sum = 0.0;
  std::int64_t count = 0;
  for (Eigen::Index r = 0; r < target.rows(); ++r) {
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      if (target(r, c) == cfg.mask_value) continue;
      abs_sum += std::abs(pred(r, c) - target(r, c));
      ++count;
    }
  }
  double loss = 0.0;
  if (count > 0) {
    loss = abs_sum / static_cast<double>(count);
  } else {
    std::cerr << "[agcnet] warning: all targets masked, loss reduces to the "
                 "regularization term\n";
  }
  if (shift != nullptr) {
    loss += cfg.frobenius_weight * shift_frobenius_sq(*shift);
  }
  return loss;
}

Eigen::MatrixXd masked_mae_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                                double mask_value, std::int64_t count) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  if (count <= 0) return g;
  const double inv = 1.0 / static_cast<double>(count);
  for (Eigen::Index r = 0; r < target.rows(); ++r) {
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      if (target(r, c) == mask_value) continue;
      const double d = pred(r, c) - target(r, c);
      g(r, c) = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
  }
  return g;
}

double shift_penalty(const AGCNet& net, double frobenius_weight) {
  if (frobenius_weight == 0.0) return 0.0;
  double total = 0.0;
  for (const auto& layer : net.encoder()) {
    if (layer.shift) total += shift_frobenius_sq(*layer.shift);
  }
  return frobenius_weight * total;
}

void add_shift_penalty_grads(AGCNet& net, double frobenius_weight) {
  if (frobenius_weight == 0.0) return;
  for (auto& layer : net.encoder()) {
    if (!layer.shift) continue;
    ShiftKernel& shift = *layer.shift;
    const Eigen::MatrixXd dtilde = shift.product();
    shift.l1.grad.noalias() +=
        2.0 * frobenius_weight * dtilde * shift.l2.value.transpose();
    shift.l2.grad.noalias() +=
        2.0 * frobenius_weight * shift.l1.value.transpose() * dtilde;
  }
}

AdamOptimizer::AdamOptimizer(const ParamRegistry& params, const AdamConfig& cfg)
    : params_(params), cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Param* p : params_) {
    m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    if (!p.grad.allFinite()) {
      throw NumericError("non-finite gradient for parameter '" + p.name + "'");
    }
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseProduct(p.grad);
    const Eigen::ArrayXXd m_hat = m_[i].array() / bc1;
    const Eigen::ArrayXXd v_hat = v_[i].array() / bc2;
    p.value.array() -= cfg_.lr * (m_hat / (v_hat.sqrt() + cfg_.eps));
    if (cfg_.weight_decay != 0.0) {
      p.value *= 1.0 - cfg_.lr * cfg_.weight_decay;  // decoupled decay
    }
  }
}

double batch_loss(AGCNet& net, const Batch& batch, const LossConfig& cfg,
                  bool accumulate_grads) {
  if (batch.dataset == nullptr || batch.indices.empty()) {
    throw std::invalid_argument("batch_loss: empty batch");
  }
  const SlidingWindowDataset& ds = *batch.dataset;

  // Pooled unmasked count over the whole batch first; the per-entry gradient
  // weight depends on it.
  std::int64_t count = 0;
  std::vector<Eigen::MatrixXd> y_norm(batch.indices.size());
  for (std::size_t i = 0; i < batch.indices.size(); ++i) {
    const WindowSample& sample = ds.samples[batch.indices[i]];
    y_norm[i] = zscore_apply(sample.y, ds.stats);
    count += masked_count(y_norm[i], cfg.mask_value);
  }
  if (count == 0) {
    std::cerr << "[agcnet] warning: all targets masked in batch, loss reduces to the "
                 "regularization term\n";
  }

  const ModelPass pass = net.prepare_pass();
  PassGradAccum accum;
  if (accumulate_grads) accum = net.make_accum();

  double abs_sum = 0.0;
  SampleCache cache;
  for (std::size_t i = 0; i < batch.indices.size(); ++i) {
    const WindowSample& sample = ds.samples[batch.indices[i]];
    const Eigen::MatrixXd pred = net.forward_cached(pass, sample.x, cache);
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      for (Eigen::Index c = 0; c < pred.cols(); ++c) {
        if (y_norm[i](r, c) == cfg.mask_value) continue;
        abs_sum += std::abs(pred(r, c) - y_norm[i](r, c));
      }
    }
    if (accumulate_grads && count > 0) {
      const Eigen::MatrixXd g_pred = masked_mae_grad(pred, y_norm[i], cfg.mask_value, count);
      net.backward(pass, cache, g_pred, accum);
    }
  }
  if (accumulate_grads) {
    net.finalize_grads(pass, accum);
    add_shift_penalty_grads(net, cfg.frobenius_weight);
  }

  double loss = count > 0 ? abs_sum / static_cast<double>(count) : 0.0;
  loss += shift_penalty(net, cfg.frobenius_weight);
  return loss;
}

GradCheckReport finite_difference_check(AGCNet& net, const Batch& batch, const LossConfig& cfg,
                                        double h, const std::string& corrupt_param) {
  GradCheckReport report;

  zero_grads(net.params());
  batch_loss(net, batch, cfg, /*accumulate_grads=*/true);
  std::vector<Eigen::MatrixXd> analytic;
  analytic.reserve(net.params().size());
  for (const Param* p : net.params()) analytic.push_back(p->grad);

  if (!corrupt_param.empty()) {
    bool found = false;
    for (std::size_t i = 0; i < net.params().size(); ++i) {
      if (net.params()[i]->name == corrupt_param) {
        analytic[i] *= 2.0;  // injected fault
        found = true;
      }
    }
    if (!found) {
      throw std::invalid_argument("finite_difference_check: unknown parameter '" + corrupt_param +
                                  "'");
    }
  }

  report.pass = true;
  for (std::size_t pi = 0; pi < net.params().size(); ++pi) {
    Param& p = *net.params()[pi];
    GradCheckEntry entry;
    entry.name = p.name;

    std::vector<Eigen::Index> coords;
    const Eigen::Index size = p.size();
    if (size < 20) {
      coords.resize(static_cast<std::size_t>(size));
      std::iota(coords.begin(), coords.end(), 0);
    } else {
      // deterministic subsample, seeded by the parameter's registry position
      Rng rng(0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(pi));
      std::set<Eigen::Index> chosen;
      while (chosen.size() < 20) {
        chosen.insert(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size))));
      }
      coords.assign(chosen.begin(), chosen.end());
    }

    for (Eigen::Index flat : coords) {
      const Eigen::Index r = flat / p.value.cols();
      const Eigen::Index c = flat % p.value.cols();
      const double orig = p.value(r, c);
      const double step = h * std::max(1.0, std::abs(orig));
      p.value(r, c) = orig + step;
      const double loss_plus = batch_loss(net, batch, cfg, false);
      p.value(r, c) = orig - step;
      const double loss_minus = batch_loss(net, batch, cfg, false);
      p.value(r, c) = orig;

      const double fd = (loss_plus - loss_minus) / (2.0 * step);
      const double a = analytic[pi](r, c);
      const double rel = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.coords_checked;
    }
    entry.pass = entry.max_rel_err < report.threshold;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

TrainHistory fit(AGCNet& net, const SlidingWindowDataset& train, const SlidingWindowDataset& val,
                 const FitConfig& cfg, const EpochCallback& on_epoch) {
  if (train.size() == 0 || val.size() == 0) {
    throw std::invalid_argument("fit: train and val datasets must be non-empty");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1) {
    throw std::invalid_argument("fit: bad epochs/batch_size");
  }

  AdamOptimizer optimizer(net.params(), cfg.adam);
  Rng shuffle_rng(cfg.seed);

  std::vector<int> horizon_steps = cfg.eval_horizon_steps;
  if (horizon_steps.empty()) horizon_steps = default_horizon_steps(train.horizon);

  TrainHistory history;
  history.best_val_mae = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_params = net.flatten_params();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      Batch batch;
      batch.dataset = &train;
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
      zero_grads(net.params());
      const double loss = batch_loss(net, batch, cfg.loss, true);
      if (cfg.grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const Param* p : net.params()) sq += p->grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip_norm) {
          const double scale = cfg.grad_clip_norm / norm;
          for (Param* p : net.params()) p->grad *= scale;
        }
      }
      optimizer.step();
      loss_sum += loss * static_cast<double>(batch.indices.size());
      seen += batch.indices.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);

    const HorizonReport val_report = horizon_eval(net, val, horizon_steps, cfg.interval_minutes);
    if (!val_report.overall.mae.has_value()) {
      throw NumericError("fit: validation split has no unmasked targets");
    }
    rec.val_horizons = val_report.horizons;
    rec.val_mae = *val_report.overall.mae;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_mae)) {
      throw NumericError("fit: diverged at epoch " + std::to_string(epoch) + " (train loss " +
                         std::to_string(rec.train_loss) + ", val MAE " +
                         std::to_string(rec.val_mae) + ")");
    }

    if (rec.val_mae < history.best_val_mae) {
      history.best_val_mae = rec.val_mae;
      history.best_epoch = epoch;
      best_params = net.flatten_params();
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.lr_decay != 1.0) optimizer.set_lr(optimizer.lr() * cfg.lr_decay);
  }

  net.restore_params(best_params);
  return history;
}

}  // namespace agcnet

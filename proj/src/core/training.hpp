#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"

namespace agcnet {

struct LossConfig {
  double frobenius_weight = 1e-4;  // lambda_F
  double mask_value = kMaskValue;
};

/// Mean absolute error over entries where target != mask_value, plus
/// lambda_F * ||l1 l2||_F^2 when a shift kernel is supplied. An all-masked
/// batch contributes only the regularization term (warned once per call).
double masked_mae_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                       const LossConfig& cfg, const ShiftKernel* shift = nullptr);

/// dLoss/dpred of the data term: sign(pred - target) / count on unmasked
/// entries, zero elsewhere. `count` may span a larger pool than this matrix
/// (batch pooling).
Eigen::MatrixXd masked_mae_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                                double mask_value, std::int64_t count);

std::int64_t masked_count(const Eigen::MatrixXd& target, double mask_value);

/// Frobenius penalty over every shift kernel in the encoder, and its gradient
/// contribution (2 lambda_F D~ L2^T etc.) added to the shift parameter grads.
double shift_penalty(const AGCNet& net, double frobenius_weight);
void add_shift_penalty_grads(AGCNet& net, double frobenius_weight);

struct AdamConfig {
  double lr = 0.002;
  double weight_decay = 0.0001;  // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction and decoupled weight decay. Moments mirror the
/// registry parameter shapes. Rejects non-finite gradients by parameter name.
class AdamOptimizer {
public:
  AdamOptimizer(const ParamRegistry& params, const AdamConfig& cfg);

  void step();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  std::int64_t step_count() const { return step_count_; }

private:
  ParamRegistry params_;
  AdamConfig cfg_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  std::int64_t step_count_ = 0;
};

/// A minibatch is a set of sample indices into a dataset.
struct Batch {
  const SlidingWindowDataset* dataset = nullptr;
  std::vector<std::size_t> indices;
};

/// Full training loss on a batch: pooled masked MAE on normalized targets
/// plus the shift penalty. Fills Param::grad when `accumulate_grads` is set.
double batch_loss(AGCNet& net, const Batch& batch, const LossConfig& cfg, bool accumulate_grads);

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  int coords_checked = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double threshold = 1e-4;
  bool pass = false;
};

/// Central-difference verification of the analytic gradients on a fixed
/// batch. Checks every coordinate of tensors with < 20 entries and a
/// deterministic subsample of 20 coordinates otherwise. Relative error is
/// |a - b| / max(1e-8, |a| + |b|). `corrupt_param`, when non-empty, doubles
/// that parameter's analytic gradient (fault-injection hook for tests).
GradCheckReport finite_difference_check(AGCNet& net, const Batch& batch, const LossConfig& cfg,
                                        double h = 1e-6, const std::string& corrupt_param = "");

struct FitConfig {
  int epochs = 200;
  int batch_size = 128;
  std::uint64_t seed = 1;
  AdamConfig adam;
  LossConfig loss;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  double lr_decay = 1.0;        // per-epoch multiplicative factor
  std::vector<int> eval_horizon_steps;
  int interval_minutes = 5;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::vector<HorizonEntry> val_horizons;
  double val_mae = 0.0;  // pooled over all horizon steps; selection criterion
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mae = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam over shuffled epochs (shuffle stream fixed by the seed),
/// per-epoch masked validation metrics, best-on-validation parameters
/// restored into the net on return. Aborts with NumericError on divergence.
TrainHistory fit(AGCNet& net, const SlidingWindowDataset& train, const SlidingWindowDataset& val,
                 const FitConfig& cfg, const EpochCallback& on_epoch = nullptr);

}  // namespace agcnet

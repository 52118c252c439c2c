#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/data.hpp"

namespace agcnet {

class AGCNet;

/// Error statistics over entries whose target is not the mask sentinel.
/// MAPE additionally excludes |target| < 1e-4 and is reported in percent.
/// All-masked inputs yield absent values with count 0, never NaN.
struct MaskedMetrics {
  std::optional<double> mae;
  std::optional<double> rmse;
  std::optional<double> mape_pct;
  std::int64_t count = 0;
  std::int64_t mape_count = 0;
};

MaskedMetrics masked_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                             double mask_value = kMaskValue);

struct HorizonEntry {
  std::string label;  // e.g. "15min"
  int step = 0;       // 1-based horizon step
  MaskedMetrics metrics;
};

struct HorizonReport {
  std::vector<HorizonEntry> horizons;
  MaskedMetrics overall;  // pooled over every horizon step
};

std::string horizon_label(int step, int interval_minutes);

/// Default evaluation steps {3, 6, 12} clipped to the available horizon; falls
/// back to {P} when none fit.
std::vector<int> default_horizon_steps(int horizon);

/// Evaluates a trained net on a windowed dataset. Predictions are
/// denormalized with the dataset statistics before the masked metrics.
HorizonReport horizon_eval(const AGCNet& net, const SlidingWindowDataset& dataset,
                           const std::vector<int>& horizon_steps, int interval_minutes);

/// Repeats the last observed value of the recent channel at every horizon.
HorizonReport persistence_baseline(const SlidingWindowDataset& dataset,
                                   const std::vector<int>& horizon_steps, int interval_minutes);

struct WelchResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  double mean_a = 0.0, mean_b = 0.0;
  double std_a = 0.0, std_b = 0.0;  // sample (n-1) standard deviations
  std::size_t n_a = 0, n_b = 0;
};

/// Welch's unequal-variance two-sided t-test with Welch-Satterthwaite degrees
/// of freedom. Degenerate inputs (both samples zero-variance) resolve to
/// p = 1 for equal means and p = 0 otherwise.
WelchResult welch_ttest(std::span<const double> sample_a, std::span<const double> sample_b);

/// Regularized incomplete beta I_x(a, b) (used for the t survival function).
double incomplete_beta(double a, double b, double x);

}  // namespace agcnet

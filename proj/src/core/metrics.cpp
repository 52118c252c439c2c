#include "core/metrics.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "core/errors.hpp"
#include "core/model.hpp"

namespace agcnet {

MaskedMetrics masked_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target,
                             double mask_value) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("masked_metrics: shape mismatch");
  }
  MaskedMetrics m;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double ape_sum = 0.0;
  for (Eigen::Index r = 0; r < target.rows(); ++r) {
    for (Eigen::Index c = 0; c < target.cols(); ++c) {
      const double t = target(r, c);
      if (t == mask_value) continue;
      const double err = pred(r, c) - t;
      abs_sum += std::abs(err);
      sq_sum += err * err;
      ++m.count;
      if (std::abs(t) >= 1e-4) {
        ape_sum += std::abs(err / t);
        ++m.mape_count;
      }
    }
  }
  if (m.count > 0) {
    m.mae = abs_sum / static_cast<double>(m.count);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(m.count));
  }
  if (m.mape_count > 0) {
    m.mape_pct = 100.0 * ape_sum / static_cast<double>(m.mape_count);
  }
  return m;
}

std::string horizon_label(int step, int interval_minutes) {
  return std::to_string(step * interval_minutes) + "min";
}

std::vector<int> default_horizon_steps(int horizon) {
  std::vector<int> steps;
  for (int s : {3, 6, 12}) {
    if (s <= horizon) steps.push_back(s);
  }
  if (steps.empty()) steps.push_back(horizon);
  return steps;
}

namespace {

/// Stacks per-sample predictions/targets at one horizon step into tall
/// matrices and runs the masked metrics over the pool.
HorizonReport report_from_predictions(const std::vector<Eigen::MatrixXd>& preds,
                                      const SlidingWindowDataset& dataset,
                                      const std::vector<int>& horizon_steps,
                                      int interval_minutes) {
  const auto count = static_cast<Eigen::Index>(dataset.size());
  const Eigen::Index n = count > 0 ? dataset.samples[0].y.rows() : 0;

  HorizonReport report;
  for (int step : horizon_steps) {
    if (step < 1 || step > dataset.horizon) {
      throw std::invalid_argument("horizon step " + std::to_string(step) +
                                  " outside 1.." + std::to_string(dataset.horizon));
    }
    Eigen::MatrixXd p(count, n), t(count, n);
    for (Eigen::Index i = 0; i < count; ++i) {
      p.row(i) = preds[static_cast<std::size_t>(i)].col(step - 1).transpose();
      t.row(i) = dataset.samples[static_cast<std::size_t>(i)].y.col(step - 1).transpose();
    }
    HorizonEntry entry;
    entry.step = step;
    entry.label = horizon_label(step, interval_minutes);
    entry.metrics = masked_metrics(p, t, dataset.stats.mask_value);
    report.horizons.push_back(std::move(entry));
  }

  // pooled over the full horizon
  Eigen::MatrixXd p_all(count * dataset.horizon, n), t_all(count * dataset.horizon, n);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int j = 0; j < dataset.horizon; ++j) {
      p_all.row(i * dataset.horizon + j) =
          preds[static_cast<std::size_t>(i)].col(j).transpose();
      t_all.row(i * dataset.horizon + j) =
          dataset.samples[static_cast<std::size_t>(i)].y.col(j).transpose();
    }
  }
  report.overall = masked_metrics(p_all, t_all, dataset.stats.mask_value);
  return report;
}

}  // namespace

HorizonReport horizon_eval(const AGCNet& net, const SlidingWindowDataset& dataset,
                           const std::vector<int>& horizon_steps, int interval_minutes) {
  std::vector<Eigen::MatrixXd> preds;
  preds.reserve(dataset.size());
  const ModelPass pass = net.prepare_pass();
  SampleCache cache;
  for (const auto& sample : dataset.samples) {
    Eigen::MatrixXd pred = net.forward_cached(pass, sample.x, cache);
    preds.push_back(denormalize(pred, dataset.stats));
  }
  return report_from_predictions(preds, dataset, horizon_steps, interval_minutes);
}

HorizonReport persistence_baseline(const SlidingWindowDataset& dataset,
                                   const std::vector<int>& horizon_steps, int interval_minutes) {
  std::vector<Eigen::MatrixXd> preds;
  preds.reserve(dataset.size());
  for (const auto& sample : dataset.samples) {
    preds.push_back(sample.last_observed.replicate(1, dataset.horizon));
  }
  return report_from_predictions(preds, dataset, horizon_steps, interval_minutes);
}

// ---- Welch's t-test ---------------------------------------------------------

namespace {

/// Continued-fraction core of the regularized incomplete beta (Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete_beta: a and b must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

WelchResult welch_ttest(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2) {
    throw std::invalid_argument("welch_ttest: each sample needs at least 2 values");
  }
  auto mean_var = [](std::span<const double> s, double& mean, double& var) {
    mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size() - 1);  // unbiased
  };

  WelchResult res;
  res.n_a = sample_a.size();
  res.n_b = sample_b.size();
  double var_a = 0.0, var_b = 0.0;
  mean_var(sample_a, res.mean_a, var_a);
  mean_var(sample_b, res.mean_b, var_b);
  res.std_a = std::sqrt(var_a);
  res.std_b = std::sqrt(var_b);

  const double se_a = var_a / static_cast<double>(res.n_a);
  const double se_b = var_b / static_cast<double>(res.n_b);
  const double se = se_a + se_b;

  if (se == 0.0) {
    // both samples constant
    if (res.mean_a == res.mean_b) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = res.mean_a > res.mean_b ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
      std::cerr << "[agcnet] warning: welch_ttest on two zero-variance samples with different "
                   "means; p = 0 by convention\n";
    }
    res.df = static_cast<double>(res.n_a + res.n_b - 2);
    return res;
  }

  res.t = (res.mean_a - res.mean_b) / std::sqrt(se);
  res.df = se * se /
           (se_a * se_a / static_cast<double>(res.n_a - 1) +
            se_b * se_b / static_cast<double>(res.n_b - 1));
  // two-sided p from the t survival function
  const double x = res.df / (res.df + res.t * res.t);
  res.p = incomplete_beta(res.df / 2.0, 0.5, x);
  return res;
}

}  // namespace agcnet

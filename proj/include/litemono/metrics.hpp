#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "litemono/tensor.hpp"

namespace litemono {

struct DepthMetrics {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;
  Index valid_pixels = 0;
};

struct MetricsOptions {
  double cap = 80;
  double floor = 1e-3;
  bool median_scale = true;
};

/// Metrics over pixels with gt > 0. Prediction and gt are clamped to
/// [floor, cap] after optional median scaling. Throws std::invalid_argument
/// on size mismatch, non-positive predictions, or no valid pixels.
DepthMetrics depth_metrics(const Eigen::Ref<const Eigen::ArrayXd>& pred,
                           const Eigen::Ref<const Eigen::ArrayXd>& gt, const MetricsOptions& options = {});

/// Per-image metrics averaged over the batch (N x 1 x H x W maps).
DepthMetrics depth_metrics(const Tensord& pred, const Tensord& gt, const MetricsOptions& options = {});

/// Unweighted mean of per-image metrics.
DepthMetrics average(const std::vector<DepthMetrics>& items);

/// Header and one row: Abs Rel, Sq Rel, RMSE, RMSE log, d1, d2, d3.
std::string metrics_table(const DepthMetrics& m);
/// One `key=value` line per metric.
std::string metrics_key_values(const DepthMetrics& m);

}  // namespace litemono

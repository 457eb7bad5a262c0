#include "litemono/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace litemono {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace

DepthMetrics depth_metrics(const Eigen::Ref<const Eigen::ArrayXd>& pred,
                           const Eigen::Ref<const Eigen::ArrayXd>& gt, const MetricsOptions& options) {
  if (pred.size() != gt.size()) throw std::invalid_argument("depth_metrics: prediction and gt sizes differ");
  std::vector<double> p, g;
  for (Eigen::Index i = 0; i < gt.size(); ++i) {
    if (!(gt(i) > 0) || !std::isfinite(gt(i))) continue;
    if (!(pred(i) > 0)) throw std::invalid_argument("depth_metrics: prediction must be positive");
    p.push_back(pred(i));
    g.push_back(gt(i));
  }
  if (g.empty()) throw std::invalid_argument("depth_metrics: no valid gt pixels");
  Eigen::ArrayXd pa = Eigen::Map<Eigen::ArrayXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  Eigen::ArrayXd ga = Eigen::Map<Eigen::ArrayXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  if (options.median_scale) pa *= median(g) / median(p);
  pa = pa.max(options.floor).min(options.cap);
  ga = ga.max(options.floor).min(options.cap);

  DepthMetrics m;
  m.valid_pixels = ga.size();
  const Eigen::ArrayXd diff = pa - ga;
  m.abs_rel = (diff.abs() / ga).mean();
  m.sq_rel = (diff.square() / ga).mean();
  m.rmse = std::sqrt(diff.square().mean());
  m.rmse_log = std::sqrt((pa.log() - ga.log()).square().mean());
  const Eigen::ArrayXd ratio = (pa / ga).max(ga / pa);
  m.delta1 = (ratio < 1.25).cast<double>().mean();
  m.delta2 = (ratio < 1.25 * 1.25).cast<double>().mean();
  m.delta3 = (ratio < 1.25 * 1.25 * 1.25).cast<double>().mean();
  return m;
}

DepthMetrics depth_metrics(const Tensord& pred, const Tensord& gt, const MetricsOptions& options) {
  if (pred.shape() != gt.shape() || pred.rank() != 4)
    throw ShapeError("depth_metrics: expected matching N x 1 x H x W maps, got " + shape_string(pred.shape()) +
                     " and " + shape_string(gt.shape()));
  const Index per = pred.numel() / pred.dim(0);
  std::vector<DepthMetrics> items;
  for (Index n = 0; n < pred.dim(0); ++n)
    items.push_back(depth_metrics(Eigen::Map<const Eigen::ArrayXd>(pred.ptr() + n * per, per),
                                  Eigen::Map<const Eigen::ArrayXd>(gt.ptr() + n * per, per), options));
  return average(items);
}

DepthMetrics average(const std::vector<DepthMetrics>& items) {
  if (items.empty()) throw std::invalid_argument("average: no metrics");
  DepthMetrics m;
  const double w = 1.0 / static_cast<double>(items.size());
  for (const auto& x : items) {
    m.abs_rel += w * x.abs_rel;
    m.sq_rel += w * x.sq_rel;
    m.rmse += w * x.rmse;
    m.rmse_log += w * x.rmse_log;
    m.delta1 += w * x.delta1;
    m.delta2 += w * x.delta2;
    m.delta3 += w * x.delta3;
    m.valid_pixels += x.valid_pixels;
  }
  return m;
}

std::string metrics_table(const DepthMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%9s %9s %9s %9s %9s %9s %9s\n%9.4f %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n",
                "Abs Rel", "Sq Rel", "RMSE", "RMSE log", "d<1.25", "d<1.25^2", "d<1.25^3", m.abs_rel, m.sq_rel,
                m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3);
  return buf;
}

std::string metrics_key_values(const DepthMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "abs_rel=%.9g\nsq_rel=%.9g\nrmse=%.9g\nrmse_log=%.9g\ndelta1=%.9g\ndelta2=%.9g\ndelta3=%.9g\n"
                "valid_pixels=%lld\n",
                m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3,
                static_cast<long long>(m.valid_pixels));
  return buf;
}

}  // namespace litemono

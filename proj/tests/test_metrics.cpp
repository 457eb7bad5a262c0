#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "litemono/metrics.hpp"

using namespace litemono;

namespace {

// Straight loop over the seven definitions; median by full sort.
DepthMetrics oracle(const std::vector<double>& pred, const std::vector<double>& gt, bool scale, double cap) {
  std::vector<double> p, g;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i] > 0) {
      p.push_back(pred[i]);
      g.push_back(gt[i]);
    }
  auto med = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double s = scale ? med(g) / med(p) : 1.0;
  DepthMetrics m;
  const double n = static_cast<double>(g.size());
  double se = 0, sl = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::clamp(p[i] * s, 1e-3, cap), b = std::clamp(g[i], 1e-3, cap);
    m.abs_rel += std::abs(a - b) / b / n;
    m.sq_rel += (a - b) * (a - b) / b / n;
    se += (a - b) * (a - b) / n;
    sl += (std::log(a) - std::log(b)) * (std::log(a) - std::log(b)) / n;
    const double r = std::max(a / b, b / a);
    m.delta1 += (r < 1.25) / n;
    m.delta2 += (r < 1.5625) / n;
    m.delta3 += (r < 1.953125) / n;
  }
  m.rmse = std::sqrt(se);
  m.rmse_log = std::sqrt(sl);
  return m;
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST(DepthMetrics, PerfectPrediction) {
  Eigen::ArrayXd g = Eigen::ArrayXd::LinSpaced(50, 1, 70);
  const DepthMetrics m = depth_metrics(g, g);
  EXPECT_EQ(m.abs_rel, 0);
  EXPECT_EQ(m.sq_rel, 0);
  EXPECT_EQ(m.rmse, 0);
  EXPECT_EQ(m.rmse_log, 0);
  EXPECT_EQ(m.delta1, 1);
  EXPECT_EQ(m.delta2, 1);
  EXPECT_EQ(m.delta3, 1);
}

TEST(DepthMetrics, ConstantRatioWithoutScaling) {
  Eigen::ArrayXd g = Eigen::ArrayXd::LinSpaced(64, 0.5, 60);
  const DepthMetrics m = depth_metrics(1.3 * g, g, {.median_scale = false});
  EXPECT_NEAR(m.abs_rel, 0.3, 1e-12);
  EXPECT_EQ(m.delta1, 0);
  EXPECT_EQ(m.delta2, 1);
  EXPECT_EQ(m.delta3, 1);
}

TEST(DepthMetrics, MedianScalingRemovesGlobalFactor) {
  Eigen::ArrayXd g = Eigen::ArrayXd::LinSpaced(64, 0.5, 60);
  const DepthMetrics m = depth_metrics(1.3 * g, g);
  EXPECT_NEAR(m.abs_rel, 0, 1e-15);
  EXPECT_NEAR(m.rmse, 0, 1e-13);
  EXPECT_EQ(m.delta1, 1);
}

TEST(DepthMetrics, InvalidGtIsSkippedAndEmptyThrows) {
  Eigen::ArrayXd g(4), p(4);
  g << 0, 2, -1, 4;
  p << 100, 2, 100, 4;
  const DepthMetrics m = depth_metrics(p, g, {.median_scale = false});
  EXPECT_EQ(m.valid_pixels, 2);
  EXPECT_EQ(m.abs_rel, 0);
  EXPECT_THROW(depth_metrics(p, Eigen::ArrayXd::Zero(4)), std::invalid_argument);
  EXPECT_THROW(depth_metrics(p.head(3), g), std::invalid_argument);
  p(1) = 0;
  EXPECT_THROW(depth_metrics(p, g), std::invalid_argument);
}

TEST(DepthMetrics, MatchesDirectEvaluationOnRandomPairs) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> depth(0.1, 100), noise(0.5, 1.8);
  std::uniform_int_distribution<int> size(1, 400);
  std::bernoulli_distribution hole(0.1);
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    std::vector<double> p(n), g(n);
    for (int i = 0; i < n; ++i) {
      g[i] = hole(rng) && i > 0 ? 0 : depth(rng);
      p[i] = g[i] > 0 ? g[i] * noise(rng) : depth(rng);
    }
    for (bool scale : {false, true}) {
      const DepthMetrics a = depth_metrics(to_array(p), to_array(g), {.median_scale = scale});
      const DepthMetrics b = oracle(p, g, scale, 80);
      EXPECT_NEAR(a.abs_rel, b.abs_rel, 1e-9);
      EXPECT_NEAR(a.sq_rel, b.sq_rel, 1e-9);
      EXPECT_NEAR(a.rmse, b.rmse, 1e-9);
      EXPECT_NEAR(a.rmse_log, b.rmse_log, 1e-9);
      EXPECT_NEAR(a.delta1, b.delta1, 1e-9);
      EXPECT_NEAR(a.delta2, b.delta2, 1e-9);
      EXPECT_NEAR(a.delta3, b.delta3, 1e-9);
      EXPECT_LE(a.delta1, a.delta2);
      EXPECT_LE(a.delta2, a.delta3);
    }
  }
}

TEST(DepthMetrics, MedianScaledMetricsIgnorePredictionScale) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> depth(1, 50);
  Eigen::ArrayXd g(101), p(101);
  for (int i = 0; i < 101; ++i) {
    g(i) = depth(rng);
    p(i) = depth(rng);
  }
  const DepthMetrics a = depth_metrics(p, g), b = depth_metrics(p * 7.25, g);
  EXPECT_NEAR(a.abs_rel, b.abs_rel, 1e-12);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-12);
  EXPECT_EQ(a.delta1, b.delta1);
}

TEST(DepthMetrics, BatchAveragesPerImage) {
  Tensord p({2, 1, 1, 2}, {1.3, 2.6, 1, 2}), g({2, 1, 1, 2}, {1, 2, 1, 2});
  const DepthMetrics m = depth_metrics(p, g, {.median_scale = false});
  EXPECT_NEAR(m.abs_rel, 0.15, 1e-12);
  EXPECT_EQ(m.valid_pixels, 4);
}

TEST(DepthMetrics, TableColumnOrder) {
  DepthMetrics m{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 10};
  const std::string t = metrics_table(m);
  const auto pos = [&](const char* s) { return t.find(s); };
  EXPECT_LT(pos("Abs Rel"), pos("Sq Rel"));
  EXPECT_LT(pos("Sq Rel"), pos("RMSE"));
  EXPECT_LT(pos("RMSE "), pos("RMSE log"));
  EXPECT_LT(pos("RMSE log"), pos("d<1.25 "));
  EXPECT_LT(pos("d<1.25^2"), pos("d<1.25^3"));
  EXPECT_NE(t.find("0.1000"), std::string::npos);
  const std::string kv = metrics_key_values(m);
  EXPECT_NE(kv.find("abs_rel=0.1\n"), std::string::npos);
  EXPECT_NE(kv.find("delta3=0.7\n"), std::string::npos);
}

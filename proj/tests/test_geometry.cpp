#include <gtest/gtest.h>

#include <Eigen/Core>
#include <cmath>

#include "litemono/geometry.hpp"
#include "litemono/grad_check.hpp"
#include "litemono/posenet.hpp"
#include "test_util.hpp"

using namespace litemono;
using litemono::testing::random_tensor;
using litemono::testing::weighted_sum;

namespace {

CameraIntrinsics camera(Index w, Index h) { return {0.75 * w, 0.8 * h, 0.5 * w + 0.3, 0.5 * h - 0.2, w, h}; }

Tensord transform_tensor(const std::vector<Eigen::Matrix4d>& ms) {
  Tensord t({static_cast<Index>(ms.size()), 4, 4});
  for (std::size_t b = 0; b < ms.size(); ++b)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) t.data()[b * 16 + i * 4 + j] = ms[b](i, j);
  return t;
}

Eigen::Matrix4d translation(double x, double y, double z) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 3) = Eigen::Vector3d(x, y, z);
  return m;
}

Eigen::Matrix4d random_motion(std::mt19937_64& rng, double rot, double trans) {
  std::uniform_real_distribution<double> u(-1, 1);
  Pose p;
  p.axis_angle = Eigen::Vector3d(u(rng), u(rng), u(rng)) * rot;
  p.translation = Eigen::Vector3d(u(rng), u(rng), u(rng)) * trans;
  return pose_to_matrix(p);
}

}  // namespace

TEST(Intrinsics, ResizeAndFlip) {
  const CameraIntrinsics k{480, 144, 320, 96, 640, 192};
  const CameraIntrinsics half = k.resized(320, 96);
  EXPECT_DOUBLE_EQ(half.fx, 240);
  EXPECT_DOUBLE_EQ(half.fy, 72);
  EXPECT_DOUBLE_EQ(half.cx, 160);
  EXPECT_DOUBLE_EQ(half.cy, 48);
  const CameraIntrinsics off{480, 144, 300, 96, 640, 192};
  EXPECT_DOUBLE_EQ(off.flipped().cx, 340);
  EXPECT_DOUBLE_EQ(off.flipped().flipped().cx, 300);
  Eigen::Matrix3d m;
  m << 480, 0, 320, 0, 144, 96, 0, 0, 1;
  EXPECT_EQ(k.matrix(), m);
  EXPECT_THROW((CameraIntrinsics{0, 1, 0, 0, 4, 4}.validate()), std::invalid_argument);
  EXPECT_THROW((CameraIntrinsics{1, 1, 0, 0, 0, 4}.validate()), std::invalid_argument);
}

TEST(Intrinsics, FlipMirrorsProjection) {
  // a pixel center at column j projects through the flipped camera to W-1-j
  // once the scene is mirrored in x
  const CameraIntrinsics k = camera(12, 8);
  const CameraIntrinsics f = k.flipped();
  for (Index j = 0; j < 12; ++j) {
    const double x = (j + 0.5 - k.cx) / k.fx;
    const double u = f.fx * (-x) + f.cx - 0.5;
    EXPECT_NEAR(u, 11 - j, 1e-12);
  }
}

TEST(Backproject, MatchesPinholeFormula) {
  std::mt19937_64 rng(1);
  const CameraIntrinsics k = camera(7, 5);
  const Tensord depth = random_tensor(rng, {2, 1, 5, 7}, 0.5, 20);
  const Tensord p = backproject(depth, k);
  ASSERT_EQ(p.shape(), (Shape{2, 5, 7, 3}));
  for (Index b = 0; b < 2; ++b)
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 7; ++j) {
        const double d = depth.at({b, 0, i, j});
        EXPECT_NEAR(p.at({b, i, j, 0}), d * (j + 0.5 - k.cx) / k.fx, 1e-12);
        EXPECT_NEAR(p.at({b, i, j, 1}), d * (i + 0.5 - k.cy) / k.fy, 1e-12);
        EXPECT_EQ(p.at({b, i, j, 2}), d);
      }
}

TEST(Backproject, PrincipalPointIsOnAxis) {
  const CameraIntrinsics k{4, 4, 2.5, 1.5, 6, 4};  // center of pixel (1, 2)
  const Tensord p = backproject(Tensord::full({1, 1, 4, 6}, 3.0), k);
  EXPECT_EQ(p.at({0, 1, 2, 0}), 0);
  EXPECT_EQ(p.at({0, 1, 2, 1}), 0);
  EXPECT_EQ(p.at({0, 1, 2, 2}), 3);
}

TEST(Backproject, StrictRejectsNonPositiveDepth) {
  const CameraIntrinsics k = camera(4, 4);
  Tensord d = Tensord::ones({1, 1, 4, 4});
  d.data()[5] = 0;
  EXPECT_THROW(backproject(d, k), std::domain_error);
  const Tensord p = backproject(d, k, false);
  EXPECT_DOUBLE_EQ(p.at({0, 1, 1, 2}), kMinProjectedDepth);
}

TEST(Backproject, SizeMismatchThrows) {
  EXPECT_THROW(backproject(Tensord::ones({1, 1, 4, 5}), camera(4, 4)), ShapeError);
  EXPECT_THROW(backproject(Tensord::ones({1, 2, 4, 4}), camera(4, 4)), ShapeError);
}

TEST(Project, RoundTripIsPixelGrid) {
  std::mt19937_64 rng(2);
  const CameraIntrinsics k = camera(9, 6);
  const Tensord depth = random_tensor(rng, {2, 1, 6, 9}, 0.1, 100);
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  const Projection<double> pr = project(backproject(depth, k), k, transform_tensor({id, id}));
  for (Index b = 0; b < 2; ++b)
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 9; ++j) {
        EXPECT_NEAR(pr.coords.at({b, i, j, 0}), j, 1e-9);
        EXPECT_NEAR(pr.coords.at({b, i, j, 1}), i, 1e-9);
        EXPECT_EQ(pr.valid.at({b, 0, i, j}), 1);
      }
}

TEST(Project, ForwardTranslationContractsTowardPrincipalPoint) {
  const CameraIntrinsics k = camera(10, 8);
  const double d = 4, tz = 2;
  const Projection<double> pr =
      project(backproject(Tensord::full({1, 1, 8, 10}, d), k), k, transform_tensor({translation(0, 0, tz)}));
  const double s = d / (d + tz);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 10; ++j) {
      const double u0 = j + 0.5 - k.cx, v0 = i + 0.5 - k.cy;
      EXPECT_NEAR(pr.coords.at({0, i, j, 0}) + 0.5 - k.cx, s * u0, 1e-12);
      EXPECT_NEAR(pr.coords.at({0, i, j, 1}) + 0.5 - k.cy, s * v0, 1e-12);
      EXPECT_EQ(pr.valid.at({0, 0, i, j}), 1);  // contraction stays inside
    }
}

TEST(Project, MatchesMatrixOracle) {
  std::mt19937_64 rng(3);
  const CameraIntrinsics k = camera(8, 6);
  Tensord points = random_tensor(rng, {3, 6, 8, 3}, -2, 2);
  for (Index q = 0; q < points.numel() / 3; ++q) points.data()[q * 3 + 2] = 3 + points.data()[q * 3 + 2];
  std::vector<Eigen::Matrix4d> ms{random_motion(rng, 0.2, 0.5), random_motion(rng, 0.2, 0.5),
                                  random_motion(rng, 0.2, 0.5)};
  const Projection<double> pr = project(points, k, transform_tensor(ms));
  const Eigen::Matrix3d km = k.matrix();
  for (Index b = 0; b < 3; ++b)
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 8; ++j) {
        Eigen::Vector4d x(points.at({b, i, j, 0}), points.at({b, i, j, 1}), points.at({b, i, j, 2}), 1);
        const Eigen::Vector3d c = km * (ms[b] * x).head<3>();
        const double u = c(0) / c(2) - 0.5, v = c(1) / c(2) - 0.5;
        EXPECT_NEAR(pr.coords.at({b, i, j, 0}), u, 1e-10);
        EXPECT_NEAR(pr.coords.at({b, i, j, 1}), v, 1e-10);
        const bool inside = c(2) > kMinProjectedDepth && u >= -0.5 && u <= 7.5 && v >= -0.5 && v <= 5.5;
        EXPECT_EQ(pr.valid.at({b, 0, i, j}), inside ? 1 : 0);
      }
}

TEST(Project, BehindCameraIsInvalid) {
  const CameraIntrinsics k = camera(6, 4);
  const double d = 5;
  const Projection<double> pr =
      project(backproject(Tensord::full({1, 1, 4, 6}, d), k), k, transform_tensor({translation(0, 0, -2 * d)}));
  for (double v : pr.valid.data()) EXPECT_EQ(v, 0);
  for (double c : pr.coords.data()) EXPECT_TRUE(std::isfinite(c));
}

TEST(Project, ValidMaskShrinksWithSidewaysMotion) {
  // fronto-parallel wall: a larger baseline can only push pixels out
  const CameraIntrinsics k = camera(16, 8);
  const Tensord pts = backproject(Tensord::full({1, 1, 8, 16}, 6.0), k);
  std::vector<double> prev(8 * 16, 1);
  double prev_count = 8 * 16;
  for (int s = 0; s <= 30; ++s) {  // 0.6 px per step, 18 px at the end
    const Projection<double> pr = project(pts, k, transform_tensor({translation(-0.3 * s, 0, 0)}));
    double count = 0;
    for (Index q = 0; q < 8 * 16; ++q) {
      const double v = pr.valid.data()[q];
      EXPECT_LE(v, prev[q]) << "pixel " << q << " became valid at step " << s;
      prev[q] = v;
      count += v;
    }
    EXPECT_LE(count, prev_count);
    prev_count = count;
  }
  EXPECT_EQ(prev_count, 0);
}

TEST(Project, MaskIsNotDifferentiable) {
  const CameraIntrinsics k = camera(4, 4);
  Tensord d = Tensord::full({1, 1, 4, 4}, 2.0);
  d.set_requires_grad(true);
  const Projection<double> pr = project(backproject(d, k), k, transform_tensor({Eigen::Matrix4d::Identity()}));
  EXPECT_TRUE(pr.coords.requires_grad());
  EXPECT_FALSE(pr.valid.requires_grad());
}

TEST(BilinearSample, IntegerCoordinatesAreExact) {
  std::mt19937_64 rng(4);
  const Tensord src = random_tensor(rng, {1, 2, 4, 5});
  Tensord c({1, 4, 5, 2});
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) {
      c.data()[(i * 5 + j) * 2] = 4 - j;
      c.data()[(i * 5 + j) * 2 + 1] = i;
    }
  const Tensord out = bilinear_sample(src, c);
  for (Index ch = 0; ch < 2; ++ch)
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 5; ++j) EXPECT_EQ(out.at({0, ch, i, j}), src.at({0, ch, i, 4 - j}));
}

TEST(BilinearSample, InterpolatesAndClamps) {
  const Tensord src({1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensord c({1, 1, 5, 2}, {0.5, 0.5, 0.25, 0, 0, 0.75, -3, -3, 9, 0.5});
  const Tensord out = bilinear_sample(src, c);
  EXPECT_DOUBLE_EQ(out.data()[0], 2.5);
  EXPECT_DOUBLE_EQ(out.data()[1], 1.25);
  EXPECT_DOUBLE_EQ(out.data()[2], 2.5);
  EXPECT_DOUBLE_EQ(out.data()[3], 1);    // clamped to the corner
  EXPECT_DOUBLE_EQ(out.data()[4], 3);    // right edge, halfway down
}

TEST(BilinearSample, LinearFunctionsAreReproduced) {
  // bilinear interpolation is exact for a + b x + c y inside the image
  std::mt19937_64 rng(5);
  Tensord src({1, 1, 6, 7});
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 7; ++j) src.data()[i * 7 + j] = 0.3 + 0.7 * j - 1.1 * i;
  const Tensord c = random_tensor(rng, {1, 3, 4, 2}, 0, 5);
  const Tensord out = bilinear_sample(src, c);
  for (Index q = 0; q < 12; ++q)
    EXPECT_NEAR(out.data()[q], 0.3 + 0.7 * c.data()[q * 2] - 1.1 * c.data()[q * 2 + 1], 1e-12);
}

TEST(Synthesize, IdentityPoseReproducesSource) {
  std::mt19937_64 rng(6);
  const CameraIntrinsics k = camera(12, 8);
  const Tensord src = random_tensor(rng, {2, 3, 8, 12}, 0, 1);
  const Tensord depth = random_tensor(rng, {2, 1, 8, 12}, 0.1, 100);
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  const Synthesis<double> s = synthesize(src, depth, transform_tensor({id, id}), k);
  for (Index q = 0; q < src.numel(); ++q) EXPECT_NEAR(s.image.data()[q], src.data()[q], 1e-6);
  const Synthesis<float> sf =
      synthesize(src.cast<float>(), depth.cast<float>(), transform_tensor({id, id}).cast<float>(), k);
  for (Index q = 0; q < src.numel(); ++q) EXPECT_NEAR(sf.image.data()[q], src.data()[q], 1e-6);
}

TEST(Synthesize, SidewaysShiftMovesImageByDisparity) {
  // wall at depth d, camera moved by b along x: source pixel = target - fx b / d
  const CameraIntrinsics k{8, 8, 8, 4, 16, 8};
  Tensord src({1, 1, 8, 16});
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 16; ++j) src.data()[i * 16 + j] = 0.1 * j;
  const double d = 4, b = 1;  // shift fx b / d = 2 pixels
  const Synthesis<double> s =
      synthesize(src, Tensord::full({1, 1, 8, 16}, d), transform_tensor({translation(-b, 0, 0)}), k);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 2; j < 16; ++j) {
      EXPECT_NEAR(s.image.at({0, 0, i, j}), 0.1 * (j - 2), 1e-12);
      EXPECT_EQ(s.valid.at({0, 0, i, j}), 1);
    }
  for (Index i = 0; i < 8; ++i) {
    EXPECT_EQ(s.valid.at({0, 0, i, 0}), 0);
    EXPECT_EQ(s.valid.at({0, 0, i, 1}), 0);
  }
}

TEST(GeometryGrad, BilinearSourceAndCoords) {
  std::mt19937_64 rng(7);
  const Tensord src = random_tensor(rng, {2, 2, 5, 6});
  // keep coordinates off the integer grid and inside the image
  Tensord c = random_tensor(rng, {2, 3, 4, 2}, 0.05, 0.95);
  std::uniform_int_distribution<int> cell(0, 3);
  for (double& v : c.data()) v += cell(rng);
  const double err = grad_check(
      [](const std::vector<Tensord>& in) { return weighted_sum(bilinear_sample(in[0], in[1])); }, {src, c});
  EXPECT_LT(err, 1e-6);
}

TEST(GeometryGrad, BackprojectAndProject) {
  std::mt19937_64 rng(8);
  const CameraIntrinsics k = camera(5, 4);
  const Tensord depth = random_tensor(rng, {2, 1, 4, 5}, 1, 5);
  const Tensord t = transform_tensor({random_motion(rng, 0.1, 0.3), random_motion(rng, 0.1, 0.3)});
  const double err = grad_check(
      [&](const std::vector<Tensord>& in) {
        return weighted_sum(project(backproject(in[0], k), k, in[1]).coords);
      },
      {depth, t});
  EXPECT_LT(err, 1e-6);
}

TEST(GeometryGrad, SynthesisThroughDepthAndPose) {
  std::mt19937_64 rng(9);
  const CameraIntrinsics k = camera(8, 8);
  const Tensord src = random_tensor(rng, {1, 3, 8, 8}, 0, 1);
  const Tensord depth = random_tensor(rng, {1, 1, 8, 8}, 2, 6);
  const Tensord pose({1, 6}, {0.02, -0.03, 0.01, 0.13, -0.07, 0.05});
  const double err = grad_check(
      [&](const std::vector<Tensord>& in) {
        return weighted_sum(synthesize(src, in[0], pose_to_matrix(in[1], false), k).image);
      },
      {depth, pose});
  EXPECT_LT(err, 1e-4);
}

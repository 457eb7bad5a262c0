#include <gtest/gtest.h>

#include <filesystem>

#include "litemono/data.hpp"
#include "litemono/image_io.hpp"
#include "scenarios.hpp"
#include "test_util.hpp"

using namespace litemono;
using litemono::testing::random_tensor;
using litemono::testing::warp_check;

namespace {

bool identical(const Tensord& a, const Tensord& b) {
  if (a.shape() != b.shape()) return false;
  for (Index q = 0; q < a.numel(); ++q)
    if (a.ptr()[q] != b.ptr()[q]) return false;
  return true;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("litemono_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Synthetic, SameSeedIsBitIdentical) {
  const FrameSequence a = generate_synthetic_sequence(5, 3, 64, 32);
  const FrameSequence b = generate_synthetic_sequence(5, 3, 64, 32);
  const FrameSequence c = generate_synthetic_sequence(6, 3, 64, 32);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_TRUE(identical(a.frames[i], b.frames[i]));
    EXPECT_TRUE(identical(a.depth[i], b.depth[i]));
  }
  EXPECT_FALSE(identical(a.frames[0], c.frames[0]));
}

TEST(Synthetic, StaticCameraGivesIdenticalFrames) {
  SceneOptions o;
  o.static_camera = true;
  const FrameSequence s = generate_synthetic_sequence(1, 4, 64, 32, o);
  for (Index i = 1; i < 4; ++i) EXPECT_TRUE(identical(s.frames[0], s.frames[i]));
}

TEST(Synthetic, DepthAndColourRanges) {
  const FrameSequence s = generate_synthetic_sequence(2, 4, 96, 64);
  for (Index i = 0; i < 4; ++i) {
    for (double v : s.frames[i].data()) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
    }
    Index rect_pixels = 0;
    for (Index q = 0; q < s.depth[i].numel(); ++q) {
      const double d = s.depth[i].ptr()[q];
      const double id = s.surface[i].ptr()[q];
      EXPECT_GE(d, 2 - 1e-9);
      if (id >= 0) {
        EXPECT_LE(d, 50 + 1e-9);
        ++rect_pixels;
      }
    }
    EXPECT_GT(rect_pixels, 0);
  }
}

TEST(Synthetic, DepthMatchesLayout) {
  // static camera at the origin: a rectangle pixel sees exactly its plane depth
  SceneOptions o;
  o.static_camera = true;
  const SyntheticScene scene = make_scene(3, 1, 64, 32, o);
  const RenderedFrame f = render(scene, 0);
  for (Index q = 0; q < f.depth.numel(); ++q) {
    const int id = static_cast<int>(f.surface.ptr()[q]);
    const double expected = id >= 0 ? scene.rects[id].depth : scene.background.depth;
    EXPECT_DOUBLE_EQ(f.depth.ptr()[q], expected);
  }
}

TEST(Synthetic, RejectsBadSizesAndEmptyLayout) {
  EXPECT_THROW(make_scene(0, 3, 60, 32), std::invalid_argument);
  SceneOptions o;
  o.num_rects = 0;
  EXPECT_THROW(make_scene(0, 3, 64, 32, o), std::invalid_argument);
}

TEST(Synthetic, MoverIsFixedInTheImage) {
  SceneOptions o;
  o.mover = true;
  const FrameSequence s = generate_synthetic_sequence(4, 3, 64, 32, o);
  const Tensord edge = occlusion_boundary(s.surface[0], 1);
  const Index plane = s.surface[0].numel();
  Index interior = 0;
  for (Index q = 0; q < plane; ++q) {
    const bool m0 = s.surface[0].ptr()[q] == -2;
    EXPECT_EQ(m0, s.surface[2].ptr()[q] == -2);
    if (m0 && edge.ptr()[q] == 0) {
      ++interior;
      for (Index c = 0; c < 3; ++c) EXPECT_EQ(s.frames[0].ptr()[c * plane + q], s.frames[2].ptr()[c * plane + q]);
    }
  }
  EXPECT_GT(interior, 50);
}

TEST(RendererWarper, GroundTruthWarpMatches) {
  const FrameSequence s = generate_synthetic_sequence(11, 5, 128, 64);
  for (Index src : {1, 3}) {
    const auto gt = warp_check(s, 2, src, 1.0, 2);
    const auto wrong = warp_check(s, 2, src, 2.0, 2);
    EXPECT_GT(gt.pixels, 128 * 64 / 2);
    EXPECT_LT(gt.mean_l1, 0.02) << "source " << src;
    EXPECT_GT(wrong.mean_l1, gt.mean_l1);
    EXPECT_GT(wrong.mean_photometric, gt.mean_photometric);
  }
}

TEST(RendererWarper, AutoMaskRemovesCameraSpeedMover) {
  SceneOptions o;
  o.mover = true;
  const FrameSequence s = generate_synthetic_sequence(21, 5, 128, 64, o);
  const auto m = litemono::testing::mover_check(s, 2);
  EXPECT_GT(m.mover_pixels, 100);
  EXPECT_GE(m.fraction(), 0.9);
}

TEST(Augment, DeterministicPerSeed) {
  const Triplet t = make_triplet(generate_synthetic_sequence(1, 3, 64, 32), 1);
  AugmentOptions o;
  o.jitter_probability = 1;
  const auto a = augment(t, 77, o), b = augment(t, 77, o);
  EXPECT_TRUE(identical(a.input.target, b.input.target));
  EXPECT_TRUE(identical(a.input.prev, b.input.prev));
  EXPECT_EQ(a.flipped, b.flipped);
}

TEST(Augment, FlipIsAnInvolution) {
  const Triplet t = make_triplet(generate_synthetic_sequence(1, 3, 64, 32), 1);
  AugmentOptions o;
  o.force_flip = true;
  o.jitter_probability = 0;
  const auto once = augment(t, 3, o);
  const auto twice = augment(once.input, 4, o);
  EXPECT_TRUE(once.flipped);
  EXPECT_FALSE(identical(once.input.target, t.target));
  EXPECT_TRUE(identical(twice.input.target, t.target));
  EXPECT_TRUE(identical(*twice.input.gt_depth, *t.gt_depth));
  EXPECT_DOUBLE_EQ(twice.input.intrinsics.cx, t.intrinsics.cx);
}

TEST(Augment, WhiteSaturatesUnderBrightness) {
  const Tensord white = Tensord::ones({1, 3, 4, 4});
  const Tensord b = adjust_brightness(white, 1.2);
  EXPECT_TRUE(identical(b, white));
}

TEST(Augment, ColourOpsFixedPoints) {
  std::mt19937_64 rng(9);
  const Tensord x = random_tensor(rng, {1, 3, 5, 5}, 0, 1);
  for (auto y : {adjust_brightness(x, 1.0), adjust_contrast(x, 1.0), adjust_saturation(x, 1.0), adjust_hue(x, 0.0)})
    for (Index q = 0; q < x.numel(); ++q) EXPECT_NEAR(y.ptr()[q], x.ptr()[q], 1e-12);
  // a full turn of hue restores the image; gray is hue-invariant
  const Tensord g = Tensord::full({1, 3, 2, 2}, 0.4);
  const Tensord gs = adjust_saturation(g, 0.3);
  for (Index q = 0; q < g.numel(); ++q) EXPECT_NEAR(gs.ptr()[q], 0.4, 1e-15);
  const Tensord h = adjust_hue(adjust_hue(x, 0.3), -0.3);
  for (Index q = 0; q < x.numel(); ++q) EXPECT_NEAR(h.ptr()[q], x.ptr()[q], 1e-12);
}

TEST(Augment, PreservesShapeAndRange) {
  const Triplet t = make_triplet(generate_synthetic_sequence(2, 3, 64, 32), 1);
  AugmentOptions o;
  o.jitter_probability = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = augment(t, seed, o);
    EXPECT_TRUE(a.jittered);
    for (const Tensord* f : {&a.input.prev, &a.input.target, &a.input.next}) {
      EXPECT_EQ(f->shape(), t.target.shape());
      for (double v : f->data()) {
        EXPECT_GE(v, 0);
        EXPECT_LE(v, 1);
      }
    }
    // loss targets are not jittered
    const Tensord expect = a.flipped ? flip_horizontal(t.target) : t.target;
    EXPECT_TRUE(identical(a.clean.target, expect));
  }
  o.jitter_targets = true;
  const auto lit = augment(t, 0, o);
  EXPECT_TRUE(identical(lit.clean.target, lit.input.target));
}

TEST(Augment, FlipNeedsMirroredPrincipalPoint) {
  SceneOptions so;
  so.cx_offset = 6;
  FrameSequence s = generate_synthetic_sequence(13, 3, 128, 64, so);
  const Triplet t = make_triplet(s, 1);
  AugmentOptions o;
  o.force_flip = true;
  o.jitter_probability = 0;
  const Triplet f = augment(t, 0, o).clean;
  auto err = [&](const CameraIntrinsics& k) {
    const auto syn = synthesize(f.next, *f.gt_depth, litemono::testing::transform_tensor((*f.gt_transforms)[1]), k);
    double e = 0;
    Index n = 0;
    for (Index q = 0; q < syn.valid.numel(); ++q)
      if (syn.valid.ptr()[q] != 0)
        for (Index c = 0; c < 3; ++c, ++n) e += std::abs(syn.image.ptr()[c * syn.valid.numel() + q] - f.target.ptr()[c * syn.valid.numel() + q]);
    return e / n;
  };
  const double mirrored = err(f.intrinsics);
  const double unmirrored = err(t.intrinsics);
  EXPECT_LT(mirrored, 0.03);
  EXPECT_GT(unmirrored, mirrored);
}

TEST(Intrinsics, Average) {
  const CameraIntrinsics a{100, 110, 50, 20, 64, 32}, b{200, 210, 54, 22, 64, 32};
  const CameraIntrinsics m = average_intrinsics({a, b});
  EXPECT_DOUBLE_EQ(m.fx, 150);
  EXPECT_DOUBLE_EQ(m.fy, 160);
  EXPECT_DOUBLE_EQ(m.cx, 52);
  EXPECT_DOUBLE_EQ(m.cy, 21);
  const CameraIntrinsics same = average_intrinsics({a, a, a});
  EXPECT_DOUBLE_EQ(same.fx, a.fx);
  EXPECT_DOUBLE_EQ(same.cx, a.cx);
  EXPECT_THROW(average_intrinsics({}), std::invalid_argument);
  EXPECT_THROW(average_intrinsics({a, CameraIntrinsics{1, 1, 1, 1, 32, 32}}), std::invalid_argument);
}

TEST(Directory, RoundTripAndResize) {
  const auto dir = temp_dir("seq");
  const FrameSequence s = generate_synthetic_sequence(8, 4, 128, 64);
  write_sequence_dir(dir, s);
  EXPECT_TRUE(std::filesystem::exists(dir / "frames" / "000003.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "depth" / "000000.f32"));
  const FrameSequence same = load_sequence_dir(dir, 128, 64);
  ASSERT_EQ(same.size(), 4);
  for (Index q = 0; q < s.frames[1].numel(); ++q) EXPECT_NEAR(same.frames[1].ptr()[q], s.frames[1].ptr()[q], 0.5 / 255 + 1e-12);
  for (Index q = 0; q < s.depth[1].numel(); ++q)
    EXPECT_EQ(same.depth[1].ptr()[q], static_cast<double>(static_cast<float>(s.depth[1].ptr()[q])));
  EXPECT_NEAR(same.intrinsics.fx, s.intrinsics.fx, 1e-12);
  ASSERT_EQ(same.poses.size(), 4u);
  EXPECT_TRUE(same.poses[3].isApprox(s.poses[3], 1e-15));

  const Triplet half = load_triplet_dir(dir, 1, 64, 32);
  EXPECT_DOUBLE_EQ(half.intrinsics.fx, s.intrinsics.fx / 2);
  EXPECT_DOUBLE_EQ(half.intrinsics.fy, s.intrinsics.fy / 2);
  EXPECT_DOUBLE_EQ(half.intrinsics.cx, s.intrinsics.cx / 2);
  EXPECT_DOUBLE_EQ(half.intrinsics.cy, s.intrinsics.cy / 2);
  EXPECT_EQ(half.target.shape(), (Shape{1, 3, 32, 64}));
  EXPECT_EQ(half.gt_depth->shape(), (Shape{1, 1, 32, 64}));
  ASSERT_TRUE(half.gt_transforms.has_value());

  EXPECT_THROW(load_triplet_dir(dir, 0, 128, 64), std::out_of_range);
  try {
    load_triplet_dir(dir, 3, 128, 64);
    FAIL() << "expected a missing-frame error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("000004.png"), std::string::npos) << e.what();
  }
  std::filesystem::remove_all(dir);
}

TEST(ImageIo, PngRoundTrip) {
  const auto dir = temp_dir("png");
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(1);
  const Tensord img = random_tensor(rng, {1, 3, 7, 9}, 0, 1);
  write_png(dir / "a.png", img, 16);
  write_png(dir / "b.png", img, 8);
  const Tensord a = read_png(dir / "a.png"), b = read_png(dir / "b.png");
  for (Index q = 0; q < img.numel(); ++q) {
    EXPECT_NEAR(a.ptr()[q], img.ptr()[q], 0.5 / 65535 + 1e-12);
    EXPECT_NEAR(b.ptr()[q], img.ptr()[q], 0.5 / 255 + 1e-12);
  }
  write_png(dir / "g.png", slice(img, 1, 0, 1));
  const Tensord g = read_png(dir / "g.png");
  EXPECT_EQ(g.shape(), (Shape{1, 3, 7, 9}));
  EXPECT_EQ(g.at({0, 0, 2, 3}), g.at({0, 2, 2, 3}));
  EXPECT_THROW(read_png(dir / "missing.png"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(ImageIo, ColorizeEndpoints) {
  Tensord m({1, 1, 1, 3}, {0, 0.5, 1});
  const Tensord c = colorize(m, 0, 1);
  const auto& t = turbo_table();
  EXPECT_DOUBLE_EQ(c.at({0, 0, 0, 0}), t[0][0] / 255.0);
  EXPECT_DOUBLE_EQ(c.at({0, 2, 0, 2}), t[255][2] / 255.0);
  EXPECT_EQ(side_by_side(m, c).shape(), (Shape{1, 3, 1, 6}));
}

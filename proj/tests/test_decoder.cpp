#include <gtest/gtest.h>

#include <cmath>

#include "litemono/decoder.hpp"
#include "litemono/grad_check.hpp"
#include "litemono/ops.hpp"
#include "test_util.hpp"

using namespace litemono;
using litemono::testing::random_tensor;
using litemono::testing::weighted_sum;

namespace {

template <typename S>
ParameterStore<S> make_depthnet(const EncoderConfig& cfg, std::uint64_t seed = 2) {
  ParameterStore<S> store;
  ParamBuilder<S> b(store, seed);
  init_encoder(cfg, b);
  init_decoder(cfg, b);
  return store;
}

}  // namespace

TEST(Decoder, OutputScalesTiny) {
  std::mt19937_64 rng(40);
  const auto c = EncoderConfig::make(Variant::tiny);
  auto p = make_depthnet<float>(c);
  Tensorf img = random_tensor(rng, {2, 3, 32, 64}, 0, 1).cast<float>();
  NoGradGuard ng;
  auto d = decoder_forward(encoder_forward(img, c, p, false), p);
  EXPECT_EQ(d.disp[0].shape(), (Shape{2, 1, 32, 64}));
  EXPECT_EQ(d.disp[1].shape(), (Shape{2, 1, 16, 32}));
  EXPECT_EQ(d.disp[2].shape(), (Shape{2, 1, 8, 16}));
  for (int s = 0; s < 3; ++s)
    for (float v : d.disp[s].data()) {
      EXPECT_GT(v, 0.f);
      EXPECT_LT(v, 1.f);
    }
}

TEST(Decoder, OutputScalesBaseFullResolution) {
  std::mt19937_64 rng(41);
  const auto c = EncoderConfig::make(Variant::base);
  auto p = make_depthnet<float>(c);
  Tensorf img = random_tensor(rng, {1, 3, 192, 640}, 0, 1).cast<float>();
  NoGradGuard ng;
  auto d = decoder_forward(encoder_forward(img, c, p, false), p);
  EXPECT_EQ(d.disp[0].shape(), (Shape{1, 1, 192, 640}));
  EXPECT_EQ(d.disp[1].shape(), (Shape{1, 1, 96, 320}));
  EXPECT_EQ(d.disp[2].shape(), (Shape{1, 1, 48, 160}));
}

TEST(Decoder, ParamBudget) {
  // Hand tally for widths (16,32,64): three 3x3 convs per level with bias.
  auto level = [](Index in, Index skip, Index w) {
    return (in * w * 9 + w) + ((w + skip) * w * 9 + w) + (w * 9 + 1);
  };
  const Index base = level(128, 80, 64) + level(64, 48, 32) + level(32, 0, 16);
  const Index tiny = level(128, 64, 64) + level(64, 32, 32) + level(32, 0, 16);
  EXPECT_EQ(count_decoder_params(EncoderConfig::make(Variant::base)), base);
  EXPECT_EQ(count_decoder_params(EncoderConfig::make(Variant::small)), base);
  EXPECT_EQ(count_decoder_params(EncoderConfig::make(Variant::tiny)), tiny);
  for (auto v : {Variant::tiny, Variant::small, Variant::base}) {
    const Index n = count_decoder_params(EncoderConfig::make(v));
    EXPECT_GE(n, 150000);
    EXPECT_LE(n, 250000);
  }
}

TEST(Decoder, FullDepthNetBudget) {
  const std::vector<std::pair<Variant, double>> reported = {
      {Variant::tiny, 2.2e6}, {Variant::small, 2.5e6}, {Variant::base, 3.1e6}};
  for (const auto& [v, target] : reported) {
    const auto c = EncoderConfig::make(v);
    const double n = static_cast<double>(count_params(c) + count_decoder_params(c));
    EXPECT_NEAR(n / target, 1.0, 0.10) << to_string(v);
  }
}

TEST(Decoder, AnalyticMacsMatchInstrumented) {
  std::mt19937_64 rng(42);
  const auto c = EncoderConfig::make(Variant::tiny);
  auto p = make_depthnet<float>(c);
  Tensorf img = random_tensor(rng, {1, 3, 64, 96}, 0, 1).cast<float>();
  NoGradGuard ng;
  auto f = encoder_forward(img, c, p, false);
  MacCounter counter;
  decoder_forward(f, p);
  EXPECT_EQ(counter.macs(), count_decoder_macs(c, 64, 96));
}

TEST(Decoder, ZeroFeaturesGiveOneHalf) {
  const auto c = EncoderConfig::make(Variant::tiny);
  auto p = make_depthnet<double>(c);
  FeaturePyramid<double> f;
  f.stages = {Tensord({1, 32, 8, 16}), Tensord({1, 64, 4, 8}), Tensord({1, 128, 2, 4})};
  auto d = decoder_forward(f, p);
  for (int s = 0; s < 3; ++s)
    for (double v : d.disp[s].data()) EXPECT_EQ(v, 0.5);
}

TEST(Decoder, MismatchedPyramidRejected) {
  const auto c = EncoderConfig::make(Variant::tiny);
  auto p = make_depthnet<double>(c);
  FeaturePyramid<double> f;
  f.stages = {Tensord({1, 48, 8, 16}), Tensord({1, 80, 4, 8}), Tensord({1, 128, 2, 4})};
  EXPECT_THROW(decoder_forward(f, p), ShapeError);
}

TEST(Decoder, LevelAndHeadGradCheck) {
  std::mt19937_64 rng(43);
  ParameterStore<double> p;
  ParamBuilder<double> b(p, 3);
  b.conv("lvl.conv0", 4, 3, 3, true);
  b.conv("lvl.conv1", 3 + 2, 3, 3, true);
  b.conv("lvl.head", 3, 1, 3, true);
  for (const auto& n : p.names())
    for (double& v : p.at(n).data()) v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
  Tensord x = random_tensor(rng, {2, 4, 3, 4});
  Tensord skip = random_tensor(rng, {2, 2, 6, 8});
  std::vector<Tensord> inputs{x, skip};
  for (const auto& n : p.names()) inputs.push_back(p.at(n));
  auto f = [&p](auto& in) { return weighted_sum(disp_head(decoder_level(in[0], in[1], p, "lvl"), p, "lvl")); };
  EXPECT_LT(grad_check(f, inputs), 1e-4);
}

TEST(Decoder, EveryScaleReachesEveryEncoderParameter) {
  std::mt19937_64 rng(44);
  const auto c = EncoderConfig::make(Variant::tiny);
  auto p = make_depthnet<double>(c);
  Tensord img = random_tensor(rng, {2, 3, 32, 32}, 0, 1);
  p.set_requires_grad(true);
  for (int s = 0; s < 3; ++s) {
    p.zero_grad();
    auto d = decoder_forward(encoder_forward(img, c, p, true), p);
    weighted_sum(d.disp[s]).backward();
    for (const auto& n : p.names()) {
      if (n.rfind("encoder", 0) != 0) continue;
      double g = 0;
      for (double v : p.at(n).grad()) g += std::abs(v);
      EXPECT_GT(g, 0) << n << " from scale " << s;
    }
  }
}

TEST(DispToDepth, Formula) {
  Tensord d({3}, std::vector<double>{0.5, 1.0, 0.0});
  Tensord z = disp_to_depth(d, 0.1, 100.0);
  EXPECT_NEAR(z.data()[0], 1.0 / (0.01 + 9.99 * 0.5), 1e-12);
  EXPECT_NEAR(z.data()[1], 0.1, 1e-12);
  EXPECT_NEAR(z.data()[2], 100.0, 1e-9);
  EXPECT_THROW(disp_to_depth(d, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(disp_to_depth(d, 5.0, 1.0), std::invalid_argument);
}

TEST(DispToDepth, RoundTripAndMonotone) {
  std::mt19937_64 rng(45);
  Tensord depth = random_tensor(rng, {50}, 0.1, 100);
  Tensord disp({50});
  for (Index i = 0; i < 50; ++i) disp.data()[i] = depth_to_disp(depth.data()[i], 0.1, 100);
  Tensord back = disp_to_depth(disp, 0.1, 100);
  for (Index i = 0; i < 50; ++i) EXPECT_NEAR(back.data()[i], depth.data()[i], 1e-9);
  Tensord ramp({11});
  for (Index i = 0; i <= 10; ++i) ramp.data()[i] = 0.1 * i;
  Tensord r = disp_to_depth(ramp, 0.1, 100);
  for (Index i = 1; i <= 10; ++i) EXPECT_LT(r.data()[i], r.data()[i - 1]);
}

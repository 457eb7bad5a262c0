#include "litemono/encoder.hpp"

#include <stdexcept>

#include "litemono/attention.hpp"
#include "litemono/ops.hpp"

namespace litemono {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::tiny: return "tiny";
    case Variant::small: return "small";
    case Variant::base: return "base";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "tiny") return Variant::tiny;
  if (name == "small") return Variant::small;
  if (name == "base") return Variant::base;
  throw std::invalid_argument("unknown variant '" + name + "' (expected tiny, small or base)");
}

EncoderConfig EncoderConfig::make(Variant v) {
  EncoderConfig c;
  c.variant = v;
  switch (v) {
    case Variant::base:
      break;
    case Variant::small:
      c.cdc_repeats = {3, 3, 6};
      c.dilations[2] = {1, 2, 3, 2, 4, 6};
      break;
    case Variant::tiny:
      c.channels = {32, 32, 64, 128};
      c.cdc_repeats = {3, 3, 6};
      c.dilations[2] = {1, 2, 3, 2, 4, 6};
      break;
  }
  return c;
}

void EncoderConfig::validate() const {
  for (Index ch : channels)
    if (ch < 1) throw std::invalid_argument("encoder channels must be positive");
  if (expansion < 1) throw std::invalid_argument("encoder expansion must be >= 1");
  for (int s = 0; s < 3; ++s) {
    const std::string stage = "stage " + std::to_string(s + 1);
    if (cdc_repeats[s] < 0) throw std::invalid_argument(stage + ": negative block count");
    if (static_cast<Index>(dilations[s].size()) != cdc_repeats[s])
      throw std::invalid_argument(stage + ": " + std::to_string(dilations[s].size()) +
                                  " dilation rates for " + std::to_string(cdc_repeats[s]) +
                                  " blocks");
    for (Index r : dilations[s])
      if (r < 1) throw std::invalid_argument(stage + ": dilation rates must be >= 1");
    if (heads[s] < 1 || channels[s + 1] % heads[s] != 0)
      throw std::invalid_argument(stage + ": " + std::to_string(channels[s + 1]) +
                                  " channels not divisible by " + std::to_string(heads[s]) +
                                  " heads");
  }
}

Index EncoderConfig::dilation(int stage, int block) const {
  return use_dilation ? dilations[stage][block] : 1;
}

void check_input_size(Index h, Index w) {
  if (h < 32 || w < 32 || h % 32 != 0 || w % 32 != 0)
    throw std::invalid_argument("input size " + std::to_string(w) + "x" + std::to_string(h) +
                                " must be a positive multiple of 32 on both axes");
}

namespace {

Index down_in_channels(const EncoderConfig& c, int s) {
  Index in = c.channels[s];
  if (s > 0 && c.use_cross_stage) in += c.channels[s];
  if (c.use_pooled_concat) in += 3;
  return in;
}

std::string stage_name(const std::string& prefix, int s) {
  return prefix + ".stage" + std::to_string(s + 1);
}

}  // namespace

template <typename S>
void init_cdc(ParamBuilder<S>& b, const std::string& prefix, Index c, Index expansion,
              bool zero_last) {
  b.conv(prefix + ".dw", c, c, 3, false, c);
  b.batch_norm(prefix + ".bn", c);
  b.conv(prefix + ".pw1", c, expansion * c, 1, true);
  b.conv(prefix + ".pw2", expansion * c, c, 1, true, 1, zero_last);
}

template <typename S>
void init_lgfi(ParamBuilder<S>& b, const std::string& prefix, Index c, Index heads,
               Index expansion, bool zero_last) {
  b.conv(prefix + ".q", c, c, 1, true);
  b.conv(prefix + ".k", c, c, 1, true);
  b.conv(prefix + ".v", c, c, 1, true);
  b.tensor(prefix + ".temperature", {heads}, Init::ones);
  b.layer_norm(prefix + ".ln", c);
  b.conv(prefix + ".pw1", c, expansion * c, 1, true);
  b.conv(prefix + ".pw2", expansion * c, c, 1, true, 1, zero_last);
}

template <typename S>
void init_encoder(const EncoderConfig& cfg, ParamBuilder<S>& b, const std::string& prefix) {
  cfg.validate();
  const Index c1 = cfg.channels[0];
  b.conv(prefix + ".stem.0.conv", 3, c1, 3, false);
  b.batch_norm(prefix + ".stem.0.bn", c1);
  for (int i = 1; i < 3; ++i) {
    b.conv(prefix + ".stem." + std::to_string(i) + ".conv", c1, c1, 3, false);
    b.batch_norm(prefix + ".stem." + std::to_string(i) + ".bn", c1);
  }
  for (int s = 0; s < 3; ++s) {
    const Index c = cfg.channels[s + 1];
    b.conv(prefix + ".down" + std::to_string(s + 1), down_in_channels(cfg, s), c, 3, true);
    const std::string st = stage_name(prefix, s);
    for (Index i = 0; i < cfg.cdc_repeats[s]; ++i)
      init_cdc(b, st + ".cdc" + std::to_string(i), c, cfg.expansion, cfg.zero_init_branches);
    if (cfg.use_lgfi)
      init_lgfi(b, st + ".lgfi", c, cfg.heads[s], cfg.expansion, cfg.zero_init_branches);
  }
}

template <typename S>
Tensor<S> normalize_image(const Tensor<S>& image) {
  return (image - S(0.45)) * S(1 / 0.225);
}

template <typename S>
Tensor<S> conv_stem(const Tensor<S>& image, ParameterStore<S>& p, const std::string& prefix,
                    bool training) {
  if (image.rank() != 4) throw ShapeError("conv_stem: expected N x 3 x H x W");
  check_input_size(image.dim(2), image.dim(3));
  Tensor<S> x = image;
  for (int i = 0; i < 3; ++i) {
    const std::string l = prefix + ".stem." + std::to_string(i);
    x = conv(x, p, l + ".conv", i == 0 ? ConvSpec::strided(3, 2) : ConvSpec::same(3));
    x = gelu(batch_norm(x, p, l + ".bn", training));
  }
  return x;
}

template <typename S>
Tensor<S> downsample(const Tensor<S>& features, const Tensor<S>& pooled_input,
                     const Tensor<S>& carry, ParameterStore<S>& p, const std::string& prefix) {
  std::vector<Tensor<S>> parts{features};
  if (carry.defined()) parts.push_back(carry);
  if (pooled_input.defined()) parts.push_back(pooled_input);
  for (const auto& t : parts)
    if (t.dim(2) != features.dim(2) || t.dim(3) != features.dim(3))
      throw ShapeError("downsample: spatial mismatch " + shape_string(t.shape()) + " vs " +
                       shape_string(features.shape()));
  return conv(concat(parts, 1), p, prefix, ConvSpec::strided(3, 2));
}

template <typename S>
Tensor<S> cdc_block(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix, Index r,
                    bool training) {
  if (r < 1) throw std::invalid_argument("cdc_block: dilation must be >= 1");
  const Index c = x.dim(1);
  Tensor<S> y = conv(x, p, prefix + ".dw", ConvSpec::same(3, r, c));
  y = batch_norm(y, p, prefix + ".bn", training);
  y = gelu(conv(y, p, prefix + ".pw1", ConvSpec::pointwise()));
  y = conv(y, p, prefix + ".pw2", ConvSpec::pointwise());
  return x + y;
}

template <typename S>
Tensor<S> lgfi_block(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
                     Index heads, bool literal_attention) {
  const Index b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Shape tokens{b, c, h * w};
  auto proj = [&](const char* name) {
    return reshape(conv(x, p, prefix + "." + name, ConvSpec::pointwise()), tokens);
  };
  std::optional<Tensor<S>> tau;
  if (!literal_attention) tau = p.at(prefix + ".temperature");
  Tensor<S> a = xca_attention(proj("q"), proj("k"), proj("v"), heads, tau);
  Tensor<S> mixed = reshape(a, x.shape()) + x;
  Tensor<S> y = layer_norm(mixed, p.at(prefix + ".ln.gamma"), p.at(prefix + ".ln.beta"), 1);
  y = gelu(conv(y, p, prefix + ".pw1", ConvSpec::pointwise()));
  y = conv(y, p, prefix + ".pw2", ConvSpec::pointwise());
  return x + y;
}

template <typename S>
FeaturePyramid<S> encoder_forward(const Tensor<S>& image, const EncoderConfig& cfg,
                                  ParameterStore<S>& p, bool training, const std::string& prefix) {
  cfg.validate();
  if (image.rank() != 4 || image.dim(1) != 3)
    throw ShapeError("encoder: expected an N x 3 x H x W image, got " +
                     shape_string(image.shape()));
  check_input_size(image.dim(2), image.dim(3));
  const Tensor<S> x = normalize_image(image);
  std::array<Tensor<S>, 3> pooled;
  if (cfg.use_pooled_concat) {
    pooled[0] = avg_pool2d(x, 2, 2);
    pooled[1] = avg_pool2d(pooled[0], 2, 2);
    pooled[2] = avg_pool2d(pooled[1], 2, 2);
  }
  FeaturePyramid<S> out;
  out.stem = conv_stem(x, p, prefix, training);
  Tensor<S> feat = out.stem, carry;
  for (int s = 0; s < 3; ++s) {
    Tensor<S> d = downsample(feat, pooled[s], s > 0 && cfg.use_cross_stage ? carry : Tensor<S>(), p,
                             prefix + ".down" + std::to_string(s + 1));
    carry = d;
    const std::string st = stage_name(prefix, s);
    Tensor<S> y = d;
    for (Index i = 0; i < cfg.cdc_repeats[s]; ++i)
      y = cdc_block(y, p, st + ".cdc" + std::to_string(i), cfg.dilation(s, static_cast<int>(i)),
                    training);
    if (cfg.use_lgfi) y = lgfi_block(y, p, st + ".lgfi", cfg.heads[s], cfg.literal_attention);
    out.stages[s] = y;
    feat = y;
  }
  return out;
}

Index count_params(const EncoderConfig& cfg) {
  ParameterStore<float> store;
  ParamBuilder<float> b(store, 0);
  init_encoder(cfg, b);
  return store.count();
}

Index count_macs(const EncoderConfig& cfg, Index h, Index w) {
  check_input_size(h, w);
  cfg.validate();
  const Index c1 = cfg.channels[0];
  Index n = (h / 2) * (w / 2);
  Index macs = 3 * c1 * 9 * n + 2 * c1 * c1 * 9 * n;
  for (int s = 0; s < 3; ++s) {
    n /= 4;
    const Index c = cfg.channels[s + 1], e = cfg.expansion * c;
    macs += down_in_channels(cfg, s) * c * 9 * n;
    macs += cfg.cdc_repeats[s] * (9 * c + 2 * c * e) * n;
    if (cfg.use_lgfi) {
      const Index dh = c / cfg.heads[s];
      macs += (3 * c * c + 2 * c * dh + 2 * c * e) * n;
    }
  }
  return macs;
}

Index count_flops(const EncoderConfig& cfg, Index h, Index w) { return 2 * count_macs(cfg, h, w); }

#define LITEMONO_INSTANTIATE_ENCODER(S)                                                          \
  template void init_encoder(const EncoderConfig&, ParamBuilder<S>&, const std::string&);       \
  template void init_cdc(ParamBuilder<S>&, const std::string&, Index, Index, bool);             \
  template void init_lgfi(ParamBuilder<S>&, const std::string&, Index, Index, Index, bool);     \
  template Tensor<S> normalize_image(const Tensor<S>&);                                         \
  template Tensor<S> conv_stem(const Tensor<S>&, ParameterStore<S>&, const std::string&, bool); \
  template Tensor<S> downsample(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,           \
                                ParameterStore<S>&, const std::string&);                        \
  template Tensor<S> cdc_block(const Tensor<S>&, ParameterStore<S>&, const std::string&, Index, \
                               bool);                                                           \
  template Tensor<S> lgfi_block(const Tensor<S>&, ParameterStore<S>&, const std::string&,       \
                                Index, bool);                                                   \
  template FeaturePyramid<S> encoder_forward(const Tensor<S>&, const EncoderConfig&,            \
                                             ParameterStore<S>&, bool, const std::string&);

LITEMONO_INSTANTIATE_ENCODER(float)
LITEMONO_INSTANTIATE_ENCODER(double)

}  // namespace litemono

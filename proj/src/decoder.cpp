#include "litemono/decoder.hpp"

#include <stdexcept>

#include "litemono/ops.hpp"

namespace litemono {

namespace {

std::string level_name(const std::string& prefix, int level) {
  return prefix + ".level" + std::to_string(level);
}

// Input channels of level i's first conv and of its skip connection.
Index level_input(const EncoderConfig& enc, const DecoderWidths& w, int level) {
  return level == 2 ? enc.channels[3] : w[level + 1];
}
Index level_skip(const EncoderConfig& enc, int level) {
  // level 2 takes the H/8 stage, level 1 the H/4 stage, level 0 nothing
  return level == 0 ? 0 : enc.channels[level];
}

}  // namespace

template <typename S>
void init_decoder(const EncoderConfig& enc, ParamBuilder<S>& b, const DecoderWidths& widths,
                  const std::string& prefix) {
  const Init saved = b.conv_init();
  b.set_conv_init(Init::fan_in_uniform);
  for (int level = 2; level >= 0; --level) {
    const std::string l = level_name(prefix, level);
    const Index w = widths[level];
    b.conv(l + ".conv0", level_input(enc, widths, level), w, 3, true);
    b.conv(l + ".conv1", w + level_skip(enc, level), w, 3, true);
    b.conv(l + ".head", w, 1, 3, true);
  }
  b.set_conv_init(saved);
}

template <typename S>
Tensor<S> decoder_level(const Tensor<S>& x, const Tensor<S>& skip, ParameterStore<S>& p,
                        const std::string& prefix) {
  Tensor<S> y = elu(conv(x, p, prefix + ".conv0", ConvSpec::same(3)));
  y = resize_bilinear(y, 2.0);
  if (skip.defined()) y = concat(std::vector<Tensor<S>>{y, skip}, 1);
  return elu(conv(y, p, prefix + ".conv1", ConvSpec::same(3)));
}

template <typename S>
Tensor<S> disp_head(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix) {
  return sigmoid(resize_bilinear(conv(x, p, prefix + ".head", ConvSpec::same(3)), 2.0));
}

template <typename S>
DepthPyramid<S> decoder_forward(const FeaturePyramid<S>& f, ParameterStore<S>& p,
                                const std::string& prefix) {
  DepthPyramid<S> out;
  Tensor<S> x = f.stages[2];
  for (int level = 2; level >= 0; --level) {
    const Tensor<S> skip = level > 0 ? f.stages[level - 1] : Tensor<S>();
    const std::string l = level_name(prefix, level);
    x = decoder_level(x, skip, p, l);
    out.disp[level] = disp_head(x, p, l);
  }
  return out;
}

template <typename S>
Tensor<S> disp_to_depth(const Tensor<S>& disp, double min_depth, double max_depth) {
  if (!(min_depth > 0) || !(min_depth < max_depth))
    throw std::invalid_argument("disp_to_depth: need 0 < min_depth < max_depth");
  const S lo = static_cast<S>(1 / max_depth), span = static_cast<S>(1 / min_depth - 1 / max_depth);
  return reciprocal(disp * span + lo);
}

double depth_to_disp(double depth, double min_depth, double max_depth) {
  if (!(min_depth > 0) || !(min_depth < max_depth))
    throw std::invalid_argument("depth_to_disp: need 0 < min_depth < max_depth");
  return (1 / depth - 1 / max_depth) / (1 / min_depth - 1 / max_depth);
}

Index count_decoder_params(const EncoderConfig& enc, const DecoderWidths& widths) {
  ParameterStore<float> store;
  ParamBuilder<float> b(store, 0);
  init_decoder(enc, b, widths);
  return store.count();
}

Index count_decoder_macs(const EncoderConfig& enc, Index h, Index w, const DecoderWidths& widths) {
  check_input_size(h, w);
  Index macs = 0;
  for (int level = 2; level >= 0; --level) {
    const Index in_pixels = (h >> (level + 2)) * (w >> (level + 2));
    const Index out_pixels = in_pixels * 4;
    const Index c = widths[level];
    macs += level_input(enc, widths, level) * c * 9 * in_pixels;
    macs += (c + level_skip(enc, level)) * c * 9 * out_pixels;
    macs += c * 9 * out_pixels;
  }
  return macs;
}

#define LITEMONO_INSTANTIATE_DECODER(S)                                                         \
  template void init_decoder(const EncoderConfig&, ParamBuilder<S>&, const DecoderWidths&,    \
                             const std::string&);                                              \
  template Tensor<S> decoder_level(const Tensor<S>&, const Tensor<S>&, ParameterStore<S>&,     \
                                   const std::string&);                                        \
  template Tensor<S> disp_head(const Tensor<S>&, ParameterStore<S>&, const std::string&);      \
  template DepthPyramid<S> decoder_forward(const FeaturePyramid<S>&, ParameterStore<S>&,       \
                                           const std::string&);                                \
  template Tensor<S> disp_to_depth(const Tensor<S>&, double, double);

LITEMONO_INSTANTIATE_DECODER(float)
LITEMONO_INSTANTIATE_DECODER(double)

}  // namespace litemono

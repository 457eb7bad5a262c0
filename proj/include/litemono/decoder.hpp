#pragma once

#include <array>

#include "litemono/encoder.hpp"

namespace litemono {

/// Channel width per decoder level, finest first.
using DecoderWidths = std::array<Index, 3>;
inline constexpr DecoderWidths kDefaultDecoderWidths{16, 32, 64};

/// Sigmoid disparity at full, 1/2 and 1/4 resolution (index = scale level).
template <typename S>
struct DepthPyramid {
  std::array<Tensor<S>, 3> disp;
};

template <typename S>
void init_decoder(const EncoderConfig& enc, ParamBuilder<S>& b,
                  const DecoderWidths& widths = kDefaultDecoderWidths,
                  const std::string& prefix = "decoder");

/// One level: conv+ELU, x2 upsample, optional skip concat, conv+ELU. Returns
/// the level features; the head is applied separately.
template <typename S>
Tensor<S> decoder_level(const Tensor<S>& x, const Tensor<S>& skip, ParameterStore<S>& p,
                        const std::string& prefix);
/// 3x3 conv to one channel, x2 upsample, sigmoid.
template <typename S>
Tensor<S> disp_head(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix);

template <typename S>
DepthPyramid<S> decoder_forward(const FeaturePyramid<S>& features, ParameterStore<S>& p,
                                const std::string& prefix = "decoder");

/// 1/depth = 1/max + (1/min - 1/max) disp.
template <typename S>
Tensor<S> disp_to_depth(const Tensor<S>& disp, double min_depth, double max_depth);
double depth_to_disp(double depth, double min_depth, double max_depth);

Index count_decoder_params(const EncoderConfig& enc,
                           const DecoderWidths& widths = kDefaultDecoderWidths);
Index count_decoder_macs(const EncoderConfig& enc, Index h, Index w,
                         const DecoderWidths& widths = kDefaultDecoderWidths);

}  // namespace litemono

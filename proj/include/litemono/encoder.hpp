#pragma once

#include <array>
#include <string>
#include <vector>

#include "litemono/params.hpp"
#include "litemono/tensor.hpp"

namespace litemono {

enum class Variant { tiny, small, base };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct EncoderConfig {
  Variant variant = Variant::base;
  /// C1 (stem) and the three stage widths C2, C3, C4.
  std::array<Index, 4> channels{48, 48, 80, 128};
  std::array<Index, 3> cdc_repeats{3, 3, 9};
  std::array<std::vector<Index>, 3> dilations{
      std::vector<Index>{1, 2, 3}, {1, 2, 3}, {1, 2, 3, 1, 2, 3, 2, 4, 6}};
  std::array<Index, 3> heads{4, 4, 8};
  /// Hidden width multiplier of the two pointwise convs in CDC and LGFI.
  Index expansion = 6;

  bool use_lgfi = true;
  bool use_dilation = true;
  bool use_pooled_concat = true;
  bool use_cross_stage = true;
  /// Raw product-then-softmax attention instead of the normalized form.
  bool literal_attention = false;
  /// Zero the last pointwise conv of every CDC/LGFI branch at init.
  bool zero_init_branches = false;

  static EncoderConfig make(Variant v);
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  Index dilation(int stage, int block) const;
};

/// Stage outputs at H/4, H/8, H/16 plus the stem features at H/2.
template <typename S>
struct FeaturePyramid {
  Tensor<S> stem;
  std::array<Tensor<S>, 3> stages;
};

template <typename S>
void init_encoder(const EncoderConfig& cfg, ParamBuilder<S>& b, const std::string& prefix = "encoder");

/// The fixed mean/std shift applied to [0,1] images before the first conv.
template <typename S>
Tensor<S> normalize_image(const Tensor<S>& image);

template <typename S>
Tensor<S> conv_stem(const Tensor<S>& image, ParameterStore<S>& p, const std::string& prefix,
                    bool training);

/// concat(features, cross-stage carry, pooled RGB) then a stride-2 3x3 conv.
/// Absent inputs (undefined tensors) are skipped.
template <typename S>
Tensor<S> downsample(const Tensor<S>& features, const Tensor<S>& pooled_input,
                     const Tensor<S>& carry, ParameterStore<S>& p, const std::string& prefix);

template <typename S>
Tensor<S> cdc_block(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix, Index r,
                    bool training);

template <typename S>
Tensor<S> lgfi_block(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
                     Index heads, bool literal_attention = false);

/// Declares one block's parameters alone (used by tests and grad checks).
template <typename S>
void init_cdc(ParamBuilder<S>& b, const std::string& prefix, Index channels, Index expansion,
              bool zero_last = false);
template <typename S>
void init_lgfi(ParamBuilder<S>& b, const std::string& prefix, Index channels, Index heads,
               Index expansion, bool zero_last = false);

/// Image N x 3 x H x W in [0,1]; H and W must be multiples of 32.
template <typename S>
FeaturePyramid<S> encoder_forward(const Tensor<S>& image, const EncoderConfig& cfg,
                                  ParameterStore<S>& p, bool training,
                                  const std::string& prefix = "encoder");

void check_input_size(Index h, Index w);

Index count_params(const EncoderConfig& cfg);
/// Multiply-accumulates of one encoder forward pass at H x W: convolutions
/// and the two attention products. Normalization and activations excluded.
Index count_macs(const EncoderConfig& cfg, Index h, Index w);
/// FLOPs = 2 x MACs.
Index count_flops(const EncoderConfig& cfg, Index h, Index w);

}  // namespace litemono

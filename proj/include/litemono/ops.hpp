#pragma once

#include <optional>
#include <type_traits>

#include "litemono/tensor.hpp"

namespace litemono {

/// Geometry of a 2-D convolution. Zero padding on every side.
struct ConvSpec {
  Index kernel_h = 3;
  Index kernel_w = 3;
  Index stride = 1;
  Index padding = 0;
  Index dilation = 1;
  Index groups = 1;

  /// Padding that keeps the spatial size for an odd kernel at stride 1.
  static ConvSpec same(Index kernel, Index dilation = 1, Index groups = 1) {
    return {kernel, kernel, 1, dilation * (kernel - 1) / 2, dilation, groups};
  }
  static ConvSpec strided(Index kernel, Index stride) {
    return {kernel, kernel, stride, (kernel - 1) / 2, 1, 1};
  }
  static ConvSpec pointwise() { return {1, 1, 1, 0, 1, 1}; }

  Index output_size(Index in, Index k) const {
    return (in + 2 * padding - dilation * (k - 1) - 1) / stride + 1;
  }
};

/// NCHW convolution, weight [Cout, Cin/groups, kh, kw], optional bias [Cout].
/// groups == channels gives a depthwise conv; a 1x1 kernel gives a channel
/// mixing linear layer.
template <typename S>
Tensor<S> conv2d(const Tensor<S>& input, const Tensor<S>& weight,
                 const std::optional<std::type_identity_t<Tensor<S>>>& bias,
                 const ConvSpec& spec);

/// Parameters of a batch norm layer. Running statistics are updated in place
/// during training mode and store the biased batch variance.
template <typename S>
struct BatchNormState {
  Tensor<S> gamma, beta;
  Tensor<S> running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Normalizes over (N, H, W) per channel of an [N, C, ...] tensor.
template <typename S>
Tensor<S> batch_norm(const Tensor<S>& x, BatchNormState<S>& state, bool training);

/// Normalizes over one axis; gamma/beta must have that axis' length.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta,
                     int axis, double eps = 1e-6);

/// Exact erf-based GELU.
template <typename S> Tensor<S> gelu(const Tensor<S>& x);
template <typename S> Tensor<S> elu(const Tensor<S>& x, S alpha = S(1));
template <typename S> Tensor<S> sigmoid(const Tensor<S>& x);
template <typename S> Tensor<S> relu(const Tensor<S>& x);
template <typename S> Tensor<S> softmax(const Tensor<S>& x, int axis);

/// Bilinear resize of an NCHW tensor with half-pixel centers (no corner
/// alignment): source coordinate = (dst + 0.5) * in / out - 0.5, edge clamped.
template <typename S>
Tensor<S> resize_bilinear(const Tensor<S>& x, Index out_h, Index out_w);
/// Output size is round(in * scale) on both spatial axes.
template <typename S>
Tensor<S> resize_bilinear(const Tensor<S>& x, double scale);

template <typename S>
Tensor<S> avg_pool2d(const Tensor<S>& x, Index window, Index stride);
template <typename S>
Tensor<S> max_pool2d(const Tensor<S>& x, Index window, Index stride, Index padding);
template <typename S>
Tensor<S> reflection_pad2d(const Tensor<S>& x, Index pad);

/// [M, K] x [K, N] -> [M, N].
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

/// Counts multiply-accumulates issued by conv2d, matmul and attention while
/// alive on the current thread.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;
  Index macs() const { return macs_; }
  static void record(Index macs);

 private:
  Index macs_ = 0;
  MacCounter* previous_;
};

}  // namespace litemono

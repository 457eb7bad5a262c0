#pragma once

#include <optional>
#include <type_traits>

#include "litemono/tensor.hpp"

namespace litemono {

/// Channel (cross-covariance) attention. Q, K, V are [B, d, N] with channels
/// first, or [N, d] token-major for a single item. Per head the d/h channel
/// rows of Q and K are L2-normalized over tokens and
///   A = softmax_j(tau * q_i . k_j),   out_i = sum_j A_ij v_j,
/// so every output channel is a convex mixture of the head's value channels
/// and the attention matrix is (d/h)^2 regardless of N.
///
/// Without a temperature tensor the raw scores q_i . k_j are used (no
/// normalization, no temperature): the bare product-then-softmax form.
template <typename S>
Tensor<S> xca_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, Index heads,
                        const std::optional<std::type_identity_t<Tensor<S>>>& temperature);

/// Standard token-to-token softmax attention over the same layout, kept as a
/// memory reference point: its score buffer is h * N^2.
template <typename S>
Tensor<S> spatial_attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v,
                            Index heads);

/// Records the largest attention score buffer (elements per batch item)
/// materialized while alive on the current thread.
class AttentionProbe {
 public:
  AttentionProbe();
  ~AttentionProbe();
  AttentionProbe(const AttentionProbe&) = delete;
  AttentionProbe& operator=(const AttentionProbe&) = delete;
  Index peak_elements() const { return peak_; }
  static void record(Index elements);

 private:
  Index peak_ = 0;
  AttentionProbe* previous_;
};

}  // namespace litemono

#pragma once

#include <vector>

#include "litemono/decoder.hpp"
#include "litemono/geometry.hpp"

namespace litemono {

struct LossConfig {
  double alpha = 0.85;
  double lambda_smooth = 1e-3;
  /// Number of disparity scales used (1 to 3), finest first.
  int num_scales = 3;
  bool automask = true;
  /// Per-pixel minimum over sources; off averages the valid sources instead.
  bool min_reprojection = true;
  /// Reconstruction masks the unwarped minimum instead of the warped one.
  bool literal_reconstruction = false;
  /// Smoothness pairs the x-gradient of disparity with both image gradients.
  bool literal_smoothness = false;
  double min_depth = 0.1;
  double max_depth = 100;

  /// Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

/// Per-pixel loss given to warped pixels that fall outside the source view.
/// Larger than any attainable photometric value, so the minimum over sources
/// prefers a valid one.
inline constexpr double kInvalidPixelLoss = 10.0;

/// Per-channel SSIM map with 3x3 uniform windows over a reflection-padded
/// image, C1 = 1e-4 and C2 = 9e-4. Output has the input shape.
template <typename S>
Tensor<S> ssim(const Tensor<S>& a, const Tensor<S>& b);

/// alpha (1 - SSIM) / 2 + (1 - alpha) |pred - target|, both averaged over
/// channels: N x C x H x W -> N x 1 x H x W.
template <typename S>
Tensor<S> photometric_loss(const Tensor<S>& pred, const Tensor<S>& target, double alpha);

/// Pointwise minimum; throws std::invalid_argument on an empty list.
template <typename S>
Tensor<S> min_reprojection(const std::vector<Tensor<S>>& maps);

/// 1 where min(unwarped) > min(warped) strictly, else 0. Not differentiable.
template <typename S>
Tensor<S> auto_mask(const std::vector<Tensor<S>>& unwarped, const std::vector<Tensor<S>>& warped);

/// Edge-aware smoothness of mean-normalized disparity N x 1 x H x W against
/// an image N x C x H x W. Throws std::domain_error if an item's mean
/// disparity is zero.
template <typename S>
Tensor<S> smoothness(const Tensor<S>& disp, const Tensor<S>& image, bool literal = false);

template <typename S>
struct ScaleDiagnostics {
  Tensor<S> depth;                     // full resolution
  std::vector<Tensor<S>> warped;       // per source
  std::vector<Tensor<S>> valid;        // per source, 0/1
  std::vector<Tensor<S>> reprojection; // per source, invalid pixels at kInvalidPixelLoss
  Tensor<S> combined;                  // min (or mean) over sources
  Tensor<S> automask;                  // 0/1
  Tensor<S> loss_mask;                 // automask and any-valid
  Tensor<S> reconstruction;            // scalar
  Tensor<S> smoothness;                // scalar, before weighting
  Tensor<S> total;                     // scalar
  double smooth_weight = 0;
  Index masked_pixels = 0;
};

template <typename S>
struct LossResult {
  Tensor<S> total;
  std::vector<Tensor<S>> identity_reprojection;  // per source, L_p(I_s, I_t)
  std::vector<ScaleDiagnostics<S>> scales;
};

/// Self-supervised objective over the disparity pyramid. `transforms[i]` is
/// N x 4 x 4 and maps target-camera points into `sources[i]`. Each scale's
/// disparity is upsampled to the target resolution before warping; the
/// smoothness term at scale s uses its native resolution with weight
/// lambda / 2^s. The total is the mean over scales.
template <typename S>
LossResult<S> total_loss(const DepthPyramid<S>& disp, const Tensor<S>& target,
                         const std::vector<Tensor<S>>& sources, const std::vector<Tensor<S>>& transforms,
                         const CameraIntrinsics& k, const LossConfig& cfg);

}  // namespace litemono

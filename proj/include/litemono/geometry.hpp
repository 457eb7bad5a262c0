#pragma once

#include <Eigen/Core>

#include "litemono/tensor.hpp"

namespace litemono {

/// Pinhole intrinsics in pixels. Image coordinates are continuous with the
/// center of pixel (row i, col j) at (j + 0.5, i + 0.5), so resizing scales
/// every entry by the size ratio and a horizontal flip maps cx to W - cx.
struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  Index width = 0, height = 0;

  Eigen::Matrix3d matrix() const;
  /// Throws std::invalid_argument unless fx, fy > 0 and the size is positive.
  void validate() const;
  CameraIntrinsics resized(Index new_width, Index new_height) const;
  CameraIntrinsics flipped() const;
};

/// Minimum camera-space depth a projected point must have to count as valid.
inline constexpr double kMinProjectedDepth = 1e-3;

/// depth N x 1 x H x W -> camera-frame points N x H x W x 3 at pixel centers.
/// Strict mode rejects non-positive depth; otherwise depth is clamped to
/// kMinProjectedDepth.
template <typename S>
Tensor<S> backproject(const Tensor<S>& depth, const CameraIntrinsics& k, bool strict = true);

template <typename S>
struct Projection {
  /// N x H x W x 2 index-space coordinates (x, y): pixel (i, j) is (j, i).
  Tensor<S> coords;
  /// N x 1 x H x W, 1 where the point lies in front of the camera and inside
  /// the image, else 0. Not differentiable.
  Tensor<S> valid;
};

/// p' = K (T p) / z' for each point with T an N x 4 x 4 transform.
template <typename S>
Projection<S> project(const Tensor<S>& points, const CameraIntrinsics& k, const Tensor<S>& transform);

/// Bilinear lookup of source N x C x Hs x Ws at index-space coords
/// N x H x W x 2; coordinates are clamped to the border.
template <typename S>
Tensor<S> bilinear_sample(const Tensor<S>& source, const Tensor<S>& coords);

template <typename S>
struct Synthesis {
  Tensor<S> image;
  Tensor<S> valid;
};

/// Warps a source frame into the target view given target depth and the
/// target-to-source transform.
template <typename S>
Synthesis<S> synthesize(const Tensor<S>& source, const Tensor<S>& depth, const Tensor<S>& transform,
                        const CameraIntrinsics& k);

}  // namespace litemono

#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <vector>

#include "litemono/params.hpp"

namespace litemono {

/// Relative camera motion: axis-angle rotation (radians * unit axis) and
/// translation in scene units.
struct Pose {
  Eigen::Vector3d axis_angle = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Rotation of an axis-angle vector. Works for any scalar type with sin/cos/
/// sqrt (double, Eigen::AutoDiffScalar); small angles use the series form.
template <typename T>
Eigen::Matrix<T, 3, 3> rodrigues(const Eigen::Matrix<T, 3, 1>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T theta2 = w.squaredNorm();
  T a, b;  // sin(t)/t and (1 - cos(t))/t^2
  if (theta2 < T(1e-6)) {
    a = T(1) - theta2 / T(6) + theta2 * theta2 / T(120);
    b = T(0.5) - theta2 / T(24) + theta2 * theta2 / T(720);
  } else {
    const T theta = sqrt(theta2);
    a = sin(theta) / theta;
    b = (T(1) - cos(theta)) / theta2;
  }
  Eigen::Matrix<T, 3, 3> k;
  k << T(0), -w(2), w(1), w(2), T(0), -w(0), -w(1), w(0), T(0);
  return Eigen::Matrix<T, 3, 3>::Identity() + a * k + b * (k * k);
}

/// [R | t] from a 6-vector (axis_angle, translation); invert returns
/// [R^T | -R^T t].
template <typename T>
Eigen::Matrix<T, 4, 4> pose_matrix(const Eigen::Matrix<T, 6, 1>& p, bool invert) {
  const Eigen::Matrix<T, 3, 3> r = rodrigues<T>(p.template head<3>());
  const Eigen::Matrix<T, 3, 1> t = p.template tail<3>();
  Eigen::Matrix<T, 4, 4> m = Eigen::Matrix<T, 4, 4>::Identity();
  if (invert) {
    m.template block<3, 3>(0, 0) = r.transpose();
    m.template block<3, 1>(0, 3) = -(r.transpose() * t);
  } else {
    m.template block<3, 3>(0, 0) = r;
    m.template block<3, 1>(0, 3) = t;
  }
  return m;
}

Eigen::Matrix4d pose_to_matrix(const Pose& pose, bool invert = false);

/// Batched, differentiable: [B, 6] -> [B, 4, 4].
template <typename S>
Tensor<S> pose_to_matrix(const Tensor<S>& pose, bool invert);

struct PoseNetConfig {
  /// ResNet18-shaped encoder (random init) instead of the small strided one.
  bool resnet_encoder = false;
  std::array<Index, 5> channels{16, 32, 64, 128, 256};
  Index decoder_width = 256;
  double output_scale = 0.01;
};

template <typename S>
void init_posenet(const PoseNetConfig& cfg, ParamBuilder<S>& b, const std::string& prefix = "pose");

/// Pair N x 6 x H x W -> N x 6 pose parameters (axis_angle, translation).
template <typename S>
Tensor<S> pose_forward(const Tensor<S>& pair, const PoseNetConfig& cfg, ParameterStore<S>& p,
                       bool training, const std::string& prefix = "pose");

std::vector<Pose> to_poses(const Tensor<double>& params);

/// Transform taking target-camera points into the source camera. Frames are
/// fed in time order (earlier frame first) and the prediction is inverted
/// when the source precedes the target.
template <typename S>
Tensor<S> relative_transform(const Tensor<S>& target, const Tensor<S>& source, int source_offset,
                             const PoseNetConfig& cfg, ParameterStore<S>& p, bool training,
                             const std::string& prefix = "pose");

Index count_posenet_params(const PoseNetConfig& cfg);

}  // namespace litemono

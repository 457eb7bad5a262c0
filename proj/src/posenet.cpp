#include "litemono/posenet.hpp"

#include <unsupported/Eigen/AutoDiff>

#include "litemono/ops.hpp"

namespace litemono {

Eigen::Matrix4d pose_to_matrix(const Pose& pose, bool invert) {
  Eigen::Matrix<double, 6, 1> v;
  v << pose.axis_angle, pose.translation;
  return pose_matrix<double>(v, invert);
}

template <typename S>
Tensor<S> pose_to_matrix(const Tensor<S>& pose, bool invert) {
  if (pose.rank() != 2 || pose.dim(1) != 6)
    throw ShapeError("pose_to_matrix: expected [B, 6], got " + shape_string(pose.shape()));
  using Deriv = Eigen::Matrix<double, 6, 1>;
  using AD = Eigen::AutoDiffScalar<Deriv>;
  const Index b = pose.dim(0);
  Tensor<S> out({b, 4, 4});
  // d out[b, i, j] / d pose[b, k], stored [b][16][6]
  std::vector<double> jac(static_cast<std::size_t>(b * 16 * 6));
  for (Index n = 0; n < b; ++n) {
    Eigen::Matrix<AD, 6, 1> x;
    for (int k = 0; k < 6; ++k) x(k) = AD(static_cast<double>(pose.ptr()[n * 6 + k]), 6, k);
    const Eigen::Matrix<AD, 4, 4> m = pose_matrix<AD>(x, invert);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const AD& e = m(i, j);
        out.ptr()[n * 16 + i * 4 + j] = static_cast<S>(e.value());
        for (int k = 0; k < 6; ++k)
          jac[(n * 16 + i * 4 + j) * 6 + k] = e.derivatives().size() ? e.derivatives()(k) : 0.0;
      }
  }
  detail::attach<S>(out, {pose}, [b, jac = std::move(jac)](detail::Node<S>& self) {
    S* g = self.parent_grad(0);
    if (!g) return;
    for (Index n = 0; n < b; ++n)
      for (int e = 0; e < 16; ++e) {
        const double go = self.grad[n * 16 + e];
        if (go == 0) continue;
        for (int k = 0; k < 6; ++k) g[n * 6 + k] += static_cast<S>(go * jac[(n * 16 + e) * 6 + k]);
      }
  });
  return out;
}

namespace {

template <typename S>
void init_resnet_block(ParamBuilder<S>& b, const std::string& prefix, Index ci, Index co,
                       bool project) {
  b.conv(prefix + ".conv1", ci, co, 3, false);
  b.batch_norm(prefix + ".bn1", co);
  b.conv(prefix + ".conv2", co, co, 3, false);
  b.batch_norm(prefix + ".bn2", co);
  if (project) {
    b.conv(prefix + ".proj", ci, co, 1, false);
    b.batch_norm(prefix + ".proj_bn", co);
  }
}

template <typename S>
Tensor<S> resnet_block(const Tensor<S>& x, ParameterStore<S>& p, const std::string& prefix,
                       Index stride, bool training) {
  Tensor<S> y = conv(x, p, prefix + ".conv1", ConvSpec::strided(3, stride));
  y = relu(batch_norm(y, p, prefix + ".bn1", training));
  y = batch_norm(conv(y, p, prefix + ".conv2", ConvSpec::same(3)), p, prefix + ".bn2", training);
  Tensor<S> skip = x;
  if (p.contains(prefix + ".proj.weight"))
    skip = batch_norm(conv(x, p, prefix + ".proj", ConvSpec{1, 1, stride, 0, 1, 1}), p,
                      prefix + ".proj_bn", training);
  return relu(y + skip);
}

constexpr std::array<Index, 4> kResnetWidths{64, 128, 256, 512};

}  // namespace

template <typename S>
void init_posenet(const PoseNetConfig& cfg, ParamBuilder<S>& b, const std::string& prefix) {
  const Init saved = b.conv_init();
  b.set_conv_init(Init::fan_in_uniform);
  Index feat = 0;
  if (cfg.resnet_encoder) {
    b.conv(prefix + ".enc.stem", 6, 64, 7, false);
    b.batch_norm(prefix + ".enc.stem_bn", 64);
    Index in = 64;
    for (int l = 0; l < 4; ++l)
      for (int k = 0; k < 2; ++k) {
        const Index out = kResnetWidths[l];
        init_resnet_block(b, prefix + ".enc.layer" + std::to_string(l + 1) + "." + std::to_string(k),
                          in, out, k == 0 && (l > 0));
        in = out;
      }
    feat = 512;
  } else {
    Index in = 6;
    for (std::size_t i = 0; i < cfg.channels.size(); ++i) {
      b.conv(prefix + ".enc." + std::to_string(i), in, cfg.channels[i], 3, true);
      in = cfg.channels[i];
    }
    feat = in;
  }
  const Index w = cfg.decoder_width;
  // squeeze, two 3x3 convs, 1x1 to six numbers
  b.tensor(prefix + ".dec.squeeze.weight", {w, feat, 1, 1}, Init::fan_in_uniform);
  b.tensor(prefix + ".dec.squeeze.bias", {w}, Init::zeros);
  b.conv(prefix + ".dec.conv1", w, w, 3, true);
  b.conv(prefix + ".dec.conv2", w, w, 3, true);
  b.tensor(prefix + ".dec.out.weight", {6, w, 1, 1}, Init::fan_in_uniform);
  b.tensor(prefix + ".dec.out.bias", {6}, Init::zeros);
  b.set_conv_init(saved);
}

template <typename S>
Tensor<S> pose_forward(const Tensor<S>& pair, const PoseNetConfig& cfg, ParameterStore<S>& p,
                       bool training, const std::string& prefix) {
  if (pair.rank() != 4 || pair.dim(1) != 6)
    throw ShapeError("pose_forward: expected N x 6 x H x W, got " + shape_string(pair.shape()));
  Tensor<S> x = (pair - S(0.45)) * S(1 / 0.225);
  if (cfg.resnet_encoder) {
    x = conv(x, p, prefix + ".enc.stem", ConvSpec::strided(7, 2));
    x = relu(batch_norm(x, p, prefix + ".enc.stem_bn", training));
    x = max_pool2d(x, 3, 2, 1);
    for (int l = 0; l < 4; ++l)
      for (int k = 0; k < 2; ++k)
        x = resnet_block(x, p, prefix + ".enc.layer" + std::to_string(l + 1) + "." + std::to_string(k),
                         k == 0 && l > 0 ? 2 : 1, training);
  } else {
    for (std::size_t i = 0; i < cfg.channels.size(); ++i)
      x = relu(conv(x, p, prefix + ".enc." + std::to_string(i), ConvSpec::strided(3, 2)));
  }
  x = relu(conv(x, p, prefix + ".dec.squeeze", ConvSpec::pointwise()));
  x = relu(conv(x, p, prefix + ".dec.conv1", ConvSpec::same(3)));
  x = relu(conv(x, p, prefix + ".dec.conv2", ConvSpec::same(3)));
  x = conv(x, p, prefix + ".dec.out", ConvSpec::pointwise());
  const Index n = x.dim(0);
  x = mean(reshape(x, {n, 6, x.dim(2) * x.dim(3)}), 2, false);
  return x * static_cast<S>(cfg.output_scale);
}

std::vector<Pose> to_poses(const Tensor<double>& params) {
  if (params.rank() != 2 || params.dim(1) != 6) throw ShapeError("to_poses: expected [B, 6]");
  std::vector<Pose> out(static_cast<std::size_t>(params.dim(0)));
  for (Index n = 0; n < params.dim(0); ++n)
    for (int k = 0; k < 3; ++k) {
      out[n].axis_angle(k) = params.ptr()[n * 6 + k];
      out[n].translation(k) = params.ptr()[n * 6 + 3 + k];
    }
  return out;
}

template <typename S>
Tensor<S> relative_transform(const Tensor<S>& target, const Tensor<S>& source, int source_offset,
                             const PoseNetConfig& cfg, ParameterStore<S>& p, bool training,
                             const std::string& prefix) {
  const bool earlier = source_offset < 0;
  Tensor<S> pair = earlier ? concat(std::vector<Tensor<S>>{source, target}, 1)
                           : concat(std::vector<Tensor<S>>{target, source}, 1);
  return pose_to_matrix(pose_forward(pair, cfg, p, training, prefix), earlier);
}

Index count_posenet_params(const PoseNetConfig& cfg) {
  ParameterStore<float> store;
  ParamBuilder<float> b(store, 0);
  init_posenet(cfg, b);
  return store.count();
}

#define LITEMONO_INSTANTIATE_POSENET(S)                                                          \
  template Tensor<S> pose_to_matrix(const Tensor<S>&, bool);                                    \
  template void init_posenet(const PoseNetConfig&, ParamBuilder<S>&, const std::string&);       \
  template Tensor<S> pose_forward(const Tensor<S>&, const PoseNetConfig&, ParameterStore<S>&,   \
                                  bool, const std::string&);                                    \
  template Tensor<S> relative_transform(const Tensor<S>&, const Tensor<S>&, int,                \
                                        const PoseNetConfig&, ParameterStore<S>&, bool,         \
                                        const std::string&);

LITEMONO_INSTANTIATE_POSENET(float)
LITEMONO_INSTANTIATE_POSENET(double)

}  // namespace litemono

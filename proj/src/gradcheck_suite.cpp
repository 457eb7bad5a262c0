#include "litemono/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "litemono/attention.hpp"
#include "litemono/decoder.hpp"
#include "litemono/encoder.hpp"
#include "litemono/geometry.hpp"
#include "litemono/grad_check.hpp"
#include "litemono/losses.hpp"
#include "litemono/ops.hpp"
#include "litemono/params.hpp"
#include "litemono/posenet.hpp"

namespace litemono {

namespace {

using Inputs = std::vector<Tensord>;

class Suite {
 public:
  Suite(std::uint64_t seed, const std::function<void(const GradCheckCase&)>& cb) : rng_(seed), cb_(cb) {}

  Tensord uniform(Shape s, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensord t(std::move(s));
    for (double& v : t.data()) v = u(rng_);
    return t;
  }
  // |v| in [0.2, 1] with random sign, away from kinks at zero
  Tensord away_from_zero(Shape s) {
    std::uniform_real_distribution<double> u(0.2, 1);
    std::bernoulli_distribution sign(0.5);
    Tensord t(std::move(s));
    for (double& v : t.data()) v = sign(rng_) ? u(rng_) : -u(rng_);
    return t;
  }
  // scalar probe with fixed positive weights
  Tensord probe(const Tensord& y) {
    std::mt19937_64 r(static_cast<std::uint64_t>(y.numel()) * 7919u + 13);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Tensord w(y.shape());
    for (double& v : w.data()) v = u(r);
    return sum(y * w);
  }
  void perturb(ParameterStore<double>& p, double amount) {
    std::uniform_real_distribution<double> u(-amount, amount);
    for (const auto& n : p.names())
      for (double& v : p.at(n).data()) v += u(rng_);
  }

  void check(const std::string& name, const ScalarProgram& f, Inputs in, bool end_to_end = false) {
    GradCheckCase c{name, end_to_end, grad_check(f, std::move(in), 1e-5), end_to_end ? 1e-3 : 1e-4};
    if (cb_) cb_(c);
    results.push_back(std::move(c));
  }
  template <typename Op>
  void unary(const std::string& name, Op op, Tensord x) {
    check(name, [this, op](const Inputs& in) { return probe(op(in[0])); }, {std::move(x)});
  }

  std::vector<GradCheckCase> results;
  std::mt19937_64 rng_;

 private:
  std::function<void(const GradCheckCase&)> cb_;
};

CameraIntrinsics camera(Index w, Index h) { return {0.75 * w, 0.8 * h, 0.5 * w + 0.3, 0.5 * h - 0.2, w, h}; }

Tensord smooth_texture(Index h, Index w, double dx) {
  Tensord t({1, 3, h, w});
  for (Index c = 0; c < 3; ++c)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j)
        t.data()[(c * h + i) * w + j] = 0.5 + 0.4 * std::sin(0.7 * (static_cast<double>(j) + dx) + 0.5 * i + c);
  return t;
}

void elementwise(Suite& s) {
  const Shape sh{2, 3, 4};
  auto binary = [&](const std::string& name, auto op, Tensord a, Tensord b) {
    s.check(name, [&s, op](const Inputs& in) { return s.probe(op(in[0], in[1])); }, {std::move(a), std::move(b)});
  };
  binary("add", [](auto& a, auto& b) { return a + b; }, s.uniform(sh), s.uniform(sh));
  binary("sub", [](auto& a, auto& b) { return a - b; }, s.uniform(sh), s.uniform(sh));
  binary("mul", [](auto& a, auto& b) { return a * b; }, s.uniform(sh), s.uniform(sh));
  binary("div", [](auto& a, auto& b) { return a / b; }, s.uniform(sh), s.uniform(sh, 0.5, 2));
  binary("add (broadcast)", [](auto& a, auto& b) { return a + b; }, s.uniform(sh), s.uniform({3, 1}));
  binary("mul (broadcast)", [](auto& a, auto& b) { return a * b; }, s.uniform(sh), s.uniform({2, 1, 4}));
  {
    Tensord a = s.uniform(sh), b = a.clone();
    std::bernoulli_distribution side(0.5);
    for (double& v : b.data()) v += side(s.rng_) ? 0.5 : -0.5;  // no ties
    binary("minimum", [](auto& x, auto& y) { return minimum(x, y); }, a, b);
  }
  s.unary("add_scalar", [](auto& x) { return x + 0.7; }, s.uniform(sh));
  s.unary("mul_scalar", [](auto& x) { return x * -1.3; }, s.uniform(sh));
  s.unary("rsub_scalar", [](auto& x) { return 2.0 - x; }, s.uniform(sh));
  s.unary("neg", [](auto& x) { return -x; }, s.uniform(sh));
  s.unary("exp", [](auto& x) { return exp(x); }, s.uniform(sh));
  s.unary("log", [](auto& x) { return log(x); }, s.uniform(sh, 0.3, 3));
  s.unary("sqrt", [](auto& x) { return sqrt(x); }, s.uniform(sh, 0.3, 3));
  s.unary("abs", [](auto& x) { return abs(x); }, s.away_from_zero(sh));
  s.unary("square", [](auto& x) { return square(x); }, s.uniform(sh));
  s.unary("reciprocal", [](auto& x) { return reciprocal(x); }, s.uniform(sh, 0.5, 2));
  {
    // keep every value at least 0.1 from the bounds
    Tensord x = s.uniform(sh);
    for (double& v : x.data())
      if (std::abs(std::abs(v) - 0.5) < 0.1) v = v > 0 ? 0.75 : -0.75;
    s.unary("clamp", [](auto& t) { return clamp(t, -0.5, 0.5); }, x);
  }
}

void structural(Suite& s) {
  const Shape sh{2, 3, 4};
  s.unary("sum", [](auto& x) { return sum(x) * x; }, s.uniform(sh));
  s.unary("mean", [](auto& x) { return mean(x) * x; }, s.uniform(sh));
  s.unary("sum (axis)", [](auto& x) { return sum(x, 1, true); }, s.uniform(sh));
  s.unary("mean (axis)", [](auto& x) { return mean(x, 2, false); }, s.uniform(sh));
  s.unary("reshape", [](auto& x) { return reshape(x, {4, 6}) * reshape(x, {4, 6}); }, s.uniform(sh));
  s.unary("slice", [](auto& x) { return slice(x, 2, 1, 2); }, s.uniform(sh));
  s.unary("transpose", [](auto& x) { return transpose(x); }, s.uniform({3, 5}));
  s.check("concat", [&s](const Inputs& in) { return s.probe(concat(Inputs{in[0], in[1]}, 1)); },
          {s.uniform({2, 2, 3}), s.uniform({2, 4, 3})});
  s.check("matmul", [&s](const Inputs& in) { return s.probe(matmul(in[0], in[1])); },
          {s.uniform({3, 4}), s.uniform({4, 5})});
}

void nn(Suite& s) {
  struct ConvCase {
    const char* name;
    Index ci, co, groups, dilation, stride, k;
  };
  for (const ConvCase& c : {ConvCase{"conv2d 3x3", 2, 3, 1, 1, 1, 3}, ConvCase{"conv2d strided", 2, 4, 1, 1, 2, 3},
                            ConvCase{"conv2d dilated", 3, 2, 1, 2, 1, 3}, ConvCase{"conv2d depthwise", 4, 4, 4, 3, 1, 3},
                            ConvCase{"conv2d grouped", 4, 6, 2, 1, 1, 3}, ConvCase{"conv2d 1x1", 3, 5, 1, 1, 1, 1}}) {
    const ConvSpec spec{c.k, c.k, c.stride, c.dilation * (c.k - 1) / 2, c.dilation, c.groups};
    s.check(c.name, [&s, spec](const Inputs& in) { return s.probe(conv2d(in[0], in[1], in[2], spec)); },
            {s.uniform({2, c.ci, 5 + c.dilation, 6}), s.uniform({c.co, c.ci / c.groups, c.k, c.k}), s.uniform({c.co})});
  }
  const Shape sh{2, 3, 4, 3};
  const Tensord g = s.uniform({3}, 0.5, 1.5), b = s.uniform({3});
  s.check("batch_norm (train)",
          [&s](const Inputs& in) {
            BatchNormState<double> st{in[1], in[2], Tensord({3}, 0.0), Tensord({3}, 1.0)};
            return s.probe(batch_norm(in[0], st, true));
          },
          {s.uniform(sh), g, b});
  s.check("batch_norm (eval)",
          [&s](const Inputs& in) {
            BatchNormState<double> st{in[1], in[2], Tensord({3}, 0.3), Tensord({3}, 2.0)};
            return s.probe(batch_norm(in[0], st, false));
          },
          {s.uniform(sh), g, b});
  s.check("layer_norm", [&s](const Inputs& in) { return s.probe(layer_norm(in[0], in[1], in[2], 1)); },
          {s.uniform(sh), g, b});
  s.unary("gelu", [](auto& x) { return gelu(x); }, s.uniform(sh, -2, 2));
  s.unary("elu", [](auto& x) { return elu(x); }, s.away_from_zero(sh));
  s.unary("sigmoid", [](auto& x) { return sigmoid(x); }, s.uniform(sh, -3, 3));
  s.unary("relu", [](auto& x) { return relu(x); }, s.away_from_zero(sh));
  s.unary("softmax", [](auto& x) { return softmax(x, 1); }, s.uniform(sh, -2, 2));
  s.unary("resize_bilinear (x2)", [](auto& x) { return resize_bilinear(x, 2.0); }, s.uniform(sh));
  s.unary("resize_bilinear (5x3)", [](auto& x) { return resize_bilinear(x, 5, 3); }, s.uniform(sh));
  s.unary("avg_pool2d", [](auto& x) { return avg_pool2d(x, 2, 2); }, s.uniform({2, 3, 4, 4}));
  s.unary("avg_pool2d (3x3 s1)", [](auto& x) { return avg_pool2d(x, 3, 1); }, s.uniform({1, 2, 5, 5}));
  {
    // distinct values spaced well apart so the argmax never flips
    Tensord x({1, 2, 5, 5});
    std::vector<double> v(static_cast<std::size_t>(x.numel()));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i);
    std::shuffle(v.begin(), v.end(), s.rng_);
    std::copy(v.begin(), v.end(), x.data().begin());
    s.unary("max_pool2d", [](auto& t) { return max_pool2d(t, 3, 2, 1); }, x);
  }
  s.unary("reflection_pad2d", [](auto& x) { return reflection_pad2d(x, 1); }, s.uniform({1, 2, 4, 3}));
}

void attention(Suite& s) {
  const Shape sh{2, 6, 5};
  s.check("xca_attention", [&s](const Inputs& in) { return s.probe(xca_attention(in[0], in[1], in[2], 3, in[3])); },
          {s.uniform(sh), s.uniform(sh), s.uniform(sh), s.uniform({3}, 0.5, 2)});
  s.check("xca_attention (literal)",
          [&s](const Inputs& in) { return s.probe(xca_attention(in[0], in[1], in[2], 3, std::nullopt)); },
          {s.uniform(sh), s.uniform(sh), s.uniform(sh)});
  s.check("spatial_attention", [&s](const Inputs& in) { return s.probe(spatial_attention(in[0], in[1], in[2], 3)); },
          {s.uniform(sh), s.uniform(sh), s.uniform(sh)});
}

void geometry(Suite& s) {
  Tensord pose = s.uniform({3, 6});
  for (int k = 0; k < 3; ++k) pose.at({2, k}) *= 1e-4;  // small-angle branch
  for (bool invert : {false, true})
    s.check(invert ? "pose_to_matrix (inverted)" : "pose_to_matrix",
            [&s, invert](const Inputs& in) { return s.probe(pose_to_matrix(in[0], invert)); }, {pose});

  const CameraIntrinsics k = camera(5, 4);
  s.check("backproject", [&s, k](const Inputs& in) { return s.probe(backproject(in[0], k)); },
          {s.uniform({2, 1, 4, 5}, 1, 5)});
  const Tensord small_motion({2, 6}, {0.02, -0.01, 0.03, 0.1, -0.2, 0.05, -0.03, 0.02, 0.01, -0.1, 0.15, 0.2});
  s.check("project",
          [&s, k](const Inputs& in) { return s.probe(project(in[0], k, pose_to_matrix(in[1], false)).coords); },
          {backproject(s.uniform({2, 1, 4, 5}, 1, 5), k), small_motion});
  {
    Tensord coords = s.uniform({2, 3, 4, 2}, 0.05, 0.95);
    std::uniform_int_distribution<int> cell(0, 3);
    for (double& v : coords.data()) v += cell(s.rng_);
    s.check("bilinear_sample", [&s](const Inputs& in) { return s.probe(bilinear_sample(in[0], in[1])); },
            {s.uniform({2, 2, 5, 6}), coords});
  }
}

void losses(Suite& s) {
  const Shape sh{1, 3, 5, 6};
  s.check("ssim", [&s](const Inputs& in) { return s.probe(ssim(in[0], in[1])); },
          {s.uniform(sh, 0, 1), s.uniform(sh, 0, 1)});
  s.check("photometric_loss", [&s](const Inputs& in) { return s.probe(photometric_loss(in[0], in[1], 0.85)); },
          {s.uniform(sh, 0, 1), s.uniform(sh, 0, 1)});
  s.check("smoothness", [](const Inputs& in) { return smoothness(in[0], in[1], false); },
          {s.uniform({2, 1, 5, 6}, 0.2, 1), s.uniform({2, 3, 5, 6}, 0, 1)});
  {
    Tensord a = s.uniform({1, 1, 4, 4}, 0, 1), b = a.clone();
    std::bernoulli_distribution side(0.5);
    for (double& v : b.data()) v += side(s.rng_) ? 0.3 : -0.3;
    s.check("min_reprojection", [&s](const Inputs& in) { return s.probe(min_reprojection(Inputs{in[0], in[1]})); },
            {a, b});
  }
}

void blocks(Suite& s) {
  {
    ParameterStore<double> p;
    ParamBuilder<double> b(p, 6);
    init_cdc(b, "blk", 4, 2);
    s.perturb(p, 0.3);
    Inputs in{s.uniform({2, 4, 5, 6})};
    for (const auto& n : p.names()) in.push_back(p.at(n));
    s.check("CDC block", [&s, p](const Inputs& x) mutable { return s.probe(cdc_block(x[0], p, "blk", 2, true)); },
            in);
  }
  {
    ParameterStore<double> p;
    ParamBuilder<double> b(p, 9);
    init_lgfi(b, "blk", 4, 2, 2);
    s.perturb(p, 0.3);
    Inputs in{s.uniform({2, 4, 3, 3})};
    for (const auto& n : p.names()) in.push_back(p.at(n));
    s.check("LGFI block", [&s, p](const Inputs& x) mutable { return s.probe(lgfi_block(x[0], p, "blk", 2)); }, in);
  }
  {
    ParameterStore<double> p;
    ParamBuilder<double> b(p, 3);
    b.conv("lvl.conv0", 4, 3, 3, true);
    b.conv("lvl.conv1", 3 + 2, 3, 3, true);
    b.conv("lvl.head", 3, 1, 3, true);
    s.perturb(p, 0.2);
    Inputs in{s.uniform({2, 4, 3, 4}), s.uniform({2, 2, 6, 8})};
    for (const auto& n : p.names()) in.push_back(p.at(n));
    s.check("decoder level + head",
            [&s, p](const Inputs& x) mutable {
              return s.probe(disp_head(decoder_level(x[0], x[1], p, "lvl"), p, "lvl"));
            },
            in);
  }
  {
    const CameraIntrinsics k = camera(8, 8);
    const Tensord src = s.uniform({1, 3, 8, 8}, 0, 1);
    s.check("synthesize (depth, pose)",
            [&s, k, src](const Inputs& in) {
              return s.probe(synthesize(src, in[0], pose_to_matrix(in[1], false), k).image);
            },
            {s.uniform({1, 1, 8, 8}, 2, 6), Tensord({1, 6}, {0.02, -0.03, 0.01, 0.13, -0.07, 0.05})});
  }
  {
    const Index h = 8, w = 8;
    const Tensord tgt = smooth_texture(h, w, 0), prev = smooth_texture(h, w, 0.4), next = smooth_texture(h, w, -0.3);
    Inputs in;
    for (int sc = 0; sc < 3; ++sc) in.push_back(s.uniform({1, 1, h >> sc, w >> sc}, -2.5, -1.5));
    in.push_back(Tensord({1, 6}, {0.01, -0.02, 0.015, 0.06, 0.01, -0.02}));
    in.push_back(Tensord({1, 6}, {-0.01, 0.02, 0.005, -0.05, 0.02, 0.03}));
    LossConfig cfg;
    cfg.lambda_smooth = 0.1;  // makes the smoothness gradient visible
    const CameraIntrinsics k = camera(w, h);
    s.check("total_loss 8x8 (disparity logits, poses)",
            [=](const Inputs& x) {
              DepthPyramid<double> p;
              for (int sc = 0; sc < 3; ++sc) p.disp[sc] = sigmoid(x[sc]);
              return total_loss(p, tgt, {prev, next}, {pose_to_matrix(x[3], false), pose_to_matrix(x[4], true)}, k,
                                cfg)
                  .total;
            },
            in, true);
  }
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed,
                                               const std::function<void(const GradCheckCase&)>& on_case) {
  Suite s(seed, on_case);
  elementwise(s);
  structural(s);
  nn(s);
  attention(s);
  geometry(s);
  losses(s);
  blocks(s);
  return std::move(s.results);
}

}  // namespace litemono

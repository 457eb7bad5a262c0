#include "litemono/data.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "litemono/image_io.hpp"
#include "litemono/ops.hpp"

namespace litemono {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                                   static_cast<std::uint64_t>(iy) * 0x85157af5ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smoothstep-interpolated value noise in [0, 1).
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);
  ty = ty * ty * (3 - 2 * ty);
  const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

Eigen::Vector3d shade(const SceneRect& r, double x, double y) {
  const double u = (x - r.x0) / r.cell, v = (y - r.y0) / r.cell;
  const double n = 0.65 * value_noise(r.texture_seed, u, v) + 0.35 * value_noise(r.texture_seed + 1, 2.3 * u, 2.3 * v);
  const double m = value_noise(r.texture_seed + 2, 0.7 * u, 0.7 * v);
  Eigen::Vector3d c = r.color * (0.25 + 0.75 * n);
  c += Eigen::Vector3d(0.12, -0.06, -0.06) * (m - 0.5);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  int surface = -3;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

bool inside(const SceneRect& r, double x, double y) { return x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1; }

Hit trace(const SyntheticScene& s, const Eigen::Matrix4d& pose, double u, double v) {
  const CameraIntrinsics& k = s.intrinsics;
  const Eigen::Vector3d dc((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Eigen::Matrix3d rot = pose.block<3, 3>(0, 0);
  const Eigen::Vector3d o = pose.block<3, 1>(0, 3);
  const Eigen::Vector3d dw = rot * dc;
  Hit best;
  auto world_plane = [&](const SceneRect& r, int id, bool bounded) {
    if (!(dw.z() > 1e-9)) return;
    const double t = (r.depth - o.z()) / dw.z();
    if (!(t > 0) || t >= best.depth) return;
    const Eigen::Vector3d p = o + t * dw;
    if (bounded && !inside(r, p.x(), p.y())) return;
    best = {t, id, shade(r, p.x(), p.y())};
  };
  world_plane(s.background, -1, false);
  for (std::size_t i = 0; i < s.rects.size(); ++i) world_plane(s.rects[i], static_cast<int>(i), true);
  if (s.mover) {
    const SceneRect& m = *s.mover;
    const double x = m.depth * dc.x(), y = m.depth * dc.y();
    if (m.depth < best.depth && inside(m, x, y)) best = {m.depth, -2, shade(m, x, y)};
  }
  return best;
}

Eigen::Matrix4d camera_pose(double x, double y, double z, double yaw) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  m.block<3, 1>(0, 3) = Eigen::Vector3d(x, y, z);
  return m;
}

SceneRect random_rect(std::mt19937_64& rng, double half_w, double half_h, double depth, double cell) {
  std::uniform_real_distribution<double> u(-1, 1), size(0.15, 0.4), col(0.25, 1.0);
  const double cx = 0.75 * half_w * u(rng), cy = 0.75 * half_h * u(rng);
  const double hw = half_w * size(rng), hh = half_h * size(rng) * 1.5;
  return {cx - hw, cx + hw, cy - hh, cy + hh, depth, Eigen::Vector3d(col(rng), col(rng), col(rng)), cell, rng()};
}

Tensord nearest_resize(const Tensord& x, Index h, Index w) {
  const Index hs = x.dim(2), ws = x.dim(3);
  Tensord out({1, 1, h, w});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const Index si = std::min(hs - 1, static_cast<Index>((i + 0.5) * hs / h));
      const Index sj = std::min(ws - 1, static_cast<Index>((j + 0.5) * ws / w));
      out.data()[i * w + j] = x.ptr()[si * ws + sj];
    }
  return out;
}

Tensord map_pixels(const Tensord& image, const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& f) {
  if (image.rank() != 4 || image.dim(1) != 3) throw ShapeError("colour adjustment: expected N x 3 x H x W");
  Tensord out(image.shape());
  const Index plane = image.dim(2) * image.dim(3);
  for (Index n = 0; n < image.dim(0); ++n) {
    const double* src = image.ptr() + n * 3 * plane;
    double* dst = out.data().data() + n * 3 * plane;
    for (Index q = 0; q < plane; ++q) {
      const Eigen::Vector3d c = f(Eigen::Vector3d(src[q], src[plane + q], src[2 * plane + q])).cwiseMax(0.0).cwiseMin(1.0);
      for (int k = 0; k < 3; ++k) dst[k * plane + q] = c(k);
    }
  }
  return out;
}

double gray(const Eigen::Vector3d& c) { return 0.299 * c(0) + 0.587 * c(1) + 0.114 * c(2); }

Eigen::Matrix4d mirror_x(const Eigen::Matrix4d& t) {
  const Eigen::Matrix4d f = Eigen::Vector4d(-1, 1, 1, 1).asDiagonal();
  return f * t * f;
}

std::string frame_name(Index i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld%s", static_cast<long long>(i), ext);
  return buf;
}

void check_divisible(Index w, Index h, const char* what) {
  if (w <= 0 || h <= 0 || w % 32 || h % 32)
    throw std::invalid_argument(std::string(what) + ": width and height must be positive multiples of 32, got " +
                                std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace

SyntheticScene make_scene(std::uint64_t seed, Index n_frames, Index width, Index height,
                          const SceneOptions& opt) {
  check_divisible(width, height, "make_scene");
  if (n_frames < 1) throw std::invalid_argument("make_scene: need at least one frame");
  if (opt.num_rects < 1 && !opt.mover) throw std::invalid_argument("make_scene: empty layout");
  if (!(opt.min_depth > 0) || !(opt.min_depth < opt.max_depth) || !(opt.background_depth > opt.max_depth))
    throw std::invalid_argument("make_scene: need 0 < min_depth < max_depth < background_depth");
  if (opt.supersample < 1) throw std::invalid_argument("make_scene: supersample must be at least 1");

  std::mt19937_64 rng(seed);
  SyntheticScene s;
  s.supersample = opt.supersample;
  const double f = 0.75 * static_cast<double>(width);
  s.intrinsics = {f, f, 0.5 * width + opt.cx_offset, 0.5 * height + opt.cy_offset, width, height};

  // trajectory first so the layout can stay ahead of the last camera
  std::uniform_real_distribution<double> step(opt.min_step, opt.max_step), phase(0, 2 * M_PI);
  const double v0 = step(rng), v1 = step(rng), p0 = phase(rng), p1 = phase(rng), p2 = phase(rng);
  double z = 0;
  for (Index t = 0; t < n_frames; ++t) {
    if (opt.static_camera) {
      s.poses.push_back(Eigen::Matrix4d::Identity());
      continue;
    }
    const double a = static_cast<double>(t) / std::max<Index>(1, n_frames - 1);
    const double x = opt.sway * std::sin(p0 + opt.sway_frequency * t);
    const double y = 0.3 * opt.sway * std::sin(p1 + 0.6 * t);
    s.poses.push_back(camera_pose(x, y, z, opt.yaw * std::sin(p2 + 0.5 * t)));
    z += v0 + (v1 - v0) * a;
  }
  const double travel = s.poses.back()(2, 3);

  const double half_w = 0.5 * width / f, half_h = 0.5 * height / f;  // visible extent per unit depth
  std::uniform_real_distribution<double> depth(travel + opt.min_depth, travel + opt.max_depth);
  std::uniform_real_distribution<double> cell_px(3, 7);
  for (int i = 0; i < opt.num_rects; ++i) {
    const double d = depth(rng);
    s.rects.push_back(random_rect(rng, d * half_w, d * half_h, d, d * cell_px(rng) / f));
  }
  const double bg = travel + opt.background_depth;
  s.background = {-1e9, 1e9, -1e9, 1e9, bg, Eigen::Vector3d(0.55, 0.65, 0.8), bg * 6 / f, rng()};
  if (opt.mover) {
    // nearer than every rectangle so it is never occluded
    std::uniform_real_distribution<double> md(0.6 * opt.min_depth, 0.9 * opt.min_depth), u(-1, 1);
    const double d = md(rng);
    const double cx = 0.2 * d * half_w * u(rng), cy = 0.2 * d * half_h * std::abs(u(rng));
    const double hw = 0.3 * d * half_w, hh = 0.4 * d * half_h;
    s.mover = SceneRect{cx - hw, cx + hw, cy - hh, cy + hh, d, Eigen::Vector3d(0.9, 0.4, 0.3), d * 4 / f, rng()};
  }
  return s;
}

RenderedFrame render(const SyntheticScene& s, Index frame) {
  if (frame < 0 || frame >= static_cast<Index>(s.poses.size())) throw std::out_of_range("render: frame index");
  const Index w = s.intrinsics.width, h = s.intrinsics.height, plane = w * h;
  const Eigen::Matrix4d& pose = s.poses[frame];
  RenderedFrame out{Tensord({1, 3, h, w}), Tensord({1, 1, h, w}), Tensord({1, 1, h, w})};
  const int ss = s.supersample;
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const Hit centre = trace(s, pose, j + 0.5, i + 0.5);
      out.depth.data()[i * w + j] = centre.depth;
      out.surface.data()[i * w + j] = centre.surface;
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int a = 0; a < ss; ++a)
        for (int b = 0; b < ss; ++b) c += trace(s, pose, j + (b + 0.5) / ss, i + (a + 0.5) / ss).color;
      c /= ss * ss;
      for (int k = 0; k < 3; ++k) out.image.data()[k * plane + i * w + j] = c(k);
    }
  return out;
}

FrameSequence generate_synthetic_sequence(std::uint64_t seed, Index n_frames, Index width, Index height,
                                          const SceneOptions& options) {
  const SyntheticScene scene = make_scene(seed, n_frames, width, height, options);
  FrameSequence seq;
  seq.intrinsics = scene.intrinsics;
  seq.poses = scene.poses;
  for (Index t = 0; t < n_frames; ++t) {
    RenderedFrame r = render(scene, t);
    seq.frames.push_back(std::move(r.image));
    seq.depth.push_back(std::move(r.depth));
    seq.surface.push_back(std::move(r.surface));
  }
  return seq;
}

Eigen::Matrix4d relative_pose(const Eigen::Matrix4d& target_to_world, const Eigen::Matrix4d& source_to_world) {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = source_to_world.block<3, 3>(0, 0).transpose();
  inv.block<3, 3>(0, 0) = rt;
  inv.block<3, 1>(0, 3) = -rt * source_to_world.block<3, 1>(0, 3);
  return inv * target_to_world;
}

Triplet make_triplet(const FrameSequence& seq, Index index) {
  if (index < 1 || index + 1 >= seq.size())
    throw std::out_of_range("triplet index " + std::to_string(index) + " needs frames on both sides (sequence has " +
                            std::to_string(seq.size()) + ")");
  Triplet t{seq.frames[index - 1], seq.frames[index], seq.frames[index + 1], seq.intrinsics, {}, {}};
  if (!seq.depth.empty()) t.gt_depth = seq.depth[index];
  if (!seq.poses.empty())
    t.gt_transforms = std::array<Eigen::Matrix4d, 2>{relative_pose(seq.poses[index], seq.poses[index - 1]),
                                                     relative_pose(seq.poses[index], seq.poses[index + 1])};
  return t;
}

Tensord occlusion_boundary(const Tensord& surface, Index radius) {
  const Index h = surface.dim(2), w = surface.dim(3);
  Tensord edge({1, 1, h, w});
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const double id = surface.ptr()[i * w + j];
      bool hit = false;
      for (Index a = std::max<Index>(0, i - radius); a <= std::min(h - 1, i + radius) && !hit; ++a)
        for (Index b = std::max<Index>(0, j - radius); b <= std::min(w - 1, j + radius); ++b)
          if (surface.ptr()[a * w + b] != id) {
            hit = true;
            break;
          }
      edge.data()[i * w + j] = hit;
    }
  return edge;
}

Tensord flip_horizontal(const Tensord& image) {
  if (image.rank() != 4) throw ShapeError("flip_horizontal: expected N x C x H x W");
  Tensord out(image.shape());
  const Index w = image.dim(3), rows = image.numel() / w;
  for (Index r = 0; r < rows; ++r)
    for (Index j = 0; j < w; ++j) out.data()[r * w + j] = image.ptr()[r * w + (w - 1 - j)];
  return out;
}

Tensord adjust_brightness(const Tensord& image, double factor) {
  return map_pixels(image, [factor](const Eigen::Vector3d& c) { return Eigen::Vector3d(c * factor); });
}

Tensord adjust_contrast(const Tensord& image, double factor) {
  const Index plane = image.dim(2) * image.dim(3);
  double m = 0;
  for (Index q = 0; q < plane; ++q)
    m += gray(Eigen::Vector3d(image.ptr()[q], image.ptr()[plane + q], image.ptr()[2 * plane + q])) / plane;
  return map_pixels(image, [=](const Eigen::Vector3d& c) {
    return Eigen::Vector3d(factor * c + (1 - factor) * Eigen::Vector3d::Constant(m));
  });
}

Tensord adjust_saturation(const Tensord& image, double factor) {
  return map_pixels(image, [=](const Eigen::Vector3d& c) {
    return Eigen::Vector3d(factor * c + (1 - factor) * Eigen::Vector3d::Constant(gray(c)));
  });
}

Tensord adjust_hue(const Tensord& image, double shift) {
  if (!(shift >= -0.5 && shift <= 0.5)) throw std::invalid_argument("adjust_hue: shift must lie in [-0.5, 0.5]");
  return map_pixels(image, [=](const Eigen::Vector3d& c) {
    const double mx = c.maxCoeff(), mn = c.minCoeff(), d = mx - mn;
    double hue = 0;
    if (d > 0) {
      if (mx == c(0)) hue = std::fmod((c(1) - c(2)) / d + 6, 6);
      else if (mx == c(1)) hue = (c(2) - c(0)) / d + 2;
      else hue = (c(0) - c(1)) / d + 4;
    }
    hue = std::fmod(hue / 6 + shift + 1, 1.0) * 6;
    const double sat = mx > 0 ? d / mx : 0, val = mx;
    const int sector = static_cast<int>(std::floor(hue)) % 6;
    const double fr = hue - std::floor(hue);
    const double p = val * (1 - sat), q = val * (1 - sat * fr), t = val * (1 - sat * (1 - fr));
    switch (sector) {
      case 0: return Eigen::Vector3d(val, t, p);
      case 1: return Eigen::Vector3d(q, val, p);
      case 2: return Eigen::Vector3d(p, val, t);
      case 3: return Eigen::Vector3d(p, q, val);
      case 4: return Eigen::Vector3d(t, p, val);
      default: return Eigen::Vector3d(val, p, q);
    }
  });
}

AugmentedTriplet augment(const Triplet& t, std::uint64_t seed, const AugmentOptions& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  AugmentedTriplet out;
  out.flipped = opt.force_flip.value_or(u(rng) < opt.flip_probability);
  out.jittered = u(rng) < opt.jitter_probability;
  Triplet clean = t;
  if (out.flipped) {
    clean.prev = flip_horizontal(t.prev);
    clean.target = flip_horizontal(t.target);
    clean.next = flip_horizontal(t.next);
    clean.intrinsics = t.intrinsics.flipped();
    if (t.gt_depth) clean.gt_depth = flip_horizontal(*t.gt_depth);
    if (t.gt_transforms)
      clean.gt_transforms = std::array<Eigen::Matrix4d, 2>{mirror_x((*t.gt_transforms)[0]), mirror_x((*t.gt_transforms)[1])};
  }
  Triplet input = clean;
  if (out.jittered) {
    auto factor = [&](double r) { return std::uniform_real_distribution<double>(1 - r, 1 + r)(rng); };
    const double b = factor(opt.brightness), c = factor(opt.contrast), s = factor(opt.saturation);
    const double h = std::uniform_real_distribution<double>(-opt.hue, opt.hue)(rng);
    std::array<int, 4> order{0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    auto jitter = [&](Tensord x) {
      for (int op : order) {
        if (op == 0) x = adjust_brightness(x, b);
        if (op == 1) x = adjust_contrast(x, c);
        if (op == 2) x = adjust_saturation(x, s);
        if (op == 3) x = adjust_hue(x, h);
      }
      return x;
    };
    input.prev = jitter(clean.prev);
    input.target = jitter(clean.target);
    input.next = jitter(clean.next);
  }
  out.clean = opt.jitter_targets ? input : clean;
  out.input = std::move(input);
  return out;
}

CameraIntrinsics average_intrinsics(const std::vector<CameraIntrinsics>& items) {
  if (items.empty()) throw std::invalid_argument("average_intrinsics: empty list");
  CameraIntrinsics m{0, 0, 0, 0, items.front().width, items.front().height};
  const double n = static_cast<double>(items.size());
  for (const auto& k : items) {
    if (k.width != m.width || k.height != m.height)
      throw std::invalid_argument("average_intrinsics: intrinsics refer to different image sizes");
    m.fx += k.fx / n;
    m.fy += k.fy / n;
    m.cx += k.cx / n;
    m.cy += k.cy / n;
  }
  return m;
}

void write_sequence_dir(const std::filesystem::path& dir, const FrameSequence& seq) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "frames");
  for (Index i = 0; i < seq.size(); ++i) write_png(dir / "frames" / frame_name(i, ".png"), seq.frames[i]);
  if (!seq.depth.empty()) {
    fs::create_directories(dir / "depth");
    for (Index i = 0; i < seq.size(); ++i) write_depth_f32(dir / "depth" / frame_name(i, ".f32"), seq.depth[i]);
  }
  {
    std::ofstream k(dir / "intrinsics.txt");
    k.precision(17);
    k << seq.intrinsics.fx << ' ' << seq.intrinsics.fy << ' ' << seq.intrinsics.cx << ' ' << seq.intrinsics.cy << '\n';
    if (!k) throw std::runtime_error("failed writing " + (dir / "intrinsics.txt").string());
  }
  if (!seq.poses.empty()) {
    std::ofstream p(dir / "poses.txt");
    p.precision(17);
    for (const auto& m : seq.poses) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) p << m(r, c) << (r == 2 && c == 3 ? '\n' : ' ');
    }
    if (!p) throw std::runtime_error("failed writing " + (dir / "poses.txt").string());
  }
}

namespace {

CameraIntrinsics read_intrinsics(const std::filesystem::path& dir, Index width, Index height) {
  const auto path = dir / "intrinsics.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CameraIntrinsics k{0, 0, 0, 0, width, height};
  if (!(in >> k.fx >> k.fy >> k.cx >> k.cy)) throw std::runtime_error("expected 'fx fy cx cy' in " + path.string());
  k.validate();
  return k;
}

struct LoadedFrame {
  Tensord image;
  std::optional<Tensord> depth;
  CameraIntrinsics native;
};

LoadedFrame load_frame(const std::filesystem::path& dir, Index i, Index width, Index height) {
  const auto png = dir / "frames" / frame_name(i, ".png");
  if (!std::filesystem::exists(png)) throw std::runtime_error("missing frame " + png.string());
  Tensord img = read_png(png);
  LoadedFrame f;
  f.native = read_intrinsics(dir, img.dim(3), img.dim(2));
  f.image = img.dim(2) == height && img.dim(3) == width ? img : resize_bilinear(img, height, width);
  const auto dpath = dir / "depth" / frame_name(i, ".f32");
  if (std::filesystem::exists(dpath)) {
    Tensord d = read_depth_f32(dpath);
    f.depth = d.dim(2) == height && d.dim(3) == width ? d : nearest_resize(d, height, width);
  }
  return f;
}

std::vector<Eigen::Matrix4d> read_poses(const std::filesystem::path& dir) {
  std::vector<Eigen::Matrix4d> poses;
  std::ifstream in(dir / "poses.txt");
  if (!in) return poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        if (!(ls >> m(r, c))) throw std::runtime_error("malformed line in " + (dir / "poses.txt").string());
    poses.push_back(m);
  }
  return poses;
}

}  // namespace

FrameSequence load_sequence_dir(const std::filesystem::path& dir, Index width, Index height) {
  check_divisible(width, height, "load_sequence_dir");
  Index n = 0;
  while (std::filesystem::exists(dir / "frames" / frame_name(n, ".png"))) ++n;
  if (n == 0) throw std::runtime_error("no frames found: " + (dir / "frames" / frame_name(0, ".png")).string());
  FrameSequence seq;
  bool all_depth = true;
  for (Index i = 0; i < n; ++i) {
    LoadedFrame f = load_frame(dir, i, width, height);
    if (i == 0) seq.intrinsics = f.native.resized(width, height);
    seq.frames.push_back(std::move(f.image));
    if (f.depth) seq.depth.push_back(std::move(*f.depth));
    else all_depth = false;
  }
  if (!all_depth) seq.depth.clear();
  seq.poses = read_poses(dir);
  if (!seq.poses.empty() && static_cast<Index>(seq.poses.size()) != n)
    throw std::runtime_error("poses.txt has " + std::to_string(seq.poses.size()) + " entries for " +
                             std::to_string(n) + " frames");
  return seq;
}

Triplet load_triplet_dir(const std::filesystem::path& dir, Index index, Index width, Index height) {
  check_divisible(width, height, "load_triplet_dir");
  if (index < 1) throw std::out_of_range("load_triplet_dir: index " + std::to_string(index) + " has no previous frame");
  LoadedFrame a = load_frame(dir, index - 1, width, height);
  LoadedFrame b = load_frame(dir, index, width, height);
  LoadedFrame c = load_frame(dir, index + 1, width, height);
  Triplet t{a.image, b.image, c.image, b.native.resized(width, height), b.depth, {}};
  const auto poses = read_poses(dir);
  if (static_cast<Index>(poses.size()) > index + 1)
    t.gt_transforms = std::array<Eigen::Matrix4d, 2>{relative_pose(poses[index], poses[index - 1]),
                                                     relative_pose(poses[index], poses[index + 1])};
  return t;
}

}  // namespace litemono

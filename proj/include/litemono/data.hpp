#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "litemono/geometry.hpp"

namespace litemono {

/// Textured rectangle on the plane Z = depth, world units.
struct SceneRect {
  double x0, x1, y0, y1, depth;
  Eigen::Vector3d color;
  double cell;  // texture lattice spacing
  std::uint64_t texture_seed;
};

struct SceneOptions {
  int num_rects = 8;
  /// Rectangle depths are drawn from [min_depth, max_depth] ahead of the
  /// last camera position.
  double min_depth = 2, max_depth = 50;
  double background_depth = 60;
  /// Forward speed per frame is drawn from [min_step, max_step].
  double min_step = 0.05, max_step = 0.2;
  /// Peak lateral sway and yaw.
  double sway = 0.5, yaw = 0.01;
  /// Sway phase advance per frame, radians.
  double sway_frequency = 0.3;
  bool static_camera = false;
  /// Adds one rectangle fixed in the camera frame (moves with the camera).
  bool mover = false;
  /// Principal point offset from the image centre, pixels.
  double cx_offset = 0, cy_offset = 0;
  /// Samples per pixel along each axis for the colour image.
  int supersample = 2;
};

/// Layout plus camera trajectory. Camera looks down +Z; poses are
/// camera-to-world.
struct SyntheticScene {
  std::vector<SceneRect> rects;
  SceneRect background;
  std::optional<SceneRect> mover;  // camera-frame coordinates
  std::vector<Eigen::Matrix4d> poses;
  CameraIntrinsics intrinsics;
  int supersample = 2;
};

/// Camera-frame content of one frame.
struct RenderedFrame {
  Tensord image;       // 1 x 3 x H x W
  Tensord depth;       // 1 x 1 x H x W, camera z at pixel centres
  Tensord surface;     // 1 x 1 x H x W, index of the visible surface (-1 background, -2 mover)
};

/// A sequence of frames sharing one camera, optionally with ground truth.
struct FrameSequence {
  std::vector<Tensord> frames;                 // 1 x 3 x H x W in [0, 1]
  std::vector<Tensord> depth;                  // empty or one per frame
  std::vector<Tensord> surface;                // empty or one per frame
  std::vector<Eigen::Matrix4d> poses;          // empty or camera-to-world per frame
  CameraIntrinsics intrinsics;

  Index size() const { return static_cast<Index>(frames.size()); }
};

struct Triplet {
  Tensord prev, target, next;  // 1 x 3 x H x W
  CameraIntrinsics intrinsics;
  std::optional<Tensord> gt_depth;
  /// Target-to-source transforms for (prev, next).
  std::optional<std::array<Eigen::Matrix4d, 2>> gt_transforms;
};

/// Throws std::invalid_argument unless width and height are multiples of 32
/// and the layout is non-empty.
SyntheticScene make_scene(std::uint64_t seed, Index n_frames, Index width, Index height,
                          const SceneOptions& options = {});
RenderedFrame render(const SyntheticScene& scene, Index frame);
FrameSequence generate_synthetic_sequence(std::uint64_t seed, Index n_frames, Index width, Index height,
                                          const SceneOptions& options = {});

/// Target-to-source transform inv(C_source) C_target.
Eigen::Matrix4d relative_pose(const Eigen::Matrix4d& target_to_world, const Eigen::Matrix4d& source_to_world);

/// Frames (i - 1, i, i + 1); throws std::out_of_range at either end.
Triplet make_triplet(const FrameSequence& seq, Index index);

/// 1 where the pixel lies within `radius` pixels of a change in the visible
/// surface.
Tensord occlusion_boundary(const Tensord& surface, Index radius);

struct AugmentOptions {
  double flip_probability = 0.5;
  double jitter_probability = 0.5;
  double brightness = 0.2, contrast = 0.2, saturation = 0.2, hue = 0.1;
  /// Overrides the random flip decision.
  std::optional<bool> force_flip;
  /// Loss targets get the same jitter as the network inputs.
  bool jitter_targets = false;
};

struct AugmentedTriplet {
  Triplet input;  // what the networks see
  Triplet clean;  // same geometry, no colour jitter; used by the loss
  bool flipped = false;
  bool jittered = false;
};

/// Horizontal flip (frames, depth and cx mirrored together) and colour
/// jitter (brightness, contrast, saturation, hue in random order, identical
/// for the three frames). Deterministic per seed.
AugmentedTriplet augment(const Triplet& t, std::uint64_t seed, const AugmentOptions& options = {});

Tensord flip_horizontal(const Tensord& image);
Tensord adjust_brightness(const Tensord& image, double factor);
Tensord adjust_contrast(const Tensord& image, double factor);
Tensord adjust_saturation(const Tensord& image, double factor);
/// Shift in turns of the hue circle, within [-0.5, 0.5].
Tensord adjust_hue(const Tensord& image, double shift);

/// Mean of fx, fy, cx, cy; throws std::invalid_argument on an empty list or
/// mismatched image sizes.
CameraIntrinsics average_intrinsics(const std::vector<CameraIntrinsics>& items);

/// Directory layout: frames/NNNNNN.png, intrinsics.txt holding "fx fy cx cy"
/// for the stored frame size, optional depth/NNNNNN.f32 and poses.txt (one
/// row-major 3 x 4 camera-to-world matrix per line).
void write_sequence_dir(const std::filesystem::path& dir, const FrameSequence& seq);
/// Loads every frame, resized to width x height with intrinsics rescaled.
/// Depth is resampled by nearest neighbour.
FrameSequence load_sequence_dir(const std::filesystem::path& dir, Index width, Index height);
Triplet load_triplet_dir(const std::filesystem::path& dir, Index index, Index width, Index height);

}  // namespace litemono

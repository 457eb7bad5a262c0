#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "litemono/data.hpp"
#include "litemono/decoder.hpp"
#include "litemono/encoder.hpp"
#include "litemono/losses.hpp"
#include "litemono/metrics.hpp"
#include "litemono/posenet.hpp"

namespace litemono {

enum class Precision { float32, float64 };
std::string to_string(Precision p);
Precision parse_precision(const std::string& name);

struct TrainConfig {
  Index batch_size = 12;
  Index epochs = 35;
  /// Positive values override the epoch count.
  Index steps = 0;
  double lr0 = 5e-4;
  double lr_min = 1e-6;
  double weight_decay = 1e-2;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  /// "cosine" (stepped per iteration) or "constant".
  std::string schedule = "cosine";
  Precision precision = Precision::float32;
  std::uint64_t seed = 0;
  bool deterministic = true;
  bool augment = true;
  /// Save a checkpoint every n steps (0: only the final one).
  Index checkpoint_every = 0;
  /// Initialise matching parameters from this checkpoint (fine-tuning path).
  std::string init_checkpoint;

  void validate() const;
};

/// DepthNet (encoder + decoder) and PoseNet parameters in one store.
template <typename S>
struct Model {
  EncoderConfig encoder;
  PoseNetConfig pose;
  ParameterStore<S> params;
};

template <typename S>
Model<S> make_model(const EncoderConfig& encoder, const PoseNetConfig& pose, std::uint64_t seed);

template <typename S>
DepthPyramid<S> predict_disparity(Model<S>& m, const Tensor<S>& image, bool training);

double cosine_lr(Index step, Index total_steps, double lr0, double lr_min);

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 1e-2;
};

template <typename S>
struct AdamWState {
  Index step = 0;
  std::vector<Tensor<S>> m, v;
};

/// One decoupled-weight-decay Adam update of every tensor in `params` from
/// its accumulated gradient (absent gradients count as zero):
///   p <- p (1 - lr wd) - lr mhat / (sqrt(vhat) + eps).
template <typename S>
void adamw_step(const std::vector<Tensor<S>>& params, AdamWState<S>& state, const AdamWOptions& o);

// ---------------------------------------------------------------------------
// Checkpoints: "LMCK", u32 version, u32 entry count, then per entry u32 name
// length, name bytes, u8 dtype, u32 rank, u64 dims, raw little-endian data.

enum class DType : std::uint8_t { f32 = 0, f64 = 1, u8 = 2, i64 = 3 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::uint64_t> dims;
  std::vector<unsigned char> bytes;
  bool operator==(const CheckpointEntry&) const = default;
};

class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::vector<CheckpointEntry> entries;

  template <typename S>
  void put(const std::string& name, const Tensor<S>& t);
  /// Converts from the stored dtype; throws std::out_of_range if absent.
  template <typename S>
  Tensor<S> get(const std::string& name, const Shape& expected) const;
  void put_text(const std::string& name, const std::string& text);
  std::string text(const std::string& name) const;
  void put_int(const std::string& name, std::int64_t v);
  std::int64_t integer(const std::string& name) const;

  bool contains(const std::string& name) const;
  const CheckpointEntry& entry(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parameters and buffers under their own names, optimizer moments under
/// "adam.m.<name>" / "adam.v.<name>", plus "meta.step", "meta.epoch" and the
/// config snapshot "meta.config".
template <typename S>
Checkpoint make_checkpoint(const Model<S>& m, const AdamWState<S>* opt, Index step, Index epoch,
                           const std::string& config_text);
/// Overwrites every model tensor (and the optimizer state when given) from
/// the checkpoint. Throws on missing names or shape mismatches.
template <typename S>
void restore(const Checkpoint& c, Model<S>& m, AdamWState<S>* opt);
template <typename S>
void restore(const Checkpoint& c, Model<S>& m) {
  restore<S>(c, m, nullptr);
}

// ---------------------------------------------------------------------------

struct CurveRow {
  Index step = 0;
  double lr = 0, total = 0;
  std::array<double, 3> scales{};
  /// Weighted smoothness contribution to the total.
  double smoothness = 0;
};

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows);

struct TrainSetup {
  TrainConfig train;
  EncoderConfig encoder;
  PoseNetConfig pose;
  LossConfig loss;
  AugmentOptions augment;
  /// Stored in every checkpoint.
  std::string config_text;
  /// When set: curves.csv, checkpoints/ and diagnostics/ go here.
  std::filesystem::path output_dir;
  std::function<void(const CurveRow&)> on_step;
};

struct TrainResult {
  Checkpoint initial;  // before the first update
  Checkpoint final;
  std::vector<CurveRow> curve;
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint DepthNet + PoseNet optimisation over the sequence's triplets.
/// Throws NonFiniteLoss (after writing diagnostics when output_dir is set).
TrainResult train(const TrainSetup& setup, const FrameSequence& data);

Index steps_per_epoch(Index triplets, Index batch_size);

/// Depth prediction from a checkpoint in the precision it was trained at.
class DepthModel {
 public:
  DepthModel(const Checkpoint& c, const EncoderConfig& encoder, const PoseNetConfig& pose, Precision precision);
  /// 1 x 3 x H x W in [0, 1] -> 1 x 1 x H x W depth from the finest scale.
  Tensord depth(const Tensord& image, double min_depth, double max_depth);
  Tensord disparity(const Tensord& image);

 private:
  std::variant<Model<float>, Model<double>> model_;
};

using DepthPredictor = std::function<Tensord(const Tensord& image, Index frame)>;

/// Median-scaled metrics over every frame having ground truth, averaged per
/// frame. Throws std::invalid_argument if the sequence has no depth.
DepthMetrics evaluate(const DepthPredictor& predict, const FrameSequence& data, const MetricsOptions& options = {},
                      std::vector<DepthMetrics>* per_frame = nullptr);

}  // namespace litemono

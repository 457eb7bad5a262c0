#include "litemono/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "litemono/params.hpp"

namespace litemono {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::string to_string(Precision p) { return p == Precision::float32 ? "float32" : "float64"; }

Precision parse_precision(const std::string& name) {
  if (name == "float32" || name == "f32" || name == "float") return Precision::float32;
  if (name == "float64" || name == "f64" || name == "double") return Precision::float64;
  throw std::invalid_argument("unknown precision '" + name + "' (expected float32 or float64)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be at least 1");
  if (steps < 0 || epochs < 0 || (steps == 0 && epochs == 0))
    throw std::invalid_argument("train: need a positive step or epoch count");
  // lr0 = 0 is accepted as a frozen dry run
  if (!(lr0 >= 0) || !std::isfinite(lr0)) throw std::invalid_argument("train: lr0 must be finite and >= 0");
  if (!(lr_min >= 0) || lr_min > lr0) throw std::invalid_argument("train: need 0 <= lr_min <= lr0");
  if (!(weight_decay >= 0)) throw std::invalid_argument("train: weight_decay must be non-negative");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("train: betas must lie in [0, 1)");
  if (!(adam_eps > 0)) throw std::invalid_argument("train: adam_eps must be positive");
  if (schedule != "cosine" && schedule != "constant")
    throw std::invalid_argument("train: schedule must be 'cosine' or 'constant'");
  if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be non-negative");
}

template <typename S>
Model<S> make_model(const EncoderConfig& encoder, const PoseNetConfig& pose, std::uint64_t seed) {
  encoder.validate();
  Model<S> m{encoder, pose, {}};
  ParamBuilder<S> b(m.params, seed);
  init_encoder(encoder, b);
  init_decoder(encoder, b);
  init_posenet(pose, b);
  return m;
}

template <typename S>
DepthPyramid<S> predict_disparity(Model<S>& m, const Tensor<S>& image, bool training) {
  return decoder_forward(encoder_forward(image, m.encoder, m.params, training), m.params);
}

double cosine_lr(Index step, Index total_steps, double lr0, double lr_min) {
  if (total_steps <= 0) return lr0;
  const double t = static_cast<double>(std::clamp<Index>(step, 0, total_steps)) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1 + std::cos(std::numbers::pi * t));
}

template <typename S>
void adamw_step(const std::vector<Tensor<S>>& params, AdamWState<S>& state, const AdamWOptions& o) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor<S>::zeros(p.shape()));
      state.v.push_back(Tensor<S>::zeros(p.shape()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adamw_step: optimizer state does not match the parameter list");
  ++state.step;
  const S b1 = static_cast<S>(o.beta1), b2 = static_cast<S>(o.beta2);
  const S bc1 = static_cast<S>(1 - std::pow(o.beta1, static_cast<double>(state.step)));
  const S bc2 = static_cast<S>(1 - std::pow(o.beta2, static_cast<double>(state.step)));
  const S lr = static_cast<S>(o.lr), eps = static_cast<S>(o.eps);
  const S decay = static_cast<S>(1 - o.lr * o.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<S> p = params[i];
    if (state.m[i].shape() != p.shape())
      throw ShapeError("adamw_step: moment shape " + shape_string(state.m[i].shape()) + " vs parameter " +
                       shape_string(p.shape()));
    S* w = p.ptr();
    S* m = state.m[i].ptr();
    S* v = state.v[i].ptr();
    const S* g = p.has_grad() ? p.grad().data() : nullptr;
    for (Index q = 0; q < p.numel(); ++q) {
      const S gq = g ? g[q] : S(0);
      m[q] = b1 * m[q] + (S(1) - b1) * gq;
      v[q] = b2 * v[q] + (S(1) - b2) * gq * gq;
      const S mhat = m[q] / bc1, vhat = v[q] / bc2;
      w[q] = w[q] * decay - lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

template <typename S>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<S, float>) return DType::f32;
  else return DType::f64;
}

std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
    case DType::i64: return 8;
  }
  throw std::runtime_error("checkpoint: unknown dtype tag " + std::to_string(static_cast<int>(t)));
}

std::uint64_t dims_numel(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("checkpoint: truncated " + what);
  return v;
}

}  // namespace

template <typename S>
void Checkpoint::put(const std::string& name, const Tensor<S>& t) {
  CheckpointEntry e;
  e.name = name;
  e.dtype = dtype_of<S>();
  for (Index d : t.shape()) e.dims.push_back(static_cast<std::uint64_t>(d));
  e.bytes.resize(static_cast<std::size_t>(t.numel()) * sizeof(S));
  if (t.numel() > 0) std::memcpy(e.bytes.data(), t.ptr(), e.bytes.size());
  for (auto& old : entries)
    if (old.name == name) {
      old = std::move(e);
      return;
    }
  entries.push_back(std::move(e));
}

template <typename S>
Tensor<S> Checkpoint::get(const std::string& name, const Shape& expected) const {
  const CheckpointEntry& e = entry(name);
  Shape shape;
  for (auto d : e.dims) shape.push_back(static_cast<Index>(d));
  if (shape != expected)
    throw ShapeError("checkpoint: '" + name + "' has shape " + shape_string(shape) + ", expected " +
                     shape_string(expected));
  Tensor<S> out(shape);
  const std::size_t n = static_cast<std::size_t>(out.numel());
  if (e.dtype == DType::f32) {
    std::vector<float> tmp(n);
    if (n) std::memcpy(tmp.data(), e.bytes.data(), n * sizeof(float));
    for (std::size_t q = 0; q < n; ++q) out.ptr()[q] = static_cast<S>(tmp[q]);
  } else if (e.dtype == DType::f64) {
    std::vector<double> tmp(n);
    if (n) std::memcpy(tmp.data(), e.bytes.data(), n * sizeof(double));
    for (std::size_t q = 0; q < n; ++q) out.ptr()[q] = static_cast<S>(tmp[q]);
  } else {
    throw std::runtime_error("checkpoint: '" + name + "' is not a floating-point tensor");
  }
  return out;
}

void Checkpoint::put_text(const std::string& name, const std::string& text) {
  CheckpointEntry e{name, DType::u8, {text.size()}, std::vector<unsigned char>(text.begin(), text.end())};
  for (auto& old : entries)
    if (old.name == name) {
      old = std::move(e);
      return;
    }
  entries.push_back(std::move(e));
}

std::string Checkpoint::text(const std::string& name) const {
  const CheckpointEntry& e = entry(name);
  if (e.dtype != DType::u8) throw std::runtime_error("checkpoint: '" + name + "' is not text");
  return std::string(e.bytes.begin(), e.bytes.end());
}

void Checkpoint::put_int(const std::string& name, std::int64_t v) {
  CheckpointEntry e{name, DType::i64, {1}, std::vector<unsigned char>(8)};
  std::memcpy(e.bytes.data(), &v, 8);
  for (auto& old : entries)
    if (old.name == name) {
      old = std::move(e);
      return;
    }
  entries.push_back(std::move(e));
}

std::int64_t Checkpoint::integer(const std::string& name) const {
  const CheckpointEntry& e = entry(name);
  if (e.dtype != DType::i64 || e.bytes.size() != 8) throw std::runtime_error("checkpoint: '" + name + "' is not an integer");
  std::int64_t v;
  std::memcpy(&v, e.bytes.data(), 8);
  return v;
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::entry(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw std::out_of_range("checkpoint: no entry named '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write("LMCK", 4);
  write_pod(out, c.version);
  write_pod(out, static_cast<std::uint32_t>(c.entries.size()));
  for (const auto& e : c.entries) {
    if (e.bytes.size() != dims_numel(e.dims) * dtype_size(e.dtype))
      throw std::invalid_argument("checkpoint: entry '" + e.name + "' has inconsistent size");
    write_pod(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod(out, static_cast<std::uint8_t>(e.dtype));
    write_pod(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) write_pod(out, d);
    out.write(reinterpret_cast<const char*>(e.bytes.data()), static_cast<std::streamsize>(e.bytes.size()));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "LMCK", 4) != 0)
    throw std::runtime_error(path.string() + " is not a checkpoint (bad magic)");
  Checkpoint c;
  c.version = read_pod<std::uint32_t>(in, "header");
  if (c.version != Checkpoint::kVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(c.version));
  const auto count = read_pod<std::uint32_t>(in, "header");
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = read_pod<std::uint32_t>(in, "entry name");
    e.name.resize(len);
    if (!in.read(e.name.data(), len)) throw std::runtime_error("checkpoint: truncated entry name");
    e.dtype = static_cast<DType>(read_pod<std::uint8_t>(in, "dtype"));
    const auto rank = read_pod<std::uint32_t>(in, "rank");
    for (std::uint32_t r = 0; r < rank; ++r) e.dims.push_back(read_pod<std::uint64_t>(in, "dims"));
    e.bytes.resize(dims_numel(e.dims) * dtype_size(e.dtype));
    if (!in.read(reinterpret_cast<char*>(e.bytes.data()), static_cast<std::streamsize>(e.bytes.size())))
      throw std::runtime_error("checkpoint: truncated data for '" + e.name + "'");
    c.entries.push_back(std::move(e));
  }
  return c;
}

template <typename S>
Checkpoint make_checkpoint(const Model<S>& m, const AdamWState<S>* opt, Index step, Index epoch,
                           const std::string& config_text) {
  Checkpoint c;
  for (const auto& n : m.params.names()) c.put(n, m.params.at(n));
  for (const auto& n : m.params.buffer_names()) c.put(n, m.params.at(n));
  if (opt && !opt->m.empty()) {
    const auto& names = m.params.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      c.put("adam.m." + names[i], opt->m[i]);
      c.put("adam.v." + names[i], opt->v[i]);
    }
    c.put_int("adam.step", opt->step);
  }
  c.put_int("meta.step", step);
  c.put_int("meta.epoch", epoch);
  c.put_text("meta.config", config_text);
  return c;
}

template <typename S>
void restore(const Checkpoint& c, Model<S>& m, AdamWState<S>* opt) {
  auto load_into = [&](const std::string& name, Tensor<S>& dst) {
    const Tensor<S> src = c.get<S>(name, dst.shape());
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
  };
  for (const auto& n : m.params.names()) load_into(n, m.params.at(n));
  for (const auto& n : m.params.buffer_names()) load_into(n, m.params.at(n));
  if (!opt) return;
  opt->m.clear();
  opt->v.clear();
  opt->step = 0;
  if (!c.contains("adam.step")) return;
  opt->step = c.integer("adam.step");
  for (const auto& n : m.params.names()) {
    const Shape& shape = m.params.at(n).shape();
    opt->m.push_back(c.get<S>("adam.m." + n, shape));
    opt->v.push_back(c.get<S>("adam.v." + n, shape));
  }
}

// ---------------------------------------------------------------------------

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,lr,total,scale0,scale1,scale2,smoothness\n";
  out.precision(9);
  for (const auto& r : rows)
    out << r.step << ',' << r.lr << ',' << r.total << ',' << r.scales[0] << ',' << r.scales[1] << ','
        << r.scales[2] << ',' << r.smoothness << '\n';
}

Index steps_per_epoch(Index triplets, Index batch_size) {
  return std::max<Index>(1, triplets / std::max<Index>(1, batch_size));
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename S>
Tensor<S> stack(const std::vector<Tensord>& items) {
  std::vector<Tensor<S>> parts;
  parts.reserve(items.size());
  for (const auto& t : items) parts.push_back(t.template cast<S>());
  return concat(parts, 0);
}

template <typename S>
bool all_finite(const Tensor<S>& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](S v) { return std::isfinite(v); });
}

template <typename S>
void dump_diagnostics(const std::filesystem::path& dir, Index step, double lr, const LossResult<S>& loss,
                      const Model<S>& m, const std::string& config_text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "nonfinite.txt");
  out.precision(9);
  out << "step " << step << "\nlr " << lr << "\ntotal " << loss.total.item() << '\n';
  for (std::size_t s = 0; s < loss.scales.size(); ++s) {
    const auto& d = loss.scales[s];
    out << "scale" << s << " total " << d.total.item() << " reconstruction " << d.reconstruction.item()
        << " smoothness " << d.smoothness.item() << " masked_pixels " << d.masked_pixels
        << " disp_finite " << all_finite(d.depth) << '\n';
  }
  for (const auto& n : m.params.names()) {
    const Tensor<S>& p = m.params.at(n);
    const bool grad_ok = !p.has_grad() || std::all_of(p.grad().begin(), p.grad().end(),
                                                      [](S v) { return std::isfinite(v); });
    if (!all_finite(p) || !grad_ok) out << "nonfinite " << n << (all_finite(p) ? " (grad)" : " (value)") << '\n';
  }
  save_checkpoint(dir / "state.lmck", make_checkpoint<S>(m, nullptr, step, 0, config_text));
}

// Copies every tensor whose name and shape match; the rest keep their init.
template <typename S>
Index load_matching(const Checkpoint& c, Model<S>& m) {
  Index loaded = 0;
  auto try_load = [&](const std::string& n) {
    if (!c.contains(n)) return;
    Tensor<S>& dst = m.params.at(n);
    Shape shape;
    for (auto d : c.entry(n).dims) shape.push_back(static_cast<Index>(d));
    if (shape != dst.shape()) return;
    const Tensor<S> src = c.get<S>(n, shape);
    std::copy(src.data().begin(), src.data().end(), dst.data().begin());
    ++loaded;
  };
  for (const auto& n : m.params.names()) try_load(n);
  for (const auto& n : m.params.buffer_names()) try_load(n);
  return loaded;
}

template <typename S>
TrainResult train_impl(const TrainSetup& setup, const FrameSequence& data) {
  const TrainConfig& tc = setup.train;
  const Index n_triplets = data.size() - 2;
  if (n_triplets < 1) throw std::invalid_argument("train: need at least 3 frames");
  const Index batch = std::min(tc.batch_size, n_triplets);
  const Index per_epoch = steps_per_epoch(n_triplets, batch);
  const Index total_steps = tc.steps > 0 ? tc.steps : tc.epochs * per_epoch;

  Model<S> model = make_model<S>(setup.encoder, setup.pose, tc.seed);
  if (!tc.init_checkpoint.empty()) {
    if (load_matching(load_checkpoint(tc.init_checkpoint), model) == 0)
      throw std::runtime_error("train: no tensors in " + tc.init_checkpoint + " match the model");
  }
  model.params.set_requires_grad(true);
  const std::vector<Tensor<S>> params = model.params.parameters();
  AdamWState<S> opt;

  TrainResult result;
  result.initial = make_checkpoint<S>(model, nullptr, 0, 0, setup.config_text);
  const bool write = !setup.output_dir.empty();
  if (write) std::filesystem::create_directories(setup.output_dir / "checkpoints");

  std::mt19937_64 rng(tc.seed);
  std::vector<Index> order(static_cast<std::size_t>(n_triplets));
  Index cursor = per_epoch;  // forces a shuffle before the first batch
  Index epoch = -1;
  for (Index step = 0; step < total_steps; ++step) {
    if (cursor == per_epoch) {
      for (Index i = 0; i < n_triplets; ++i) order[static_cast<std::size_t>(i)] = i + 1;
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
      ++epoch;
    }
    const std::uint64_t batch_seed = mix(tc.seed ^ mix(static_cast<std::uint64_t>(step)));
    AugmentOptions aug = setup.augment;
    aug.force_flip = (mix(batch_seed) >> 11) * 0x1.0p-53 < aug.flip_probability;

    std::array<std::vector<Tensord>, 3> in, clean;
    CameraIntrinsics k = data.intrinsics;
    for (Index b = 0; b < batch; ++b) {
      const Index idx = order[static_cast<std::size_t>(cursor * batch + b)];
      const Triplet t = make_triplet(data, idx);
      if (tc.augment) {
        const AugmentedTriplet a = augment(t, mix(batch_seed + static_cast<std::uint64_t>(b) + 1), aug);
        in[0].push_back(a.input.prev), in[1].push_back(a.input.target), in[2].push_back(a.input.next);
        clean[0].push_back(a.clean.prev), clean[1].push_back(a.clean.target), clean[2].push_back(a.clean.next);
        k = a.clean.intrinsics;
      } else {
        in[0].push_back(t.prev), in[1].push_back(t.target), in[2].push_back(t.next);
      }
    }
    if (!tc.augment) clean = in;
    ++cursor;

    const Tensor<S> x_prev = stack<S>(in[0]), x_tgt = stack<S>(in[1]), x_next = stack<S>(in[2]);
    const Tensor<S> c_prev = stack<S>(clean[0]), c_tgt = stack<S>(clean[1]), c_next = stack<S>(clean[2]);

    model.params.zero_grad();
    const DepthPyramid<S> disp = predict_disparity(model, x_tgt, true);
    const Tensor<S> t_prev = relative_transform(x_tgt, x_prev, -1, model.pose, model.params, true);
    const Tensor<S> t_next = relative_transform(x_tgt, x_next, +1, model.pose, model.params, true);
    const LossResult<S> loss = total_loss(disp, c_tgt, {c_prev, c_next}, {t_prev, t_next}, k, setup.loss);

    const double lr = tc.schedule == "cosine" ? cosine_lr(step, total_steps, tc.lr0, tc.lr_min) : tc.lr0;
    CurveRow row;
    row.step = step;
    row.lr = lr;
    row.total = static_cast<double>(loss.total.item());
    for (std::size_t s = 0; s < loss.scales.size(); ++s) {
      row.scales[s] = static_cast<double>(loss.scales[s].total.item());
      row.smoothness += static_cast<double>(loss.scales[s].smoothness.item()) * loss.scales[s].smooth_weight;
    }
    row.smoothness /= static_cast<double>(loss.scales.size());

    if (!std::isfinite(row.total)) {
      if (write) {
        dump_diagnostics(setup.output_dir / "diagnostics", step, lr, loss, model, setup.config_text);
        write_curve_csv(setup.output_dir / "curves.csv", result.curve);
      }
      throw NonFiniteLoss("train: non-finite loss at step " + std::to_string(step));
    }

    loss.total.backward();
    adamw_step(params, opt, {lr, tc.beta1, tc.beta2, tc.adam_eps, tc.weight_decay});
    result.curve.push_back(row);
    if (setup.on_step) setup.on_step(row);

    if (write && tc.checkpoint_every > 0 && (step + 1) % tc.checkpoint_every == 0 && step + 1 < total_steps) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%06lld.lmck", static_cast<long long>(step + 1));
      save_checkpoint(setup.output_dir / "checkpoints" / name,
                      make_checkpoint(model, &opt, step + 1, epoch, setup.config_text));
      write_curve_csv(setup.output_dir / "curves.csv", result.curve);
    }
  }

  result.final = make_checkpoint(model, &opt, total_steps, epoch + 1, setup.config_text);
  if (write) {
    save_checkpoint(setup.output_dir / "checkpoints" / "final.lmck", result.final);
    write_curve_csv(setup.output_dir / "curves.csv", result.curve);
  }
  return result;
}

}  // namespace

TrainResult train(const TrainSetup& setup, const FrameSequence& data) {
  setup.train.validate();
  setup.encoder.validate();
  setup.loss.validate();
  if (data.size() > 0) check_input_size(data.frames[0].dim(2), data.frames[0].dim(3));
  return setup.train.precision == Precision::float32 ? train_impl<float>(setup, data)
                                                     : train_impl<double>(setup, data);
}

// ---------------------------------------------------------------------------

DepthModel::DepthModel(const Checkpoint& c, const EncoderConfig& encoder, const PoseNetConfig& pose,
                       Precision precision) {
  if (precision == Precision::float32) {
    Model<float> m = make_model<float>(encoder, pose, 0);
    restore<float>(c, m, nullptr);
    model_ = std::move(m);
  } else {
    Model<double> m = make_model<double>(encoder, pose, 0);
    restore<double>(c, m, nullptr);
    model_ = std::move(m);
  }
}

Tensord DepthModel::disparity(const Tensord& image) {
  NoGradGuard guard;
  return std::visit(
      [&]<typename S>(Model<S>& m) {
        const DepthPyramid<S> d = predict_disparity(m, image.cast<S>(), false);
        return d.disp[0].template cast<double>();
      },
      model_);
}

Tensord DepthModel::depth(const Tensord& image, double min_depth, double max_depth) {
  return disp_to_depth(disparity(image), min_depth, max_depth);
}

DepthMetrics evaluate(const DepthPredictor& predict, const FrameSequence& data, const MetricsOptions& options,
                      std::vector<DepthMetrics>* per_frame) {
  if (data.depth.empty()) throw std::invalid_argument("evaluate: the dataset has no ground-truth depth");
  if (data.depth.size() != data.frames.size())
    throw std::invalid_argument("evaluate: depth and frame counts differ");
  std::vector<DepthMetrics> items;
  for (Index i = 0; i < data.size(); ++i) {
    const Tensord pred = predict(data.frames[static_cast<std::size_t>(i)], i);
    items.push_back(depth_metrics(pred, data.depth[static_cast<std::size_t>(i)], options));
  }
  if (per_frame) *per_frame = items;
  return average(items);
}

#define LITEMONO_INSTANTIATE_TRAINER(S)                                                              \
  template Model<S> make_model<S>(const EncoderConfig&, const PoseNetConfig&, std::uint64_t);       \
  template DepthPyramid<S> predict_disparity(Model<S>&, const Tensor<S>&, bool);                   \
  template void adamw_step(const std::vector<Tensor<S>>&, AdamWState<S>&, const AdamWOptions&);    \
  template void Checkpoint::put(const std::string&, const Tensor<S>&);                             \
  template Tensor<S> Checkpoint::get(const std::string&, const Shape&) const;                     \
  template Checkpoint make_checkpoint(const Model<S>&, const AdamWState<S>*, Index, Index,         \
                                      const std::string&);                                         \
  template void restore(const Checkpoint&, Model<S>&, AdamWState<S>*);

LITEMONO_INSTANTIATE_TRAINER(float)
LITEMONO_INSTANTIATE_TRAINER(double)

}  // namespace litemono

// litemono: synthetic data, training, inference, evaluation and budgets.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "litemono/config.hpp"
#include "litemono/decoder.hpp"
#include "litemono/encoder.hpp"
#include "litemono/gradcheck_suite.hpp"
#include "litemono/image_io.hpp"
#include "litemono/metrics.hpp"
#include "litemono/ops.hpp"
#include "litemono/trainer.hpp"

namespace fs = std::filesystem;
using namespace litemono;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  CLI::Option* deterministic_flag = nullptr;
  bool deterministic = true;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "override one key, KEY=VALUE (repeatable)")->type_name("KEY=VALUE");
  app->add_option("--seed", c.seed, "seed for model init, shuffling, augmentation and generated data");
  c.deterministic_flag = app->add_flag("--deterministic,!--no-deterministic", c.deterministic,
                                       "reuse the fixed seeds (default); off mixes them with the clock");
}

std::uint64_t clock_mix(std::uint64_t seed) {
  std::uint64_t z = seed ^ static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count());
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Layers: `base` (e.g. a checkpoint's snapshot), `preset`, the config file,
/// --set overrides, then --seed / --deterministic.
RunConfig resolve(const Common& c, const Assignments& base = {}, const Assignments& preset = {}) {
  Assignments a = base;
  a.insert(a.end(), preset.begin(), preset.end());
  if (!c.config_file.empty()) {
    const Assignments f = read_config_file(c.config_file);
    a.insert(a.end(), f.begin(), f.end());
  }
  for (const auto& s : c.sets) a.push_back(parse_override(s));
  if (c.seed) {
    a.emplace_back("train.seed", std::to_string(*c.seed));
    a.emplace_back("data.seed", std::to_string(*c.seed));
  }
  if (c.deterministic_flag && c.deterministic_flag->count())
    a.emplace_back("train.deterministic", c.deterministic ? "true" : "false");
  RunConfig cfg = build_config(a);
  if (!cfg.train.deterministic) {
    cfg.train.seed = clock_mix(cfg.train.seed);
    cfg.data.seed = clock_mix(cfg.data.seed + 1);
    std::cerr << "non-deterministic run: train.seed=" << cfg.train.seed << " data.seed=" << cfg.data.seed << '\n';
  }
  cfg.validate();
  return cfg;
}

void prepare_output(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.txt") << to_text(cfg);
}

FrameSequence load_data(const RunConfig& cfg) {
  if (!cfg.data.dir.empty()) return load_sequence_dir(cfg.data.dir, cfg.data.width, cfg.data.height);
  return generate_synthetic_sequence(cfg.data.seed, cfg.data.frames, cfg.data.width, cfg.data.height, cfg.data.scene);
}

TrainSetup make_setup(const RunConfig& cfg, const fs::path& out) {
  TrainSetup s;
  s.train = cfg.train;
  s.encoder = cfg.encoder;
  s.pose = cfg.pose;
  s.loss = cfg.loss;
  s.augment = cfg.augment;
  s.config_text = to_text(cfg);
  s.output_dir = out;
  return s;
}

Checkpoint read_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

Assignments checkpoint_assignments(const Checkpoint& c) {
  return c.contains("meta.config") ? parse_assignments(c.text("meta.config")) : Assignments{};
}

DepthPredictor predictor(DepthModel& model, const RunConfig& cfg) {
  return [&model, &cfg](const Tensord& image, Index) { return model.depth(image, cfg.loss.min_depth, cfg.loss.max_depth); };
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string millions(Index n) { return fmt("%.3fM", static_cast<double>(n) / 1e6); }
std::string giga(Index n) { return fmt("%.2fG", static_cast<double>(n) / 1e9); }

// ---------------------------------------------------------------------------

int cmd_synth(const Common& c, const fs::path& out) {
  const RunConfig cfg = resolve(c);
  const FrameSequence seq =
      generate_synthetic_sequence(cfg.data.seed, cfg.data.frames, cfg.data.width, cfg.data.height, cfg.data.scene);
  write_sequence_dir(out, seq);
  prepare_output(out, cfg);
  fs::create_directories(out / "preview");
  for (Index i = 0; i < seq.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06ld.png", static_cast<long>(i));
    const auto k = static_cast<std::size_t>(i);
    write_png(out / "preview" / name, side_by_side(seq.frames[k], colorize(reciprocal(seq.depth[k]))));
  }
  std::cout << "wrote " << seq.size() << " frames " << cfg.data.width << "x" << cfg.data.height << " to "
            << out.string() << '\n';
  return 0;
}

void write_prediction(const fs::path& dir, const std::string& stem, const Tensord& image, const Tensord& depth) {
  fs::create_directories(dir);
  // 16-bit PNG in 1/256 m steps, as in common depth benchmarks
  write_png(dir / (stem + ".png"), clamp(depth * (256.0 / 65535.0), 0.0, 1.0), 16);
  write_depth_f32(dir / (stem + ".f32"), depth);
  write_png(dir / (stem + "_vis.png"), side_by_side(image, colorize(reciprocal(depth))));
}

int cmd_train(const Common& c, const fs::path& out, Index log_every) {
  const RunConfig cfg = resolve(c);
  const FrameSequence data = load_data(cfg);
  prepare_output(out, cfg);
  TrainSetup setup = make_setup(cfg, out);
  setup.on_step = [log_every](const CurveRow& r) {
    if (log_every > 0 && r.step % log_every == 0)
      std::cout << "step " << r.step << "  lr " << fmt("%.3e", r.lr) << "  loss " << fmt("%.5f", r.total) << '\n'
                << std::flush;
  };
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult result = train(setup, data);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(out / "diagnostics");
  {
    std::ofstream d(out / "diagnostics" / "summary.txt");
    d << "steps=" << result.curve.size() << "\nseconds=" << seconds << "\ntrain.seed=" << cfg.train.seed
      << "\ndata.seed=" << cfg.data.seed << '\n';
    if (!result.curve.empty())
      d << "first_loss=" << result.curve.front().total << "\nlast_loss=" << result.curve.back().total << '\n';
  }
  std::cout << "trained " << result.curve.size() << " steps; checkpoint " << (out / "checkpoints/final.lmck").string()
            << '\n';
  if (data.depth.empty()) return 0;

  DepthModel before(result.initial, cfg.encoder, cfg.pose, cfg.train.precision);
  DepthModel after(result.final, cfg.encoder, cfg.pose, cfg.train.precision);
  const DepthMetrics m0 = evaluate(predictor(before, cfg), data);
  const DepthMetrics m1 = evaluate(predictor(after, cfg), data);
  std::cout << "initial\n" << metrics_table(m0) << "trained\n" << metrics_table(m1);
  std::ofstream(out / "metrics.txt") << metrics_key_values(m1);
  const Index mid = data.size() / 2;
  const Tensord& frame = data.frames[static_cast<std::size_t>(mid)];
  write_prediction(out / "depth", "train_frame", frame, after.depth(frame, cfg.loss.min_depth, cfg.loss.max_depth));
  return 0;
}

int cmd_infer(const Common& c, const std::string& ckpt_path, const std::vector<std::string>& images,
              const fs::path& out, double cap) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const RunConfig cfg = resolve(c, checkpoint_assignments(ckpt));
  DepthModel model(ckpt, cfg.encoder, cfg.pose, cfg.train.precision);
  prepare_output(out, cfg);
  for (const std::string& path : images) {
    if (!fs::exists(path)) throw UsageError("image not found: " + path);
    Tensord image = read_png(path);
    {
      NoGradGuard guard;
      if (image.dim(2) != cfg.data.height || image.dim(3) != cfg.data.width)
        image = resize_bilinear(image, cfg.data.height, cfg.data.width);
    }
    const double hi = std::min(cap, cfg.loss.max_depth);
    const Tensord depth = clamp(model.depth(image, cfg.loss.min_depth, cfg.loss.max_depth), cfg.loss.min_depth, hi);
    const std::string stem = fs::path(path).stem().string();
    write_prediction(out / "depth", stem, image, depth);
    double lo = depth.data()[0], top = lo;
    for (double v : depth.data()) lo = std::min(lo, v), top = std::max(top, v);
    std::cout << path << " -> " << (out / "depth" / (stem + ".png")).string() << "  depth range [" << fmt("%.3f", lo)
              << ", " << fmt("%.3f", top) << "]\n";
  }
  return 0;
}

int cmd_eval(const Common& c, const std::string& ckpt_path, bool per_frame, bool median_scale,
             const std::string& out) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const RunConfig cfg = resolve(c, checkpoint_assignments(ckpt));
  const FrameSequence data = load_data(cfg);
  DepthModel model(ckpt, cfg.encoder, cfg.pose, cfg.train.precision);
  MetricsOptions opt;
  opt.median_scale = median_scale;
  std::vector<DepthMetrics> frames;
  const DepthMetrics m = evaluate(predictor(model, cfg), data, opt, &frames);
  if (per_frame)
    for (std::size_t i = 0; i < frames.size(); ++i) std::cout << "frame " << i << '\n' << metrics_table(frames[i]);
  std::cout << metrics_table(m);
  if (!out.empty()) {
    prepare_output(out, cfg);
    std::ofstream(fs::path(out) / "metrics.txt") << metrics_key_values(m);
  }
  return 0;
}

// Reference budgets for the stock variants at 640 x 192.
struct Budget {
  double encoder, depthnet;
};
Budget budget(Variant v) {
  switch (v) {
    case Variant::tiny: return {2.0e6, 2.2e6};
    case Variant::small: return {2.3e6, 2.5e6};
    case Variant::base: return {2.9e6, 3.1e6};
  }
  return {};
}

bool is_stock(const EncoderConfig& e) {
  RunConfig a, b;
  a.encoder = e;
  b.encoder = EncoderConfig::make(e.variant);
  for (const ConfigKey& k : config_keys())
    if (k.name.rfind("encoder.", 0) == 0 && k.get(a) != k.get(b)) return false;
  return true;
}

std::string band(double value, double target, double rel) {
  const bool ok = std::abs(value - target) <= rel * target;
  return fmt("target %.2f", target / 1e6) + "M +-" + fmt("%.0f", rel * 100) + "% " + (ok ? "ok" : "OUT OF RANGE");
}

double time_forward(const RunConfig& cfg, Index w, Index h, int runs) {
  Model<float> m = make_model<float>(cfg.encoder, cfg.pose, cfg.train.seed);
  const Tensorf image({1, 3, h, w}, 0.5f);
  NoGradGuard guard;
  predict_disparity(m, image, false);  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < runs; ++i) predict_disparity(m, image, false);
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / runs;
}

int cmd_bench(const Common& c, const std::string& variant, Index w, Index h, int runs) {
  std::vector<std::string> names;
  if (variant == "all")
    names = {"tiny", "small", "base"};
  else
    names = {variant};
  std::printf("FLOPs = 2 x MACs; input %ldx%ld\n", static_cast<long>(w), static_cast<long>(h));
  struct Row {
    std::string name;
    Index enc, dec, macs, dec_macs;
    double ms;
  };
  std::vector<Row> rows;
  for (const std::string& n : names) {
    const RunConfig cfg = resolve(c, {}, {{"encoder.variant", n}});
    const Index enc = count_params(cfg.encoder), dec = count_decoder_params(cfg.encoder);
    const Index macs = count_macs(cfg.encoder, h, w);
    const Index dmacs = count_decoder_macs(cfg.encoder, h, w);
    std::cout << "variant " << n << '\n';
    const bool stock = is_stock(cfg.encoder) && w == 640 && h == 192;
    const Budget b = budget(cfg.encoder.variant);
    std::cout << "  encoder params  " << millions(enc) << (stock ? "   " + band(enc, b.encoder, 0.10) : "") << '\n';
    std::cout << "  decoder params  " << millions(dec)
              << (stock ? std::string("   target 0.15M..0.25M ") + (dec >= 150000 && dec <= 250000 ? "ok" : "OUT OF RANGE")
                        : "")
              << '\n';
    std::cout << "  depthnet params " << millions(enc + dec) << (stock ? "   " + band(enc + dec, b.depthnet, 0.10) : "")
              << '\n';
    std::cout << "  encoder MACs    " << giga(macs) << '\n';
    std::cout << "  encoder FLOPs   " << giga(2 * macs);
    if (stock && cfg.encoder.variant == Variant::base) {
      const double f = 2.0 * static_cast<double>(macs);
      std::cout << "   target 4.40G +-15% " << (std::abs(f - 4.4e9) <= 0.15 * 4.4e9 ? "ok" : "OUT OF RANGE");
    }
    std::cout << '\n' << "  decoder FLOPs   " << giga(2 * dmacs) << '\n';
    rows.push_back({n, enc, dec, macs, dmacs, runs > 0 ? time_forward(cfg, w, h, runs) : -1});
  }
  std::printf("\n%-8s %12s %12s %14s %14s %12s\n", "variant", "encoder", "depthnet", "enc FLOPs", "depthnet FLOPs",
              "forward ms");
  for (const Row& r : rows)
    std::printf("%-8s %12s %12s %14s %14s %12s\n", r.name.c_str(), millions(r.enc).c_str(),
                millions(r.enc + r.dec).c_str(), giga(2 * r.macs).c_str(), giga(2 * (r.macs + r.dec_macs)).c_str(),
                r.ms < 0 ? "-" : fmt("%.1f", r.ms).c_str());
  return 0;
}

int cmd_gradcheck(const Common& c, bool quiet) {
  const RunConfig cfg = resolve(c);
  int failed = 0;
  const auto cases = run_gradcheck_suite(cfg.train.seed, [&](const GradCheckCase& k) {
    failed += !k.passed();
    if (!quiet || !k.passed())
      std::printf("%s  %-44s %.3e  (< %.0e)\n", k.passed() ? "PASS" : "FAIL", k.name.c_str(), k.error, k.tolerance);
    std::fflush(stdout);
  });
  std::printf("%zu checks, %d failed\n", cases.size(), failed);
  return failed ? kExitRuntime : 0;
}

struct AblationRow {
  std::string name;
  std::function<void(EncoderConfig&)> apply;
};

std::vector<AblationRow> ablation_rows() {
  auto last_stage = [](EncoderConfig& e) -> std::vector<Index>& { return e.dilations[2]; };
  return {
      {"full model", [](EncoderConfig&) {}},
      {"w/o LGFI blocks", [](EncoderConfig& e) { e.use_lgfi = false; }},
      {"w/o dilated convolutions", [](EncoderConfig& e) { e.use_dilation = false; }},
      {"w/o pooled concatenations", [](EncoderConfig& e) { e.use_pooled_concat = false; }},
      {"w/o cross-stage connections", [](EncoderConfig& e) { e.use_cross_stage = false; }},
      // dilation settings; the default (1,2,3 groups, last three 2,4,6) is the full model
      {"dilation: last three 1,2,3",
       [=](EncoderConfig& e) {
         auto& d = last_stage(e);
         if (d.size() >= 3) std::copy_n(std::vector<Index>{1, 2, 3}.begin(), 3, d.end() - 3);
       }},
      {"dilation: groups 1,2,5",
       [=](EncoderConfig& e) {
         for (int s = 0; s < 3; ++s) {
           auto& d = e.dilations[s];
           const std::size_t keep = s == 2 ? 3 : 0;  // the final 2,4,6 group stays
           for (std::size_t i = 2; i + keep < d.size(); i += 3) d[i] = 5;
         }
       }},
      {"dilation: last two groups 2,4,6 / 4,8,12",
       [=](EncoderConfig& e) {
         auto& d = last_stage(e);
         if (d.size() >= 6) std::copy_n(std::vector<Index>{2, 4, 6, 4, 8, 12}.begin(), 6, d.end() - 6);
       }},
  };
}

int cmd_ablate(const Common& c, const std::string& out, const std::string& only) {
  // toy task unless overridden
  const Assignments preset{{"encoder.variant", "tiny"}, {"data.width", "64"},      {"data.height", "32"},
                           {"data.frames", "16"},        {"train.steps", "200"},   {"train.batch_size", "4"}};
  const RunConfig base = resolve(c, {}, preset);
  const FrameSequence data = load_data(base);
  if (!out.empty()) prepare_output(out, base);
  std::ostringstream csv;
  csv << "config,params,flops_640x192,final_loss,abs_rel_init,abs_rel,delta1\n";
  std::printf("%-42s %9s %10s %10s %10s %10s %8s\n", "architecture", "params", "FLOPs", "loss", "AbsRel@0",
              "AbsRel", "d1");
  for (const AblationRow& row : ablation_rows()) {
    if (!only.empty() && row.name.find(only) == std::string::npos) continue;
    RunConfig cfg = base;
    row.apply(cfg.encoder);
    cfg.encoder.validate();
    fs::path dir;
    if (!out.empty()) {
      std::string slug;
      for (char ch : row.name) slug += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
      dir = fs::path(out) / slug;
      prepare_output(dir, cfg);
    }
    const TrainResult r = train(make_setup(cfg, dir), data);
    double tail = 0;
    const std::size_t n = std::min<std::size_t>(10, r.curve.size());
    for (std::size_t i = r.curve.size() - n; i < r.curve.size(); ++i) tail += r.curve[i].total / static_cast<double>(n);
    DepthModel before(r.initial, cfg.encoder, cfg.pose, cfg.train.precision);
    DepthModel after(r.final, cfg.encoder, cfg.pose, cfg.train.precision);
    const DepthMetrics m0 = evaluate(predictor(before, cfg), data), m1 = evaluate(predictor(after, cfg), data);
    const Index params = count_params(cfg.encoder) + count_decoder_params(cfg.encoder);
    const Index flops = 2 * (count_macs(cfg.encoder, 192, 640) + count_decoder_macs(cfg.encoder, 192, 640));
    std::printf("%-42s %9s %10s %10.5f %10.4f %10.4f %8.4f\n", row.name.c_str(), millions(params).c_str(),
                giga(flops).c_str(), tail, m0.abs_rel, m1.abs_rel, m1.delta1);
    std::fflush(stdout);
    csv << '"' << row.name << "\"," << params << ',' << flops << ',' << tail << ',' << m0.abs_rel << ','
        << m1.abs_rel << ',' << m1.delta1 << '\n';
  }
  if (!out.empty()) std::ofstream(fs::path(out) / "ablation.csv") << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight self-supervised monocular depth: train, infer, evaluate, benchmark"};
  app.require_subcommand(1);
  app.footer("Config keys (--set KEY=VALUE or lines of a --config file):\n" + describe_keys());
  std::array<Common, 7> commons;
  std::size_t next_common = 0;
  std::function<int()> run;

  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence directory with ground truth");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output sequence directory")->required();
  Common& synth_c = commons.at(next_common++);
  add_common(synth, synth_c);
  synth->callback([&] { run = [&] { return cmd_synth(synth_c, synth_out); }; });

  auto* tr = app.add_subcommand("train", "train DepthNet and PoseNet jointly");
  std::string train_out;
  Index log_every = 10;
  tr->add_option("--out", train_out, "run directory")->required();
  tr->add_option("--log-every", log_every, "print every n steps (0: quiet)")->capture_default_str();
  Common& tr_c = commons.at(next_common++);
  add_common(tr, tr_c);
  tr->callback([&] { run = [&] { return cmd_train(tr_c, train_out, log_every); }; });

  auto* inf = app.add_subcommand("infer", "predict depth for images");
  std::string inf_ckpt, inf_out;
  std::vector<std::string> inf_images;
  double cap = 80;
  inf->add_option("--checkpoint", inf_ckpt, "checkpoint (.lmck)")->required();
  inf->add_option("--image", inf_images, "input PNG (repeatable)")->required();
  inf->add_option("--out", inf_out, "output directory; predictions go to depth/")->required();
  inf->add_option("--cap", cap, "upper depth clamp of the written maps")->capture_default_str();
  Common& inf_c = commons.at(next_common++);
  add_common(inf, inf_c);
  inf->callback([&] { run = [&] { return cmd_infer(inf_c, inf_ckpt, inf_images, inf_out, cap); }; });

  auto* ev = app.add_subcommand("eval", "metrics of a checkpoint on a sequence with ground-truth depth");
  std::string ev_ckpt, ev_out;
  bool per_frame = false, median = true;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint (.lmck)")->required();
  ev->add_flag("--per-frame", per_frame, "also print every frame");
  ev->add_flag("--median-scale,!--no-median-scale", median, "median scaling (default on)");
  ev->add_option("--out", ev_out, "write config.txt and metrics.txt here");
  Common& ev_c = commons.at(next_common++);
  add_common(ev, ev_c);
  ev->callback([&] { run = [&] { return cmd_eval(ev_c, ev_ckpt, per_frame, median, ev_out); }; });

  auto* bench = app.add_subcommand("bench", "parameter and FLOP counts per variant");
  std::string variant = "all";
  Index bw = 640, bh = 192;
  int runs = 0;
  bench->add_option("--variant", variant, "tiny | small | base | all")
      ->check(CLI::IsMember({"tiny", "small", "base", "all"}))
      ->capture_default_str();
  bench->add_option("--width", bw, "input width")->capture_default_str();
  bench->add_option("--height", bh, "input height")->capture_default_str();
  bench->add_option("--time-runs", runs, "also time this many float32 forward passes")->capture_default_str();
  Common& bench_c = commons.at(next_common++);
  add_common(bench, bench_c);
  bench->callback([&] { run = [&] { return cmd_bench(bench_c, variant, bw, bh, runs); }; });

  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks of every differentiable op and block");
  bool quiet = false;
  gc->add_flag("--quiet", quiet, "print failures only");
  Common& gc_c = commons.at(next_common++);
  add_common(gc, gc_c);
  gc->callback([&] { run = [&] { return cmd_gradcheck(gc_c, quiet); }; });

  auto* ab = app.add_subcommand("ablate", "architecture and dilation grid on the toy task");
  std::string ab_out, only;
  ab->add_option("--out", ab_out, "write per-row runs and ablation.csv here");
  ab->add_option("--only", only, "run rows whose name contains this text");
  Common& ab_c = commons.at(next_common++);
  add_common(ab, ab_c);
  ab->callback([&] { run = [&] { return cmd_ablate(ab_c, ab_out, only); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  try {
    return run();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

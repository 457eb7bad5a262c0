// Acceptance checks. Usage: acceptance [criterion ...]; no argument runs all.
// Prints one PASS/FAIL line per criterion (plus indented detail lines) and
// exits non-zero if any selected criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "litemono/attention.hpp"
#include "litemono/decoder.hpp"
#include "litemono/encoder.hpp"
#include "litemono/geometry.hpp"
#include "litemono/gradcheck_suite.hpp"
#include "litemono/losses.hpp"
#include "litemono/metrics.hpp"
#include "litemono/posenet.hpp"
#include "litemono/trainer.hpp"
#include "scenarios.hpp"

#include <unistd.h>

using namespace litemono;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double max_abs_diff(const Tensord& a, const Tensord& b) {
  double m = 0;
  for (Index q = 0; q < a.numel(); ++q) m = std::max(m, std::abs(a.ptr()[q] - b.ptr()[q]));
  return m;
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * target; }

// ---------------------------------------------------------------------------

Outcome c1_params() {
  Outcome o{true, "", {}};
  const std::map<Variant, std::pair<double, double>> want{
      {Variant::tiny, {2.0e6, 2.2e6}}, {Variant::small, {2.3e6, 2.5e6}}, {Variant::base, {2.9e6, 3.1e6}}};
  std::string s;
  for (const auto& [v, target] : want) {
    const EncoderConfig e = EncoderConfig::make(v);
    const Index enc = count_params(e), dec = count_decoder_params(e);
    const bool ok = within(enc, target.first, 0.10) && dec >= 150000 && dec <= 250000 &&
                    within(enc + dec, target.second, 0.10);
    o.pass = o.pass && ok;
    o.details.push_back(fmt("%-5s encoder %.3fM (%.1fM +-10%%), decoder %.3fM ([0.15M, 0.25M]), DepthNet %.3fM "
                            "(%.1fM +-10%%) %s",
                            to_string(v).c_str(), enc / 1e6, target.first / 1e6, dec / 1e6, (enc + dec) / 1e6,
                            target.second / 1e6, ok ? "ok" : "out of range"));
    s += fmt("%s %.2fM/%.2fM ", to_string(v).c_str(), enc / 1e6, (enc + dec) / 1e6);
  }
  o.summary = "parameter budgets: " + s;
  return o;
}

Outcome c2_flops() {
  const EncoderConfig e = EncoderConfig::make(Variant::base);
  const Index macs = count_macs(e, 192, 640);
  const double flops = 2.0 * static_cast<double>(macs);
  Outcome o{within(flops, 4.4e9, 0.15), fmt("FLOP budget: base encoder %.2fG FLOPs (2 x %.2fG MACs) at 640x192, "
                                            "target 4.4G +-15%%",
                                            flops / 1e9, macs / 1e9),
            {}};
  o.details.push_back(fmt("MAC count alone: %.2fG, %.1f%% from 4.4G", macs / 1e9, 100 * (macs / 4.4e9 - 1)));
  o.details.push_back(fmt("decoder adds %.2fG MACs", count_decoder_macs(e, 192, 640) / 1e9));
  return o;
}

Outcome c3_lgfi() {
  EncoderConfig e = EncoderConfig::make(Variant::base);
  const Index with = count_params(e);
  e.use_lgfi = false;
  const Index without = count_params(e);
  const double d = static_cast<double>(with - without);
  return {d >= 0.3e6 && d <= 0.5e6,
          fmt("LGFI ablation budget: %.3fM - %.3fM = %.3fM, band [0.3M, 0.5M]", with / 1e6, without / 1e6, d / 1e6),
          {}};
}

Outcome c4_gradcheck() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{true, "", {}};
  double worst_op = 0, worst_e2e = 0;
  const auto cases = run_gradcheck_suite(0);
  for (const auto& c : cases) {
    o.pass = o.pass && c.passed();
    (c.end_to_end ? worst_e2e : worst_op) = std::max(c.end_to_end ? worst_e2e : worst_op, c.error);
    if (!c.passed()) o.details.push_back(fmt("failed: %s error %.3e", c.name.c_str(), c.error));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.summary = fmt("gradient suite: %zu checks, worst op/block %.2e (< 1e-4), worst end-to-end %.2e (< 1e-3), %.1fs",
                  cases.size(), worst_op, worst_e2e, secs);
  return o;
}

Outcome c5_attention() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const Index d = 64, heads = 4;
  Outcome o{true, "", {}};
  std::vector<Index> xca, spatial;
  for (Index n : {64, 256, 1024}) {
    Tensord x({1, d, n});
    for (double& v : x.data()) v = u(rng);
    {
      AttentionProbe p;
      xca_attention(x, x, x, heads, Tensord({heads}, 1.0));
      xca.push_back(p.peak_elements());
    }
    {
      AttentionProbe p;
      spatial_attention(x, x, x, heads);
      spatial.push_back(p.peak_elements());
    }
    o.details.push_back(fmt("N=%4ld  channel attention %ld elements, spatial %ld", static_cast<long>(n),
                            static_cast<long>(xca.back()), static_cast<long>(spatial.back())));
    o.pass = o.pass && xca.back() == heads * (d / heads) * (d / heads) && spatial.back() == heads * n * n;
  }
  o.pass = o.pass && xca[0] == xca[1] && xca[1] == xca[2] && spatial[1] == 16 * spatial[0] &&
           spatial[2] == 16 * spatial[1];
  o.summary = fmt("attention complexity: channel buffer %ld = h(d/h)^2 at every N; spatial x%ld, x%ld per 4x tokens",
                  static_cast<long>(xca[0]), static_cast<long>(spatial[1] / spatial[0]),
                  static_cast<long>(spatial[2] / spatial[1]));
  return o;
}

Outcome c6_geometry() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  const Index h = 48, w = 64;
  const CameraIntrinsics k{0.8 * w, 0.9 * h, 0.5 * w + 1.3, 0.5 * h - 0.7, w, h};
  Tensord src({2, 3, h, w}), depth({2, 1, h, w});
  for (double& v : src.data()) v = u(rng);
  for (double& v : depth.data()) v = 1 + 40 * u(rng);
  Tensord identity({2, 4, 4}, 0.0);
  for (Index n = 0; n < 2; ++n)
    for (Index i = 0; i < 4; ++i) identity.at({n, i, i}) = 1;
  const double warp = max_abs_diff(synthesize(src, depth, identity, k).image, src);

  const Projection<double> pr = project(backproject(depth, k), k, identity);
  double trip = 0;
  for (Index n = 0; n < 2; ++n)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        trip = std::max(trip, std::abs(pr.coords.at({n, i, j, 0}) - static_cast<double>(j)));
        trip = std::max(trip, std::abs(pr.coords.at({n, i, j, 1}) - static_cast<double>(i)));
      }

  std::normal_distribution<double> g(0, 1);
  Tensord poses({1000, 6});
  for (Index p = 0; p < 1000; ++p) {
    // angles from 0 to ~3 rad, including tiny ones
    const double scale = p % 10 == 0 ? 1e-9 : 1.2;
    for (Index a = 0; a < 3; ++a) poses.at({p, a}) = scale * g(rng);
    for (Index a = 3; a < 6; ++a) poses.at({p, a}) = g(rng);
  }
  double ortho = 0, det = 0;
  for (bool invert : {false, true}) {
    const Tensord m = pose_to_matrix(poses, invert);
    for (Index p = 0; p < 1000; ++p) {
      Eigen::Matrix3d r;
      for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) r(i, j) = m.at({p, i, j});
      ortho = std::max(ortho, (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
      det = std::max(det, std::abs(r.determinant() - 1));
    }
  }
  return {warp <= 1e-6 && trip <= 1e-9 && ortho <= 1e-6 && det <= 1e-6,
          fmt("geometry identities: identity warp %.1e (<= 1e-6), backproject/project %.1e (<= 1e-9), "
              "rotation |RtR - I| %.1e, |det - 1| %.1e over 1000 poses x 2 directions (<= 1e-6)",
              warp, trip, ortho, det),
          {}};
}

Outcome c7_losses() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  auto rnd = [&](Shape s, double lo = 0, double hi = 1) {
    Tensord t(std::move(s));
    for (double& v : t.data()) v = lo + (hi - lo) * u(rng);
    return t;
  };
  const Tensord x = rnd({2, 3, 24, 32});
  double ssim_dev = 0;
  const Tensord same = ssim(x, x), zero = photometric_loss(x, x, 0.85);
  for (double v : same.data()) ssim_dev = std::max(ssim_dev, std::abs(v - 1));
  double photo = 0;
  for (double v : zero.data()) photo = std::max(photo, std::abs(v));

  const Tensord disp = rnd({2, 1, 24, 32}, 0.01, 1);
  const double base = smoothness(disp, x).item();
  bool exact = true;
  for (double c : {2.0, 0.5, 8.0, 0.125}) exact = exact && smoothness(disp * c, x).item() == base;
  double general = 0;
  for (double c : {3.0, 0.37, 17.0}) general = std::max(general, std::abs(smoothness(disp * c, x).item() / base - 1));

  std::vector<Tensord> maps{rnd({2, 1, 8, 8}), rnd({2, 1, 8, 8}), rnd({2, 1, 8, 8})};
  const Tensord mn = min_reprojection(maps);
  Index above = 0;
  for (const Tensord& m : maps)
    for (Index q = 0; q < m.numel(); ++q) above += mn.ptr()[q] > m.ptr()[q];

  SceneOptions still;
  still.static_camera = true;
  const FrameSequence seq = generate_synthetic_sequence(3, 3, 64, 32, still);
  const Triplet t = make_triplet(seq, 1);
  std::vector<Tensord> warped, unwarped;
  for (const Tensord* s : {&t.prev, &t.next}) {
    const Synthesis<double> syn =
        synthesize(*s, *t.gt_depth, testing::transform_tensor(Eigen::Matrix4d::Identity()), t.intrinsics);
    warped.push_back(photometric_loss(syn.image, t.target, 0.85));
    unwarped.push_back(photometric_loss(*s, t.target, 0.85));
  }
  double mask_sum = 0;
  const Tensord mu = auto_mask(unwarped, std::vector<Tensord>{min_reprojection(warped)});
  for (double v : mu.data()) mask_sum += v;

  const bool pass = ssim_dev <= 1e-6 && photo == 0 && exact && general <= 1e-12 && above == 0 && mask_sum == 0;
  return {pass,
          fmt("loss identities: |SSIM(x,x)-1| %.1e, photometric(x,x) %.1e, smoothness scale-invariant (exact for "
              "powers of two, %.1e otherwise), min_reprojection above an input at %ld pixels, auto-mask sum on a "
              "static sequence %.0f",
              ssim_dev, photo, general, static_cast<long>(above), mask_sum),
          {}};
}

Outcome c8_warp() {
  Outcome o{true, "", {}};
  double worst = 0, worst_l1 = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const FrameSequence s = generate_synthetic_sequence(seed, 5, 640, 192);
    for (Index src : {1, 3}) {
      const auto gt = testing::warp_check(s, 2, src, 1.0, 2);
      const auto wrong = testing::warp_check(s, 2, src, 2.0, 2);
      const bool ok = gt.mean_photometric < 0.02 && wrong.mean_photometric > gt.mean_photometric &&
                      gt.pixels > 640 * 192 / 2;
      o.pass = o.pass && ok;
      worst = std::max(worst, gt.mean_photometric);
      worst_l1 = std::max(worst_l1, gt.mean_l1);
      o.details.push_back(fmt("seed %lu source %ld: GT %.4f (L1 %.4f) vs 2xGT %.4f over %ld pixels %s",
                              static_cast<unsigned long>(seed), static_cast<long>(src), gt.mean_photometric,
                              gt.mean_l1, wrong.mean_photometric, static_cast<long>(gt.pixels), ok ? "" : "FAIL"));
    }
  }
  o.summary = fmt("renderer/warper cross-validation: worst GT warp error %.4f (L1 %.4f) < 0.02, 2xGT worse in every "
                  "case: %s",
                  worst, worst_l1, o.pass ? "yes" : "no");
  return o;
}

struct ToyRun {
  TrainResult result;
  double first10 = 0, last10 = 0;
  DepthMetrics init, trained;
};

ToyRun toy_training(std::uint64_t data_seed, Index steps) {
  const FrameSequence data = generate_synthetic_sequence(data_seed, 16, 64, 32);
  TrainSetup s;
  s.encoder = EncoderConfig::make(Variant::tiny);
  s.train.steps = steps;
  s.train.batch_size = 4;
  ToyRun r;
  r.result = train(s, data);
  const auto& c = r.result.curve;
  for (int i = 0; i < 10; ++i) {
    r.first10 += c[static_cast<std::size_t>(i)].total / 10;
    r.last10 += c[c.size() - 1 - static_cast<std::size_t>(i)].total / 10;
  }
  DepthModel before(r.result.initial, s.encoder, s.pose, s.train.precision);
  DepthModel after(r.result.final, s.encoder, s.pose, s.train.precision);
  auto run = [&](DepthModel& m) {
    return evaluate([&](const Tensord& im, Index) { return m.depth(im, s.loss.min_depth, s.loss.max_depth); }, data);
  };
  r.init = run(before);
  r.trained = run(after);
  return r;
}

Outcome c9_toy() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyRun r = toy_training(1, 500);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double loss_ratio = r.last10 / r.first10;
  const double gain = 1 - r.trained.abs_rel / r.init.abs_rel;
  Outcome o{loss_ratio <= 0.5 && gain >= 0.3,
            fmt("toy training (tiny, 64x32, 16 frames, 500 steps, batch 4): loss MA %.4f -> %.4f (ratio %.2f <= "
                "0.50), AbsRel %.3f -> %.3f (gain %.0f%% >= 30%%), %.0fs",
                r.first10, r.last10, loss_ratio, r.init.abs_rel, r.trained.abs_rel, 100 * gain, secs),
            {}};
  o.details.push_back(fmt("trained d1 %.3f (init %.3f), RMSE %.2f (init %.2f)", r.trained.delta1, r.init.delta1,
                          r.trained.rmse, r.init.rmse));
  return o;
}

Outcome c10_mover() {
  Outcome o{true, "", {}};
  double worst = 1;
  SceneOptions opt;
  opt.mover = true;
  for (std::uint64_t seed : {21, 22, 23}) {
    const FrameSequence s = generate_synthetic_sequence(seed, 5, 640, 192, opt);
    for (Index i : {1, 2, 3}) {
      const auto m = testing::mover_check(s, i);
      const bool ok = m.mover_pixels > 500 && m.fraction() >= 0.9;
      o.pass = o.pass && ok;
      worst = std::min(worst, m.fraction());
      o.details.push_back(fmt("seed %lu frame %ld: %ld of %ld mover pixels masked (%.1f%%) %s",
                              static_cast<unsigned long>(seed), static_cast<long>(i), static_cast<long>(m.masked_out),
                              static_cast<long>(m.mover_pixels), 100 * m.fraction(), ok ? "" : "FAIL"));
    }
  }
  o.summary = fmt("auto-mask on a camera-speed mover: worst masked fraction %.1f%% (>= 90%%)", 100 * worst);
  return o;
}

// Direct transcription of the seven definitions, kept apart from the library.
std::array<double, 7> oracle(std::vector<double> p, std::vector<double> g, bool median) {
  std::vector<double> pp, gg;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] > 0) pp.push_back(p[i]), gg.push_back(g[i]);
  if (median) {
    auto med = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double s = med(gg) / med(pp);
    for (double& v : pp) v *= s;
  }
  for (double& v : pp) v = std::clamp(v, 1e-3, 80.0);
  for (double& v : gg) v = std::clamp(v, 1e-3, 80.0);
  const double n = static_cast<double>(gg.size());
  double abs_rel = 0, sq_rel = 0, se = 0, sle = 0, d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < gg.size(); ++i) {
    const double a = pp[i], b = gg[i];
    abs_rel += std::abs(a - b) / b;
    sq_rel += (a - b) * (a - b) / b;
    se += (a - b) * (a - b);
    sle += (std::log(a) - std::log(b)) * (std::log(a) - std::log(b));
    const double t = std::max(a / b, b / a);
    d1 += t < 1.25;
    d2 += t < 1.25 * 1.25;
    d3 += t < 1.25 * 1.25 * 1.25;
  }
  return {abs_rel / n, sq_rel / n, std::sqrt(se / n), std::sqrt(sle / n), d1 / n, d2 / n, d3 / n};
}

Outcome c11_metrics() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 50 + static_cast<Index>(u(rng) * 400);
    Eigen::ArrayXd p(n), g(n);
    for (Index i = 0; i < n; ++i) {
      g[i] = u(rng) < 0.1 ? 0.0 : 0.5 + 90 * u(rng);  // some invalid, some above the cap
      p[i] = 0.2 + 100 * u(rng);
    }
    for (bool median : {false, true}) {
      MetricsOptions opt;
      opt.median_scale = median;
      const DepthMetrics m = depth_metrics(p, g, opt);
      const auto o = oracle({p.begin(), p.end()}, {g.begin(), g.end()}, median);
      const std::array<double, 7> got{m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3};
      for (int k = 0; k < 7; ++k) worst = std::max(worst, std::abs(got[k] - o[k]));
    }
  }
  Eigen::ArrayXd g(200);
  for (Index i = 0; i < 200; ++i) g[i] = 1 + 40 * u(rng);
  MetricsOptions raw;
  raw.median_scale = false;
  const DepthMetrics m = depth_metrics(Eigen::ArrayXd(1.3 * g), g, raw);
  const bool fixed = std::abs(m.abs_rel - 0.3) <= 1e-9 && m.delta1 == 0 && m.delta2 == 1;
  return {worst <= 1e-9 && fixed,
          fmt("metrics oracle: worst deviation %.1e over 100 random pairs x {raw, median-scaled} (<= 1e-9); "
              "pred = 1.3 gt gives AbsRel %.12f, d1 %.0f, d2 %.0f",
              worst, m.abs_rel, m.delta1, m.delta2),
          {}};
}

Outcome c12_determinism() {
  const FrameSequence data = generate_synthetic_sequence(4, 8, 64, 32);
  TrainSetup s;
  s.encoder = EncoderConfig::make(Variant::tiny);
  s.train.steps = 25;
  s.train.batch_size = 4;
  s.train.seed = 12;
  s.train.deterministic = true;
  const TrainResult a = train(s, data), b = train(s, data);
  bool curves = a.curve.size() == b.curve.size();
  for (std::size_t i = 0; curves && i < a.curve.size(); ++i) {
    const CurveRow &x = a.curve[i], &y = b.curve[i];
    curves = x.total == y.total && x.lr == y.lr && x.scales == y.scales && x.smoothness == y.smoothness;
  }
  const bool weights = a.final == b.final;

  const fs::path dir = fs::temp_directory_path() / ("litemono_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  save_checkpoint(dir / "a.lmck", a.final);
  const Checkpoint loaded = load_checkpoint(dir / "a.lmck");
  save_checkpoint(dir / "b.lmck", loaded);
  auto bytes = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  const bool file_same = bytes(dir / "a.lmck") == bytes(dir / "b.lmck");
  // restored model predicts exactly what the in-memory one does
  Model<float> m1 = make_model<float>(s.encoder, s.pose, 99), m2 = make_model<float>(s.encoder, s.pose, 98);
  restore(a.final, m1);
  restore(loaded, m2);
  const Tensorf img = data.frames[3].cast<float>();
  NoGradGuard guard;
  const Tensorf d1 = predict_disparity(m1, img, false).disp[0], d2 = predict_disparity(m2, img, false).disp[0];
  bool predictions = true;
  for (Index q = 0; q < d1.numel(); ++q) predictions = predictions && d1.ptr()[q] == d2.ptr()[q];
  fs::remove_all(dir);
  const bool pass = curves && weights && loaded == a.final && file_same && predictions;
  return {pass,
          fmt("determinism: two 25-step runs bit-identical (curves %s, weights %s); checkpoint round trip "
              "bit-identical (entries %s, re-saved file %s, predictions %s)",
              curves ? "yes" : "no", weights ? "yes" : "no", loaded == a.final ? "yes" : "no",
              file_same ? "yes" : "no", predictions ? "yes" : "no"),
          {}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{c1_params, c2_flops,  c3_lgfi,  c4_gradcheck,
                                                       c5_attention, c6_geometry, c7_losses, c8_warp,
                                                       c9_toy,    c10_mover, c11_metrics, c12_determinism};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s' (1-%zu)\n", argv[i], criteria.size());
      return 1;
    }
    selected.push_back(c);
  }
  if (selected.empty())
    for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) selected.push_back(c);
  int failed = 0;
  for (int c : selected) {
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), {}};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", c, o.summary.c_str());
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}

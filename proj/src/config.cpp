#include "litemono/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace litemono {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw ConfigError("config: bad value '" + value + "' for " + key + " (expected " + expected + ")");
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // shortest representation that round-trips
  for (int p = 1; p <= 17; ++p) {
    char t[32];
    std::snprintf(t, sizeof t, "%.*g", p, v);
    if (std::strtod(t, nullptr) == v) return t;
  }
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

std::vector<Index> to_list(const std::string& key, const std::string& v, char sep = ',') {
  std::vector<Index> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(to_int(key, trim(item)));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

template <std::size_t N>
std::array<Index, N> to_array(const std::string& key, const std::string& v) {
  const auto l = to_list(key, v);
  if (l.size() != N) bad_value(key, v, std::to_string(N) + " comma-separated integers");
  std::array<Index, N> out{};
  std::copy(l.begin(), l.end(), out.begin());
  return out;
}

template <typename C>
std::string join(const C& c, const char* sep = ",") {
  std::string s;
  for (auto v : c) s += (s.empty() ? "" : sep) + std::to_string(v);
  return s;
}

// Key builders over a member accessor.
template <typename F>
ConfigKey dbl(std::string name, std::string help, F field) {
  return {name, std::move(help), [field](const RunConfig& c) { return fmt_double(field(c)); },
          [field, name](RunConfig& c, const std::string& v) { field(c) = to_double(name, v); }};
}
template <typename F>
ConfigKey integer(std::string name, std::string help, F field) {
  return {name, std::move(help), [field](const RunConfig& c) { return std::to_string(field(c)); },
          [field, name](RunConfig& c, const std::string& v) {
            field(c) = static_cast<std::decay_t<decltype(field(c))>>(to_int(name, v));
          }};
}
template <typename F>
ConfigKey seed(std::string name, std::string help, F field) {
  return {name, std::move(help), [field](const RunConfig& c) { return std::to_string(field(c)); },
          [field, name](RunConfig& c, const std::string& v) { field(c) = to_u64(name, v); }};
}
template <typename F>
ConfigKey boolean(std::string name, std::string help, F field) {
  return {name, std::move(help),
          [field](const RunConfig& c) { return std::string(field(c) ? "true" : "false"); },
          [field, name](RunConfig& c, const std::string& v) { field(c) = to_bool(name, v); }};
}
template <typename F>
ConfigKey text(std::string name, std::string help, F field) {
  return {name, std::move(help), [field](const RunConfig& c) { return field(c); },
          [field](RunConfig& c, const std::string& v) { field(c) = v; }};
}

#define FIELD(expr) [](auto& c) -> auto& { return c.expr; }

std::vector<ConfigKey> make_keys() {
  std::vector<ConfigKey> k;
  k.push_back({"encoder.variant", "tiny | small | base; sets widths, repeats and dilations",
               [](const RunConfig& c) { return to_string(c.encoder.variant); },
               [](RunConfig& c, const std::string& v) {
                 try {
                   c.encoder = EncoderConfig::make(parse_variant(v));
                 } catch (const std::invalid_argument&) {
                   bad_value("encoder.variant", v, "tiny, small or base");
                 }
               }});
  k.push_back({"encoder.channels", "stem and stage widths C1,C2,C3,C4",
               [](const RunConfig& c) { return join(c.encoder.channels); },
               [](RunConfig& c, const std::string& v) { c.encoder.channels = to_array<4>("encoder.channels", v); }});
  k.push_back({"encoder.cdc_repeats", "CDC blocks per stage",
               [](const RunConfig& c) { return join(c.encoder.cdc_repeats); },
               [](RunConfig& c, const std::string& v) {
                 c.encoder.cdc_repeats = to_array<3>("encoder.cdc_repeats", v);
               }});
  k.push_back({"encoder.dilations", "per-stage dilation rates, stages separated by ';'",
               [](const RunConfig& c) {
                 std::string s;
                 for (const auto& d : c.encoder.dilations) s += (s.empty() ? "" : ";") + join(d);
                 return s;
               },
               [](RunConfig& c, const std::string& v) {
                 std::stringstream ss(v);
                 std::string stage;
                 std::vector<std::vector<Index>> out;
                 while (std::getline(ss, stage, ';')) out.push_back(to_list("encoder.dilations", trim(stage)));
                 if (out.size() != 3) bad_value("encoder.dilations", v, "three ';'-separated lists");
                 for (int i = 0; i < 3; ++i) c.encoder.dilations[i] = out[i];
               }});
  k.push_back({"encoder.heads", "attention heads per stage", [](const RunConfig& c) { return join(c.encoder.heads); },
               [](RunConfig& c, const std::string& v) { c.encoder.heads = to_array<3>("encoder.heads", v); }});
  k.push_back(integer("encoder.expansion", "hidden width multiplier in CDC and LGFI", FIELD(encoder.expansion)));
  k.push_back(boolean("encoder.use_lgfi", "LGFI block closing each stage (ablation switch)", FIELD(encoder.use_lgfi)));
  k.push_back(boolean("encoder.use_dilation", "dilated depthwise convs (off: all rates 1)", FIELD(encoder.use_dilation)));
  k.push_back(boolean("encoder.use_pooled_concat", "concat pooled RGB at each downsampling",
                      FIELD(encoder.use_pooled_concat)));
  k.push_back(boolean("encoder.use_cross_stage", "cross-stage feature carry into downsampling",
                      FIELD(encoder.use_cross_stage)));
  k.push_back(boolean("encoder.literal_attention", "unnormalized channel attention without temperature",
                      FIELD(encoder.literal_attention)));
  k.push_back(boolean("encoder.zero_init_branches", "zero-init the last conv of every residual branch",
                      FIELD(encoder.zero_init_branches)));

  k.push_back(boolean("pose.resnet_encoder", "ResNet18-shaped pose encoder instead of the small strided one",
                      FIELD(pose.resnet_encoder)));
  k.push_back({"pose.channels", "small pose encoder widths (5 strided convs)",
               [](const RunConfig& c) { return join(c.pose.channels); },
               [](RunConfig& c, const std::string& v) { c.pose.channels = to_array<5>("pose.channels", v); }});
  k.push_back(integer("pose.decoder_width", "pose decoder conv width", FIELD(pose.decoder_width)));
  k.push_back(dbl("pose.output_scale", "multiplier on the 6-DoF output", FIELD(pose.output_scale)));

  k.push_back(dbl("loss.alpha", "SSIM weight in the photometric error", FIELD(loss.alpha)));
  k.push_back(dbl("loss.lambda_smooth", "edge-aware smoothness weight (halved per scale)", FIELD(loss.lambda_smooth)));
  k.push_back(integer("loss.num_scales", "disparity scales in the loss (1-3)", FIELD(loss.num_scales)));
  k.push_back(boolean("loss.automask", "mask pixels the unwarped source explains at least as well", FIELD(loss.automask)));
  k.push_back(boolean("loss.min_reprojection", "per-pixel minimum over sources (off: average)",
                      FIELD(loss.min_reprojection)));
  k.push_back(boolean("loss.literal_reconstruction", "reconstruction from the unwarped minimum",
                      FIELD(loss.literal_reconstruction)));
  k.push_back(boolean("loss.literal_smoothness", "x-gradient of disparity in both smoothness terms",
                      FIELD(loss.literal_smoothness)));
  k.push_back(dbl("loss.min_depth", "depth at disparity 1", FIELD(loss.min_depth)));
  k.push_back(dbl("loss.max_depth", "depth at disparity 0", FIELD(loss.max_depth)));

  k.push_back(integer("train.batch_size", "triplets per step", FIELD(train.batch_size)));
  k.push_back(integer("train.epochs", "passes over the triplets", FIELD(train.epochs)));
  k.push_back(integer("train.steps", "total steps; overrides train.epochs when > 0", FIELD(train.steps)));
  k.push_back(dbl("train.lr0", "initial learning rate", FIELD(train.lr0)));
  k.push_back(dbl("train.lr_min", "final learning rate of the cosine schedule", FIELD(train.lr_min)));
  k.push_back(dbl("train.weight_decay", "AdamW decoupled weight decay", FIELD(train.weight_decay)));
  k.push_back(dbl("train.beta1", "AdamW first-moment decay", FIELD(train.beta1)));
  k.push_back(dbl("train.beta2", "AdamW second-moment decay", FIELD(train.beta2)));
  k.push_back(dbl("train.adam_eps", "AdamW denominator epsilon", FIELD(train.adam_eps)));
  k.push_back(text("train.schedule", "cosine (per step) | constant", FIELD(train.schedule)));
  k.push_back({"train.precision", "float32 | float64", [](const RunConfig& c) { return to_string(c.train.precision); },
               [](RunConfig& c, const std::string& v) {
                 try {
                   c.train.precision = parse_precision(v);
                 } catch (const std::invalid_argument&) {
                   bad_value("train.precision", v, "float32 or float64");
                 }
               }});
  k.push_back(seed("train.seed", "weight init, shuffling and augmentation seed", FIELD(train.seed)));
  k.push_back(boolean("train.deterministic", "fixed seeds everywhere (off: seeds mixed with the clock)",
                      FIELD(train.deterministic)));
  k.push_back(boolean("train.augment", "flip and colour jitter", FIELD(train.augment)));
  k.push_back(integer("train.checkpoint_every", "steps between checkpoints (0: final only)",
                      FIELD(train.checkpoint_every)));
  k.push_back(text("train.init_checkpoint", "start from matching tensors of this checkpoint (fine-tuning)",
                   FIELD(train.init_checkpoint)));

  k.push_back(text("data.dir", "sequence directory (empty: synthetic)", FIELD(data.dir)));
  k.push_back(integer("data.width", "network input width (multiple of 32)", FIELD(data.width)));
  k.push_back(integer("data.height", "network input height (multiple of 32)", FIELD(data.height)));
  k.push_back(integer("data.frames", "synthetic sequence length", FIELD(data.frames)));
  k.push_back(seed("data.seed", "synthetic scene seed", FIELD(data.seed)));
  k.push_back(integer("data.num_rects", "synthetic rectangles", FIELD(data.scene.num_rects)));
  k.push_back(dbl("data.min_depth", "nearest rectangle depth ahead of the last camera", FIELD(data.scene.min_depth)));
  k.push_back(dbl("data.max_depth", "farthest rectangle depth", FIELD(data.scene.max_depth)));
  k.push_back(dbl("data.background_depth", "background plane depth", FIELD(data.scene.background_depth)));
  k.push_back(dbl("data.min_step", "slowest forward speed per frame", FIELD(data.scene.min_step)));
  k.push_back(dbl("data.max_step", "fastest forward speed per frame", FIELD(data.scene.max_step)));
  k.push_back(dbl("data.sway", "lateral sway amplitude", FIELD(data.scene.sway)));
  k.push_back(dbl("data.sway_frequency", "sway phase advance per frame (radians)", FIELD(data.scene.sway_frequency)));
  k.push_back(dbl("data.yaw", "peak yaw (radians)", FIELD(data.scene.yaw)));
  k.push_back(boolean("data.static_camera", "camera never moves", FIELD(data.scene.static_camera)));
  k.push_back(boolean("data.mover", "add a rectangle moving with the camera", FIELD(data.scene.mover)));
  k.push_back(dbl("data.cx_offset", "principal point offset from centre, x (pixels)", FIELD(data.scene.cx_offset)));
  k.push_back(dbl("data.cy_offset", "principal point offset from centre, y (pixels)", FIELD(data.scene.cy_offset)));
  k.push_back(integer("data.supersample", "colour samples per pixel per axis", FIELD(data.scene.supersample)));

  k.push_back(dbl("augment.flip_probability", "horizontal flip chance", FIELD(augment.flip_probability)));
  k.push_back(dbl("augment.jitter_probability", "colour jitter chance", FIELD(augment.jitter_probability)));
  k.push_back(dbl("augment.brightness", "brightness factor range +-", FIELD(augment.brightness)));
  k.push_back(dbl("augment.contrast", "contrast factor range +-", FIELD(augment.contrast)));
  k.push_back(dbl("augment.saturation", "saturation factor range +-", FIELD(augment.saturation)));
  k.push_back(dbl("augment.hue", "hue shift range +- (turns)", FIELD(augment.hue)));
  k.push_back(boolean("augment.jitter_targets", "loss targets see the jitter too", FIELD(augment.jitter_targets)));
  return k;
}

#undef FIELD

const ConfigKey& find_key(const std::string& key) {
  for (const auto& k : config_keys())
    if (k.name == key) return k;
  throw ConfigError("config: unknown key '" + key + "' (see --help for the list)");
}

}  // namespace

void RunConfig::validate() const {
  encoder.validate();
  loss.validate();
  train.validate();
  if (data.width <= 0 || data.height <= 0 || data.width % 32 || data.height % 32)
    throw ConfigError("config: data.width and data.height must be positive multiples of 32");
  if (data.frames < 3) throw ConfigError("config: data.frames must be at least 3");
  if (pose.decoder_width < 1 || !(pose.output_scale > 0)) throw ConfigError("config: bad pose settings");
  for (double p : {augment.flip_probability, augment.jitter_probability})
    if (!(p >= 0 && p <= 1)) throw ConfigError("config: augmentation probabilities must lie in [0, 1]");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

Assignments parse_assignments(const std::string& text) {
  Assignments out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

Assignments read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_assignments(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::pair<std::string, std::string> parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || trim(arg.substr(0, eq)).empty())
    throw ConfigError("override '" + arg + "': expected key=value");
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1))};
}

void set_value(RunConfig& c, const std::string& key, const std::string& value) { find_key(key).set(c, value); }

std::string get_value(const RunConfig& c, const std::string& key) { return find_key(key).get(c); }

RunConfig build_config(const Assignments& assignments) {
  RunConfig c;
  for (const auto& [k, v] : assignments) find_key(k);  // reject unknown keys before applying any
  for (const auto& [k, v] : assignments)
    if (k == "encoder.variant") set_value(c, k, v);
  for (const auto& [k, v] : assignments)
    if (k != "encoder.variant") set_value(c, k, v);
  return c;
}

std::string to_text(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : config_keys()) {
    const std::string s = k.name.substr(0, k.name.find('.'));
    if (s != section) {
      if (!section.empty()) out += '\n';
      out += "# " + s + '\n';
      section = s;
    }
    out += k.name + " = " + k.get(c) + '\n';
  }
  return out;
}

std::string describe_keys() {
  const RunConfig defaults;
  std::string out;
  for (const auto& k : config_keys()) {
    char line[256];
    std::snprintf(line, sizeof line, "  %-28s %-14s %s\n", k.name.c_str(), k.get(defaults).c_str(), k.help.c_str());
    out += line;
  }
  return out;
}

}  // namespace litemono

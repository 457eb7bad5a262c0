#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "litemono/data.hpp"
#include "litemono/encoder.hpp"
#include "litemono/losses.hpp"
#include "litemono/posenet.hpp"
#include "litemono/trainer.hpp"

namespace litemono {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Where training and evaluation frames come from.
struct DataConfig {
  /// Sequence directory; empty means a generated synthetic sequence.
  std::string dir;
  Index width = 640, height = 192;
  Index frames = 16;
  std::uint64_t seed = 1;
  SceneOptions scene;
};

/// Every tunable setting, addressable as "<section>.<field>".
struct RunConfig {
  EncoderConfig encoder;
  PoseNetConfig pose;
  LossConfig loss;
  TrainConfig train;
  DataConfig data;
  AugmentOptions augment;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

/// All keys in snapshot order.
const std::vector<ConfigKey>& config_keys();

using Assignments = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; blank lines and `#` comments ignored. Throws
/// ConfigError with the line number on malformed lines.
Assignments parse_assignments(const std::string& text);
Assignments read_config_file(const std::filesystem::path& path);
/// "key=value" as given on the command line.
std::pair<std::string, std::string> parse_override(const std::string& arg);

/// Applies assignments over the defaults. `encoder.variant` is applied
/// first so the per-variant widths can still be overridden. Unknown keys
/// and unparsable values throw ConfigError.
RunConfig build_config(const Assignments& assignments);
void set_value(RunConfig& c, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& c, const std::string& key);

/// Every key with its effective value; parses back to the same config.
std::string to_text(const RunConfig& c);
/// Key, default and description for --help.
std::string describe_keys();

}  // namespace litemono

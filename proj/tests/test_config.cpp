#include <gtest/gtest.h>

#include <set>

#include "litemono/config.hpp"

using namespace litemono;

TEST(Config, DefaultsRoundTripThroughText) {
  const RunConfig c;
  const RunConfig back = build_config(parse_assignments(to_text(c)));
  EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, EveryKeyIsUniqueAndRoundTrips) {
  std::set<std::string> names;
  RunConfig c;
  for (const auto& k : config_keys()) {
    EXPECT_TRUE(names.insert(k.name).second) << k.name;
    EXPECT_FALSE(k.help.empty()) << k.name;
    const std::string v = k.get(c);
    k.set(c, v);
    EXPECT_EQ(k.get(c), v) << k.name;
  }
  for (const char* section : {"encoder.", "pose.", "loss.", "train.", "data.", "augment."})
    EXPECT_TRUE(std::any_of(names.begin(), names.end(), [&](const auto& n) { return n.rfind(section, 0) == 0; }));
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto a = parse_assignments("# header\n\n  train.lr0 = 1e-4   # pretraining rate\nloss.automask=false\n");
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0], (std::pair<std::string, std::string>{"train.lr0", "1e-4"}));
  const RunConfig c = build_config(a);
  EXPECT_DOUBLE_EQ(c.train.lr0, 1e-4);
  EXPECT_FALSE(c.loss.automask);
}

TEST(Config, VariantAppliesBeforeOtherEncoderKeys) {
  const RunConfig c = build_config({{"encoder.channels", "32,32,64,96"}, {"encoder.variant", "tiny"}});
  EXPECT_EQ(c.encoder.variant, Variant::tiny);
  EXPECT_EQ(c.encoder.channels, (std::array<Index, 4>{32, 32, 64, 96}));
  EXPECT_EQ(c.encoder.cdc_repeats, EncoderConfig::make(Variant::tiny).cdc_repeats);
}

TEST(Config, LaterAssignmentsWin) {
  const RunConfig c = build_config({{"train.steps", "10"}, {"train.steps", "20"}});
  EXPECT_EQ(c.train.steps, 20);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(build_config({{"train.learning_rate", "1"}}), ConfigError);
  EXPECT_THROW(build_config({{"train.lr0", "fast"}}), ConfigError);
  EXPECT_THROW(build_config({{"train.steps", "1.5"}}), ConfigError);
  EXPECT_THROW(build_config({{"loss.automask", "maybe"}}), ConfigError);
  EXPECT_THROW(build_config({{"encoder.variant", "huge"}}), ConfigError);
  EXPECT_THROW(build_config({{"encoder.heads", "4,4"}}), ConfigError);
  EXPECT_THROW(build_config({{"encoder.dilations", "1,2;3"}}), ConfigError);
  EXPECT_THROW(parse_assignments("train.lr0 1e-4\n"), ConfigError);
  EXPECT_THROW(parse_override("novalue"), ConfigError);
  EXPECT_EQ(parse_override("a.b = 3").second, "3");
}

TEST(Config, ValidateCatchesInconsistentSettings) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.data.width = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.loss.alpha = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.encoder.heads = {5, 4, 8};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, DoublesPrintShortestRoundTrip) {
  RunConfig c;
  EXPECT_EQ(get_value(c, "train.lr0"), "0.0005");
  EXPECT_EQ(get_value(c, "loss.lambda_smooth"), "0.001");
  set_value(c, "train.lr0", "0.1");
  EXPECT_EQ(get_value(c, "train.lr0"), "0.1");
  EXPECT_EQ(get_value(c, "encoder.dilations"), "1,2,3;1,2,3;1,2,3,1,2,3,2,4,6");
}

TEST(Config, HelpListsEveryKeyWithDefault) {
  const std::string help = describe_keys();
  for (const auto& k : config_keys()) EXPECT_NE(help.find(k.name), std::string::npos) << k.name;
  EXPECT_NE(help.find("train.batch_size             12"), std::string::npos);
}

TEST(Config, SeedsUseTheFullUnsignedRange) {
  const RunConfig c = build_config({{"train.seed", "18446744073709551615"}, {"data.seed", "9223372036854775808"}});
  EXPECT_EQ(c.train.seed, 18446744073709551615ull);
  EXPECT_EQ(c.data.seed, 9223372036854775808ull);
  EXPECT_EQ(build_config(parse_assignments(to_text(c))).train.seed, c.train.seed);
  EXPECT_THROW(build_config({{"train.seed", "-1"}}), ConfigError);
}

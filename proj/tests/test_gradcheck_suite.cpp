#include <gtest/gtest.h>

#include <set>

#include "litemono/gradcheck_suite.hpp"

using namespace litemono;

TEST(GradCheckSuite, EveryCasePasses) {
  int streamed = 0;
  const auto cases = run_gradcheck_suite(0, [&](const GradCheckCase&) { ++streamed; });
  EXPECT_EQ(streamed, static_cast<int>(cases.size()));
  std::set<std::string> names;
  int end_to_end = 0;
  for (const auto& c : cases) {
    EXPECT_TRUE(c.passed()) << c.name << ": " << c.error << " >= " << c.tolerance;
    EXPECT_TRUE(names.insert(c.name).second) << "duplicate " << c.name;
    if (c.end_to_end) {
      ++end_to_end;
      EXPECT_DOUBLE_EQ(c.tolerance, 1e-3);
    } else {
      EXPECT_DOUBLE_EQ(c.tolerance, 1e-4);
    }
  }
  EXPECT_EQ(end_to_end, 1);
  for (const char* n : {"conv2d depthwise", "xca_attention", "CDC block", "LGFI block", "decoder level + head",
                        "bilinear_sample", "ssim"})
    EXPECT_TRUE(names.count(n)) << n;
}

TEST(GradCheckSuite, OtherSeedsPass) {
  for (std::uint64_t seed : {1u, 7u})
    for (const auto& c : run_gradcheck_suite(seed)) EXPECT_TRUE(c.passed()) << seed << " " << c.name << " " << c.error;
}

#include <gtest/gtest.h>

#include "photostyle/config.hpp"
#include "photostyle/error.hpp"

using namespace photostyle;

TEST(Config, SectionsPathsAndOverrides) {
  RunConfig c;
  EXPECT_EQ(c.get("detect.min_neighbors"), "3");
  c.merge_text(
      "# fixture\nroster = \"roster.csv\"\nseed = 7\n\n[detect]\nscale_factor = 1.2  # coarser\n"
      "[analyze]\nexclude_self = true\n[fetch]\nurl_template = \"http://h/p/{username}#x\"\n",
      "fix", "config.toml");
  EXPECT_EQ(c.path("roster"), std::filesystem::path("fix/roster.csv"));
  EXPECT_EQ(c.integer("seed"), 7);
  EXPECT_DOUBLE_EQ(c.real("detect.scale_factor"), 1.2);
  EXPECT_TRUE(c.boolean("analyze.exclude_self"));
  EXPECT_EQ(c.get("fetch.url_template"), "http://h/p/{username}#x");
  c.set("detect.scale_factor", "1.3");
  EXPECT_DOUBLE_EQ(c.real("detect.scale_factor"), 1.3);
  EXPECT_NE(c.echo().find("detect.scale_factor = 1.3\n"), std::string::npos);
}

TEST(Config, Errors) {
  RunConfig c;
  EXPECT_THROW(c.set("detect.nope", "1"), ValidationError);
  try {
    c.merge_text("[detect]\nscale_factor 1.2\n", ".", "cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg line 2"), std::string::npos);
  }
  EXPECT_THROW(c.merge_text("[train]\nbogus = 1\n", ".", "cfg"), ValidationError);
  EXPECT_THROW(c.merge_text("roster = \"open\n", ".", "cfg"), ParseError);
  c.set("train.batch_size", "-2");
  EXPECT_THROW(c.count("train.batch_size"), ValidationError);
}

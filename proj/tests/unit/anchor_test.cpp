#include <random>

#include <gtest/gtest.h>

#include "layout_gen.hpp"
#include "ocrbench/anchor.hpp"
#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

bool has_line(const std::string& anchor, const std::string& line) {
  return ("\n" + anchor + "\n").find("\n" + line + "\n") != std::string::npos;
}

TEST(AnchorLines, Formats) {
  const AnchorLayout layout{612, 792.5, {}, {}};
  EXPECT_EQ(anchor_header(layout), "Page dimensions: 612x792.5");
  EXPECT_EQ(anchor_line(TextBlock{70.84, 709.5, "Intro\ntext"}), "[70.8,709.5] Intro text");
  EXPECT_EQ(anchor_line(ImageBox{0, 10.25, 100, 200}), "[img 0,10.2→100,200]");
}

TEST(BuildAnchor, EverythingFitsInDocumentOrder) {
  const AnchorLayout layout{100, 200, {{1, 2, "first"}, {3, 4, "second"}}, {{0, 0, 5, 5}}};
  EXPECT_EQ(build_anchor(layout, 6000, 0), "Page dimensions: 100x200\n[img 0,0→5,5]\n[1,2] first\n[3,4] second");
  EXPECT_EQ(build_anchor(layout, 6000, 0), build_anchor(layout, 6000, 99));
}

TEST(BuildAnchor, KeepsFirstAndLastBlocks) {
  std::mt19937_64 rng(1);
  const auto layout = testing::random_layout(rng, 1000, 4);
  const auto anchor = build_anchor(layout, 6000, 7);
  EXPECT_LE(count_code_points(anchor), 6000u);
  EXPECT_TRUE(has_line(anchor, anchor_line(layout.text_blocks.front())));
  EXPECT_TRUE(has_line(anchor, anchor_line(layout.text_blocks.back())));
  EXPECT_TRUE(has_line(anchor, anchor_line(layout.image_boxes.front())));
  EXPECT_TRUE(has_line(anchor, anchor_line(layout.image_boxes.back())));
  EXPECT_EQ(anchor.rfind(anchor_header(layout), 0), 0u);
}

TEST(BuildAnchor, SeedDeterminesSelection) {
  std::mt19937_64 rng(2);
  const auto layout = testing::random_layout(rng, 300, 0);
  EXPECT_EQ(build_anchor(layout, 2000, 5), build_anchor(layout, 2000, 5));
  EXPECT_NE(build_anchor(layout, 2000, 5), build_anchor(layout, 2000, 6));
}

TEST(BuildAnchor, LengthNeverExceedsLimit) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto layout = testing::random_layout(rng, rng() % 80, rng() % 4);
    const std::size_t limit = rng() % 1500;
    const auto anchor = build_anchor(layout, limit, rng());
    ASSERT_LE(count_code_points(anchor), limit);
    // Kept lines stay in document order.
    std::size_t last = 0;
    for (const auto& b : layout.text_blocks) {
      const auto pos = anchor.find("\n" + anchor_line(b));
      if (pos == std::string::npos) continue;
      ASSERT_GE(pos, last);
      last = pos;
    }
  }
}

TEST(BuildAnchor, EmptyWhenHeaderDoesNotFit) {
  const AnchorLayout layout{612, 792, {{1, 1, "x"}}, {}};
  EXPECT_EQ(build_anchor(layout, 10, 0), "");
  EXPECT_EQ(build_anchor(layout, 0, 0), "");
  EXPECT_EQ(build_anchor(layout, 24, 0), "Page dimensions: 612x792");
}

TEST(Layout, SidecarRoundTrip) {
  std::mt19937_64 rng(4);
  auto layout = testing::random_layout(rng, 20, 3);
  layout.text_blocks[0].x = 12.5;
  EXPECT_EQ(parse_layout_json(layout_to_json(layout)), layout);
  EXPECT_EQ(layout_to_json({10, 20, {{1.5, 2, "a"}}, {{0, 0, 1, 1}}}),
            R"({"w":10,"h":20,"blocks":[{"x":1.5,"y":2,"t":"a"}],"images":[[0,0,1,1]]})");
  EXPECT_THROW(parse_layout_json(R"({"w":1})"), std::invalid_argument);
  EXPECT_THROW(parse_layout_json(R"({"w":1,"h":1,"images":[[1,2]]})"), std::invalid_argument);
  EXPECT_TRUE(parse_layout_json(R"({"w":1,"h":1,"blocks":[{"x":0,"y":0,"t":"  "}]})").text_blocks.empty());
}

TEST(Prompt, EmbedsAnchorBetweenMarkers) {
  const auto prompt = render_prompt("A");
  EXPECT_NE(prompt.find("RAW_TEXT_START\nA\nRAW_TEXT_END"), std::string::npos);
  EXPECT_EQ(prompt.find("{base_text}"), std::string::npos);
  EXPECT_EQ(prompt.rfind("Below is the image of one page of a document", 0), 0u);
}

TEST(Prompt, FitsWithoutRegeneration) {
  const auto build = build_prompt("Page dimensions: 1x1\n[0,0] hi");
  EXPECT_TRUE(build.limits_tried.empty());
  EXPECT_FALSE(build.degenerate);
  EXPECT_EQ(build.anchor, "Page dimensions: 1x1\n[0,0] hi");
}

TEST(Prompt, HalvesLimitUntilItFits) {
  std::mt19937_64 rng(5);
  const auto layout = testing::random_layout(rng, 2000, 0);
  PromptOptions o;
  o.max_tokens = 500;
  const auto anchor = build_anchor(layout, 100'000, 0);
  std::vector<std::size_t> asked;
  const auto build = build_prompt(
      anchor,
      [&](std::size_t limit) {
        asked.push_back(limit);
        return build_anchor(layout, limit, 0);
      },
      o);
  EXPECT_FALSE(build.degenerate);
  EXPECT_EQ(build.limits_tried, (std::vector<std::size_t>{6000, 3000, 1500}));
  EXPECT_EQ(asked, build.limits_tried);
  EXPECT_LE(estimate_tokens(build.prompt, o), 500u);
}

TEST(Prompt, ReservedTokensShrinkTheBudget) {
  const std::string anchor(2000, 'a');
  PromptOptions o;
  o.max_tokens = 1000;
  EXPECT_TRUE(build_prompt(anchor, o).limits_tried.empty());
  o.reserved_tokens = 500;
  EXPECT_FALSE(build_prompt(anchor, o).limits_tried.empty());
}

TEST(Prompt, DegenerateWhenNothingFits) {
  PromptOptions o;
  o.max_tokens = 10;
  const auto build = build_prompt("Page dimensions: 1x1\n[0,0] hi", o);
  EXPECT_TRUE(build.degenerate);
  ASSERT_TRUE(build.warning.has_value());
  EXPECT_EQ(build.anchor, "");
  EXPECT_EQ(build.prompt, render_prompt(""));
  EXPECT_EQ(build.limits_tried.back(), 46u);
}

TEST(Prompt, EmptyAnchor) {
  const auto build = build_prompt("");
  EXPECT_FALSE(build.degenerate);
  EXPECT_NE(build.prompt.find("RAW_TEXT_START\n\nRAW_TEXT_END"), std::string::npos);
}

TEST(TruncateAnchor, WholeLines) {
  EXPECT_EQ(truncate_anchor("abc\ndef\ngh", 7), "abc\ndef");
  EXPECT_EQ(truncate_anchor("abc\ndef\ngh", 6), "abc");
  EXPECT_EQ(truncate_anchor("abc", 2), "");
  EXPECT_EQ(truncate_anchor("数据\nx", 4), "数据\nx");
}

TEST(PlainText, JoinsBlocks) {
  EXPECT_EQ(anchor_plain_text({1, 1, {{0, 0, "a"}, {0, 0, "b c"}}, {}}), "a\nb c");
  EXPECT_EQ(anchor_plain_text({}), "");
}

}  // namespace
}  // namespace ocrbench

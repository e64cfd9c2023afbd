#include <random>
#include <regex>

#include <gtest/gtest.h>

#include "ocrbench/normalize.hpp"
#include "ocrbench/unicode.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

std::string norm(std::string_view s, NormalizeOptions o = {}) { return normalize(s, o).value; }

TEST(Normalize, BreakTagsBecomeNewlines) {
  EXPECT_EQ(norm("a<br>b"), "a\nb");
  EXPECT_EQ(norm("a<br/>b"), "a\nb");
  EXPECT_EQ(norm("a<BR />b"), "a\nb");
  EXPECT_EQ(norm("a<brx>b"), "a<brx>b");
}

TEST(Normalize, EmphasisAndQuotes) {
  EXPECT_EQ(norm("**bold** and “quoted”"), "bold and \"quoted\"");
  EXPECT_EQ(norm("it’s __fine__ and *this* too"), "it's fine and this too");
}

TEST(Normalize, UnpairedMarkersStay) {
  EXPECT_EQ(norm("snake_case_name"), "snake_case_name");
  EXPECT_EQ(norm("2 * 3 = 6"), "2 * 3 = 6");
  EXPECT_EQ(norm("a **b\nc** d"), "a **b\nc** d");
}

TEST(Normalize, EmptyIsFixedPoint) {
  const auto n = normalize("");
  EXPECT_EQ(n.value, "");
  EXPECT_EQ(n.source_len, 0u);
}

TEST(Normalize, ComposesToNfc) {
  const auto n = normalize("é");
  EXPECT_EQ(n.value, "é");
  EXPECT_EQ(to_u32(n.value).size(), 1u);
  EXPECT_EQ(n.source_len, 2u);
}

TEST(Normalize, HyphensAndSoftHyphen) {
  EXPECT_EQ(norm("a‐b–c—d―e−f"), "a-b-c-d-e-f");
  EXPECT_EQ(norm("hy­phen"), "hyphen");
}

TEST(Normalize, Whitespace) {
  EXPECT_EQ(norm("  a \t b\r\n\n  c  "), "a b\nc");
  EXPECT_EQ(norm("a \n b", {LineBreaks::kCollapse}), "a b");
}

TEST(Normalize, StripsNestedEmphasisToFixedPoint) {
  const auto once = norm("***x***");
  EXPECT_EQ(norm(once), once);
  EXPECT_EQ(once.find('*'), std::string::npos);
}

// Strings drawn from the characters every stage reacts to.
TEST(NormalizeProperty, IdempotentAndCanonical) {
  const std::u32string alphabet =
      U"ab _*<>/rB \t\r\n­‘’“”‐—−éé日";
  std::mt19937_64 rng(7);
  const std::regex double_space("  ");
  for (int i = 0; i < 2000; ++i) {
    auto raw = to_utf8(testing::random_u32(rng, alphabet, 0, 40));
    if (i % 5 == 0) raw += "<br>";
    for (const auto mode : {LineBreaks::kPreserve, LineBreaks::kCollapse}) {
      const auto once = norm(raw, {mode});
      ASSERT_EQ(norm(once, {mode}), once) << "raw=" << raw;
      ASSERT_FALSE(std::regex_search(once, double_space)) << once;
      ASSERT_TRUE(is_nfc(once));
      for (const char32_t c : to_u32(once)) {
        ASSERT_NE(c, U'\t');
        ASSERT_NE(c, U'\r');
        ASSERT_TRUE(c < 0x2010 || c > 0x2015) << std::hex << static_cast<unsigned>(c);
        ASSERT_TRUE(c != 0x2018 && c != 0x2019 && c != 0x201C && c != 0x201D);
      }
    }
  }
}

}  // namespace
}  // namespace ocrbench

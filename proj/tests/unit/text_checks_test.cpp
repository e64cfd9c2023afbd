#include <random>

#include <gtest/gtest.h>

#include "ocrbench/text_checks.hpp"
#include "ocrbench/unicode.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

CandidateDocument doc_of(std::string raw) { return CandidateDocument::from_raw("a.pdf", 1, "tool", std::move(raw)); }

TestCase text_test(Category c, std::string text) {
  TestCase t;
  t.id = "t";
  t.pdf = "a.pdf";
  t.category = c;
  t.text = std::move(text);
  return t;
}

TestCase order_test(std::string before, std::string after) {
  TestCase t;
  t.id = "o";
  t.pdf = "a.pdf";
  t.category = Category::kOrder;
  t.before = std::move(before);
  t.after = std::move(after);
  return t;
}

TEST(Presence, IdentityAndMiss) {
  const std::string body = "The quick brown fox jumps over the lazy dog.";
  EXPECT_TRUE(check_presence(text_test(Category::kPresent, body), doc_of(body)).passed);
  auto t = text_test(Category::kPresent, "purple elephant");
  t.max_diffs = 0;
  EXPECT_FALSE(check_presence(t, doc_of(body)).passed);
}

TEST(Presence, DefaultBudgetIsTenPercent) {
  // 19 code points: one edit allowed, two are not.
  const std::string needle = "abcdefghijklmnopqrs";
  EXPECT_TRUE(check_presence(text_test(Category::kPresent, needle), doc_of("xx abcdefghijklmnopqrX yy")).passed);
  EXPECT_FALSE(check_presence(text_test(Category::kPresent, needle), doc_of("xx abcdefghijklmnopqXX yy")).passed);
}

TEST(Presence, NormalizesBothSides) {
  EXPECT_TRUE(check_presence(text_test(Category::kPresent, "“bold” text"), doc_of("**\"bold\"**   text")).passed);
}

TEST(Absence, HeaderPresentOrAbsent) {
  EXPECT_FALSE(check_absence(text_test(Category::kAbsent, "Journal of Things"), doc_of("JOURNAL OF THINGS\nbody")).passed);
  EXPECT_TRUE(check_absence(text_test(Category::kAbsent, "Journal of Things"), doc_of("body only")).passed);
}

TEST(Absence, FooterWindow) {
  std::string body = "intro Page 5 " + std::string(4987, 'x');
  auto t = text_test(Category::kAbsent, "Page 5");
  t.last_n = 20;
  t.max_diffs = 0;
  EXPECT_TRUE(check_absence(t, doc_of(body)).passed);
  EXPECT_FALSE(check_absence(t, doc_of(body + " Page 5")).passed);
}

TEST(AbsenceProperty, DualOfPresence) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto needle = to_utf8(testing::random_u32(rng, U"abAB", 1, 6));
    const auto hay = to_utf8(testing::random_u32(rng, U"abAB ", 0, 40));
    auto p = text_test(Category::kPresent, needle);
    auto a = text_test(Category::kAbsent, needle);
    p.case_sensitive = a.case_sensitive = (i % 2 == 0);
    p.max_diffs = a.max_diffs = i % 3;
    const auto d = doc_of(hay);
    ASSERT_NE(check_presence(p, d).passed, check_absence(a, d).passed);
  }
}

TEST(Order, Basic) {
  const std::string doc = "alpha " + std::string(94, '.') + " omega";
  EXPECT_TRUE(check_order(order_test("alpha", "omega"), doc_of(doc)).passed);
  EXPECT_FALSE(check_order(order_test("omega", "alpha"), doc_of(doc)).passed);
}

TEST(Order, AnyOrderedPairPasses) {
  // before at 50 and 900, after at 400
  std::string doc(1000, '.');
  doc.replace(50, 5, "alpha");
  doc.replace(400, 5, "omega");
  doc.replace(900, 5, "alpha");
  EXPECT_TRUE(check_order(order_test("alpha", "omega"), doc_of(doc)).passed);
}

TEST(Order, MissingAnchor) {
  const auto r = check_order(order_test("alpha", "zzzzzz"), doc_of("alpha beta"));
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.explanation.find("anchor not found"), std::string::npos);
}

TEST(Baseline, RepeatedTail) {
  std::string text = "Some real content here.";
  for (int i = 0; i < 10; ++i) text += " abc";
  EXPECT_FALSE(check_baseline(doc_of(text), false).passed);
  EXPECT_TRUE(check_baseline(doc_of("Some content. abc abc abc"), false).passed);
}

TEST(Baseline, RepetitionThresholdIsStrict) {
  // Unit "ab" repeated 15 times spans exactly 30 characters: not longer than 30.
  std::string text = "x:";
  for (int i = 0; i < 15; ++i) text += "ab";
  EXPECT_EQ(trailing_repetition_span(to_u32(text)), 0u);
  text += "ab";
  EXPECT_EQ(trailing_repetition_span(to_u32(text)), 32u);
}

TEST(Baseline, CharsetAndContent) {
  EXPECT_FALSE(check_baseline(doc_of("日本語"), false).passed);
  EXPECT_TRUE(check_baseline(doc_of("日本語"), true).passed);
  EXPECT_FALSE(check_baseline(doc_of("smile 😀"), false).passed);
  EXPECT_TRUE(check_baseline(doc_of("Hello world."), false).passed);
  EXPECT_FALSE(check_baseline(doc_of("  ... --- "), false).passed);
}

}  // namespace
}  // namespace ocrbench

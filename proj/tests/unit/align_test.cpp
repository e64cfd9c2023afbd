#include <random>

#include <gtest/gtest.h>

#include "ocrbench/align.hpp"
#include "ocrbench/normalize.hpp"
#include "oracles.hpp"

namespace ocrbench {
namespace {

AlignmentScore score(std::string_view a, std::string_view b, Denominator d = Denominator::kMax) {
  return align_score(normalize(a), normalize(b), d);
}

std::vector<std::uint32_t> random_ids(std::mt19937_64& rng, std::size_t n, std::uint32_t vocab) {
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = static_cast<std::uint32_t>(rng() % vocab);
  return v;
}

TEST(AlignScore, IdenticalAndDisjoint) {
  const auto same = score("a b c d", "a  b\nc d");
  EXPECT_EQ(same.score, 1.0);
  EXPECT_EQ(same.bucket, MatchBucket::kHigh);
  const auto none = score("a b c", "x y z");
  EXPECT_EQ(none.score, 0.0);
  EXPECT_EQ(none.bucket, MatchBucket::kLow);
}

TEST(AlignScore, PartialMatch) {
  const auto s = score("w1 w2 w3 w4", "w1 wX w3 wY");
  EXPECT_EQ(s.matched, 2u);
  EXPECT_EQ(s.score, 0.5);
}

TEST(AlignScore, EmptyConventions) {
  EXPECT_EQ(score("", "").score, 1.0);
  EXPECT_EQ(score("", "word").score, 0.0);
  EXPECT_EQ(score("a b", "", Denominator::kMin).score, 0.0);
}

TEST(AlignScore, Denominators) {
  // 2 matched of 4 and 2 words
  EXPECT_EQ(score("a x b y", "a b", Denominator::kMax).score, 0.5);
  EXPECT_EQ(score("a x b y", "a b", Denominator::kMin).score, 1.0);
  EXPECT_EQ(score("a x b y", "a b", Denominator::kA).score, 0.5);
  EXPECT_EQ(score("a x b y", "a b", Denominator::kB).score, 1.0);
  EXPECT_DOUBLE_EQ(score("a x b y", "a b", Denominator::kMean).score, 2.0 / 3.0);
  for (const char* name : {"max", "min", "a", "b", "mean"}) {
    ASSERT_TRUE(parse_denominator(name));
    EXPECT_EQ(to_string(*parse_denominator(name)), name);
  }
  EXPECT_FALSE(parse_denominator("median"));
}

TEST(Buckets, Boundaries) {
  EXPECT_EQ(bucket_for(0.699), MatchBucket::kLow);
  EXPECT_EQ(bucket_for(0.70), MatchBucket::kMedium);
  EXPECT_EQ(bucket_for(0.95), MatchBucket::kMedium);
  EXPECT_EQ(bucket_for(0.951), MatchBucket::kHigh);
}

TEST(SplitWords, AsciiWhitespace) {
  EXPECT_EQ(split_words("  a\tb\n\nc  "), (std::vector<std::string_view>{"a", "b", "c"}));
  EXPECT_TRUE(split_words(" \n ").empty());
}

TEST(Hirschberg, PairsAreAValidCommonSubsequence) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 400; ++i) {
    const auto a = random_ids(rng, rng() % 60, 1 + rng() % 6);
    const auto b = random_ids(rng, rng() % 60, 1 + rng() % 6);
    const auto al = hirschberg_align(a, b);
    ASSERT_EQ(al.pairs.size(), oracle::lcs_length(a, b));
    for (std::size_t k = 0; k < al.pairs.size(); ++k) {
      const auto [x, y] = al.pairs[k];
      ASSERT_EQ(a[x], b[y]);
      if (k > 0) {
        ASSERT_LT(al.pairs[k - 1].first, x);
        ASSERT_LT(al.pairs[k - 1].second, y);
      }
    }
  }
}

TEST(Hirschberg, Symmetric) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_ids(rng, rng() % 80, 4);
    const auto b = random_ids(rng, rng() % 80, 4);
    ASSERT_EQ(hirschberg_align(a, b).pairs.size(), hirschberg_align(b, a).pairs.size());
  }
}

TEST(Hirschberg, MemoryTracksShorterInput) {
  std::mt19937_64 rng(3);
  const auto shorter = random_ids(rng, 2000, 50);
  const auto mid = random_ids(rng, 10'000, 50);
  const auto huge = random_ids(rng, 100'000, 50);
  const auto a = hirschberg_align(huge, shorter);
  const auto b = hirschberg_align(mid, shorter);
  EXPECT_EQ(a.peak_aux_bytes, b.peak_aux_bytes);
  EXPECT_LE(a.peak_aux_bytes, 2 * (shorter.size() + 1) * sizeof(std::uint64_t));
  EXPECT_EQ(hirschberg_align(shorter, huge).peak_aux_bytes, a.peak_aux_bytes);
}

}  // namespace
}  // namespace ocrbench

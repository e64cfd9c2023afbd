#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ocrbench/normalize.hpp"

namespace ocrbench {

enum class MatchBucket { kLow, kMedium, kHigh };

std::string_view to_string(MatchBucket bucket);

/// low below 0.70, high above 0.95, medium in between (both ends included).
MatchBucket bucket_for(double score);

/// What the matched word count is divided by.
enum class Denominator { kMax, kMin, kA, kB, kMean };

std::string_view to_string(Denominator denominator);
std::optional<Denominator> parse_denominator(std::string_view name);

struct AlignmentScore {
  std::size_t matched = 0;
  std::size_t len_a = 0;
  std::size_t len_b = 0;
  double score = 0;
  MatchBucket bucket = MatchBucket::kLow;
};

struct Alignment {
  /// Aligned equal-word pairs (index into a, index into b), increasing.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Largest scratch allocation held at any point, in bytes. Output storage
  /// is not counted.
  std::size_t peak_aux_bytes = 0;
};

/// Maximal non-whitespace runs.
std::vector<std::string_view> split_words(std::string_view text);

/// Longest common subsequence alignment in linear space (Hirschberg).
Alignment hirschberg_align(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

AlignmentScore align_words(std::span<const std::string_view> a, std::span<const std::string_view> b,
                           Denominator denominator = Denominator::kMax);

/// Two empty documents score 1.0.
AlignmentScore align_score(const NormalizedText& a, const NormalizedText& b,
                           Denominator denominator = Denominator::kMax);

}  // namespace ocrbench

#pragma once

#include <cstddef>

#include "ocrbench/corpus.hpp"
#include "ocrbench/fuzzy.hpp"

namespace ocrbench {

/// Fuzz budget, window and case handling resolved from a test case for
/// a particular needle.
FuzzyOptions fuzzy_options_for(const TestCase& test, std::string_view normalized_needle);

MatchResult check_presence(const TestCase& test, const CandidateDocument& doc);

/// Passes iff the text is not found under the same budget and window.
MatchResult check_absence(const TestCase& test, const CandidateDocument& doc);

/// Passes iff some minimal-distance occurrence of `before` starts strictly
/// before some minimal-distance occurrence of `after`.
MatchResult check_order(const TestCase& test, const CandidateDocument& doc);

struct BaselineOptions {
  /// A repeated tail must span more than this many characters to fail.
  std::size_t repeat_threshold = 30;
  /// Longest repeating unit considered.
  std::size_t max_unit = 50;
};

/// Length in code points of the longest run of a repeated unit (repeated at
/// least twice) that ends the text, ignoring trailing whitespace; 0 if none
/// exceeds `options.repeat_threshold`.
std::size_t trailing_repetition_span(std::u32string_view text, const BaselineOptions& options = {});

bool is_cjk_or_emoji(char32_t cp);

MatchResult check_baseline(const CandidateDocument& doc, bool cjk_ok, const BaselineOptions& options = {});

}  // namespace ocrbench

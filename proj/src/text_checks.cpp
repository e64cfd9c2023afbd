#include "ocrbench/text_checks.hpp"

#include <algorithm>
#include <cstdio>

#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

std::string describe_budget(const char* what, const std::vector<Occurrence>& found, const FuzzyOptions& options) {
  return std::string(what) + " best distance " + std::to_string(found.front().distance) + " > budget " +
         std::to_string(options.max_diffs);
}

}  // namespace

FuzzyOptions fuzzy_options_for(const TestCase& test, std::string_view normalized_needle) {
  FuzzyOptions options;
  options.max_diffs = static_cast<std::size_t>(test.max_diffs.value_or(default_max_diffs(normalized_needle)));
  if (test.first_n) options.window.first_n = static_cast<std::size_t>(*test.first_n);
  if (test.last_n) options.window.last_n = static_cast<std::size_t>(*test.last_n);
  options.case_sensitive = test.effective_case_sensitive();
  return options;
}

MatchResult check_presence(const TestCase& test, const CandidateDocument& doc) {
  const auto needle = normalize(test.text.value_or("")).value;
  if (needle.empty()) return {.passed = false, .location = std::nullopt, .explanation = "empty needle"};
  return fuzzy_find(needle, doc.normalized.value, fuzzy_options_for(test, needle));
}

MatchResult check_absence(const TestCase& test, const CandidateDocument& doc) {
  const auto needle = normalize(test.text.value_or("")).value;
  if (needle.empty()) return {.passed = true, .location = std::nullopt, .explanation = "empty needle"};
  MatchResult result = fuzzy_find(needle, doc.normalized.value, fuzzy_options_for(test, needle));
  result.passed = !result.passed;
  result.explanation = result.passed ? "absent as expected: " + result.explanation
                                     : "unexpectedly present: " + result.explanation;
  return result;
}

MatchResult check_order(const TestCase& test, const CandidateDocument& doc) {
  const auto before = normalize(test.before.value_or("")).value;
  const auto after = normalize(test.after.value_or("")).value;
  MatchResult result;
  if (before.empty() || after.empty()) {
    result.explanation = "anchor not found: empty segment";
    return result;
  }
  const auto before_options = fuzzy_options_for(test, before);
  const auto after_options = fuzzy_options_for(test, after);
  const auto before_hits = fuzzy_occurrences(before, doc.normalized.value, before_options);
  const auto after_hits = fuzzy_occurrences(after, doc.normalized.value, after_options);
  const bool before_found = before_hits.front().distance <= before_options.max_diffs;
  const bool after_found = after_hits.front().distance <= after_options.max_diffs;
  result.best_distance = std::max(before_hits.front().distance, after_hits.front().distance);
  if (!before_found || !after_found) {
    result.explanation = "anchor not found: " + (before_found ? describe_budget("after", after_hits, after_options)
                                                              : describe_budget("before", before_hits, before_options));
    return result;
  }
  // Hits are sorted by start, so the earliest `before` against the latest
  // `after` decides whether any ordered pair exists.
  const std::size_t first_before = before_hits.front().start;
  const std::size_t last_after = after_hits.back().start;
  result.location = first_before;
  result.passed = first_before < last_after;
  result.explanation = result.passed ? "before@" + std::to_string(first_before) + " precedes after@" +
                                           std::to_string(last_after)
                                     : "after segment does not follow before segment";
  return result;
}

std::size_t trailing_repetition_span(std::u32string_view text, const BaselineOptions& options) {
  std::size_t n = text.size();
  while (n > 0 && is_white_space(text[n - 1])) --n;
  const auto body = text.substr(0, n);
  std::size_t longest = 0;
  for (std::size_t unit = 1; unit <= options.max_unit && 2 * unit <= n; ++unit) {
    const auto tail = body.substr(n - unit);
    std::size_t repeats = 1;
    while ((repeats + 1) * unit <= n && body.substr(n - (repeats + 1) * unit, unit) == tail) ++repeats;
    const std::size_t span = repeats * unit;
    if (repeats >= 2 && span > options.repeat_threshold) longest = std::max(longest, span);
  }
  return longest;
}

bool is_cjk_or_emoji(char32_t cp) {
  const auto in = [cp](char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; };
  return in(0x2E80, 0x2FDF)      // CJK radicals, Kangxi radicals
         || in(0x3001, 0x303F)   // CJK symbols and punctuation
         || in(0x3040, 0x30FF)   // Hiragana, Katakana
         || in(0x3100, 0x312F)   // Bopomofo
         || in(0x31A0, 0x31FF)   // Bopomofo ext, CJK strokes, Katakana ext
         || in(0x3400, 0x4DBF)   // CJK ext A
         || in(0x4E00, 0x9FFF)   // CJK unified ideographs
         || in(0xF900, 0xFAFF)   // CJK compatibility ideographs
         || in(0xFF65, 0xFF9F)   // halfwidth Katakana
         || in(0x1F000, 0x1FAFF) // emoji and pictograph blocks
         || in(0x20000, 0x3134F) // CJK ext B..G
         || has_emoji_presentation(cp);
}

MatchResult check_baseline(const CandidateDocument& doc, bool cjk_ok, const BaselineOptions& options) {
  const auto text = to_u32(doc.normalized.value);
  MatchResult result;
  if (std::none_of(text.begin(), text.end(), is_alphanumeric)) {
    result.explanation = "no alphanumeric output";
    return result;
  }
  if (const auto span = trailing_repetition_span(text, options); span > 0) {
    result.explanation = "output ends with a repeated sequence spanning " + std::to_string(span) + " characters";
    result.location = text.size() - span;
    return result;
  }
  if (!cjk_ok) {
    const auto it = std::find_if(text.begin(), text.end(), is_cjk_or_emoji);
    if (it != text.end()) {
      result.location = static_cast<std::size_t>(it - text.begin());
      result.explanation = "output contains CJK or emoji character U+" + [cp = *it] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04X", static_cast<unsigned>(cp));
        return std::string(buf);
      }();
      return result;
    }
  }
  result.passed = true;
  result.explanation = "baseline ok";
  return result;
}

}  // namespace ocrbench

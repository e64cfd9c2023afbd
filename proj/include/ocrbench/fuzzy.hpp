#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ocrbench {

/// Outcome of a single check.
struct MatchResult {
  bool passed = false;
  /// The check could not be evaluated (e.g. renderer unavailable). Counts
  /// as not passed, but is reported separately from a plain failure.
  bool errored = false;
  std::size_t best_distance = 0;
  std::optional<std::size_t> location;  // code point offset into the document
  std::string explanation;
};

/// Restricts a search to the first and/or last N code points of the haystack.
struct SearchWindow {
  std::optional<std::size_t> first_n;
  std::optional<std::size_t> last_n;
};

struct FuzzyOptions {
  std::size_t max_diffs = 0;
  SearchWindow window;
  bool case_sensitive = true;
};

/// An approximate occurrence of a needle; offsets are code points into the
/// full haystack, `end` is exclusive.
struct Occurrence {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t distance = 0;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

/// Substring edit distance search (deletions at either end of the haystack
/// are free). Returns every end position that attains the minimum distance,
/// with the start of its alignment; sorted by start, deduplicated by start.
/// An empty search region yields one occurrence with distance = needle length.
std::vector<Occurrence> find_best_occurrences(std::u32string_view needle, std::u32string_view haystack,
                                              const SearchWindow& window = {});

/// Both arguments are expected to be normalized already.
/// Throws std::invalid_argument if `needle` is empty.
MatchResult fuzzy_find(std::string_view needle, std::string_view haystack, const FuzzyOptions& options);

/// As `fuzzy_find`, but reports every minimal-distance occurrence.
std::vector<Occurrence> fuzzy_occurrences(std::string_view needle, std::string_view haystack,
                                          const FuzzyOptions& options);

}  // namespace ocrbench

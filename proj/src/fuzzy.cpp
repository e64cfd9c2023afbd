#include "ocrbench/fuzzy.hpp"

#include <algorithm>
#include <stdexcept>

#include "ocrbench/unicode.hpp"

namespace ocrbench {

std::vector<Occurrence> find_best_occurrences(std::u32string_view needle, std::u32string_view haystack,
                                              const SearchWindow& window) {
  std::size_t lo = 0;
  std::size_t hi = haystack.size();
  if (window.first_n) hi = std::min(hi, *window.first_n);
  if (window.last_n) lo = std::max(lo, haystack.size() - std::min(haystack.size(), *window.last_n));
  if (lo > hi) lo = hi;

  const std::size_t m = needle.size();
  std::vector<std::size_t> cost(m + 1);
  std::vector<std::size_t> start(m + 1, lo);
  for (std::size_t i = 0; i <= m; ++i) cost[i] = i;
  std::vector<std::size_t> next_cost(m + 1);
  std::vector<std::size_t> next_start(m + 1);

  std::size_t best = cost[m];
  std::vector<Occurrence> found{{lo, lo, cost[m]}};

  for (std::size_t j = lo; j < hi; ++j) {
    const char32_t h = haystack[j];
    next_cost[0] = 0;
    next_start[0] = j + 1;
    for (std::size_t i = 1; i <= m; ++i) {
      std::size_t c = cost[i - 1] + (needle[i - 1] == h ? 0 : 1);
      std::size_t s = start[i - 1];
      if (next_cost[i - 1] + 1 < c) {
        c = next_cost[i - 1] + 1;
        s = next_start[i - 1];
      }
      if (cost[i] + 1 < c) {
        c = cost[i] + 1;
        s = start[i];
      }
      next_cost[i] = c;
      next_start[i] = s;
    }
    std::swap(cost, next_cost);
    std::swap(start, next_start);
    if (cost[m] < best) {
      best = cost[m];
      found.clear();
    }
    if (cost[m] == best) found.push_back({start[m], j + 1, best});
  }

  std::stable_sort(found.begin(), found.end(),
                   [](const Occurrence& a, const Occurrence& b) { return a.start < b.start; });
  found.erase(std::unique(found.begin(), found.end(),
                          [](const Occurrence& a, const Occurrence& b) { return a.start == b.start; }),
              found.end());
  return found;
}

namespace {

std::vector<Occurrence> search(std::string_view needle, std::string_view haystack, const FuzzyOptions& options) {
  if (needle.empty()) throw std::invalid_argument("fuzzy search needle must be non-empty");
  auto n = to_u32(needle);
  auto h = to_u32(haystack);
  if (!options.case_sensitive) {
    n = lowercase(n);
    h = lowercase(h);
  }
  return find_best_occurrences(n, h, options.window);
}

}  // namespace

std::vector<Occurrence> fuzzy_occurrences(std::string_view needle, std::string_view haystack,
                                          const FuzzyOptions& options) {
  return search(needle, haystack, options);
}

MatchResult fuzzy_find(std::string_view needle, std::string_view haystack, const FuzzyOptions& options) {
  const auto found = search(needle, haystack, options);
  MatchResult result;
  const Occurrence& best = found.front();
  result.best_distance = best.distance;
  result.passed = best.distance <= options.max_diffs;
  if (best.end > best.start) result.location = best.start;
  result.explanation = (result.passed ? "found" : "not found") + std::string(" (distance ") +
                       std::to_string(best.distance) + ", budget " + std::to_string(options.max_diffs) + ")";
  return result;
}

}  // namespace ocrbench

#pragma once

// Slow reference implementations the production code is checked against.
// Deliberately written differently from the library: no banded DP, no
// linear-space tricks, no pruning.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/math.hpp"

namespace ocrbench::oracle {

/// Plain Levenshtein distance, full matrix.
template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

/// Minimum edit distance between `needle` and any substring of `hay`, by
/// trying every start position. Substrings longer than twice the needle can
/// never beat the empty substring, so ends are capped there.
inline std::size_t substring_edit_distance(std::u32string_view needle, std::u32string_view hay) {
  const std::size_t m = needle.size();
  std::size_t best = m;
  for (std::size_t start = 0; start <= hay.size(); ++start) {
    const std::size_t span = std::min(hay.size() - start, 2 * m);
    // prev[j]: distance of needle[0..i) vs hay[start..start+j)
    std::vector<std::size_t> prev(span + 1), cur(span + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= m; ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= span; ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (needle[i - 1] == hay[start + j - 1] ? 0 : 1)});
      }
      std::swap(prev, cur);
    }
    best = std::min(best, *std::min_element(prev.begin(), prev.end()));
  }
  return best;
}

/// Longest common subsequence length, full quadratic table.
template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::uint32_t>> t(a.size() + 1, std::vector<std::uint32_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

/// Tries every injective map from reference symbols to candidate symbols
/// and checks glyphs and all pairwise orientations directly from the boxes.
inline bool exhaustive_formula_match(const SymbolLayout& ref, const SymbolLayout& cand, double tau) {
  const std::size_t n = ref.symbols.size();
  const std::size_t m = cand.symbols.size();
  if (n > m) return false;
  const auto left_of = [tau](const SymbolBox& a, const SymbolBox& b) { return a.center_x() + tau < b.center_x(); };
  const auto above = [tau](const SymbolBox& a, const SymbolBox& b) { return a.center_y() + tau < b.center_y(); };
  std::vector<std::size_t> map(n);
  std::vector<bool> used(m, false);
  std::function<bool(std::size_t)> place = [&](std::size_t i) -> bool {
    if (i == n) {
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          const auto& ra = ref.symbols[a];
          const auto& rb = ref.symbols[b];
          const auto& ca = cand.symbols[map[a]];
          const auto& cb = cand.symbols[map[b]];
          if (left_of(ra, rb) && !left_of(ca, cb)) return false;
          if (above(ra, rb) && !above(ca, cb)) return false;
        }
      }
      return true;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j] || canonical_glyph(cand.symbols[j].glyph) != canonical_glyph(ref.symbols[i].glyph)) continue;
      used[j] = true;
      map[i] = j;
      if (place(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return place(0);
}

/// Textbook sequential ELO in floating point.
inline std::map<std::string, double> elo_sequence(const std::vector<std::pair<std::string, std::string>>& games,
                                                  double base, double k) {
  std::map<std::string, double> r;
  for (const auto& [w, l] : games) {
    r.try_emplace(w, base);
    r.try_emplace(l, base);
  }
  for (const auto& [w, l] : games) {
    const double expected_w = 1.0 / (1.0 + std::pow(10.0, (r[l] - r[w]) / 400.0));
    const double delta = k * (1.0 - expected_w);
    r[w] += delta;
    r[l] -= delta;
  }
  return r;
}

}  // namespace ocrbench::oracle

#include "ocrbench/align.hpp"

#include <algorithm>
#include <unordered_map>

namespace ocrbench {
namespace {

using Pair = std::pair<std::size_t, std::size_t>;

// Columns run over the shorter sequence so scratch stays O(min(|a|, |b|)).
class Hirschberg {
 public:
  Hirschberg(std::span<const std::uint32_t> rows, std::span<const std::uint32_t> cols, std::vector<Pair>& out)
      : rows_(rows), cols_(cols), out_(out), forward_(cols.size() + 1), backward_(cols.size() + 1) {}

  std::size_t scratch_bytes() const { return (forward_.capacity() + backward_.capacity()) * sizeof(std::uint32_t); }

  void solve(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    if (r0 >= r1 || c0 >= c1) return;
    if (r1 - r0 == 1) {
      for (std::size_t c = c0; c < c1; ++c) {
        if (cols_[c] == rows_[r0]) {
          out_.emplace_back(r0, c);
          return;
        }
      }
      return;
    }
    const std::size_t mid = r0 + (r1 - r0) / 2;
    const std::size_t n = c1 - c0;
    forward_row(r0, mid, c0, c1);
    backward_row(mid, r1, c0, c1);
    std::size_t split = 0;
    std::uint32_t best = 0;
    for (std::size_t k = 0; k <= n; ++k) {
      const std::uint32_t v = forward_[k] + backward_[n - k];
      if (k == 0 || v > best) {
        best = v;
        split = k;
      }
    }
    solve(r0, mid, c0, c0 + split);
    solve(mid, r1, c0 + split, c1);
  }

 private:
  // forward_[j] = LCS(rows[r0,r1), cols[c0, c0+j))
  void forward_row(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    const std::size_t n = c1 - c0;
    std::fill_n(forward_.begin(), n + 1, 0u);
    for (std::size_t r = r0; r < r1; ++r) {
      const std::uint32_t x = rows_[r];
      std::uint32_t diag = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        const std::uint32_t up = forward_[j];
        forward_[j] = x == cols_[c0 + j - 1] ? diag + 1 : std::max(up, forward_[j - 1]);
        diag = up;
      }
    }
  }

  // backward_[j] = LCS(rows[r0,r1), last j entries of cols[c0,c1))
  void backward_row(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    const std::size_t n = c1 - c0;
    std::fill_n(backward_.begin(), n + 1, 0u);
    for (std::size_t r = r1; r-- > r0;) {
      const std::uint32_t x = rows_[r];
      std::uint32_t diag = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        const std::uint32_t up = backward_[j];
        backward_[j] = x == cols_[c1 - j] ? diag + 1 : std::max(up, backward_[j - 1]);
        diag = up;
      }
    }
  }

  std::span<const std::uint32_t> rows_;
  std::span<const std::uint32_t> cols_;
  std::vector<Pair>& out_;
  std::vector<std::uint32_t> forward_;
  std::vector<std::uint32_t> backward_;
};

}  // namespace

std::string_view to_string(MatchBucket bucket) {
  switch (bucket) {
    case MatchBucket::kLow:
      return "low";
    case MatchBucket::kMedium:
      return "medium";
    case MatchBucket::kHigh:
      return "high";
  }
  return "low";
}

MatchBucket bucket_for(double score) {
  if (score < 0.70) return MatchBucket::kLow;
  if (score > 0.95) return MatchBucket::kHigh;
  return MatchBucket::kMedium;
}

std::string_view to_string(Denominator denominator) {
  switch (denominator) {
    case Denominator::kMax:
      return "max";
    case Denominator::kMin:
      return "min";
    case Denominator::kA:
      return "a";
    case Denominator::kB:
      return "b";
    case Denominator::kMean:
      return "mean";
  }
  return "max";
}

std::optional<Denominator> parse_denominator(std::string_view name) {
  for (const auto d : {Denominator::kMax, Denominator::kMin, Denominator::kA, Denominator::kB, Denominator::kMean}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  const auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

Alignment hirschberg_align(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  Alignment result;
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  for (std::size_t i = 0; i < prefix; ++i) result.pairs.emplace_back(i, i);

  const auto mid_a = a.subspan(prefix, a.size() - prefix - suffix);
  const auto mid_b = b.subspan(prefix, b.size() - prefix - suffix);
  const bool swapped = mid_b.size() > mid_a.size();
  std::vector<Pair> middle;
  {
    Hirschberg h(swapped ? mid_b : mid_a, swapped ? mid_a : mid_b, middle);
    h.solve(0, swapped ? mid_b.size() : mid_a.size(), 0, swapped ? mid_a.size() : mid_b.size());
    result.peak_aux_bytes = h.scratch_bytes();
  }
  for (auto [r, c] : middle) {
    if (swapped) std::swap(r, c);
    result.pairs.emplace_back(prefix + r, prefix + c);
  }
  for (std::size_t i = 0; i < suffix; ++i) {
    result.pairs.emplace_back(a.size() - suffix + i, b.size() - suffix + i);
  }
  return result;
}

AlignmentScore align_words(std::span<const std::string_view> a, std::span<const std::string_view> b,
                           Denominator denominator) {
  std::unordered_map<std::string_view, std::uint32_t> ids;
  const auto intern = [&ids](std::span<const std::string_view> words) {
    std::vector<std::uint32_t> out;
    out.reserve(words.size());
    for (const auto w : words) out.push_back(ids.try_emplace(w, static_cast<std::uint32_t>(ids.size())).first->second);
    return out;
  };
  const auto ia = intern(a);
  const auto ib = intern(b);

  AlignmentScore score;
  score.len_a = a.size();
  score.len_b = b.size();
  score.matched = hirschberg_align(ia, ib).pairs.size();
  const double la = static_cast<double>(score.len_a);
  const double lb = static_cast<double>(score.len_b);
  double denom = 0;
  switch (denominator) {
    case Denominator::kMax:
      denom = std::max(la, lb);
      break;
    case Denominator::kMin:
      denom = std::min(la, lb);
      break;
    case Denominator::kA:
      denom = la;
      break;
    case Denominator::kB:
      denom = lb;
      break;
    case Denominator::kMean:
      denom = (la + lb) / 2;
      break;
  }
  if (score.len_a == 0 && score.len_b == 0) {
    score.score = 1.0;
  } else {
    score.score = denom > 0 ? static_cast<double>(score.matched) / denom : 0.0;
  }
  score.bucket = bucket_for(score.score);
  return score;
}

AlignmentScore align_score(const NormalizedText& a, const NormalizedText& b, Denominator denominator) {
  const auto wa = split_words(a.value);
  const auto wb = split_words(b.value);
  return align_words(wa, wb, denominator);
}

}  // namespace ocrbench

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace ocrbench {

/// Canonical form of a piece of text, shared by test cases and tool output.
///
/// `value` is NFC, uses ASCII quotes and hyphens, carries no Markdown
/// bold/italic markers, and has every whitespace run folded to one space
/// (or to one newline when the run contains a line break and line breaks are
/// preserved). `source_len` counts code points of the raw input.
struct NormalizedText {
  std::string value;
  std::size_t source_len = 0;

  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;
};

enum class LineBreaks {
  kPreserve,  // whitespace runs containing a line break become "\n"
  kCollapse,  // every whitespace run becomes " "
};

struct NormalizeOptions {
  LineBreaks line_breaks = LineBreaks::kPreserve;
};

/// Stages, in order:
///   1. `<br>`, `<br/>`, `<br />` (any case) become newlines
///   2. Unicode NFC
///   3. curly quotes, U+2010..U+2015 and U+2212 fold to ASCII; U+00AD is dropped
///   4. paired Markdown emphasis markers on one line are removed
///   5. whitespace runs collapse; leading and trailing whitespace is trimmed
/// The pipeline repeats until its output is stable, so the result is a fixed
/// point of `normalize`.
NormalizedText normalize(std::string_view raw, NormalizeOptions options = {});

namespace detail {

std::u32string replace_line_break_tags(std::u32string_view text);
std::u32string fold_punctuation(std::u32string_view text);
std::u32string strip_emphasis(std::u32string_view text);
std::u32string collapse_whitespace(std::u32string_view text, LineBreaks line_breaks);

}  // namespace detail
}  // namespace ocrbench

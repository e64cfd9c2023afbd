#include "ocrbench/normalize.hpp"

#include <algorithm>
#include <vector>

#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace detail {
namespace {

char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }

// Length of a `<br>`, `<br/>` or `<br />` tag starting at `pos`, or 0.
std::size_t line_break_tag_length(std::u32string_view s, std::size_t pos) {
  if (pos + 3 > s.size()) return 0;
  if (s[pos] != U'<' || ascii_lower(s[pos + 1]) != U'b' || ascii_lower(s[pos + 2]) != U'r') return 0;
  std::size_t i = pos + 3;
  while (i < s.size() && (s[i] == U' ' || s[i] == U'\t')) ++i;
  if (i < s.size() && s[i] == U'/') ++i;
  if (i < s.size() && s[i] == U'>') return i + 1 - pos;
  return 0;
}

struct DelimiterRun {
  std::size_t pos;
  std::size_t len;
  char32_t ch;
  bool can_open;
  bool can_close;
  std::size_t strip_front = 0;
  std::size_t strip_back = 0;
};

void strip_line(std::u32string_view line, std::u32string& out) {
  std::vector<DelimiterRun> runs;
  for (std::size_t i = 0; i < line.size();) {
    const char32_t c = line[i];
    if (c != U'*' && c != U'_') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] == c) ++j;
    const char32_t before = i > 0 ? line[i - 1] : U' ';
    const char32_t after = j < line.size() ? line[j] : U' ';
    DelimiterRun run{i, j - i, c, !is_white_space(after), !is_white_space(before)};
    if (c == U'_') {
      // Intraword underscores (snake_case) never delimit emphasis.
      run.can_open = run.can_open && !is_alphanumeric(before);
      run.can_close = run.can_close && !is_alphanumeric(after);
    }
    runs.push_back(run);
    i = j;
  }

  std::vector<std::size_t> openers;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto& run = runs[r];
    bool paired = false;
    if (run.can_close) {
      for (std::size_t k = openers.size(); k-- > 0;) {
        auto& opener = runs[openers[k]];
        if (opener.ch != run.ch) continue;
        const std::size_t n = std::min(opener.len - opener.strip_back, run.len);
        opener.strip_back += n;
        run.strip_front += n;
        openers.resize(k);
        paired = true;
        break;
      }
    }
    if (!paired && run.can_open) openers.push_back(r);
  }

  std::size_t cursor = 0;
  for (const auto& run : runs) {
    out.append(line.substr(cursor, run.pos - cursor));
    out.append(run.len - run.strip_front - run.strip_back, run.ch);
    cursor = run.pos + run.len;
  }
  out.append(line.substr(cursor));
}

}  // namespace

std::u32string replace_line_break_tags(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == U'<') {
      if (const auto n = line_break_tag_length(text, i); n > 0) {
        out.push_back(U'\n');
        i += n;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::u32string fold_punctuation(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    switch (c) {
      case 0x2018:
      case 0x2019:
      case 0x201A:
      case 0x201B:
        out.push_back(U'\'');
        break;
      case 0x201C:
      case 0x201D:
      case 0x201E:
      case 0x201F:
        out.push_back(U'"');
        break;
      case 0x00AD:
        break;
      default:
        if ((c >= 0x2010 && c <= 0x2015) || c == 0x2212) {
          out.push_back(U'-');
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

std::u32string strip_emphasis(std::u32string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || is_line_break(text[i])) {
      strip_line(text.substr(start, i - start), out);
      if (i < text.size()) out.push_back(text[i]);
      start = i + 1;
    }
  }
  return out;
}

std::u32string collapse_whitespace(std::u32string_view text, LineBreaks line_breaks) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (!is_white_space(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    bool has_break = false;
    while (i < text.size() && is_white_space(text[i])) {
      has_break = has_break || is_line_break(text[i]);
      ++i;
    }
    if (out.empty() || i == text.size()) continue;  // trim both ends
    out.push_back(has_break && line_breaks == LineBreaks::kPreserve ? U'\n' : U' ');
  }
  return out;
}

}  // namespace detail

namespace {

std::string run_stages(std::string_view input, LineBreaks line_breaks) {
  auto text = detail::replace_line_break_tags(to_u32(input));
  text = to_u32(to_nfc(to_utf8(text)));
  text = detail::fold_punctuation(text);
  text = detail::strip_emphasis(text);
  text = detail::collapse_whitespace(text, line_breaks);
  // Dropping markers or soft hyphens can leave a base letter next to a
  // combining mark, so recompose once more.
  return to_nfc(to_utf8(text));
}

}  // namespace

NormalizedText normalize(std::string_view raw, NormalizeOptions options) {
  NormalizedText result;
  result.source_len = count_code_points(raw);
  std::string current = run_stages(raw, options.line_breaks);
  // Later stages can expose input for earlier ones (e.g. "<**b**r>").
  for (int i = 0; i < 16; ++i) {
    std::string next = run_stages(current, options.line_breaks);
    if (next == current) break;
    current = std::move(next);
  }
  result.value = std::move(current);
  return result;
}

}  // namespace ocrbench

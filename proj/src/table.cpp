#include "ocrbench/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "ocrbench/normalize.hpp"
#include "ocrbench/unicode.hpp"

namespace ocrbench {

LogicalGrid::LogicalGrid(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), slots_(rows * cols) {}

std::size_t LogicalGrid::occupied_count() const {
  return static_cast<std::size_t>(
      std::count_if(slots_.begin(), slots_.end(), [](const auto& s) { return s.has_value(); }));
}

std::size_t LogicalGrid::place(std::size_t row, std::size_t col, std::size_t row_span, std::size_t col_span,
                               std::size_t cell_id, const std::string& text) {
  std::size_t written = 0;
  for (std::size_t r = row; r < std::min(rows_, row + row_span); ++r) {
    for (std::size_t c = col; c < std::min(cols_, col + col_span); ++c) {
      auto& slot = slots_[r * cols_ + c];
      if (slot) continue;
      slot = Slot{cell_id, text};
      ++written;
    }
  }
  return written;
}

void LogicalGrid::resize(std::size_t rows, std::size_t cols) {
  if (rows == rows_ && cols == cols_) return;
  std::vector<std::optional<Slot>> next(rows * cols);
  for (std::size_t r = 0; r < std::min(rows, rows_); ++r) {
    for (std::size_t c = 0; c < std::min(cols, cols_); ++c) next[r * cols + c] = std::move(slots_[r * cols_ + c]);
  }
  rows_ = rows;
  cols_ = cols;
  slots_ = std::move(next);
}

namespace {

constexpr std::size_t kMaxSpan = 1000;
constexpr std::size_t kMaxGridPositions = 1'000'000;

struct SourceCell {
  std::string text;  // raw, before normalization
  std::size_t row_span = 1;
  std::size_t col_span = 1;
};

using SourceRows = std::vector<std::vector<SourceCell>>;

// Lays out rows the way HTML does: each cell takes the next free column of
// its row; spans reaching past the last row are clipped.
std::optional<LogicalGrid> layout(const SourceRows& rows, std::string& diagnostic) {
  if (rows.empty()) {
    diagnostic = "table has no rows";
    return std::nullopt;
  }
  const std::size_t n_rows = rows.size();
  std::vector<std::vector<bool>> taken(n_rows);
  struct Placement {
    std::size_t row, col, row_span, col_span, id;
    const SourceCell* cell;
  };
  std::vector<Placement> placements;
  std::size_t n_cols = 0;
  std::size_t id = 0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::size_t c = 0;
    for (const auto& cell : rows[r]) {
      while (c < taken[r].size() && taken[r][c]) ++c;
      const std::size_t row_span = std::min(cell.row_span, n_rows - r);
      const std::size_t col_span = cell.col_span;
      for (std::size_t rr = r; rr < r + row_span; ++rr) {
        if (taken[rr].size() < c + col_span) taken[rr].resize(c + col_span, false);
        for (std::size_t cc = c; cc < c + col_span; ++cc) taken[rr][cc] = true;
      }
      placements.push_back({r, c, row_span, col_span, id++, &cell});
      c += col_span;
      n_cols = std::max(n_cols, c);
      if (n_rows * n_cols > kMaxGridPositions) {
        diagnostic = "table too large after span expansion";
        return std::nullopt;
      }
    }
  }
  if (n_cols == 0) {
    diagnostic = "table has no cells";
    return std::nullopt;
  }
  LogicalGrid grid(n_rows, n_cols);
  for (const auto& p : placements) {
    grid.place(p.row, p.col, p.row_span, p.col_span, p.id, normalize(p.cell->text).value);
  }
  return grid;
}

// ---- Markdown ----------------------------------------------------------

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_pipe_row(std::string_view line) {
  line = trim(line);
  if (!line.empty() && line.front() == '|') line.remove_prefix(1);
  if (!line.empty() && line.back() == '|' && (line.size() < 2 || line[line.size() - 2] != '\\')) {
    line.remove_suffix(1);
  }
  std::vector<std::string> cells;
  std::string current;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
      current.push_back('|');
      ++i;
    } else if (line[i] == '|') {
      cells.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(line[i]);
    }
  }
  cells.emplace_back(trim(current));
  return cells;
}

bool is_delimiter_row(std::string_view line) {
  if (line.find('-') == std::string_view::npos) return false;
  const auto cells = split_pipe_row(line);
  if (cells.empty()) return false;
  for (const auto& cell : cells) {
    std::string_view c = cell;
    if (!c.empty() && c.front() == ':') c.remove_prefix(1);
    if (!c.empty() && c.back() == ':') c.remove_suffix(1);
    if (c.empty() || c.find_first_not_of('-') != std::string_view::npos) return false;
  }
  return true;
}

bool is_fence(std::string_view line) {
  const auto t = trim(line);
  return t.starts_with("```") || t.starts_with("~~~");
}

void extract_markdown(std::string_view raw, TableExtraction& out) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= raw.size();) {
    const auto end = raw.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(raw.substr(start));
      break;
    }
    lines.push_back(raw.substr(start, end - start));
    start = end + 1;
  }
  bool in_fence = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_fence(lines[i])) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    if (lines[i].find('|') == std::string_view::npos || i + 1 >= lines.size() || !is_delimiter_row(lines[i + 1])) {
      continue;
    }
    const auto header = split_pipe_row(lines[i]);
    const auto delimiter = split_pipe_row(lines[i + 1]);
    if (header.size() != delimiter.size()) {
      out.diagnostics.push_back("markdown table at line " + std::to_string(i + 1) +
                                ": header and delimiter row widths differ");
      ++i;
      continue;
    }
    SourceRows rows;
    const auto add_row = [&rows](const std::vector<std::string>& cells) {
      auto& row = rows.emplace_back();
      for (const auto& text : cells) row.push_back({text, 1, 1});
    };
    add_row(header);
    std::size_t j = i + 2;
    for (; j < lines.size(); ++j) {
      if (trim(lines[j]).empty() || lines[j].find('|') == std::string_view::npos || is_fence(lines[j])) break;
      add_row(split_pipe_row(lines[j]));
    }
    std::string diagnostic;
    if (auto grid = layout(rows, diagnostic)) {
      out.tables.push_back({TableSyntax::kMarkdown, std::move(*grid)});
    } else {
      out.diagnostics.push_back("markdown table at line " + std::to_string(i + 1) + ": " + diagnostic);
    }
    i = j - 1;
  }
}

// ---- HTML --------------------------------------------------------------

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  std::vector<std::pair<std::string, std::string>> attributes;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

// Parses the tag starting at raw[pos] == '<'; on success sets `end` one past '>'.
std::optional<Tag> parse_tag(std::string_view raw, std::size_t pos, std::size_t& end) {
  std::size_t i = pos + 1;
  Tag tag;
  if (i < raw.size() && raw[i] == '/') {
    tag.closing = true;
    ++i;
  }
  const std::size_t name_start = i;
  while (i < raw.size() && std::isalnum(static_cast<unsigned char>(raw[i]))) ++i;
  if (i == name_start) return std::nullopt;
  tag.name = lower(raw.substr(name_start, i - name_start));
  while (i < raw.size() && raw[i] != '>') {
    if (std::isspace(static_cast<unsigned char>(raw[i])) || raw[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t key_start = i;
    while (i < raw.size() && raw[i] != '=' && raw[i] != '>' && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::string key = lower(raw.substr(key_start, i - key_start));
    std::string value;
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    if (i < raw.size() && raw[i] == '=') {
      ++i;
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      if (i < raw.size() && (raw[i] == '"' || raw[i] == '\'')) {
        const char quote = raw[i++];
        const std::size_t value_end = raw.find(quote, i);
        if (value_end == std::string_view::npos) return std::nullopt;
        value = std::string(raw.substr(i, value_end - i));
        i = value_end + 1;
      } else {
        const std::size_t value_start = i;
        while (i < raw.size() && raw[i] != '>' && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        value = std::string(raw.substr(value_start, i - value_start));
      }
    }
    if (!key.empty()) tag.attributes.emplace_back(std::move(key), std::move(value));
  }
  if (i >= raw.size()) return std::nullopt;
  end = i + 1;
  return tag;
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '&') {
      out.push_back(text[i]);
      continue;
    }
    const auto semi = text.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const auto entity = text.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (entity == "amp") cp = U'&';
    else if (entity == "lt") cp = U'<';
    else if (entity == "gt") cp = U'>';
    else if (entity == "quot") cp = U'"';
    else if (entity == "apos") cp = U'\'';
    else if (entity == "nbsp") cp = 0x00A0;
    else if (entity.size() > 1 && entity[0] == '#') {
      unsigned value = 0;
      const bool hex = entity[1] == 'x' || entity[1] == 'X';
      const auto digits = entity.substr(hex ? 2 : 1);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, hex ? 16 : 10);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && value > 0 && value <= 0x10FFFF) cp = value;
    }
    if (!cp) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

std::size_t span_attribute(const Tag& tag, std::string_view name) {
  for (const auto& [key, value] : tag.attributes) {
    if (key != name) continue;
    std::size_t span = 0;
    const auto v = trim(value);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), span);
    if (ec != std::errc() || span == 0) return 1;
    return std::min(span, kMaxSpan);
  }
  return 1;
}

struct HtmlTableBuilder {
  std::size_t offset = 0;
  SourceRows rows;
  bool in_row = false;
  SourceCell* cell = nullptr;

  void start_row() {
    rows.emplace_back();
    in_row = true;
    cell = nullptr;
  }
  void start_cell(const Tag& tag) {
    if (!in_row) start_row();
    auto& row = rows.back();
    row.push_back({"", span_attribute(tag, "rowspan"), span_attribute(tag, "colspan")});
    cell = &row.back();
  }
  void append_text(std::string_view text) {
    if (cell != nullptr) cell->text += text;
  }
  std::string flat_text() const {
    std::string text;
    for (const auto& row : rows) {
      for (const auto& c : row) {
        if (!text.empty()) text.push_back(' ');
        text += c.text;
      }
    }
    return text;
  }
};

void extract_html(std::string_view raw, TableExtraction& out) {
  std::vector<HtmlTableBuilder> stack;
  for (std::size_t i = 0; i < raw.size();) {
    if (raw[i] != '<') {
      const auto next = raw.find('<', i);
      const auto text = raw.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i);
      if (!stack.empty()) stack.back().append_text(decode_entities(text));
      i = next == std::string_view::npos ? raw.size() : next;
      continue;
    }
    if (raw.substr(i).starts_with("<!--")) {
      const auto close = raw.find("-->", i + 4);
      i = close == std::string_view::npos ? raw.size() : close + 3;
      continue;
    }
    std::size_t end = 0;
    const auto tag = parse_tag(raw, i, end);
    if (!tag) {
      if (!stack.empty()) stack.back().append_text("<");
      ++i;
      continue;
    }
    i = end;
    if (tag->name == "table") {
      if (!tag->closing) {
        stack.push_back(HtmlTableBuilder{});
        stack.back().offset = i;
        continue;
      }
      if (stack.empty()) continue;
      HtmlTableBuilder finished = std::move(stack.back());
      stack.pop_back();
      std::string diagnostic;
      if (auto grid = layout(finished.rows, diagnostic)) {
        out.tables.push_back({TableSyntax::kHtml, std::move(*grid)});
      } else {
        out.diagnostics.push_back("html table at byte " + std::to_string(finished.offset) + ": " + diagnostic);
      }
      if (!stack.empty()) stack.back().append_text(" " + finished.flat_text() + " ");
      continue;
    }
    if (stack.empty()) continue;
    auto& builder = stack.back();
    if (tag->name == "tr") {
      if (tag->closing) {
        builder.in_row = false;
        builder.cell = nullptr;
      } else {
        builder.start_row();
      }
    } else if (tag->name == "td" || tag->name == "th") {
      if (tag->closing) {
        builder.cell = nullptr;
      } else {
        builder.start_cell(*tag);
      }
    } else if (tag->name == "br") {
      builder.append_text("\n");
    } else if (tag->name == "p" || tag->name == "div" || tag->name == "li") {
      builder.append_text(" ");
    }
  }
  for (const auto& unfinished : stack) {
    out.diagnostics.push_back("html table at byte " + std::to_string(unfinished.offset) + ": missing </table>");
  }
}

bool text_matches(std::string_view expected_normalized, const std::optional<std::string>& actual,
                  std::size_t max_diffs, bool case_sensitive) {
  if (expected_normalized.empty()) return !actual || actual->empty();
  if (!actual) return false;
  return fuzzy_find(expected_normalized, *actual, {max_diffs, {}, case_sensitive}).passed;
}

}  // namespace

TableExtraction extract_tables(std::string_view raw) {
  TableExtraction out;
  extract_markdown(raw, out);
  extract_html(raw, out);
  return out;
}

std::vector<LogicalGrid> extract_grids(const CandidateDocument& doc) {
  auto extraction = extract_tables(doc.raw);
  std::vector<LogicalGrid> grids;
  grids.reserve(extraction.tables.size());
  for (auto& table : extraction.tables) grids.push_back(std::move(table.grid));
  return grids;
}

TableRelationTest TableRelationTest::from(const TestCase& test) {
  return {test.cell.value_or(""), test.up,    test.down,       test.left,
          test.right,             test.top_heading, test.left_heading};
}

namespace {

bool step(const LogicalGrid& grid, std::size_t& row, std::size_t& col, Direction direction) {
  switch (direction) {
    case Direction::kUp:
      if (row == 0) return false;
      --row;
      return true;
    case Direction::kDown:
      if (row + 1 >= grid.rows()) return false;
      ++row;
      return true;
    case Direction::kLeft:
      if (col == 0) return false;
      --col;
      return true;
    case Direction::kRight:
      if (col + 1 >= grid.cols()) return false;
      ++col;
      return true;
  }
  return false;
}

std::optional<std::size_t> cell_id_at(const LogicalGrid& grid, std::size_t row, std::size_t col) {
  const auto& slot = grid.at(row, col);
  return slot ? std::optional<std::size_t>(slot->cell_id) : std::nullopt;
}

}  // namespace

std::optional<std::string> neighbor_text(const LogicalGrid& grid, std::size_t row, std::size_t col,
                                         Direction direction) {
  const auto self = cell_id_at(grid, row, col);
  while (step(grid, row, col, direction)) {
    const auto& slot = grid.at(row, col);
    if (!slot) return std::string();
    if (slot->cell_id != self) return slot->text;
  }
  return std::nullopt;
}

std::optional<std::string> heading_text(const LogicalGrid& grid, std::size_t row, std::size_t col,
                                        Direction direction) {
  const auto self = cell_id_at(grid, row, col);
  while (step(grid, row, col, direction)) {
    const auto& slot = grid.at(row, col);
    if (slot && slot->cell_id != self && !slot->text.empty()) return slot->text;
  }
  return std::nullopt;
}

MatchResult check_table(const TableRelationTest& test, const CandidateDocument& doc, std::size_t max_diffs,
                        bool case_sensitive) {
  MatchResult result;
  const auto target = normalize(test.cell).value;
  if (target.empty()) {
    result.explanation = "empty target cell";
    return result;
  }
  struct Relation {
    const char* name;
    std::optional<std::string> expected;
    Direction direction;
    bool heading;
  };
  std::vector<Relation> relations;
  const auto add = [&relations](const char* name, const std::optional<std::string>& value, Direction d, bool h) {
    if (value) relations.push_back({name, normalize(*value).value, d, h});
  };
  add("up", test.up, Direction::kUp, false);
  add("down", test.down, Direction::kDown, false);
  add("left", test.left, Direction::kLeft, false);
  add("right", test.right, Direction::kRight, false);
  add("top_heading", test.top_heading, Direction::kUp, true);
  add("left_heading", test.left_heading, Direction::kLeft, true);

  const auto grids = extract_grids(doc);
  if (grids.empty()) {
    result.explanation = "no tables found";
    return result;
  }
  bool target_seen = false;
  std::string first_failure;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const auto& grid = grids[g];
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      for (std::size_t c = 0; c < grid.cols(); ++c) {
        const auto& slot = grid.at(r, c);
        if (!slot || !fuzzy_find(target, slot->text, {max_diffs, {}, case_sensitive}).passed) continue;
        target_seen = true;
        const Relation* failed = nullptr;
        for (const auto& relation : relations) {
          const auto actual = relation.heading ? heading_text(grid, r, c, relation.direction)
                                               : neighbor_text(grid, r, c, relation.direction);
          if (!text_matches(*relation.expected, actual, max_diffs, case_sensitive)) {
            failed = &relation;
            if (first_failure.empty()) {
              first_failure = std::string(relation.name) + " of cell at table " + std::to_string(g) + " (" +
                              std::to_string(r) + "," + std::to_string(c) + ") is '" + actual.value_or("<none>") +
                              "'";
            }
            break;
          }
        }
        if (failed == nullptr) {
          result.passed = true;
          result.explanation = "cell found at table " + std::to_string(g) + " (" + std::to_string(r) + "," +
                               std::to_string(c) + ") with all relations";
          return result;
        }
      }
    }
  }
  result.explanation = target_seen ? "relations not satisfied: " + first_failure : "target cell not found";
  return result;
}

MatchResult check_table(const TestCase& test, const CandidateDocument& doc) {
  return check_table(TableRelationTest::from(test), doc, static_cast<std::size_t>(test.max_diffs.value_or(0)),
                     test.effective_case_sensitive());
}

}  // namespace ocrbench

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/corpus.hpp"
#include "ocrbench/fuzzy.hpp"

namespace ocrbench {

/// A table after span expansion. Every grid position holds at most one
/// source cell; a cell spanning k positions appears at each of them with the
/// same text and the same `cell_id`.
class LogicalGrid {
 public:
  struct Slot {
    std::size_t cell_id = 0;
    std::string text;  // normalized

    friend bool operator==(const Slot&, const Slot&) = default;
  };

  LogicalGrid() = default;
  LogicalGrid(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  const std::optional<Slot>& at(std::size_t row, std::size_t col) const { return slots_[row * cols_ + col]; }
  bool occupied(std::size_t row, std::size_t col) const { return at(row, col).has_value(); }
  std::size_t occupied_count() const;

  /// Places a source cell; positions already taken are left alone.
  /// Returns the number of positions written.
  std::size_t place(std::size_t row, std::size_t col, std::size_t row_span, std::size_t col_span,
                    std::size_t cell_id, const std::string& text);

  /// Grows the grid, keeping existing slots.
  void resize(std::size_t rows, std::size_t cols);

  friend bool operator==(const LogicalGrid&, const LogicalGrid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::optional<Slot>> slots_;
};

enum class TableSyntax { kMarkdown, kHtml };

struct ExtractedTable {
  TableSyntax syntax = TableSyntax::kMarkdown;
  LogicalGrid grid;
};

struct TableExtraction {
  std::vector<ExtractedTable> tables;
  std::vector<std::string> diagnostics;  // skipped malformed tables
};

/// Finds every Markdown pipe table and HTML `<table>` in raw tool output.
TableExtraction extract_tables(std::string_view raw);

std::vector<LogicalGrid> extract_grids(const CandidateDocument& doc);

/// Expected relations around a target cell; unset fields are not checked.
struct TableRelationTest {
  std::string cell;
  std::optional<std::string> up;
  std::optional<std::string> down;
  std::optional<std::string> left;
  std::optional<std::string> right;
  std::optional<std::string> top_heading;
  std::optional<std::string> left_heading;

  static TableRelationTest from(const TestCase& test);
};

enum class Direction { kUp, kDown, kLeft, kRight };

/// Text of the first position from (row, col) in `direction` that belongs to
/// a different source cell. Unoccupied positions read as empty text; running
/// off the grid yields nullopt.
std::optional<std::string> neighbor_text(const LogicalGrid& grid, std::size_t row, std::size_t col,
                                         Direction direction);

/// Nearest non-empty cell above (kUp) or to the left (kLeft) that belongs
/// to a different source cell.
std::optional<std::string> heading_text(const LogicalGrid& grid, std::size_t row, std::size_t col,
                                        Direction direction);

/// Passes iff some grid has some cell matching `test.cell` for which every
/// stated relation holds.
MatchResult check_table(const TableRelationTest& test, const CandidateDocument& doc, std::size_t max_diffs,
                        bool case_sensitive = true);

MatchResult check_table(const TestCase& test, const CandidateDocument& doc);

}  // namespace ocrbench

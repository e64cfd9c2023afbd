#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/normalize.hpp"

namespace ocrbench {

enum class Category { kPresent, kAbsent, kOrder, kTable, kMath, kBaseline };

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view name);

/// One pass/fail unit test bound to a page of a PDF.
///
/// Which optional fields are meaningful depends on `category`:
///   present/absent: text
///   order:          before, after
///   table:          cell plus at least one of up/down/left/right/top_heading/left_heading
///   math:           math
struct TestCase {
  std::string id;
  std::string pdf;  // relative to the corpus pdf root
  int page = 1;     // 1-based
  Category category = Category::kPresent;

  std::optional<std::string> text;
  std::optional<std::string> before;
  std::optional<std::string> after;
  std::optional<std::string> cell;
  std::optional<std::string> up;
  std::optional<std::string> down;
  std::optional<std::string> left;
  std::optional<std::string> right;
  std::optional<std::string> top_heading;
  std::optional<std::string> left_heading;
  std::optional<std::string> math;

  std::optional<int> max_diffs;
  std::optional<int> first_n;
  std::optional<int> last_n;
  std::optional<bool> case_sensitive;
  std::optional<std::string> checked;
  std::optional<std::string> url;

  // Not part of the JSONL schema; set from page flags on baseline tests.
  bool charset_check = true;

  /// Absence tests ignore case unless told otherwise; everything else is
  /// case-sensitive by default.
  bool effective_case_sensitive() const;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

/// A tool's output for one page.
struct CandidateDocument {
  std::string pdf;
  int page = 1;
  std::string tool;
  std::string raw;
  NormalizedText normalized;

  static CandidateDocument from_raw(std::string pdf, int page, std::string tool, std::string raw,
                                    NormalizeOptions options = {});
};

struct TestSource {
  std::string name;
  std::vector<TestCase> tests;
};

struct PageKey {
  std::string pdf;
  int page = 1;
  auto operator<=>(const PageKey&) const = default;
};

/// Per-page overrides read from `_page_flags.jsonl`.
struct PageFlags {
  PageKey page;
  bool cjk_ok = false;             // page legitimately contains CJK/emoji text
  bool suppress_baseline = false;  // no implicit baseline test for this page
};

enum class Severity { kWarning, kError };

struct LoadIssue {
  Severity severity = Severity::kError;
  std::string file;
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string message;
};

/// "file:line: message"
std::string describe(const LoadIssue& issue);

inline constexpr std::string_view kBaselineSource = "baseline";
inline constexpr std::string_view kPageFlagsFile = "_page_flags.jsonl";

struct Corpus {
  std::filesystem::path root;
  std::filesystem::path pdf_root;
  std::vector<TestSource> sources;  // ordered by source file name
  std::vector<PageFlags> page_flags;
  std::vector<LoadIssue> issues;

  std::size_t test_count() const;
  std::size_t warning_count() const;
  std::size_t error_count() const;
  const TestSource* find_source(std::string_view name) const;
  const PageFlags* flags_for(const PageKey& page) const;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(LoadIssue issue);
  const LoadIssue& issue() const noexcept { return issue_; }

 private:
  LoadIssue issue_;
};

struct LoadOptions {
  /// Throw on the first error instead of skipping the offending line.
  bool strict = false;
  /// Check that every referenced PDF exists under `pdf_root`.
  bool check_pdf_paths = true;
};

/// Parses one JSONL line. Unknown keys are appended to `warnings`.
/// Throws std::invalid_argument describing the first validation failure.
TestCase parse_test_case(std::string_view json_line, std::vector<std::string>* warnings = nullptr);

/// Serializes with keys in schema order; unset optional fields are omitted.
std::string to_json_line(const TestCase& test);

/// Reads every `*.jsonl` source file in `dir` (one per document source) and
/// the PDFs under `dir/pdfs`. Files whose names start with `_` are not
/// sources. Bad lines become issues and are skipped unless `strict`.
Corpus load_corpus(const std::filesystem::path& dir, LoadOptions options = {});

/// Returns a copy with a `baseline` source holding one baseline test per
/// distinct page that does not already have one and is not suppressed.
Corpus attach_baseline_tests(const Corpus& corpus);

/// Default fuzz budget: 10% of the needle length in code points, rounded down.
int default_max_diffs(std::string_view needle);

}  // namespace ocrbench

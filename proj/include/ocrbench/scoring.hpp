#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrbench/corpus.hpp"
#include "ocrbench/interval.hpp"
#include "ocrbench/math.hpp"
#include "ocrbench/text_checks.hpp"

namespace ocrbench {

class Renderer;

struct TestOutcome {
  std::string id;
  std::string source;
  Category category = Category::kPresent;
  PageKey page;
  bool passed = false;
  bool errored = false;
  std::string explanation;
};

struct SourceScore {
  std::string source;
  std::size_t passed = 0;
  std::size_t total = 0;
  double rate = 0;
};

enum class ResampleUnit { kTest, kPage };

struct BootstrapOptions {
  std::size_t iterations = 10'000;
  std::uint64_t seed = 0;
  ResampleUnit unit = ResampleUnit::kTest;
};

/// Scores of one tool over a whole corpus.
struct ToolReport {
  std::string tool;
  std::vector<TestOutcome> tests;     // corpus order
  std::vector<SourceScore> sources;   // order of first appearance in `tests`
  double overall = 0;                 // mean of the per-source rates
  Interval ci95;
  std::size_t errored = 0;
  std::vector<std::string> unmatched_outputs;  // output files no test refers to
};

struct RunOptions {
  std::size_t jobs = 1;
  BootstrapOptions bootstrap;
  Renderer* renderer = nullptr;  // math tests are errored without one
  MathOptions math;
  BaselineOptions baseline;
  NormalizeOptions normalize;
};

/// `<tool_dir>/<pdf path without extension>_pg<page>.md`.
std::filesystem::path output_path(const std::filesystem::path& tool_dir, const PageKey& page);

/// Reads a tool's output for a page. Also accepts `<tool_dir>/<pdf stem>_pg<page>.md`
/// when the nested file does not exist.
std::optional<CandidateDocument> load_output(const std::filesystem::path& tool_dir, const std::string& tool,
                                             const PageKey& page, const NormalizeOptions& normalize = {});

/// Runs one test against one page output. A missing document fails with
/// explanation "no output".
TestOutcome evaluate_test(const TestCase& test, const std::string& source, const CandidateDocument* doc,
                          const RunOptions& options);

/// Per-source pass rates in order of first appearance. Errored tests count
/// as not passed.
std::vector<SourceScore> source_scores(const std::vector<TestOutcome>& tests);

/// Unweighted mean of the per-source rates; 0 without sources.
double macro_average(const std::vector<SourceScore>& sources);

/// Percentile bootstrap of the macro average, resampling with replacement
/// within each source independently. The interval always contains the point
/// estimate.
Interval bootstrap_ci(const std::vector<TestOutcome>& tests, const BootstrapOptions& options);

/// Fills sources, overall, ci95 and errored from `tests`.
void summarize(ToolReport& report, const BootstrapOptions& options);

/// Evaluates every test of `corpus` against the outputs in `tool_dir`; the
/// tool is named after the directory.
ToolReport run_tool(const Corpus& corpus, const std::filesystem::path& tool_dir, const RunOptions& options);

struct ReportMeta {
  std::string corpus;
  std::size_t corpus_warnings = 0;
  std::size_t corpus_errors = 0;
  std::vector<std::string> corpus_issues;
  BootstrapOptions bootstrap;
  std::optional<std::string> generated_at;
};

nlohmann::ordered_json report_json(const std::vector<ToolReport>& tools, const ReportMeta& meta);

/// Inverse of `report_json` for the per-test results; aggregates are not
/// trusted and must be recomputed with `summarize`.
std::vector<ToolReport> tools_from_report(const nlohmann::json& report);

/// One row per tool: a column per source (percent, one decimal) and
/// "Overall" as `score ± half-width`.
std::string report_markdown(const std::vector<ToolReport>& tools);

std::string_view to_string(ResampleUnit unit);
std::optional<ResampleUnit> parse_resample_unit(std::string_view name);

}  // namespace ocrbench

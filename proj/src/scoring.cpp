#include "ocrbench/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ocrbench/math.hpp"
#include "ocrbench/table.hpp"

namespace ocrbench {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string page_suffix(int page) { return "_pg" + std::to_string(page) + ".md"; }

fs::path stem_path(const fs::path& tool_dir, const PageKey& page) {
  return tool_dir / (fs::path(page.pdf).stem().string() + page_suffix(page.page));
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", rate * 100);
  return buf;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

}  // namespace

std::string_view to_string(ResampleUnit unit) { return unit == ResampleUnit::kPage ? "page" : "test"; }

std::optional<ResampleUnit> parse_resample_unit(std::string_view name) {
  if (name == "test") return ResampleUnit::kTest;
  if (name == "page") return ResampleUnit::kPage;
  return std::nullopt;
}

fs::path output_path(const fs::path& tool_dir, const PageKey& page) {
  fs::path rel(page.pdf);
  rel.replace_extension();
  return tool_dir / (rel.string() + page_suffix(page.page));
}

std::optional<CandidateDocument> load_output(const fs::path& tool_dir, const std::string& tool, const PageKey& page,
                                             const NormalizeOptions& normalize) {
  auto raw = read_file(output_path(tool_dir, page));
  if (!raw) raw = read_file(stem_path(tool_dir, page));
  if (!raw) return std::nullopt;
  return CandidateDocument::from_raw(page.pdf, page.page, tool, std::move(*raw), normalize);
}

TestOutcome evaluate_test(const TestCase& test, const std::string& source, const CandidateDocument* doc,
                          const RunOptions& options) {
  TestOutcome outcome{test.id, source, test.category, {test.pdf, test.page}, false, false, ""};
  if (doc == nullptr) {
    outcome.explanation = "no output";
    return outcome;
  }
  MatchResult result;
  try {
    switch (test.category) {
      case Category::kPresent:
        result = check_presence(test, *doc);
        break;
      case Category::kAbsent:
        result = check_absence(test, *doc);
        break;
      case Category::kOrder:
        result = check_order(test, *doc);
        break;
      case Category::kTable:
        result = check_table(test, *doc);
        break;
      case Category::kMath:
        if (options.renderer == nullptr) {
          result.errored = true;
          result.explanation = "no renderer configured";
        } else {
          result = check_math(test, *doc, *options.renderer, options.math);
        }
        break;
      case Category::kBaseline:
        result = check_baseline(*doc, !test.charset_check, options.baseline);
        break;
    }
  } catch (const std::exception& e) {
    result = {};
    result.errored = true;
    result.explanation = std::string("check failed: ") + e.what();
  }
  outcome.passed = result.passed && !result.errored;
  outcome.errored = result.errored;
  outcome.explanation = std::move(result.explanation);
  return outcome;
}

std::vector<SourceScore> source_scores(const std::vector<TestOutcome>& tests) {
  std::vector<SourceScore> scores;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& t : tests) {
    auto [it, inserted] = index.try_emplace(t.source, scores.size());
    if (inserted) scores.push_back({t.source, 0, 0, 0});
    auto& s = scores[it->second];
    ++s.total;
    if (t.passed) ++s.passed;
  }
  for (auto& s : scores) s.rate = static_cast<double>(s.passed) / static_cast<double>(s.total);
  return scores;
}

double macro_average(const std::vector<SourceScore>& sources) {
  if (sources.empty()) return 0;
  double sum = 0;
  for (const auto& s : sources) sum += s.rate;
  return sum / static_cast<double>(sources.size());
}

Interval bootstrap_ci(const std::vector<TestOutcome>& tests, const BootstrapOptions& options) {
  const double point = macro_average(source_scores(tests));
  if (tests.empty() || options.iterations == 0) return {point, point};

  // Each source becomes a list of resampling units: (passed, total) per test
  // or per page.
  struct Unit {
    std::uint32_t passed;
    std::uint32_t total;
  };
  std::vector<std::vector<Unit>> sources;
  std::map<std::string, std::size_t, std::less<>> source_index;
  std::vector<std::map<PageKey, std::size_t>> page_index;
  for (const auto& t : tests) {
    auto [it, inserted] = source_index.try_emplace(t.source, sources.size());
    if (inserted) {
      sources.emplace_back();
      page_index.emplace_back();
    }
    auto& units = sources[it->second];
    if (options.unit == ResampleUnit::kTest) {
      units.push_back({t.passed ? 1u : 0u, 1u});
      continue;
    }
    auto [page_it, new_page] = page_index[it->second].try_emplace(t.page, units.size());
    if (new_page) units.push_back({0, 0});
    auto& unit = units[page_it->second];
    unit.passed += t.passed ? 1 : 0;
    unit.total += 1;
  }

  std::mt19937_64 rng(options.seed);
  std::vector<double> overall(options.iterations);
  const double n_sources = static_cast<double>(sources.size());
  for (auto& value : overall) {
    double sum = 0;
    for (const auto& units : sources) {
      std::uint64_t passed = 0;
      std::uint64_t total = 0;
      for (std::size_t k = 0; k < units.size(); ++k) {
        const auto& u = units[draw_index(rng, units.size())];
        passed += u.passed;
        total += u.total;
      }
      sum += static_cast<double>(passed) / static_cast<double>(total);
    }
    value = sum / n_sources;
  }
  std::sort(overall.begin(), overall.end());
  Interval ci{percentile(overall, 0.025), percentile(overall, 0.975)};
  ci.lo = std::min(ci.lo, point);
  ci.hi = std::max(ci.hi, point);
  return ci;
}

void summarize(ToolReport& report, const BootstrapOptions& options) {
  report.sources = source_scores(report.tests);
  report.overall = macro_average(report.sources);
  report.ci95 = bootstrap_ci(report.tests, options);
  report.errored = static_cast<std::size_t>(
      std::count_if(report.tests.begin(), report.tests.end(), [](const TestOutcome& t) { return t.errored; }));
}

ToolReport run_tool(const Corpus& corpus, const fs::path& tool_dir, const RunOptions& options) {
  ToolReport report;
  report.tool = tool_dir.filename().empty() ? tool_dir.parent_path().filename().string()
                                            : tool_dir.filename().string();

  std::vector<PageKey> pages;
  std::vector<std::pair<const TestCase*, const std::string*>> work;
  {
    std::set<PageKey> seen;
    for (const auto& source : corpus.sources) {
      for (const auto& test : source.tests) {
        work.emplace_back(&test, &source.name);
        if (seen.insert({test.pdf, test.page}).second) pages.push_back({test.pdf, test.page});
      }
    }
  }

  std::vector<std::optional<CandidateDocument>> docs(pages.size());
  parallel_for(pages.size(), options.jobs,
               [&](std::size_t i) { docs[i] = load_output(tool_dir, report.tool, pages[i], options.normalize); });
  std::map<PageKey, const CandidateDocument*> by_page;
  for (std::size_t i = 0; i < pages.size(); ++i) by_page[pages[i]] = docs[i] ? &*docs[i] : nullptr;

  report.tests.resize(work.size());
  parallel_for(work.size(), options.jobs, [&](std::size_t i) {
    const auto& [test, source] = work[i];
    report.tests[i] = evaluate_test(*test, *source, by_page.at({test->pdf, test->page}), options);
  });

  std::error_code ec;
  if (fs::is_directory(tool_dir, ec)) {
    std::set<fs::path> expected;
    for (const auto& page : pages) {
      expected.insert(output_path(tool_dir, page).lexically_normal());
      expected.insert(stem_path(tool_dir, page).lexically_normal());
    }
    for (auto it = fs::recursive_directory_iterator(tool_dir, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
      if (!it->is_regular_file() || it->path().extension() != ".md") continue;
      if (!expected.contains(it->path().lexically_normal())) {
        report.unmatched_outputs.push_back(it->path().lexically_relative(tool_dir).generic_string());
      }
    }
    std::sort(report.unmatched_outputs.begin(), report.unmatched_outputs.end());
  }

  summarize(report, options.bootstrap);
  return report;
}

ordered_json report_json(const std::vector<ToolReport>& tools, const ReportMeta& meta) {
  ordered_json j;
  j["schema_version"] = 1;
  if (meta.generated_at) j["generated_at"] = *meta.generated_at;
  j["corpus"] = {{"path", meta.corpus},
                 {"warnings", meta.corpus_warnings},
                 {"errors", meta.corpus_errors},
                 {"issues", meta.corpus_issues}};
  j["bootstrap"] = {{"iterations", meta.bootstrap.iterations},
                    {"seed", meta.bootstrap.seed},
                    {"unit", std::string(to_string(meta.bootstrap.unit))}};
  j["tools"] = ordered_json::array();
  for (const auto& tool : tools) {
    ordered_json t;
    t["name"] = tool.tool;
    t["overall"] = tool.overall;
    t["ci95"] = {tool.ci95.lo, tool.ci95.hi};
    t["errored"] = tool.errored;
    t["per_source"] = ordered_json::array();
    for (const auto& s : tool.sources) {
      t["per_source"].push_back({{"source", s.source}, {"passed", s.passed}, {"total", s.total}, {"rate", s.rate}});
    }
    t["unmatched_outputs"] = tool.unmatched_outputs;
    t["tests"] = ordered_json::array();
    for (const auto& test : tool.tests) {
      t["tests"].push_back({{"id", test.id},
                            {"source", test.source},
                            {"category", std::string(to_string(test.category))},
                            {"pdf", test.page.pdf},
                            {"page", test.page.page},
                            {"passed", test.passed},
                            {"errored", test.errored},
                            {"explanation", test.explanation}});
    }
    j["tools"].push_back(std::move(t));
  }
  return j;
}

std::vector<ToolReport> tools_from_report(const json& report) {
  std::vector<ToolReport> tools;
  for (const auto& t : report.at("tools")) {
    ToolReport tool;
    tool.tool = t.at("name").get<std::string>();
    if (t.contains("unmatched_outputs")) tool.unmatched_outputs = t.at("unmatched_outputs").get<std::vector<std::string>>();
    for (const auto& test : t.at("tests")) {
      TestOutcome outcome;
      outcome.id = test.at("id").get<std::string>();
      outcome.source = test.at("source").get<std::string>();
      const auto category = parse_category(test.at("category").get<std::string>());
      if (!category) throw std::invalid_argument("unknown category in report: " + test.at("category").dump());
      outcome.category = *category;
      outcome.page = {test.at("pdf").get<std::string>(), test.at("page").get<int>()};
      outcome.passed = test.at("passed").get<bool>();
      outcome.errored = test.value("errored", false);
      outcome.explanation = test.value("explanation", std::string());
      tool.tests.push_back(std::move(outcome));
    }
    tools.push_back(std::move(tool));
  }
  return tools;
}

std::string report_markdown(const std::vector<ToolReport>& tools) {
  std::vector<std::string> columns;
  for (const auto& tool : tools) {
    for (const auto& s : tool.sources) {
      if (std::find(columns.begin(), columns.end(), s.source) == columns.end()) columns.push_back(s.source);
    }
  }
  std::string out = "| Tool |";
  for (const auto& c : columns) out += " " + c + " |";
  out += " Overall |\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---:|";
  out += "---:|\n";
  for (const auto& tool : tools) {
    out += "| " + tool.tool + " |";
    for (const auto& c : columns) {
      const auto it = std::find_if(tool.sources.begin(), tool.sources.end(),
                                   [&](const SourceScore& s) { return s.source == c; });
      out += " " + (it == tool.sources.end() ? std::string("-") : percent(it->rate)) + " |";
    }
    out += " " + percent(tool.overall) + " ± " + percent((tool.ci95.hi - tool.ci95.lo) / 2) + " |\n";
  }
  return out;
}

}  // namespace ocrbench

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ocrbench/render.hpp"
#include "ocrbench/scoring.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

using testing::TempDir;
using testing::write_text;

std::vector<TestOutcome> outcomes(const std::vector<std::tuple<std::string, int, int>>& spec) {
  std::vector<TestOutcome> out;
  for (const auto& [source, passed, total] : spec) {
    for (int i = 0; i < total; ++i) {
      TestOutcome t;
      t.id = source + std::to_string(i);
      t.source = source;
      t.page = {source + ".pdf", 1 + i / 4};
      t.passed = i < passed;
      out.push_back(t);
    }
  }
  return out;
}

TEST(MacroAverage, TwoSources) {
  EXPECT_DOUBLE_EQ(macro_average(source_scores(outcomes({{"A", 1, 2}, {"B", 2, 2}}))), 0.75);
}

TEST(MacroAverage, ThreeSources) {
  const auto s = source_scores(outcomes({{"A", 4, 4}, {"B", 2, 4}, {"C", 3, 4}}));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(macro_average(s), 0.75);
}

TEST(MacroAverage, DoublingOneSourceChangesNothing) {
  auto base = outcomes({{"A", 1, 3}, {"B", 5, 7}});
  const double before = macro_average(source_scores(base));
  auto doubled = base;
  for (const auto& t : base) {
    if (t.source != "A") continue;
    auto copy = t;
    copy.id += "_dup";
    doubled.push_back(copy);
  }
  EXPECT_DOUBLE_EQ(macro_average(source_scores(doubled)), before);
}

TEST(MacroAverage, ErroredCountsAsNotPassed) {
  auto t = outcomes({{"A", 2, 2}});
  t[0].passed = false;
  t[0].errored = true;
  EXPECT_EQ(source_scores(t)[0].passed, 1u);
}

TEST(Bootstrap, AllPassIsDegenerate) {
  const auto ci = bootstrap_ci(outcomes({{"A", 10, 10}, {"B", 5, 5}}), {1000, 1});
  EXPECT_EQ(ci, (Interval{1.0, 1.0}));
}

TEST(Bootstrap, DeterministicPerSeed) {
  const auto t = outcomes({{"A", 30, 70}, {"B", 10, 50}});
  EXPECT_EQ(bootstrap_ci(t, {2000, 42}), bootstrap_ci(t, {2000, 42}));
  EXPECT_NE(bootstrap_ci(t, {2000, 42}), bootstrap_ci(t, {2000, 43}));
}

TEST(Bootstrap, BinomialHalfWidth) {
  const auto ci = bootstrap_ci(outcomes({{"A", 500, 1000}}), {10'000, 0});
  const double half = (ci.hi - ci.lo) / 2;
  const double analytic = 1.96 * std::sqrt(0.25 / 1000);
  EXPECT_NEAR(half, analytic, 0.15 * analytic);
}

TEST(Bootstrap, BracketsPointEstimate) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int p = static_cast<int>(rng() % (n + 1));
    const auto t = outcomes({{"A", p, n}, {"B", 1, 3}});
    const auto ci = bootstrap_ci(t, {200, rng()});
    const double point = macro_average(source_scores(t));
    ASSERT_LE(ci.lo, point);
    ASSERT_GE(ci.hi, point);
  }
}

TEST(Bootstrap, WidthShrinksWithMoreTests) {
  double small = 0;
  double large = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = bootstrap_ci(outcomes({{"A", 50, 100}}), {500, seed});
    const auto b = bootstrap_ci(outcomes({{"A", 500, 1000}}), {500, seed});
    small += a.hi - a.lo;
    large += b.hi - b.lo;
  }
  EXPECT_GT(small, large * 2);
}

TEST(Bootstrap, PageUnitGroupsTests) {
  // Every page is all-pass or all-fail, so page resampling is coarser.
  std::vector<TestOutcome> t;
  for (int page = 0; page < 20; ++page) {
    for (int k = 0; k < 10; ++k) {
      TestOutcome o;
      o.id = std::to_string(page) + "_" + std::to_string(k);
      o.source = "A";
      o.page = {"d.pdf", page + 1};
      o.passed = page % 2 == 0;
      t.push_back(o);
    }
  }
  const auto by_test = bootstrap_ci(t, {4000, 5, ResampleUnit::kTest});
  const auto by_page = bootstrap_ci(t, {4000, 5, ResampleUnit::kPage});
  EXPECT_GT(by_page.hi - by_page.lo, 2 * (by_test.hi - by_test.lo));
}

TEST(Report, MarkdownShape) {
  std::vector<std::tuple<std::string, int, int>> spec;
  for (int s = 0; s < 8; ++s) spec.emplace_back("src" + std::to_string(s), s, 8);
  ToolReport r;
  r.tool = "tool";
  r.tests = outcomes(spec);
  summarize(r, {200, 0});
  const auto md = report_markdown({r});
  const auto header = md.substr(0, md.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), '|'), 11);
  EXPECT_NE(header.find("| Overall |"), std::string::npos);
  double mean = 0;
  for (const auto& s : r.sources) mean += s.rate;
  EXPECT_DOUBLE_EQ(r.overall, mean / 8);
  EXPECT_NE(md.find("| tool | 0.0 | 12.5 | 25.0 |"), std::string::npos) << md;
}

struct Fixture {
  TempDir dir;
  Corpus corpus;

  Fixture() {
    write_text(dir / "corpus/pdfs/a.pdf", "%PDF");
    write_text(dir / "corpus/pdfs/sub/b.pdf", "%PDF");
    write_text(dir / "corpus/one.jsonl",
               R"({"id":"p1","pdf":"a.pdf","page":1,"type":"present","text":"hello world"})" "\n"
               R"({"id":"p2","pdf":"sub/b.pdf","page":2,"type":"absent","text":"footer"})" "\n");
    write_text(dir / "corpus/two.jsonl",
               R"({"id":"m1","pdf":"a.pdf","page":1,"type":"math","math":"x^2"})" "\n"
               R"({"id":"o1","pdf":"sub/b.pdf","page":2,"type":"order","before":"first","after":"second"})" "\n");
    corpus = attach_baseline_tests(load_corpus(dir / "corpus"));
  }
};

TEST(RunTool, NamingMissingAndUnmatched) {
  Fixture f;
  write_text(f.dir / "out/tool/a_pg1.md", "hello world\n\n$$x^2$$");
  write_text(f.dir / "out/tool/sub/b_pg2.md", "first then second");
  write_text(f.dir / "out/tool/stray_pg9.md", "?");
  RunOptions o;
  o.jobs = 3;
  o.bootstrap.iterations = 100;
  const auto r = run_tool(f.corpus, f.dir / "out/tool", o);
  EXPECT_EQ(r.tool, "tool");
  ASSERT_EQ(r.tests.size(), 6u);
  // math errors without a renderer
  const auto m = std::find_if(r.tests.begin(), r.tests.end(), [](const TestOutcome& t) { return t.id == "m1"; });
  EXPECT_TRUE(m->errored);
  EXPECT_EQ(r.errored, 1u);
  EXPECT_EQ(r.unmatched_outputs, std::vector<std::string>{"stray_pg9.md"});
  for (const auto& t : r.tests) {
    if (t.id != "m1") {
      EXPECT_TRUE(t.passed) << t.id << ": " << t.explanation;
    }
  }
}

TEST(RunTool, StemFallbackAndRenderer) {
  Fixture f;
  write_text(f.dir / "out/t/a_pg1.md", "hello world $x^2$");
  write_text(f.dir / "out/t/b_pg2.md", "second first");
  FixtureRenderer renderer;
  renderer.add("x^2", true, {"", true, {{"x", 0, 6, 8, 16}, {"2", 8.6, 0, 13.4, 8}}, ""});
  RunOptions o;
  o.renderer = &renderer;
  o.bootstrap.iterations = 100;
  const auto r = run_tool(f.corpus, f.dir / "out/t", o);
  EXPECT_EQ(r.errored, 0u);
  for (const auto& t : r.tests) {
    if (t.id == "o1") {
      EXPECT_FALSE(t.passed);
    } else {
      EXPECT_TRUE(t.passed) << t.id << ": " << t.explanation;
    }
  }
}

TEST(RunTool, EmptyOutputs) {
  Fixture f;
  std::filesystem::create_directories(f.dir / "out/none");
  const auto r = run_tool(f.corpus, f.dir / "out/none", {});
  EXPECT_EQ(r.overall, 0.0);
  for (const auto& t : r.tests) {
    EXPECT_FALSE(t.passed);
    EXPECT_EQ(t.explanation, "no output");
  }
}

TEST(RunTool, JsonIsIndependentOfJobsAndOrder) {
  Fixture f;
  write_text(f.dir / "out/tool/a_pg1.md", "hello world");
  write_text(f.dir / "out/tool/sub/b_pg2.md", "second");
  ReportMeta meta;
  meta.bootstrap.iterations = 500;
  RunOptions one;
  one.bootstrap = meta.bootstrap;
  RunOptions four = one;
  four.jobs = 4;
  const auto a = report_json({run_tool(f.corpus, f.dir / "out/tool", one)}, meta).dump();
  const auto b = report_json({run_tool(f.corpus, f.dir / "out/tool", four)}, meta).dump();
  EXPECT_EQ(a, b);

  auto shuffled = f.corpus;
  for (auto& s : shuffled.sources) std::reverse(s.tests.begin(), s.tests.end());
  const auto r1 = run_tool(f.corpus, f.dir / "out/tool", one);
  const auto r2 = run_tool(shuffled, f.dir / "out/tool", one);
  EXPECT_DOUBLE_EQ(r1.overall, r2.overall);
}

TEST(ReportJson, RescoreRoundTrip) {
  auto r = ToolReport{};
  r.tool = "x";
  r.tests = outcomes({{"A", 3, 5}, {"B", 1, 4}});
  r.tests[2].errored = true;
  summarize(r, {300, 9});
  ReportMeta meta;
  meta.bootstrap = {300, 9};
  const auto j = report_json({r}, meta);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_FALSE(j.contains("generated_at"));
  auto back = tools_from_report(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.size(), 1u);
  summarize(back[0], {300, 9});
  EXPECT_EQ(report_json(back, meta).dump(), j.dump());
}

}  // namespace
}  // namespace ocrbench

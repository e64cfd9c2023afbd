#include <gtest/gtest.h>

#include "ocrbench/corpus.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

using testing::TempDir;
using testing::write_text;

std::string line(const std::string& id, const std::string& pdf, int page, const std::string& type,
                 const std::string& extra) {
  return R"({"id":")" + id + R"(","pdf":")" + pdf + R"(","page":)" + std::to_string(page) + R"(,"type":")" + type +
         "\"" + (extra.empty() ? "" : "," + extra) + "}\n";
}

TEST(ParseTestCase, RequiredFieldsPerCategory) {
  EXPECT_NO_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"present","text":"hi"})"));
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"present"})"), std::invalid_argument);
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"order","before":"x"})"),
               std::invalid_argument);
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":0,"type":"baseline"})"), std::invalid_argument);
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"sideways"})"), std::invalid_argument);
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"text":"hi"})"), std::invalid_argument);
  EXPECT_THROW(parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"present","text":"x","last_n":0})"),
               std::invalid_argument);
  EXPECT_THROW(parse_test_case("{not json"), std::invalid_argument);
}

TEST(ParseTestCase, UnknownKeysWarn) {
  std::vector<std::string> warnings;
  parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"baseline","colour":"red"})", &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("colour"), std::string::npos);
}

TEST(ParseTestCase, CaseSensitivityDefaults) {
  auto absent = parse_test_case(R"({"id":"a","pdf":"x.pdf","page":1,"type":"absent","text":"x"})");
  auto present = parse_test_case(R"({"id":"b","pdf":"x.pdf","page":1,"type":"present","text":"x"})");
  EXPECT_FALSE(absent.effective_case_sensitive());
  EXPECT_TRUE(present.effective_case_sensitive());
  absent.case_sensitive = true;
  EXPECT_TRUE(absent.effective_case_sensitive());
}

TEST(ParseTestCase, CanonicalRoundTrip) {
  const std::string scrambled =
      R"({"type":"table","cell":"4.5%","page":3,"up":"2.4%","id":"t9","max_diffs":1,"pdf":"d/x.pdf","checked":"verified","url":"http://e"})";
  const auto t = parse_test_case(scrambled);
  const auto canonical = to_json_line(t);
  EXPECT_EQ(canonical,
            R"({"id":"t9","pdf":"d/x.pdf","page":3,"type":"table","cell":"4.5%","up":"2.4%","max_diffs":1,"checked":"verified","url":"http://e"})");
  EXPECT_EQ(parse_test_case(canonical), t);
  EXPECT_EQ(to_json_line(parse_test_case(canonical)), canonical);
}

TEST(LoadCorpus, TwoSourcesOfThree) {
  TempDir dir;
  write_text(dir / "pdfs/a.pdf", "%PDF");
  write_text(dir / "pdfs/b.pdf", "%PDF");
  std::string a, b;
  for (int i = 0; i < 3; ++i) {
    a += line("a" + std::to_string(i), "a.pdf", 1, "present", R"("text":"x")");
    b += line("b" + std::to_string(i), "b.pdf", i + 1, "absent", R"("text":"y")");
  }
  write_text(dir / "arxiv.jsonl", a);
  write_text(dir / "scans.jsonl", b);
  const auto c = load_corpus(dir.path());
  ASSERT_EQ(c.sources.size(), 2u);
  EXPECT_EQ(c.sources[0].name, "arxiv");
  EXPECT_EQ(c.sources[0].tests.size(), 3u);
  EXPECT_EQ(c.sources[1].tests.size(), 3u);
  EXPECT_TRUE(c.issues.empty());
}

TEST(LoadCorpus, BadLinesNameTheirLocation) {
  TempDir dir;
  write_text(dir / "pdfs/a.pdf", "%PDF");
  write_text(dir / "src.jsonl", line("ok", "a.pdf", 1, "present", R"("text":"x")") +
                                    R"({"id":"nocat","pdf":"a.pdf","page":1,"text":"x"})" "\n" +
                                    line("ok", "a.pdf", 1, "present", R"("text":"dup")") +
                                    line("gone", "missing.pdf", 1, "baseline", ""));
  const auto c = load_corpus(dir.path());
  EXPECT_EQ(c.test_count(), 1u);
  ASSERT_EQ(c.error_count(), 3u);
  EXPECT_EQ(describe(c.issues[0]).rfind("src.jsonl:2:", 0), 0u) << describe(c.issues[0]);
  EXPECT_NE(c.issues[1].message.find("duplicate"), std::string::npos);
  EXPECT_NE(c.issues[2].message.find("missing.pdf"), std::string::npos);
  EXPECT_THROW(load_corpus(dir.path(), {.strict = true}), CorpusError);
  EXPECT_EQ(load_corpus(dir.path(), {.check_pdf_paths = false}).test_count(), 2u);
}

TEST(LoadCorpus, MissingDirectory) { EXPECT_THROW(load_corpus("/nonexistent/corpus"), CorpusError); }

TEST(LoadCorpus, TableShapedMix) {
  const std::vector<std::pair<std::string, int>> sources = {
      {"arxiv_math", 2927}, {"old_scans_math", 458}, {"tables", 1020}, {"old_scans", 526},
      {"headers_footers", 753}, {"multi_column", 884}, {"long_tiny_text", 442}};
  TempDir dir;
  write_text(dir / "pdfs/doc.pdf", "%PDF");
  const char* kinds[] = {"present", "absent", "order", "table", "math", "baseline"};
  const char* extras[] = {R"("text":"a")", R"("text":"a")", R"("before":"a","after":"b")", R"("cell":"1","up":"h")",
                          R"("math":"x^2")", ""};
  for (const auto& [name, total] : sources) {
    std::string body;
    for (int i = 0; i < total; ++i) {
      body += line(name + std::to_string(i), "doc.pdf", 1 + i / 10, kinds[i % 6], extras[i % 6]);
    }
    write_text(dir / (name + ".jsonl"), body);
  }
  const auto c = load_corpus(dir.path());
  EXPECT_TRUE(c.issues.empty());
  std::size_t sum = 0;
  for (const auto& [name, total] : sources) {
    const auto* s = c.find_source(name);
    ASSERT_NE(s, nullptr) << name;
    EXPECT_EQ(s->tests.size(), static_cast<std::size_t>(total)) << name;
    sum += s->tests.size();
  }
  EXPECT_EQ(sum, 7010u);
}

TEST(Baselines, OnePerDistinctPage) {
  TempDir dir;
  write_text(dir / "pdfs/a.pdf", "%PDF");
  write_text(dir / "s.jsonl", line("1", "a.pdf", 1, "present", R"("text":"x")") +
                                  line("2", "a.pdf", 1, "absent", R"("text":"x")") +
                                  line("3", "a.pdf", 2, "present", R"("text":"x")"));
  auto c = attach_baseline_tests(load_corpus(dir.path()));
  const auto* b = c.find_source("baseline");
  ASSERT_NE(b, nullptr);
  EXPECT_EQ(b->tests.size(), 2u);
  // Attaching twice adds nothing.
  c = attach_baseline_tests(c);
  EXPECT_EQ(c.find_source("baseline")->tests.size(), 2u);
}

TEST(Baselines, FlagsDisableCharsetOrSuppress) {
  TempDir dir;
  write_text(dir / "pdfs/a.pdf", "%PDF");
  write_text(dir / "s.jsonl", line("1", "a.pdf", 1, "present", R"("text":"x")") +
                                  line("2", "a.pdf", 2, "present", R"("text":"x")") +
                                  line("3", "a.pdf", 3, "present", R"("text":"x")"));
  write_text(dir / "_page_flags.jsonl", R"({"pdf":"a.pdf","page":1,"cjk_ok":true})" "\n"
                                        R"({"pdf":"a.pdf","page":2,"suppress_baseline":true})" "\n");
  const auto c = attach_baseline_tests(load_corpus(dir.path()));
  const auto& tests = c.find_source("baseline")->tests;
  ASSERT_EQ(tests.size(), 2u);
  EXPECT_EQ(tests[0].page, 1);
  EXPECT_FALSE(tests[0].charset_check);
  EXPECT_EQ(tests[1].page, 3);
  EXPECT_TRUE(tests[1].charset_check);
}

TEST(Baselines, EmptyCorpus) {
  TempDir dir;
  const auto c = attach_baseline_tests(load_corpus(dir.path()));
  const auto* b = c.find_source("baseline");
  EXPECT_TRUE(b == nullptr || b->tests.empty());
}

}  // namespace
}  // namespace ocrbench

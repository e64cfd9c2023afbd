#include <sys/wait.h>

#include <cstdio>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ocrbench/convert.hpp"
#include "ocrbench/elo.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

using nlohmann::json;
using testing::TempDir;
using testing::read_text;
using testing::write_text;

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI binary with stderr discarded.
Run ocrbench(const std::string& args) {
  const std::string cmd = std::string(OCRBENCH_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

struct BenchDir {
  TempDir dir;
  BenchDir() {
    write_text(dir / "corpus/pdfs/doc.pdf", "%PDF");
    write_text(dir / "corpus/src.jsonl",
               R"({"id":"a","pdf":"doc.pdf","page":1,"type":"present","text":"The quick brown fox"})" "\n"
               R"({"id":"b","pdf":"doc.pdf","page":1,"type":"absent","text":"Page 7"})" "\n"
               R"({"id":"c","pdf":"doc.pdf","page":1,"type":"order","before":"quick","after":"lazy"})" "\n");
    write_text(dir / "out/alpha/doc_pg1.md", "The quick brown fox jumps over the lazy dog.");
    write_text(dir / "out/bravo/doc_pg1.md", "lazy dog first, then The quick brown fox.");
  }
  std::string run_args(const std::string& json_name) const {
    return "--no-timestamps bench run --corpus " + q(dir / "corpus") + " --outputs " + q(dir / "out/alpha") +
           " --outputs " + q(dir / "out/bravo") + " --iterations 200 --json " + q(dir / json_name) + " --md " +
           q(dir / "r.md");
  }
};

TEST(Cli, BenchRunWritesReports) {
  BenchDir b;
  const auto r = ocrbench(b.run_args("r.json"));
  EXPECT_EQ(r.code, 0) << r.out;
  const auto report = json::parse(read_text(b.dir / "r.json"));
  ASSERT_EQ(report["tools"].size(), 2u);
  EXPECT_EQ(report["tools"][0]["name"], "alpha");
  EXPECT_EQ(report["tools"][0]["overall"], 1.0);
  EXPECT_LT(report["tools"][1]["overall"].get<double>(), 1.0);
  EXPECT_FALSE(report.contains("generated_at"));
  const auto md = read_text(b.dir / "r.md");
  EXPECT_NE(md.find("| alpha |"), std::string::npos);
  EXPECT_NE(md.find("Overall"), std::string::npos);
}

TEST(Cli, BenchRunIsReproducible) {
  BenchDir b;
  ASSERT_EQ(ocrbench(b.run_args("one.json")).code, 0);
  ASSERT_EQ(ocrbench(b.run_args("two.json") + " --jobs 3").code, 0);
  EXPECT_EQ(read_text(b.dir / "one.json"), read_text(b.dir / "two.json"));

  // Rescoring the report reproduces it.
  ASSERT_EQ(ocrbench("--no-timestamps bench score --results " + q(b.dir / "one.json") + " --iterations 200 --json " +
                     q(b.dir / "re.json"))
                .code,
            0);
  EXPECT_EQ(read_text(b.dir / "one.json"), read_text(b.dir / "re.json"));
}

TEST(Cli, BadCorpusLineIsAWarning) {
  BenchDir b;
  write_text(b.dir / "corpus/more.jsonl", "{broken\n");
  const auto r = ocrbench(b.run_args("r.json"));
  EXPECT_EQ(r.code, 1);
  const auto report = json::parse(read_text(b.dir / "r.json"));
  EXPECT_EQ(report["corpus"]["errors"], 1);
  EXPECT_EQ(report["corpus"]["issues"].size(), 1u);
}

TEST(Cli, UsageErrorsAreFatal) {
  EXPECT_EQ(ocrbench("bogus").code, 2);
  EXPECT_EQ(ocrbench("bench run --corpus /nonexistent --outputs /nonexistent").code, 2);
  EXPECT_EQ(ocrbench("elo").code, 2);
  EXPECT_EQ(ocrbench("--help").code, 0);
}

TEST(Cli, AlignWritesCsvAndSummary) {
  TempDir dir;
  write_text(dir / "a/x.md", "one two three four");
  write_text(dir / "b/x.md", "one two three four");
  write_text(dir / "a/y.md", "alpha beta");
  write_text(dir / "b/y.md", "gamma delta");
  const auto r = ocrbench("align --a " + q(dir / "a") + " --b " + q(dir / "b") + " --csv " + q(dir / "s.csv") +
                          " --summary " + q(dir / "s.md") + " --name bravo");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(read_text(dir / "s.csv"),
            "file,len_a,len_b,matched,score,bucket\nx.md,4,4,4,1.000000,high\ny.md,2,2,0,0.000000,low\n");
  EXPECT_NE(read_text(dir / "s.md").find("| bravo |"), std::string::npos);
  write_text(dir / "a/only.md", "x");
  EXPECT_EQ(ocrbench("align --a " + q(dir / "a") + " --b " + q(dir / "b")).code, 1);
}

TEST(Cli, EloReport) {
  TempDir dir;
  std::string lines;
  for (int i = 0; i < 6; ++i) {
    Judgment j{"p" + std::to_string(i), "alpha", "bravo", i < 4 ? Outcome::kAWins : Outcome::kBWins, "ann",
               "2025-01-01T00:00:00Z", "pair" + std::to_string(i)};
    lines += to_json_line(j) + "\n";
  }
  write_text(dir / "j.jsonl", lines);
  const auto r = ocrbench("--no-timestamps elo --judgments " + q(dir / "j.jsonl") +
                          " --resamples 100 --shuffles 10 --json " + q(dir / "e.json"));
  EXPECT_EQ(r.code, 0);
  const auto report = json::parse(read_text(dir / "e.json"));
  EXPECT_EQ(report["decisive"], 6);
  EXPECT_EQ(report["ratings"][0]["tool"], "alpha");
  EXPECT_EQ(report["pairs"].size(), 1u);
}

TEST(Cli, AnchorBuildFromSidecar) {
  TempDir dir;
  write_text(dir / "p.json", R"({"w":612,"h":792,"blocks":[{"x":72,"y":700,"t":"Title"}]})");
  auto r = ocrbench("anchor build --pdf " + q(dir / "p.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "Page dimensions: 612x792\n[72,700] Title\n");
  r = ocrbench("anchor build --prompt --pdf " + q(dir / "p.json"));
  EXPECT_NE(r.out.find("RAW_TEXT_START\nPage dimensions: 612x792\n[72,700] Title\nRAW_TEXT_END"), std::string::npos);
}

TEST(Cli, ConvertAgainstLocalEndpoint) {
  TempDir dir;
  write_text(dir / "corpus/src.jsonl",
             R"({"id":"a","pdf":"d/doc.pdf","page":2,"type":"present","text":"x"})" "\n"
             R"({"id":"b","pdf":"e.pdf","page":1,"type":"present","text":"x"})" "\n");
  write_text(dir / "layouts/d/doc_pg2.json", R"({"w":10,"h":10,"blocks":[{"x":1,"y":1,"t":"first page"}]})");
  write_text(dir / "layouts/e_pg1.json", R"({"w":10,"h":10,"blocks":[{"x":1,"y":1,"t":"raw words"}]})");

  PageResponse ok;
  ok.natural_text = "converted";
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const bool first = req.body.find("first page") != std::string::npos;
    const json content = first ? json(serialize_response(ok)) : json("not a structured answer");
    res.set_content(json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto r = ocrbench("convert --corpus " + q(dir / "corpus") + " --endpoint http://127.0.0.1:" +
                          std::to_string(port) + "/v1/chat/completions --out " + q(dir / "out") + " --layouts " +
                          q(dir / "layouts") + " --max-retries 1 --model m");
  server.stop();
  t.join();
  EXPECT_EQ(r.code, 1);  // one page fell back
  EXPECT_EQ(read_text(dir / "out/d/doc_pg2.md"), "converted");
  EXPECT_EQ(read_text(dir / "out/e_pg1.md"), "raw words");
}

}  // namespace
}  // namespace ocrbench

#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ocrbench/align.hpp"
#include "ocrbench/anchor.hpp"
#include "ocrbench/convert.hpp"
#include "ocrbench/corpus.hpp"
#include "ocrbench/elo.hpp"
#include "ocrbench/http_converter.hpp"
#include "ocrbench/pdf_layout.hpp"
#include "ocrbench/render.hpp"
#include "ocrbench/review.hpp"
#include "ocrbench/scoring.hpp"
#include "ocrbench/unicode.hpp"

namespace ocrbench::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kApiKeyEnv = "OCRBENCH_API_KEY";

// Raised for problems that make the run meaningless (bad paths, bad knobs).
class FatalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool no_timestamps = false;
  std::string log_level = "info";
};

std::optional<std::string> timestamp(const Globals& g) {
  if (g.no_timestamps) return std::nullopt;
  return utc_timestamp();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FatalError("cannot write " + path.string());
  out << content;
  if (!out) throw FatalError("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FatalError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> argv;
  for (std::string word; in >> word;) argv.push_back(word);
  return argv;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
}

// ---- bench run / bench score ---------------------------------------------

struct BenchArgs {
  fs::path corpus;
  std::vector<fs::path> outputs;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::size_t iterations = 10'000;
  std::string resample = "test";
  fs::path json_out;
  fs::path md_out;
  fs::path render_fixtures;
  std::string bridge;
  std::size_t bridge_pool = 1;
  int bridge_timeout_ms = 30'000;
  double tau = 0.25;
  bool strict = false;
  bool skip_pdf_check = false;
  std::size_t repeat_threshold = 30;
  bool collapse_newlines = false;
  fs::path results;
};

ResampleUnit resample_unit(const std::string& name) {
  const auto unit = parse_resample_unit(name);
  if (!unit) throw FatalError("--resample must be 'test' or 'page'");
  return *unit;
}

int emit_reports(const std::vector<ToolReport>& tools, const ReportMeta& meta, const BenchArgs& args) {
  const auto markdown = report_markdown(tools);
  if (!args.json_out.empty()) {
    write_file(args.json_out, report_json(tools, meta).dump(2, ' ', false, json::error_handler_t::replace) + "\n");
    std::cout << "json report: " << args.json_out.string() << "\n";
  }
  if (!args.md_out.empty()) {
    write_file(args.md_out, markdown);
    std::cout << "markdown report: " << args.md_out.string() << "\n";
  }
  if (args.json_out.empty() && args.md_out.empty()) std::cout << markdown;

  std::size_t errored = 0;
  std::size_t unmatched = 0;
  for (const auto& t : tools) {
    errored += t.errored;
    unmatched += t.unmatched_outputs.size();
    spdlog::info("{}: overall {} (95% CI {} to {}), {} errored", t.tool, fixed(t.overall * 100, 1),
                 fixed(t.ci95.lo * 100, 1), fixed(t.ci95.hi * 100, 1), t.errored);
  }
  if (errored > 0) spdlog::warn("{} tests could not be evaluated", errored);
  if (unmatched > 0) spdlog::warn("{} output files match no test page", unmatched);
  const bool warnings = meta.corpus_warnings + meta.corpus_errors + errored + unmatched > 0;
  return warnings ? kExitWarnings : kExitOk;
}

int bench_run(const BenchArgs& args, const Globals& g) {
  if (args.outputs.empty()) throw FatalError("at least one --outputs directory is required");
  for (const auto& dir : args.outputs) {
    if (!fs::is_directory(dir)) throw FatalError("outputs directory does not exist: " + dir.string());
  }
  LoadOptions load;
  load.strict = args.strict;
  load.check_pdf_paths = !args.skip_pdf_check;
  Corpus corpus;
  try {
    corpus = attach_baseline_tests(load_corpus(args.corpus, load));
  } catch (const CorpusError& e) {
    throw FatalError(e.what());
  }
  for (const auto& issue : corpus.issues) {
    if (issue.severity == Severity::kWarning) {
      spdlog::warn("{}", describe(issue));
    } else {
      spdlog::error("{} (line skipped)", describe(issue));
    }
  }
  spdlog::info("loaded {} tests from {} sources", corpus.test_count(), corpus.sources.size());

  std::unique_ptr<Renderer> backend;
  if (!args.render_fixtures.empty()) {
    try {
      backend = std::make_unique<FixtureRenderer>(FixtureRenderer::load(args.render_fixtures));
    } catch (const RendererUnavailable& e) {
      throw FatalError(e.what());
    }
  } else if (!args.bridge.empty()) {
    BridgeOptions bridge;
    bridge.command = split_command(args.bridge);
    bridge.pool_size = args.bridge_pool;
    bridge.response_timeout = std::chrono::milliseconds(args.bridge_timeout_ms);
    backend = std::make_unique<BridgeClient>(std::move(bridge));
  }
  std::unique_ptr<CachingRenderer> renderer;
  if (backend) renderer = std::make_unique<CachingRenderer>(*backend);

  RunOptions options;
  options.jobs = args.jobs;
  options.bootstrap = {args.iterations, args.seed, resample_unit(args.resample)};
  options.renderer = renderer.get();
  options.math.tolerance_fraction = args.tau;
  options.baseline.repeat_threshold = args.repeat_threshold;
  if (args.collapse_newlines) options.normalize.line_breaks = LineBreaks::kCollapse;

  std::vector<ToolReport> tools;
  for (const auto& dir : args.outputs) tools.push_back(run_tool(corpus, dir, options));

  ReportMeta meta;
  meta.corpus = args.corpus.string();
  meta.corpus_warnings = corpus.warning_count();
  meta.corpus_errors = corpus.error_count();
  for (const auto& issue : corpus.issues) meta.corpus_issues.push_back(describe(issue));
  meta.bootstrap = options.bootstrap;
  meta.generated_at = timestamp(g);
  return emit_reports(tools, meta, args);
}

int bench_score(const BenchArgs& args, const Globals& g) {
  json report;
  try {
    report = json::parse(read_file(args.results));
  } catch (const json::parse_error& e) {
    throw FatalError(args.results.string() + ": " + e.what());
  }
  std::vector<ToolReport> tools;
  try {
    tools = tools_from_report(report);
  } catch (const std::exception& e) {
    throw FatalError(args.results.string() + ": " + e.what());
  }
  const BootstrapOptions bootstrap{args.iterations, args.seed, resample_unit(args.resample)};
  for (auto& t : tools) summarize(t, bootstrap);
  ReportMeta meta;
  if (report.contains("corpus")) {
    const auto& c = report["corpus"];
    meta.corpus = c.value("path", std::string());
    meta.corpus_warnings = c.value("warnings", std::size_t{0});
    meta.corpus_errors = c.value("errors", std::size_t{0});
    meta.corpus_issues = c.value("issues", std::vector<std::string>{});
  }
  meta.bootstrap = bootstrap;
  meta.generated_at = timestamp(g);
  return emit_reports(tools, meta, args);
}

// ---- align ---------------------------------------------------------------

struct AlignArgs {
  fs::path a;
  fs::path b;
  fs::path csv;
  fs::path summary;
  std::string name;
  std::string denominator = "max";
};

std::set<fs::path> text_files(const fs::path& dir) {
  std::set<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && (entry.path().extension() == ".md" || entry.path().extension() == ".txt")) {
      files.insert(entry.path().lexically_relative(dir));
    }
  }
  return files;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

int align_command(const AlignArgs& args) {
  const auto denominator = parse_denominator(args.denominator);
  if (!denominator) throw FatalError("--denominator must be one of max, min, a, b, mean");
  for (const auto& dir : {args.a, args.b}) {
    if (!fs::is_directory(dir)) throw FatalError("not a directory: " + dir.string());
  }
  const auto files_a = text_files(args.a);
  const auto files_b = text_files(args.b);
  std::vector<fs::path> common;
  std::size_t only_one = 0;
  for (const auto& f : files_a) {
    if (files_b.contains(f)) {
      common.push_back(f);
    } else {
      ++only_one;
    }
  }
  for (const auto& f : files_b) {
    if (!files_a.contains(f)) ++only_one;
  }

  std::vector<AlignmentScore> scores(common.size());
  parallel_for(common.size(), std::max(1u, std::thread::hardware_concurrency()), [&](std::size_t i) {
    const auto a = normalize(sanitize_utf8(read_file(args.a / common[i])));
    const auto b = normalize(sanitize_utf8(read_file(args.b / common[i])));
    scores[i] = align_score(a, b, *denominator);
  });

  std::size_t buckets[3] = {0, 0, 0};
  std::string csv = "file,len_a,len_b,matched,score,bucket\n";
  for (std::size_t i = 0; i < common.size(); ++i) {
    const auto& s = scores[i];
    ++buckets[static_cast<int>(s.bucket)];
    csv += csv_field(common[i].generic_string()) + "," + std::to_string(s.len_a) + "," + std::to_string(s.len_b) +
           "," + std::to_string(s.matched) + "," + fixed(s.score, 6) + "," + std::string(to_string(s.bucket)) + "\n";
  }
  const std::string name = args.name.empty() ? args.b.filename().string() : args.name;
  const std::string summary = "| Name | Low match | Medium match | High match |\n|---|---:|---:|---:|\n| " + name +
                              " | " + std::to_string(buckets[0]) + " | " + std::to_string(buckets[1]) + " | " +
                              std::to_string(buckets[2]) + " |\n";
  if (!args.csv.empty()) {
    write_file(args.csv, csv);
    std::cout << "csv: " << args.csv.string() << "\n";
  }
  if (!args.summary.empty()) {
    write_file(args.summary, summary);
    std::cout << "summary: " << args.summary.string() << "\n";
  }
  std::cout << summary;
  if (only_one > 0) {
    spdlog::warn("{} files exist in only one of the two directories", only_one);
    return kExitWarnings;
  }
  return kExitOk;
}

// ---- elo -----------------------------------------------------------------

struct EloArgs {
  fs::path judgments;
  double k = 32;
  double base = 1500;
  std::size_t shuffles = 100;
  std::size_t resamples = 5000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  fs::path json_out;
  fs::path md_out;
};

int elo_command(const EloArgs& args, const Globals& g) {
  JudgmentSet set;
  try {
    set = load_judgments(args.judgments);
  } catch (const std::runtime_error& e) {
    throw FatalError(e.what());
  }
  for (const auto& w : set.warnings) spdlog::warn("{}", w);
  if (set.superseded > 0) spdlog::info("{} resubmitted judgments replaced earlier ones", set.superseded);

  EloOptions options{args.base, args.k, args.shuffles, args.seed};
  auto result = compute_elo(set.judgments, options);
  result.ci95 = elo_ci(set.judgments, args.resamples, options, args.threads);
  spdlog::info("{} decisive games, {} excluded judgments", result.decisive, result.excluded);

  std::vector<std::string> order = result.tools;
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return result.ratings[a] > result.ratings[b]; });

  nlohmann::ordered_json j;
  if (auto ts = timestamp(g)) j["generated_at"] = *ts;
  j["config"] = {{"k", args.k}, {"base", args.base}, {"shuffles", args.shuffles},
                 {"resamples", args.resamples}, {"seed", args.seed}};
  j["decisive"] = result.decisive;
  j["excluded"] = result.excluded;
  j["ratings"] = nlohmann::ordered_json::array();
  std::string md = "| Tool | Rating | 95% CI |\n|---|---:|---:|\n";
  for (const auto& tool : order) {
    const auto ci = result.ci95[tool];
    j["ratings"].push_back({{"tool", tool}, {"rating", result.ratings[tool]}, {"ci95", {ci.lo, ci.hi}}});
    md += "| " + tool + " | " + fixed(result.ratings[tool], 1) + " | " + fixed(ci.lo, 1) + " to " + fixed(ci.hi, 1) +
          " |\n";
  }
  j["pairs"] = nlohmann::ordered_json::array();
  md += "\n| Pair | W/L | Win rate |\n|---|---:|---:|\n";
  for (const auto& p : result.pairs) {
    // Lead with the side that won more often, as a win/loss table reads.
    const bool a_leads = p.wins_a >= p.wins_b;
    const auto& lead = a_leads ? p.tool_a : p.tool_b;
    const auto& other = a_leads ? p.tool_b : p.tool_a;
    const auto wins = a_leads ? p.wins_a : p.wins_b;
    const auto losses = a_leads ? p.wins_b : p.wins_a;
    j["pairs"].push_back({{"tool", lead},
                          {"opponent", other},
                          {"wins", wins},
                          {"losses", losses},
                          {"win_rate", win_rate_percent(wins, losses)}});
    md += "| " + lead + " vs. " + other + " | " + std::to_string(wins) + "/" + std::to_string(losses) + " | " +
          fixed(win_rate_percent(wins, losses), 1) + " |\n";
  }
  if (!args.json_out.empty()) {
    write_file(args.json_out, j.dump(2) + "\n");
    std::cout << "json report: " << args.json_out.string() << "\n";
  }
  if (!args.md_out.empty()) {
    write_file(args.md_out, md);
    std::cout << "markdown report: " << args.md_out.string() << "\n";
  }
  if (args.json_out.empty() && args.md_out.empty()) std::cout << md;
  return set.warnings.empty() ? kExitOk : kExitWarnings;
}

// ---- anchor build --------------------------------------------------------

struct AnchorArgs {
  fs::path pdf;
  int page = 1;
  std::size_t limit = 6000;
  std::uint64_t seed = 0;
  bool prompt = false;
  bool sidecar = false;
};

int anchor_command(const AnchorArgs& args) {
  AnchorLayout layout;
  try {
    layout = load_layout(args.pdf, args.page);
  } catch (const PdfError& e) {
    throw FatalError(e.what());
  }
  if (args.sidecar) {
    std::cout << layout_to_json(layout) << "\n";
    return kExitOk;
  }
  const auto anchor = build_anchor(layout, args.limit, args.seed);
  if (!args.prompt) {
    std::cout << anchor << "\n";
    return kExitOk;
  }
  const auto build = build_prompt(anchor, [&](std::size_t limit) { return build_anchor(layout, limit, args.seed); });
  if (build.warning) spdlog::warn("{}", *build.warning);
  std::cout << build.prompt << "\n";
  return build.degenerate ? kExitWarnings : kExitOk;
}

// ---- convert -------------------------------------------------------------

struct ConvertArgs {
  fs::path corpus;
  std::string endpoint;
  std::string model;
  std::string fallback = "raw";
  fs::path out;
  fs::path images;
  fs::path layouts;
  std::size_t max_retries = 4;
  std::vector<double> temperatures{0.1, 0.2, 0.3, 0.5, 0.8};
  std::vector<std::size_t> char_limits{6000};
  std::size_t max_tokens = 8192;
  std::size_t reserved_tokens = 0;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  int timeout_s = 300;
};

fs::path page_file(const fs::path& dir, const PageKey& page, const std::string& ext) {
  fs::path rel(page.pdf);
  rel.replace_extension();
  return dir / (rel.string() + "_pg" + std::to_string(page.page) + ext);
}

int convert_command(const ConvertArgs& args) {
  const auto fallback = parse_fallback(args.fallback);
  if (!fallback) throw FatalError("--fallback must be 'raw' or 'empty'");
  ConverterPolicy policy;
  policy.max_retries = args.max_retries;
  policy.temperatures = args.temperatures;
  policy.char_limits = args.char_limits;
  policy.fallback = *fallback;
  policy.prompt.max_tokens = args.max_tokens;
  policy.prompt.reserved_tokens = args.reserved_tokens;
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    throw FatalError(e.what());
  }
  HttpConverterOptions http;
  http.endpoint = args.endpoint;
  http.model = args.model;
  http.timeout = std::chrono::seconds(args.timeout_s);
  if (const char* key = std::getenv(kApiKeyEnv)) http.api_key = key;
  try {
    parse_http_url(http.endpoint);
  } catch (const std::invalid_argument& e) {
    throw FatalError(e.what());
  }

  Corpus corpus;
  try {
    corpus = load_corpus(args.corpus, {.strict = false, .check_pdf_paths = false});
  } catch (const CorpusError& e) {
    throw FatalError(e.what());
  }
  std::vector<PageKey> pages;
  {
    std::set<PageKey> seen;
    for (const auto& s : corpus.sources) {
      for (const auto& t : s.tests) {
        if (seen.insert({t.pdf, t.page}).second) pages.push_back({t.pdf, t.page});
      }
    }
  }
  spdlog::info("converting {} pages", pages.size());

  std::atomic<std::size_t> fallbacks{0};
  std::atomic<std::size_t> failures{0};
  parallel_for(pages.size(), args.jobs, [&](std::size_t i) {
    const auto& page = pages[i];
    const auto label = page.pdf + " page " + std::to_string(page.page);
    try {
      AnchorLayout layout;
      const auto sidecar = args.layouts.empty() ? fs::path() : page_file(args.layouts, page, ".json");
      if (!sidecar.empty() && fs::exists(sidecar)) {
        layout = load_layout(sidecar, page.page);
      } else {
        layout = load_layout(corpus.pdf_root / page.pdf, page.page);
      }
      std::optional<fs::path> image;
      if (!args.images.empty()) {
        const auto png = page_file(args.images, page, ".png");
        if (fs::exists(png)) {
          image = png;
        } else {
          spdlog::warn("{}: no page image at {}", label, png.string());
        }
      }
      HttpConverter converter(http, image);
      const auto result = convert_page(layout, converter, policy, derive_seed(args.seed, i));
      for (const auto& w : result.warnings) spdlog::warn("{}: {}", label, w);
      if (result.used_fallback) {
        ++fallbacks;
        spdlog::warn("{}: converter failed {} times, used plain text fallback", label, result.attempts.size());
      }
      write_file(page_file(args.out, page, ".md"), result.text);
    } catch (const EmptyOutputError& e) {
      ++failures;
      spdlog::error("{}: {}", label, e.what());
    } catch (const std::exception& e) {
      ++failures;
      spdlog::error("{}: {}", label, e.what());
    }
  });
  std::cout << "outputs: " << args.out.string() << "\n";
  return fallbacks + failures > 0 ? kExitWarnings : kExitOk;
}

// ---- review serve --------------------------------------------------------

struct ReviewArgs {
  fs::path pairs;
  fs::path judgments;
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path static_dir;
  std::uint64_t seed = 0;
};

int review_command(const ReviewArgs& args) {
  std::vector<ReviewPair> pairs;
  try {
    pairs = load_pairs(args.pairs);
  } catch (const std::invalid_argument& e) {
    throw FatalError(e.what());
  }
  ReviewQueue queue(std::move(pairs), args.judgments, args.seed);
  ReviewServerOptions options;
  options.host = args.host;
  options.port = args.port;
  if (!args.static_dir.empty()) options.static_dir = args.static_dir;

  // Stop cleanly on SIGINT/SIGTERM: block them here and wait in a thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<ReviewServer> server;
  int port = 0;
  try {
    server = std::make_unique<ReviewServer>(queue, options);
    port = server->bind();
  } catch (const std::runtime_error& e) {
    throw FatalError(e.what());
  }
  std::cout << "serving " << queue.size() << " pairs at http://" << args.host << ":" << port << "/\n"
            << "judgments: " << args.judgments.string() << "\n"
            << std::flush;
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("shutting down");
    server->stop();
  });
  server->listen();
  // If the server stopped on its own, release the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  return kExitOk;
}

spdlog::level::level_enum parse_level(const std::string& name) {
  const auto level = spdlog::level::from_str(name);
  if (level == spdlog::level::off && name != "off") throw FatalError("unknown --log-level " + name);
  return level;
}

}  // namespace

int run(int argc, const char* const* argv) {
  if (!spdlog::get("ocrbench")) spdlog::set_default_logger(spdlog::stderr_color_mt("ocrbench"));

  CLI::App app{"Benchmark and tooling for PDF-to-text conversion.", "ocrbench"};
  app.set_config("--config", "", "Read options from a TOML file; command-line flags take precedence");
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--no-timestamps", g.no_timestamps, "Leave timestamps out of reports so reruns are byte-identical");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Run or rescore the unit-test benchmark");
  bench->require_subcommand(1);
  BenchArgs run_args;
  auto* run_cmd = bench->add_subcommand("run", "Evaluate tool outputs against a test corpus");
  run_cmd->add_option("--corpus", run_args.corpus, "Corpus directory (JSONL sources and pdfs/)")->required();
  run_cmd->add_option("--outputs", run_args.outputs, "Tool output directory; repeat for several tools")->required();
  run_cmd->add_option("--jobs", run_args.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--seed", run_args.seed, "Bootstrap seed")->capture_default_str();
  run_cmd->add_option("--iterations", run_args.iterations, "Bootstrap iterations")->capture_default_str();
  run_cmd->add_option("--resample", run_args.resample, "Bootstrap unit: test or page")
      ->check(CLI::IsMember({"test", "page"}))
      ->capture_default_str();
  run_cmd->add_option("--json", run_args.json_out, "Write the JSON report here");
  run_cmd->add_option("--md", run_args.md_out, "Write the Markdown table here");
  run_cmd->add_option("--render-fixtures", run_args.render_fixtures, "Replay recorded renderings (JSONL)");
  run_cmd->add_option("--bridge", run_args.bridge, "Command line of the math render bridge");
  run_cmd->add_option("--bridge-pool", run_args.bridge_pool, "Render bridge processes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--bridge-timeout-ms", run_args.bridge_timeout_ms, "Render bridge response timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--tau", run_args.tau, "Math position tolerance as a fraction of the median symbol height")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--repeat-threshold", run_args.repeat_threshold,
                      "Baseline fails when a repeated tail spans more characters than this")
      ->capture_default_str();
  run_cmd->add_flag("--collapse-newlines", run_args.collapse_newlines, "Normalize line breaks to spaces too");
  run_cmd->add_flag("--strict", run_args.strict, "Stop at the first bad corpus line");
  run_cmd->add_flag("--no-pdf-check", run_args.skip_pdf_check, "Do not require the referenced PDFs to exist");

  BenchArgs score_args;
  auto* score_cmd = bench->add_subcommand("score", "Recompute scores and intervals from a JSON report");
  score_cmd->add_option("--results", score_args.results, "JSON report from bench run")->required();
  score_cmd->add_option("--seed", score_args.seed, "Bootstrap seed")->capture_default_str();
  score_cmd->add_option("--iterations", score_args.iterations, "Bootstrap iterations")->capture_default_str();
  score_cmd->add_option("--resample", score_args.resample, "Bootstrap unit: test or page")
      ->check(CLI::IsMember({"test", "page"}))
      ->capture_default_str();
  score_cmd->add_option("--json", score_args.json_out, "Write the JSON report here");
  score_cmd->add_option("--md", score_args.md_out, "Write the Markdown table here");

  // align
  AlignArgs align_args;
  auto* align_cmd = app.add_subcommand("align", "Word alignment scores between two output directories");
  align_cmd->add_option("--a", align_args.a, "Reference outputs")->required();
  align_cmd->add_option("--b", align_args.b, "Compared outputs")->required();
  align_cmd->add_option("--csv", align_args.csv, "Per-page scores");
  align_cmd->add_option("--summary", align_args.summary, "Bucket counts as a Markdown table");
  align_cmd->add_option("--name", align_args.name, "Row label in the summary (default: name of --b)");
  align_cmd->add_option("--denominator", align_args.denominator, "max, min, a, b or mean")
      ->check(CLI::IsMember({"max", "min", "a", "b", "mean"}))
      ->capture_default_str();

  // elo
  EloArgs elo_args;
  auto* elo_cmd = app.add_subcommand("elo", "Ratings from pairwise judgments");
  elo_cmd->add_option("--judgments", elo_args.judgments, "Judgments JSONL")->required();
  elo_cmd->add_option("--k", elo_args.k, "K factor")->check(CLI::PositiveNumber)->capture_default_str();
  elo_cmd->add_option("--base", elo_args.base, "Starting rating")->capture_default_str();
  elo_cmd->add_option("--shuffles", elo_args.shuffles, "Game orderings averaged")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  elo_cmd->add_option("--resamples", elo_args.resamples, "Bootstrap resamples")->capture_default_str();
  elo_cmd->add_option("--seed", elo_args.seed, "Seed")->capture_default_str();
  elo_cmd->add_option("--threads", elo_args.threads, "Threads for resampling (0: all cores)")->capture_default_str();
  elo_cmd->add_option("--json", elo_args.json_out, "Write the JSON report here");
  elo_cmd->add_option("--md", elo_args.md_out, "Write the Markdown tables here");

  // anchor build
  auto* anchor = app.add_subcommand("anchor", "Anchor text for PDF pages");
  anchor->require_subcommand(1);
  AnchorArgs anchor_args;
  auto* anchor_build = anchor->add_subcommand("build", "Print the anchor text of one page");
  anchor_build->add_option("--pdf", anchor_args.pdf, "PDF file, or a .json layout sidecar")->required()->check(
      CLI::ExistingFile);
  anchor_build->add_option("--page", anchor_args.page, "1-based page number")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  anchor_build->add_option("--limit", anchor_args.limit, "Character limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  anchor_build->add_option("--seed", anchor_args.seed, "Sampling seed")->capture_default_str();
  anchor_build->add_flag("--prompt", anchor_args.prompt, "Print the full prompt instead");
  anchor_build->add_flag("--sidecar", anchor_args.sidecar, "Print the extracted layout as sidecar JSON");

  // convert
  ConvertArgs convert_args;
  auto* convert_cmd = app.add_subcommand("convert", "Convert corpus pages with an OpenAI-compatible endpoint");
  convert_cmd->add_option("--corpus", convert_args.corpus, "Corpus directory")->required();
  convert_cmd->add_option("--endpoint", convert_args.endpoint, "Chat completions URL (http://)")->required();
  convert_cmd->add_option("--out", convert_args.out, "Directory for the page outputs")->required();
  convert_cmd->add_option("--model", convert_args.model, "Model name served by the endpoint")->required();
  convert_cmd->add_option("--fallback", convert_args.fallback, "raw or empty")
      ->check(CLI::IsMember({"raw", "empty"}))
      ->capture_default_str();
  convert_cmd->add_option("--images", convert_args.images, "Page images, <pdf path>_pg<N>.png");
  convert_cmd->add_option("--layouts", convert_args.layouts, "Layout sidecars, <pdf path>_pg<N>.json");
  convert_cmd->add_option("--max-retries", convert_args.max_retries, "Failed calls allowed after the first")
      ->capture_default_str();
  convert_cmd->add_option("--temperatures", convert_args.temperatures, "Temperature escalation")
      ->capture_default_str();
  convert_cmd->add_option("--char-limits", convert_args.char_limits, "Anchor character limits per retry")
      ->capture_default_str();
  convert_cmd->add_option("--max-tokens", convert_args.max_tokens, "Prompt token budget")->capture_default_str();
  convert_cmd->add_option("--reserved-tokens", convert_args.reserved_tokens, "Tokens kept for the image")
      ->capture_default_str();
  convert_cmd->add_option("--jobs", convert_args.jobs, "Pages in flight")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  convert_cmd->add_option("--seed", convert_args.seed, "Anchor sampling seed")->capture_default_str();
  convert_cmd->add_option("--timeout", convert_args.timeout_s, "Request timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // review serve
  auto* review = app.add_subcommand("review", "Pairwise human review");
  review->require_subcommand(1);
  ReviewArgs review_args;
  auto* serve = review->add_subcommand("serve", "Serve the review app and record judgments");
  serve->add_option("--pairs", review_args.pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  serve->add_option("--judgments", review_args.judgments, "Judgments JSONL (appended)")->required();
  serve->add_option("--host", review_args.host, "Listen address")->capture_default_str();
  serve->add_option("--port", review_args.port, "Port (0 picks one)")->capture_default_str();
  serve->add_option("--static", review_args.static_dir, "Directory with the review UI build");
  serve->add_option("--seed", review_args.seed, "Side assignment seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitFatal;
  }

  try {
    spdlog::set_level(parse_level(g.log_level));
    spdlog::info("resolved configuration:\n{}", app.config_to_str(true, false));
    if (run_cmd->parsed()) return bench_run(run_args, g);
    if (score_cmd->parsed()) return bench_score(score_args, g);
    if (align_cmd->parsed()) return align_command(align_args);
    if (elo_cmd->parsed()) return elo_command(elo_args, g);
    if (anchor_build->parsed()) return anchor_command(anchor_args);
    if (convert_cmd->parsed()) return convert_command(convert_args);
    if (serve->parsed()) return review_command(review_args);
  } catch (const FatalError& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kExitFatal;
  }
  std::cerr << app.help();
  return kExitFatal;
}

}  // namespace ocrbench::cli

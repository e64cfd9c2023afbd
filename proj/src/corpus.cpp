#include "ocrbench/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kCategoryNames = {"present", "absent", "order",
                                                            "table",   "math",   "baseline"};

// Schema order; serialization follows it.
constexpr std::array<std::string_view, 21> kSchemaKeys = {
    "id",   "pdf",         "page",         "type",      "text",    "before",   "after",
    "cell", "up",          "down",         "left",      "right",   "top_heading",
    "left_heading",        "math",         "max_diffs", "first_n", "last_n",   "case_sensitive",
    "checked",             "url"};

std::optional<std::string> optional_string(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<int> optional_int(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

std::string required_string(const json& obj, const char* key) {
  auto value = optional_string(obj, key);
  if (!value || value->empty()) throw std::invalid_argument(std::string("missing required field '") + key + "'");
  return *value;
}

void require_text(const std::optional<std::string>& value, const char* key, Category category) {
  if (!value || value->empty()) {
    throw std::invalid_argument(std::string(to_string(category)) + " test requires non-empty '" + key + "'");
  }
}

void validate(const TestCase& test) {
  if (test.page < 1) throw std::invalid_argument("page must be >= 1");
  if (test.max_diffs && *test.max_diffs < 0) throw std::invalid_argument("max_diffs must be >= 0");
  if (test.first_n && *test.first_n < 1) throw std::invalid_argument("first_n must be >= 1");
  if (test.last_n && *test.last_n < 1) throw std::invalid_argument("last_n must be >= 1");
  switch (test.category) {
    case Category::kPresent:
    case Category::kAbsent:
      require_text(test.text, "text", test.category);
      break;
    case Category::kOrder:
      require_text(test.before, "before", test.category);
      require_text(test.after, "after", test.category);
      break;
    case Category::kTable:
      require_text(test.cell, "cell", test.category);
      if (!test.up && !test.down && !test.left && !test.right && !test.top_heading && !test.left_heading) {
        throw std::invalid_argument("table test requires at least one neighbor or heading relation");
      }
      break;
    case Category::kMath:
      require_text(test.math, "math", test.category);
      break;
    case Category::kBaseline:
      break;
  }
}

}  // namespace

std::string describe(const LoadIssue& issue) {
  std::ostringstream os;
  os << issue.file;
  if (issue.line > 0) os << ':' << issue.line;
  os << ": " << issue.message;
  return os.str();
}

std::string_view to_string(Category category) { return kCategoryNames[static_cast<std::size_t>(category)]; }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

bool TestCase::effective_case_sensitive() const {
  return case_sensitive.value_or(category != Category::kAbsent);
}

CandidateDocument CandidateDocument::from_raw(std::string pdf, int page, std::string tool, std::string raw,
                                              NormalizeOptions options) {
  CandidateDocument doc;
  doc.pdf = std::move(pdf);
  doc.page = page;
  doc.tool = std::move(tool);
  doc.raw = sanitize_utf8(raw);
  doc.normalized = normalize(doc.raw, options);
  return doc;
}

std::size_t Corpus::test_count() const {
  std::size_t n = 0;
  for (const auto& source : sources) n += source.tests.size();
  return n;
}

std::size_t Corpus::warning_count() const {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const LoadIssue& i) {
    return i.severity == Severity::kWarning;
  }));
}

std::size_t Corpus::error_count() const { return issues.size() - warning_count(); }

const TestSource* Corpus::find_source(std::string_view name) const {
  for (const auto& source : sources) {
    if (source.name == name) return &source;
  }
  return nullptr;
}

const PageFlags* Corpus::flags_for(const PageKey& page) const {
  for (const auto& flags : page_flags) {
    if (flags.page == page) return &flags;
  }
  return nullptr;
}

CorpusError::CorpusError(LoadIssue issue) : std::runtime_error(describe(issue)), issue_(std::move(issue)) {}

TestCase parse_test_case(std::string_view json_line, std::vector<std::string>* warnings) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");

  TestCase test;
  test.id = required_string(obj, "id");
  test.pdf = required_string(obj, "pdf");
  const auto page = optional_int(obj, "page");
  if (!page) throw std::invalid_argument("missing required field 'page'");
  test.page = *page;

  const auto type = optional_string(obj, "type");
  if (!type) throw std::invalid_argument("missing required field 'type'");
  const auto category = parse_category(*type);
  if (!category) throw std::invalid_argument("unknown category '" + *type + "'");
  test.category = *category;

  test.text = optional_string(obj, "text");
  test.before = optional_string(obj, "before");
  test.after = optional_string(obj, "after");
  test.cell = optional_string(obj, "cell");
  test.up = optional_string(obj, "up");
  test.down = optional_string(obj, "down");
  test.left = optional_string(obj, "left");
  test.right = optional_string(obj, "right");
  test.top_heading = optional_string(obj, "top_heading");
  test.left_heading = optional_string(obj, "left_heading");
  test.math = optional_string(obj, "math");
  test.max_diffs = optional_int(obj, "max_diffs");
  test.first_n = optional_int(obj, "first_n");
  test.last_n = optional_int(obj, "last_n");
  if (const auto it = obj.find("case_sensitive"); it != obj.end() && !it->is_null()) {
    if (!it->is_boolean()) throw std::invalid_argument("field 'case_sensitive' must be a boolean");
    test.case_sensitive = it->get<bool>();
  }
  test.checked = optional_string(obj, "checked");
  test.url = optional_string(obj, "url");

  if (warnings != nullptr) {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(kSchemaKeys.begin(), kSchemaKeys.end(), key) == kSchemaKeys.end()) {
        warnings->push_back("unknown key '" + key + "'");
      }
    }
  }
  validate(test);
  return test;
}

std::string to_json_line(const TestCase& test) {
  ordered_json obj;
  obj["id"] = test.id;
  obj["pdf"] = test.pdf;
  obj["page"] = test.page;
  obj["type"] = std::string(to_string(test.category));
  const auto put = [&obj](const char* key, const auto& value) {
    if (value) obj[key] = *value;
  };
  put("text", test.text);
  put("before", test.before);
  put("after", test.after);
  put("cell", test.cell);
  put("up", test.up);
  put("down", test.down);
  put("left", test.left);
  put("right", test.right);
  put("top_heading", test.top_heading);
  put("left_heading", test.left_heading);
  put("math", test.math);
  put("max_diffs", test.max_diffs);
  put("first_n", test.first_n);
  put("last_n", test.last_n);
  put("case_sensitive", test.case_sensitive);
  put("checked", test.checked);
  put("url", test.url);
  return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

namespace {

std::vector<PageFlags> load_page_flags(const std::filesystem::path& file, const LoadOptions& options,
                                       std::vector<LoadIssue>& issues) {
  std::vector<PageFlags> flags;
  std::ifstream in(file);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      PageFlags entry;
      entry.page.pdf = obj.at("pdf").get<std::string>();
      entry.page.page = obj.at("page").get<int>();
      entry.cjk_ok = obj.value("cjk_ok", false);
      entry.suppress_baseline = obj.value("suppress_baseline", false);
      flags.push_back(std::move(entry));
    } catch (const json::exception& e) {
      LoadIssue issue{Severity::kError, file.filename().string(), line_no, std::string("bad page flag: ") + e.what()};
      if (options.strict) throw CorpusError(issue);
      issues.push_back(std::move(issue));
    }
  }
  return flags;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& dir, LoadOptions options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw CorpusError(LoadIssue{Severity::kError, dir.string(), 0, "corpus directory does not exist"});
  }
  Corpus corpus;
  corpus.root = dir;
  corpus.pdf_root = dir / "pdfs";

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".jsonl") continue;
    if (entry.path().filename().string().starts_with('_')) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  const auto report = [&](LoadIssue issue) {
    if (options.strict && issue.severity == Severity::kError) throw CorpusError(issue);
    corpus.issues.push_back(std::move(issue));
  };

  std::unordered_set<std::string> seen_ids;
  std::set<std::string> checked_pdfs;
  std::set<std::string> missing_pdfs;
  for (const auto& file : files) {
    TestSource source;
    source.name = file.stem().string();
    const std::string file_name = file.filename().string();
    std::ifstream in(file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<std::string> warnings;
      TestCase test;
      try {
        test = parse_test_case(line, &warnings);
      } catch (const std::invalid_argument& e) {
        report({Severity::kError, file_name, line_no, e.what()});
        continue;
      }
      for (auto& w : warnings) report({Severity::kWarning, file_name, line_no, std::move(w)});
      if (!seen_ids.insert(test.id).second) {
        report({Severity::kError, file_name, line_no, "duplicate test id '" + test.id + "'"});
        continue;
      }
      if (options.check_pdf_paths) {
        if (checked_pdfs.insert(test.pdf).second && !fs::is_regular_file(corpus.pdf_root / test.pdf)) {
          missing_pdfs.insert(test.pdf);
        }
        if (missing_pdfs.count(test.pdf) > 0) {
          report({Severity::kError, file_name, line_no, "pdf '" + test.pdf + "' not found under pdfs/"});
          continue;
        }
      }
      source.tests.push_back(std::move(test));
    }
    corpus.sources.push_back(std::move(source));
  }

  if (const auto flags_file = dir / kPageFlagsFile; fs::is_regular_file(flags_file)) {
    corpus.page_flags = load_page_flags(flags_file, options, corpus.issues);
  }
  return corpus;
}

Corpus attach_baseline_tests(const Corpus& corpus) {
  Corpus out = corpus;
  std::set<PageKey> covered;
  std::vector<PageKey> pages;
  std::set<PageKey> seen;
  for (const auto& source : corpus.sources) {
    for (const auto& test : source.tests) {
      PageKey key{test.pdf, test.page};
      if (test.category == Category::kBaseline) covered.insert(key);
      if (seen.insert(key).second) pages.push_back(std::move(key));
    }
  }

  TestSource baseline;
  if (const auto* existing = corpus.find_source(kBaselineSource)) {
    baseline = *existing;
    std::erase_if(out.sources, [](const TestSource& s) { return s.name == kBaselineSource; });
  }
  baseline.name = std::string(kBaselineSource);

  for (const auto& page : pages) {
    const PageFlags* flags = corpus.flags_for(page);
    if (covered.count(page) > 0 || (flags != nullptr && flags->suppress_baseline)) continue;
    TestCase test;
    test.id = page.pdf + "_pg" + std::to_string(page.page) + "_baseline";
    test.pdf = page.pdf;
    test.page = page.page;
    test.category = Category::kBaseline;
    test.charset_check = flags == nullptr || !flags->cjk_ok;
    baseline.tests.push_back(std::move(test));
  }
  // Explicit baseline tests pick up page flags as well.
  for (auto& source : out.sources) {
    for (auto& test : source.tests) {
      if (test.category != Category::kBaseline) continue;
      const PageFlags* flags = corpus.flags_for({test.pdf, test.page});
      test.charset_check = flags == nullptr || !flags->cjk_ok;
    }
  }
  for (auto& test : baseline.tests) {
    const PageFlags* flags = corpus.flags_for({test.pdf, test.page});
    test.charset_check = flags == nullptr || !flags->cjk_ok;
  }
  if (!baseline.tests.empty()) out.sources.push_back(std::move(baseline));
  return out;
}

int default_max_diffs(std::string_view needle) {
  return static_cast<int>(count_code_points(needle) / 10);
}

}  // namespace ocrbench

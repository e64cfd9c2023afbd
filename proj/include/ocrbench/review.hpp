#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocrbench/elo.hpp"

namespace ocrbench {

/// Two tools' outputs for the same page. Pairs file: one JSON object per
/// line with pair_id, page_id, tool_a, tool_b, text_a, text_b and an
/// optional image_url.
struct ReviewPair {
  std::string pair_id;
  std::string page_id;
  std::string tool_a;
  std::string tool_b;
  std::string text_a;
  std::string text_b;
  std::string image_url;
};

/// Throws std::invalid_argument naming the offending line.
std::vector<ReviewPair> load_pairs(const std::filesystem::path& file);

/// What an annotator sees. Tool names are never included.
struct ReviewItem {
  std::string pair_id;
  std::string image_url;
  std::string left_text;
  std::string right_text;
  std::size_t remaining = 0;  // unserved pairs left after this one
};

nlohmann::json to_json(const ReviewItem& item);

/// Choices offered to the annotator, by screen side.
enum class Choice { kLeft, kRight, kBothGood, kBothBad, kInvalid, kSkip };

std::optional<Choice> parse_choice(std::string_view name);

enum class SubmitStatus { kAccepted, kDuplicate, kUnknownPair, kNotServed };

struct SubmitResult {
  SubmitStatus status = SubmitStatus::kAccepted;
  std::optional<Judgment> judgment;  // set when accepted or duplicate
};

/// Serves each pair at most once per annotator, with the side of tool_a
/// drawn from (seed, annotator, pair). Judgments are appended to a JSONL
/// file and fsynced before a submit is acknowledged. Thread-safe.
class ReviewQueue {
 public:
  /// Existing judgments in `judgments_file` count as served and judged.
  ReviewQueue(std::vector<ReviewPair> pairs, std::filesystem::path judgments_file, std::uint64_t seed);

  std::optional<ReviewItem> next(const std::string& annotator);

  /// Maps the on-screen choice back to tool_a/tool_b and records it.
  /// `timestamp` defaults to the current UTC time.
  SubmitResult submit(const std::string& annotator, const std::string& pair_id, Choice choice,
                      std::optional<std::string> timestamp = std::nullopt);

  /// Whether tool_a is shown on the left for this annotator and pair.
  bool a_on_left(const std::string& annotator, const std::string& pair_id) const;

  std::size_t size() const { return pairs_.size(); }

 private:
  void append(const Judgment& judgment);

  std::vector<ReviewPair> pairs_;
  std::map<std::string, std::size_t> index_;
  std::filesystem::path judgments_file_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<std::string, std::set<std::size_t>> served_;
  std::map<std::string, std::set<std::size_t>> judged_;
};

struct ReviewServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

/// HTTP front end: GET /api/next?annotator=NAME, POST /api/submit with
/// {"pair_id","outcome","annotator"}, static files under /.
class ReviewServer {
 public:
  ReviewServer(ReviewQueue& queue, ReviewServerOptions options);
  ~ReviewServer();

  /// Binds the socket; returns the port. Throws std::runtime_error on failure.
  int bind();
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// ISO 8601 UTC with seconds, e.g. 2025-02-25T12:00:00Z.
std::string utc_timestamp();

}  // namespace ocrbench

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/interval.hpp"

namespace ocrbench {

enum class Outcome { kAWins, kBWins, kBothGood, kBothBad, kInvalid, kSkipped };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view name);

/// Only a preference for one side counts as a game.
inline bool is_decisive(Outcome outcome) { return outcome == Outcome::kAWins || outcome == Outcome::kBWins; }

struct Judgment {
  std::string page_id;
  std::string tool_a;
  std::string tool_b;
  Outcome outcome = Outcome::kSkipped;
  std::string annotator;
  std::string timestamp;  // ISO 8601, UTC
  std::optional<std::string> pair_id;

  friend bool operator==(const Judgment&, const Judgment&) = default;
};

/// Throws std::invalid_argument on a malformed line or tool_a == tool_b.
Judgment parse_judgment(std::string_view json_line);
std::string to_json_line(const Judgment& judgment);

struct JudgmentSet {
  std::vector<Judgment> judgments;
  std::vector<std::string> warnings;  // "<file>:<line>: <message>"
  std::size_t superseded = 0;         // earlier submissions replaced by a later one
};

/// Reads a judgments JSONL file. Malformed lines become warnings. Lines with
/// the same (annotator, pair_id) are one logical judgment; the last wins.
JudgmentSet load_judgments(const std::filesystem::path& file);

/// A decisive game, by tool index.
struct Game {
  std::uint32_t winner = 0;
  std::uint32_t loser = 0;
};

struct PairRecord {
  std::string tool_a;  // lexicographically smaller name
  std::string tool_b;
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
};

/// wins / (wins + losses) in percent, rounded half up to one decimal, as
/// tenths of a percent; 0 without games.
std::int64_t win_rate_tenths(std::size_t wins, std::size_t losses);
double win_rate_percent(std::size_t wins, std::size_t losses);

struct EloOptions {
  double base = 1500;
  double k_factor = 32;
  std::size_t shuffles = 100;
  std::uint64_t seed = 0;
};

/// Ratings are kept as integers in units of this many per rating point, so
/// every update moves exactly the same amount between the two players.
inline constexpr std::int64_t kRatingScale = 1'000'000'000;

/// Sequential updates over `games` in the given order. `ratings` holds
/// scaled integer ratings indexed by tool.
void apply_games(std::vector<std::int64_t>& ratings, const std::vector<Game>& games, double k_factor);

struct EloResult {
  std::vector<std::string> tools;  // sorted
  std::map<std::string, double> ratings;
  std::map<std::string, Interval> ci95;  // filled by elo_ci
  std::vector<PairRecord> pairs;         // sorted by (tool_a, tool_b)
  std::size_t decisive = 0;
  std::size_t excluded = 0;
};

/// Mean rating per tool over `shuffles` seeded orderings of the decisive
/// games. Tools that only appear in non-decisive judgments keep the base.
EloResult compute_elo(const std::vector<Judgment>& judgments, const EloOptions& options = {});

/// Percentile 95% intervals from `resamples` bootstrap resamples of the
/// decisive games, each rated with `compute_elo`. Resample i draws from its
/// own seed stream, so the result does not depend on `threads`.
std::map<std::string, Interval> elo_ci(const std::vector<Judgment>& judgments, std::size_t resamples,
                                       const EloOptions& options = {}, std::size_t threads = 0);

}  // namespace ocrbench

#include "ocrbench/elo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace ocrbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::pair<Outcome, std::string_view> kOutcomeNames[] = {
    {Outcome::kAWins, "a_wins"},       {Outcome::kBWins, "b_wins"},   {Outcome::kBothGood, "both_good"},
    {Outcome::kBothBad, "both_bad"},   {Outcome::kInvalid, "invalid"}, {Outcome::kSkipped, "skipped"},
};

std::string required_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' must be a string");
  auto value = it->get<std::string>();
  if (value.empty()) throw std::invalid_argument(std::string("field '") + key + "' must not be empty");
  return value;
}

// Runs L independent game sequences of equal length side by side; lane l
// uses ratings[l * n_tools, (l + 1) * n_tools). Interleaving lets the exp
// calls of different lanes overlap, and each lane's arithmetic is the same
// as running it alone.
template <std::size_t L>
void apply_lanes(std::int64_t* ratings, std::size_t n_tools, const Game* const* orders, std::size_t n_games,
                 double k_factor) {
  static const double kLn10Over400 = std::log(10.0) / 400.0;
  const double k_scaled = k_factor * static_cast<double>(kRatingScale);
  const double per_unit = kLn10Over400 / static_cast<double>(kRatingScale);
  for (std::size_t i = 0; i < n_games; ++i) {
    for (std::size_t l = 0; l < L; ++l) {
      const Game& g = orders[l][i];
      std::int64_t* r = ratings + l * n_tools;
      // K * (1 - expected score of the winner), rounded to the nearest unit.
      const double gain = k_scaled / (1.0 + std::exp(static_cast<double>(r[g.winner] - r[g.loser]) * per_unit));
      const auto delta = static_cast<std::int64_t>(std::floor(gain + 0.5));
      r[g.winner] += delta;
      r[g.loser] -= delta;
    }
  }
}

struct GameTable {
  std::vector<std::string> tools;
  std::vector<Game> games;
  std::size_t excluded = 0;
};

GameTable game_table(const std::vector<Judgment>& judgments) {
  GameTable table;
  for (const auto& j : judgments) {
    table.tools.push_back(j.tool_a);
    table.tools.push_back(j.tool_b);
  }
  std::sort(table.tools.begin(), table.tools.end());
  table.tools.erase(std::unique(table.tools.begin(), table.tools.end()), table.tools.end());
  const auto index = [&table](const std::string& tool) {
    return static_cast<std::uint32_t>(std::lower_bound(table.tools.begin(), table.tools.end(), tool) -
                                      table.tools.begin());
  };
  for (const auto& j : judgments) {
    if (!is_decisive(j.outcome)) {
      ++table.excluded;
      continue;
    }
    const auto a = index(j.tool_a);
    const auto b = index(j.tool_b);
    table.games.push_back(j.outcome == Outcome::kAWins ? Game{a, b} : Game{b, a});
  }
  return table;
}

// Mean rating per tool over the shuffled orderings.
std::vector<double> mean_ratings(const std::vector<Game>& games, std::size_t n_tools, const EloOptions& options) {
  constexpr std::size_t kLanes = 4;
  const auto base = static_cast<std::int64_t>(std::llround(options.base * static_cast<double>(kRatingScale)));
  if (games.empty() || options.shuffles == 0) return std::vector<double>(n_tools, options.base);
  std::vector<std::int64_t> total(n_tools, 0);
  std::vector<std::int64_t> ratings(kLanes * n_tools);
  std::vector<std::vector<Game>> orders(kLanes);
  for (std::size_t s = 0; s < options.shuffles; s += kLanes) {
    const std::size_t lanes = std::min(kLanes, options.shuffles - s);
    const Game* heads[kLanes];
    for (std::size_t l = 0; l < lanes; ++l) {
      auto& order = orders[l];
      order = games;
      SplitMix64 rng(derive_seed(options.seed, s + l));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);
      heads[l] = order.data();
    }
    std::fill(ratings.begin(), ratings.end(), base);
    if (lanes == kLanes) {
      apply_lanes<kLanes>(ratings.data(), n_tools, heads, games.size(), options.k_factor);
    } else {
      for (std::size_t l = 0; l < lanes; ++l) {
        apply_lanes<1>(ratings.data() + l * n_tools, n_tools, &heads[l], games.size(), options.k_factor);
      }
    }
    for (std::size_t l = 0; l < lanes; ++l) {
      for (std::size_t t = 0; t < n_tools; ++t) total[t] += ratings[l * n_tools + t];
    }
  }
  std::vector<double> mean(n_tools);
  const double denom = static_cast<double>(options.shuffles) * static_cast<double>(kRatingScale);
  for (std::size_t t = 0; t < n_tools; ++t) mean[t] = static_cast<double>(total[t]) / denom;
  return mean;
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  for (const auto& [o, name] : kOutcomeNames) {
    if (o == outcome) return name;
  }
  return "skipped";
}

std::optional<Outcome> parse_outcome(std::string_view name) {
  for (const auto& [o, n] : kOutcomeNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

Judgment parse_judgment(std::string_view json_line) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("judgment must be a JSON object");
  Judgment judgment;
  judgment.page_id = required_string(j, "page_id");
  judgment.tool_a = required_string(j, "tool_a");
  judgment.tool_b = required_string(j, "tool_b");
  judgment.annotator = required_string(j, "annotator");
  const auto outcome = parse_outcome(required_string(j, "outcome"));
  if (!outcome) throw std::invalid_argument("unknown outcome " + j.at("outcome").dump());
  judgment.outcome = *outcome;
  if (j.contains("timestamp")) {
    if (!j["timestamp"].is_string()) throw std::invalid_argument("field 'timestamp' must be a string");
    judgment.timestamp = j["timestamp"].get<std::string>();
  }
  if (j.contains("pair_id") && !j["pair_id"].is_null()) {
    if (!j["pair_id"].is_string()) throw std::invalid_argument("field 'pair_id' must be a string");
    judgment.pair_id = j["pair_id"].get<std::string>();
  }
  if (judgment.tool_a == judgment.tool_b) throw std::invalid_argument("tool_a and tool_b are the same tool");
  return judgment;
}

std::string to_json_line(const Judgment& judgment) {
  ordered_json j;
  j["page_id"] = judgment.page_id;
  j["tool_a"] = judgment.tool_a;
  j["tool_b"] = judgment.tool_b;
  j["outcome"] = std::string(to_string(judgment.outcome));
  j["annotator"] = judgment.annotator;
  j["timestamp"] = judgment.timestamp;
  if (judgment.pair_id) j["pair_id"] = *judgment.pair_id;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

JudgmentSet load_judgments(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open judgments file " + file.string());
  JudgmentSet set;
  std::map<std::pair<std::string, std::string>, std::size_t> latest;
  std::vector<bool> live;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto judgment = parse_judgment(line);
      if (judgment.pair_id) {
        auto [it, inserted] = latest.try_emplace({judgment.annotator, *judgment.pair_id}, set.judgments.size());
        if (!inserted) {
          live[it->second] = false;
          it->second = set.judgments.size();
          ++set.superseded;
        }
      }
      set.judgments.push_back(std::move(judgment));
      live.push_back(true);
    } catch (const std::invalid_argument& e) {
      set.warnings.push_back(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<Judgment> kept;
  for (std::size_t i = 0; i < set.judgments.size(); ++i) {
    if (live[i]) kept.push_back(std::move(set.judgments[i]));
  }
  set.judgments = std::move(kept);
  return set;
}

std::int64_t win_rate_tenths(std::size_t wins, std::size_t losses) {
  const std::size_t games = wins + losses;
  if (games == 0) return 0;
  return static_cast<std::int64_t>((wins * 2000 + games) / (2 * games));
}

double win_rate_percent(std::size_t wins, std::size_t losses) {
  return static_cast<double>(win_rate_tenths(wins, losses)) / 10.0;
}

void apply_games(std::vector<std::int64_t>& ratings, const std::vector<Game>& games, double k_factor) {
  const Game* order = games.data();
  apply_lanes<1>(ratings.data(), ratings.size(), &order, games.size(), k_factor);
}

EloResult compute_elo(const std::vector<Judgment>& judgments, const EloOptions& options) {
  const auto table = game_table(judgments);
  EloResult result;
  result.tools = table.tools;
  result.decisive = table.games.size();
  result.excluded = table.excluded;
  const auto mean = mean_ratings(table.games, table.tools.size(), options);
  for (std::size_t t = 0; t < table.tools.size(); ++t) result.ratings[table.tools[t]] = mean[t];

  std::map<std::pair<std::uint32_t, std::uint32_t>, PairRecord> pairs;
  for (const auto& g : table.games) {
    const auto lo = std::min(g.winner, g.loser);
    const auto hi = std::max(g.winner, g.loser);
    auto& record = pairs[{lo, hi}];
    record.tool_a = table.tools[lo];
    record.tool_b = table.tools[hi];
    ++(g.winner == lo ? record.wins_a : record.wins_b);
  }
  for (auto& [key, record] : pairs) result.pairs.push_back(std::move(record));
  return result;
}

std::map<std::string, Interval> elo_ci(const std::vector<Judgment>& judgments, std::size_t resamples,
                                       const EloOptions& options, std::size_t threads) {
  const auto table = game_table(judgments);
  const std::size_t n_tools = table.tools.size();
  std::map<std::string, Interval> out;
  if (table.games.empty() || resamples == 0) {
    for (const auto& tool : table.tools) out[tool] = {options.base, options.base};
    return out;
  }
  std::vector<std::vector<double>> samples(n_tools, std::vector<double>(resamples));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, resamples);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    std::vector<Game> drawn(table.games.size());
    for (std::size_t r = next++; r < resamples; r = next++) {
      std::mt19937_64 rng(derive_seed(~options.seed, r));
      for (auto& g : drawn) g = table.games[draw_index(rng, table.games.size())];
      EloOptions per = options;
      per.seed = derive_seed(options.seed, r);
      const auto mean = mean_ratings(drawn, n_tools, per);
      for (std::size_t t = 0; t < n_tools; ++t) samples[t][r] = mean[t];
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < threads; ++w) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t t = 0; t < n_tools; ++t) {
    std::sort(samples[t].begin(), samples[t].end());
    out[table.tools[t]] = {percentile(samples[t], 0.025), percentile(samples[t], 0.975)};
  }
  return out;
}

}  // namespace ocrbench

#include "ocrbench/review.hpp"

#include <ctime>
#include <fstream>
#include <stdexcept>

#include <fcntl.h>
#include <unistd.h>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace ocrbench {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string required(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    throw std::invalid_argument(std::string("missing or empty string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

// Fallback page when no static UI directory is configured.
constexpr const char* kBuiltinPage = R"html(<!doctype html>
<html><head><meta charset="utf-8"><title>Pairwise review</title>
<style>body{font-family:sans-serif;margin:1em}#p{display:flex;gap:1em}pre{flex:1;white-space:pre-wrap;border:1px solid #ccc;padding:.5em;max-height:70vh;overflow:auto}img{max-width:100%}</style>
</head><body>
<label>Annotator <input id="who"></label> <button onclick="load()">Start</button>
<div id="img"></div><div id="p"><pre id="l"></pre><pre id="r"></pre></div>
<div id="b"></div><p id="s"></p>
<script>
const choices=[["left","1: Left is better"],["right","2: Right is better"],["both_good","3: Both good"],["both_bad","4: Both bad"],["invalid","5: Invalid"],["skip","6: Skip"]];
let item=null;
for(const [c,label] of choices){const b=document.createElement("button");b.textContent=label;b.onclick=()=>send(c);document.getElementById("b").appendChild(b);}
document.addEventListener("keydown",e=>{const i=parseInt(e.key)-1;if(item&&i>=0&&i<choices.length)send(choices[i][0]);});
async function load(){const who=document.getElementById("who").value;const r=await fetch("/api/next?annotator="+encodeURIComponent(who));const j=await r.json();
if(j.done){item=null;document.getElementById("s").textContent="All pairs reviewed.";return;}
item=j.item;document.getElementById("l").textContent=item.left_text;document.getElementById("r").textContent=item.right_text;
document.getElementById("img").innerHTML=item.image_url?'<img src="'+item.image_url+'">':"";document.getElementById("s").textContent=item.remaining+" left";}
async function send(c){if(!item)return;await fetch("/api/submit",{method:"POST",headers:{"Content-Type":"application/json"},body:JSON.stringify({pair_id:item.pair_id,outcome:c,annotator:document.getElementById("who").value})});load();}
</script></body></html>
)html";

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<ReviewPair> load_pairs(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open pairs file " + file.string());
  std::vector<ReviewPair> pairs;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = file.string() + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = json::parse(line);
      ReviewPair pair{required(j, "pair_id"), required(j, "page_id"), required(j, "tool_a"), required(j, "tool_b"),
                      j.value("text_a", std::string()), j.value("text_b", std::string()),
                      j.value("image_url", std::string())};
      if (pair.tool_a == pair.tool_b) throw std::invalid_argument("tool_a and tool_b are the same tool");
      if (!ids.insert(pair.pair_id).second) throw std::invalid_argument("duplicate pair_id " + pair.pair_id);
      pairs.push_back(std::move(pair));
    } catch (const json::exception& e) {
      throw std::invalid_argument(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  return pairs;
}

json to_json(const ReviewItem& item) {
  return {{"pair_id", item.pair_id},
          {"image_url", item.image_url},
          {"left_text", item.left_text},
          {"right_text", item.right_text},
          {"remaining", item.remaining}};
}

std::optional<Choice> parse_choice(std::string_view name) {
  if (name == "left") return Choice::kLeft;
  if (name == "right") return Choice::kRight;
  if (name == "both_good") return Choice::kBothGood;
  if (name == "both_bad") return Choice::kBothBad;
  if (name == "invalid") return Choice::kInvalid;
  if (name == "skip" || name == "skipped") return Choice::kSkip;
  return std::nullopt;
}

ReviewQueue::ReviewQueue(std::vector<ReviewPair> pairs, std::filesystem::path judgments_file, std::uint64_t seed)
    : pairs_(std::move(pairs)), judgments_file_(std::move(judgments_file)), seed_(seed) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) index_[pairs_[i].pair_id] = i;
  std::error_code ec;
  if (std::filesystem::exists(judgments_file_, ec)) {
    const auto existing = load_judgments(judgments_file_);
    for (const auto& w : existing.warnings) spdlog::warn("{}", w);
    for (const auto& j : existing.judgments) {
      if (!j.pair_id) continue;
      const auto it = index_.find(*j.pair_id);
      if (it == index_.end()) continue;
      served_[j.annotator].insert(it->second);
      judged_[j.annotator].insert(it->second);
    }
  }
}

bool ReviewQueue::a_on_left(const std::string& annotator, const std::string& pair_id) const {
  return (derive_seed(seed_ ^ fnv1a(annotator), fnv1a(pair_id)) & 1u) == 0;
}

std::optional<ReviewItem> ReviewQueue::next(const std::string& annotator) {
  std::lock_guard lock(mutex_);
  auto& served = served_[annotator];
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (served.contains(i)) continue;
    served.insert(i);
    const auto& pair = pairs_[i];
    const bool left_is_a = a_on_left(annotator, pair.pair_id);
    ReviewItem item;
    item.pair_id = pair.pair_id;
    item.image_url = pair.image_url;
    item.left_text = left_is_a ? pair.text_a : pair.text_b;
    item.right_text = left_is_a ? pair.text_b : pair.text_a;
    item.remaining = pairs_.size() - served.size();
    return item;
  }
  return std::nullopt;
}

SubmitResult ReviewQueue::submit(const std::string& annotator, const std::string& pair_id, Choice choice,
                                 std::optional<std::string> timestamp) {
  std::lock_guard lock(mutex_);
  SubmitResult result;
  const auto it = index_.find(pair_id);
  if (it == index_.end()) {
    result.status = SubmitStatus::kUnknownPair;
    return result;
  }
  if (!served_[annotator].contains(it->second)) {
    result.status = SubmitStatus::kNotServed;
    return result;
  }
  const auto& pair = pairs_[it->second];
  const bool left_is_a = a_on_left(annotator, pair_id);
  Judgment j;
  j.page_id = pair.page_id;
  j.tool_a = pair.tool_a;
  j.tool_b = pair.tool_b;
  j.annotator = annotator;
  j.timestamp = timestamp ? *timestamp : utc_timestamp();
  j.pair_id = pair_id;
  switch (choice) {
    case Choice::kLeft:
      j.outcome = left_is_a ? Outcome::kAWins : Outcome::kBWins;
      break;
    case Choice::kRight:
      j.outcome = left_is_a ? Outcome::kBWins : Outcome::kAWins;
      break;
    case Choice::kBothGood:
      j.outcome = Outcome::kBothGood;
      break;
    case Choice::kBothBad:
      j.outcome = Outcome::kBothBad;
      break;
    case Choice::kInvalid:
      j.outcome = Outcome::kInvalid;
      break;
    case Choice::kSkip:
      j.outcome = Outcome::kSkipped;
      break;
  }
  append(j);
  const bool duplicate = !judged_[annotator].insert(it->second).second;
  if (duplicate) spdlog::info("annotator {} resubmitted pair {}; the later judgment replaces the earlier", annotator, pair_id);
  result.status = duplicate ? SubmitStatus::kDuplicate : SubmitStatus::kAccepted;
  result.judgment = std::move(j);
  return result;
}

void ReviewQueue::append(const Judgment& judgment) {
  const std::string line = to_json_line(judgment) + "\n";
  const int fd = ::open(judgments_file_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw std::runtime_error("cannot open judgments file " + judgments_file_.string());
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("cannot write judgments file " + judgments_file_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
}

struct ReviewServer::Impl {
  ReviewQueue& queue;
  ReviewServerOptions options;
  httplib::Server server;

  Impl(ReviewQueue& q, ReviewServerOptions o) : queue(q), options(std::move(o)) {
    const auto reply = [](httplib::Response& res, int status, const json& body) {
      res.status = status;
      res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    };
    server.Get("/api/next", [this, reply](const httplib::Request& req, httplib::Response& res) {
      const auto annotator = req.get_param_value("annotator");
      if (annotator.empty()) return reply(res, 400, {{"ok", false}, {"error", "annotator is required"}});
      const auto item = queue.next(annotator);
      if (!item) return reply(res, 200, {{"done", true}});
      reply(res, 200, {{"done", false}, {"item", to_json(*item)}});
    });
    server.Post("/api/submit", [this, reply](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        return reply(res, 400, {{"ok", false}, {"error", "body must be JSON"}});
      }
      std::string pair_id, outcome, annotator;
      try {
        pair_id = required(body, "pair_id");
        outcome = required(body, "outcome");
        annotator = required(body, "annotator");
      } catch (const std::invalid_argument& e) {
        return reply(res, 400, {{"ok", false}, {"error", e.what()}});
      }
      const auto choice = parse_choice(outcome);
      if (!choice) return reply(res, 400, {{"ok", false}, {"error", "unknown outcome"}});
      SubmitResult result;
      try {
        result = queue.submit(annotator, pair_id, *choice);
      } catch (const std::runtime_error& e) {
        spdlog::error("{}", e.what());
        return reply(res, 500, {{"ok", false}, {"error", "could not store judgment"}});
      }
      switch (result.status) {
        case SubmitStatus::kUnknownPair:
          return reply(res, 404, {{"ok", false}, {"error", "unknown pair_id"}});
        case SubmitStatus::kNotServed:
          return reply(res, 409, {{"ok", false}, {"error", "pair was not served to this annotator"}});
        case SubmitStatus::kAccepted:
        case SubmitStatus::kDuplicate:
          return reply(res, 200, {{"ok", true}, {"duplicate", result.status == SubmitStatus::kDuplicate}});
      }
    });
    if (options.static_dir) {
      if (!server.set_mount_point("/", options.static_dir->string())) {
        throw std::runtime_error("static directory not found: " + options.static_dir->string());
      }
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kBuiltinPage, "text/html"); });
    }
  }
};

ReviewServer::ReviewServer(ReviewQueue& queue, ReviewServerOptions options)
    : impl_(std::make_unique<Impl>(queue, std::move(options))) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
    port = -1;
  }
  if (port < 0) throw std::runtime_error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  return port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace ocrbench

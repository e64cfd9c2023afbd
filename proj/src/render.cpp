#include "ocrbench/render.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

extern char** environ;

namespace ocrbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Integral coordinates are written as JSON integers, as the bridge does.
ordered_json number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9e15) return static_cast<std::int64_t>(v);
  return v;
}

std::string dump(const ordered_json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

ordered_json response_json(const RenderResponse& response) {
  ordered_json j;
  j["id"] = response.id;
  j["ok"] = response.ok;
  if (response.ok) {
    j["symbols"] = ordered_json::array();
    for (const auto& s : response.symbols) {
      ordered_json sym;
      sym["g"] = s.glyph;
      sym["x0"] = number(s.x0);
      sym["y0"] = number(s.y0);
      sym["x1"] = number(s.x1);
      sym["y1"] = number(s.y1);
      j["symbols"].push_back(std::move(sym));
    }
  } else {
    j["error"] = response.error;
  }
  return j;
}

RenderResponse response_from_json(const json& j) {
  RenderResponse response;
  response.id = j.at("id").get<std::string>();
  response.ok = j.at("ok").get<bool>();
  if (response.ok) {
    for (const auto& sym : j.at("symbols")) {
      response.symbols.push_back({sym.at("g").get<std::string>(), sym.at("x0").get<double>(),
                                  sym.at("y0").get<double>(), sym.at("x1").get<double>(),
                                  sym.at("y1").get<double>()});
    }
  } else {
    response.error = j.value("error", std::string("render failed"));
    if (response.error.empty()) response.error = "render failed";
  }
  return response;
}

}  // namespace

std::string encode_request(const RenderRequest& request) {
  ordered_json j;
  j["id"] = request.id;
  j["latex"] = request.latex;
  j["display"] = request.display;
  return dump(j);
}

RenderRequest decode_request(std::string_view line) {
  const auto j = json::parse(line);
  return {j.at("id").get<std::string>(), j.at("latex").get<std::string>(), j.value("display", true)};
}

std::string encode_response(const RenderResponse& response) { return dump(response_json(response)); }

RenderResponse decode_response(std::string_view line) { return response_from_json(json::parse(line)); }

// ---- FixtureRenderer -----------------------------------------------------

FixtureRenderer FixtureRenderer::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw RendererUnavailable("cannot open render fixtures " + file.string());
  FixtureRenderer renderer;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto& req = j.at("request");
      renderer.add(req.at("latex").get<std::string>(), req.value("display", true),
                   response_from_json(j.at("response")));
    } catch (const json::exception& e) {
      throw RendererUnavailable(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return renderer;
}

void FixtureRenderer::add(std::string latex, bool display, RenderResponse response) {
  recorded_[{std::move(latex), display}] = std::move(response);
}

std::vector<RenderResponse> FixtureRenderer::render_batch(std::span<const RenderRequest> requests) {
  std::vector<RenderResponse> out;
  out.reserve(requests.size());
  for (const auto& request : requests) {
    auto it = recorded_.find({request.latex, request.display});
    if (it == recorded_.end()) {
      out.push_back({request.id, false, {}, "no recorded rendering for '" + request.latex + "'"});
      continue;
    }
    auto response = it->second;
    response.id = request.id;
    out.push_back(std::move(response));
  }
  return out;
}

// ---- CachingRenderer -----------------------------------------------------

std::vector<RenderResponse> CachingRenderer::render_batch(std::span<const RenderRequest> requests) {
  using Key = std::pair<std::string, bool>;
  std::vector<RenderResponse> out(requests.size());
  std::vector<RenderRequest> missing;
  std::map<Key, std::vector<std::size_t>> waiting;  // repeated misses are sent once
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < requests.size(); ++i) {
      Key key{requests[i].latex, requests[i].display};
      if (auto it = cache_.find(key); it != cache_.end()) {
        out[i] = it->second;
        out[i].id = requests[i].id;
        continue;
      }
      auto& slots = waiting[key];
      if (slots.empty()) missing.push_back(requests[i]);
      slots.push_back(i);
    }
  }
  if (missing.empty()) return out;
  auto fresh = inner_.render_batch(missing);
  std::lock_guard lock(mutex_);
  for (std::size_t k = 0; k < fresh.size() && k < missing.size(); ++k) {
    Key key{missing[k].latex, missing[k].display};
    for (const std::size_t i : waiting[key]) {
      out[i] = fresh[k];
      out[i].id = requests[i].id;
    }
    cache_[std::move(key)] = std::move(fresh[k]);
  }
  return out;
}

// ---- BridgeClient --------------------------------------------------------

namespace {

class BridgeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace

class BridgeClient::Process {
 public:
  explicit Process(const std::vector<std::string>& command) {
    if (command.empty()) throw RendererUnavailable("no render bridge command configured");
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw RendererUnavailable(std::string("pipe: ") + std::strerror(errno));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw RendererUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[1]);
    posix_spawn_file_actions_addclose(&actions, from_child[0]);

    std::vector<char*> argv;
    for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
    argv.push_back(nullptr);
    const int rc = posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(to_child[0]);
    close(from_child[1]);
    if (rc != 0) {
      close(to_child[1]);
      close(from_child[0]);
      throw RendererUnavailable("cannot start render bridge '" + command.front() + "': " + std::strerror(rc));
    }
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
    fcntl(stdin_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(stdout_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(stdin_fd_, F_SETFL, fcntl(stdin_fd_, F_GETFL) | O_NONBLOCK);
  }

  ~Process() {
    if (stdin_fd_ >= 0) close(stdin_fd_);
    if (stdout_fd_ >= 0) close(stdout_fd_);
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (waitpid(pid_, &status, WNOHANG) == pid_) return;
        usleep(2000);
      }
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
  }

  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  std::vector<RenderResponse> exchange(std::span<const RenderRequest> requests, std::chrono::milliseconds timeout) {
    std::string pending;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      pending += encode_request(requests[i]);
      pending.push_back('\n');
      slot.emplace(requests[i].id, i);
    }
    std::vector<RenderResponse> out(requests.size());
    std::vector<bool> filled(requests.size(), false);
    std::size_t received = 0;
    std::size_t written = 0;

    while (received < requests.size()) {
      pollfd fds[2];
      nfds_t n = 0;
      fds[n++] = {stdout_fd_, POLLIN, 0};
      if (written < pending.size()) fds[n++] = {stdin_fd_, POLLOUT, 0};
      const int ready = poll(fds, n, static_cast<int>(timeout.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BridgeFailure(std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) throw BridgeFailure("render bridge timed out");
      if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t w = write(stdin_fd_, pending.data() + written, pending.size() - written);
        if (w < 0 && errno != EAGAIN && errno != EINTR) throw BridgeFailure("render bridge closed its input");
        if (w > 0) written += static_cast<std::size_t>(w);
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char chunk[65536];
        const ssize_t r = read(stdout_fd_, chunk, sizeof chunk);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) throw BridgeFailure("render bridge exited");
        buffer_.append(chunk, static_cast<std::size_t>(r));
        std::size_t newline;
        while ((newline = buffer_.find('\n')) != std::string::npos) {
          const std::string line = buffer_.substr(0, newline);
          buffer_.erase(0, newline + 1);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          RenderResponse response;
          try {
            response = decode_response(line);
          } catch (const json::exception& e) {
            throw BridgeFailure(std::string("malformed bridge response: ") + e.what());
          }
          const auto it = slot.find(response.id);
          if (it == slot.end() || filled[it->second]) continue;
          filled[it->second] = true;
          out[it->second] = std::move(response);
          ++received;
        }
      }
    }
    return out;
  }

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
};

BridgeClient::BridgeClient(BridgeOptions options) : options_(std::move(options)) {
  if (options_.pool_size == 0) options_.pool_size = 1;
  // A bridge that dies mid-write must surface as an error, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
}

BridgeClient::~BridgeClient() = default;

std::size_t BridgeClient::spawn_count() const {
  std::lock_guard lock(mutex_);
  return spawned_;
}

std::unique_ptr<BridgeClient::Process> BridgeClient::acquire() {
  std::unique_lock lock(mutex_);
  available_.wait(lock, [this] { return !idle_.empty() || live_ < options_.pool_size; });
  if (!idle_.empty()) {
    auto process = std::move(idle_.back());
    idle_.pop_back();
    return process;
  }
  ++live_;
  ++spawned_;
  lock.unlock();
  try {
    return std::make_unique<Process>(options_.command);
  } catch (...) {
    lock.lock();
    --live_;
    available_.notify_one();
    throw;
  }
}

void BridgeClient::release(std::unique_ptr<Process> process) {
  std::lock_guard lock(mutex_);
  idle_.push_back(std::move(process));
  available_.notify_one();
}

void BridgeClient::discard(std::unique_ptr<Process> process) {
  process.reset();
  std::lock_guard lock(mutex_);
  --live_;
  available_.notify_one();
}

std::vector<RenderResponse> BridgeClient::render_batch(std::span<const RenderRequest> requests) {
  if (requests.empty()) return {};
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto process = acquire();
    try {
      auto responses = process->exchange(requests, options_.response_timeout);
      release(std::move(process));
      return responses;
    } catch (const BridgeFailure& e) {
      last_error = e.what();
      discard(std::move(process));
    }
  }
  throw RendererUnavailable("render bridge failed twice: " + last_error);
}

}  // namespace ocrbench

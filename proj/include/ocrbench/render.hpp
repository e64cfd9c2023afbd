#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ocrbench/math.hpp"

namespace ocrbench {

struct RenderRequest {
  std::string id;
  std::string latex;
  bool display = true;

  friend bool operator==(const RenderRequest&, const RenderRequest&) = default;
};

struct RenderResponse {
  std::string id;
  bool ok = false;
  std::vector<SymbolBox> symbols;
  std::string error;  // set when !ok

  friend bool operator==(const RenderResponse&, const RenderResponse&) = default;
};

/// Wire format: one compact JSON object per line, keys in this order:
///   {"id":"...","latex":"...","display":true}
///   {"id":"...","ok":true,"symbols":[{"g":"x","x0":0,"y0":0,"x1":8,"y1":12}]}
///   {"id":"...","ok":false,"error":"..."}
std::string encode_request(const RenderRequest& request);
RenderRequest decode_request(std::string_view line);
std::string encode_response(const RenderResponse& response);
RenderResponse decode_response(std::string_view line);

/// Raised when no rendering backend can serve a request at all.
class RendererUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Renderer {
 public:
  virtual ~Renderer() = default;
  /// One response per request, in request order, ids preserved.
  virtual std::vector<RenderResponse> render_batch(std::span<const RenderRequest> requests) = 0;
};

/// Replays recorded bridge exchanges. The fixture file holds one JSON object
/// per line: {"request":{...},"response":{...}} in the wire format. Unknown
/// LaTeX yields ok=false.
class FixtureRenderer : public Renderer {
 public:
  static FixtureRenderer load(const std::filesystem::path& file);
  void add(std::string latex, bool display, RenderResponse response);
  std::vector<RenderResponse> render_batch(std::span<const RenderRequest> requests) override;
  std::size_t size() const { return recorded_.size(); }

 private:
  std::map<std::pair<std::string, bool>, RenderResponse> recorded_;
};

/// Memoizes another renderer by (latex, display). Thread-safe.
class CachingRenderer : public Renderer {
 public:
  explicit CachingRenderer(Renderer& inner) : inner_(inner) {}
  std::vector<RenderResponse> render_batch(std::span<const RenderRequest> requests) override;

 private:
  Renderer& inner_;
  std::mutex mutex_;
  std::map<std::pair<std::string, bool>, RenderResponse> cache_;
};

struct BridgeOptions {
  /// argv of the bridge process, e.g. {"node", "render-bridge/index.js"}.
  std::vector<std::string> command;
  /// Number of bridge processes kept alive.
  std::size_t pool_size = 1;
  std::chrono::milliseconds response_timeout{30'000};
};

/// Talks the line-delimited JSON protocol to a pool of child processes over
/// their stdin/stdout. A process that dies or stalls is restarted and the
/// batch retried once; a second failure raises RendererUnavailable.
class BridgeClient : public Renderer {
 public:
  explicit BridgeClient(BridgeOptions options);
  ~BridgeClient() override;
  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  std::vector<RenderResponse> render_batch(std::span<const RenderRequest> requests) override;

  /// Processes started so far, including restarts.
  std::size_t spawn_count() const;

 private:
  class Process;
  std::unique_ptr<Process> acquire();
  void release(std::unique_ptr<Process> process);
  void discard(std::unique_ptr<Process> process);

  BridgeOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable available_;
  std::vector<std::unique_ptr<Process>> idle_;
  std::size_t live_ = 0;
  std::size_t spawned_ = 0;
};

}  // namespace ocrbench

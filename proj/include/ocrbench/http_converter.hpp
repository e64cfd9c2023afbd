#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ocrbench/convert.hpp"

namespace ocrbench {

struct HttpConverterOptions {
  /// Full URL of an OpenAI-compatible chat completions endpoint, e.g.
  /// http://localhost:30000/v1/chat/completions. Plain HTTP only.
  std::string endpoint;
  std::string model;
  std::string api_key;  // sent as a bearer token when set
  std::chrono::seconds timeout{300};
  int max_tokens = 4096;
};

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Throws std::invalid_argument unless `url` is http://host[:port][/path].
ParsedUrl parse_http_url(const std::string& url);

/// Re-encodes an image file as PNG after turning it `degrees` clockwise
/// (a multiple of 90). Throws std::runtime_error if it cannot be read.
std::string rotated_png(const std::filesystem::path& image, int degrees);

/// Sends the prompt, plus the page image when one is given, and returns the
/// first choice's message content.
class HttpConverter : public Converter {
 public:
  HttpConverter(HttpConverterOptions options, std::optional<std::filesystem::path> page_image);

  std::string convert(const ConversionRequest& request) override;

  /// Request body for `request`; exposed for tests.
  nlohmann::json request_body(const ConversionRequest& request) const;

 private:
  HttpConverterOptions options_;
  ParsedUrl url_;
  std::optional<std::filesystem::path> page_image_;
};

}  // namespace ocrbench

#include "ocrbench/http_converter.hpp"

#include <stdexcept>

#include <httplib.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace ocrbench {

using nlohmann::json;

ParsedUrl parse_http_url(const std::string& url) {
  ParsedUrl parsed;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must start with http://: " + url);
  parsed.scheme = url.substr(0, scheme_end);
  if (parsed.scheme != "http") {
    throw std::invalid_argument("only http:// endpoints are supported (use a local TLS-terminating proxy): " + url);
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  if (slash != std::string::npos) parsed.path = rest.substr(slash);
  const auto colon = authority.rfind(':');
  parsed.host = authority.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      parsed.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in endpoint: " + url);
    }
  }
  if (parsed.host.empty()) throw std::invalid_argument("endpoint has no host: " + url);
  if (parsed.port <= 0 || parsed.port > 65535) throw std::invalid_argument("bad port in endpoint: " + url);
  return parsed;
}

std::string rotated_png(const std::filesystem::path& image, int degrees) {
  cv::Mat mat = cv::imread(image.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw std::runtime_error("cannot read page image " + image.string());
  switch (((degrees % 360) + 360) % 360) {
    case 90:
      cv::rotate(mat, mat, cv::ROTATE_90_CLOCKWISE);
      break;
    case 180:
      cv::rotate(mat, mat, cv::ROTATE_180);
      break;
    case 270:
      cv::rotate(mat, mat, cv::ROTATE_90_COUNTERCLOCKWISE);
      break;
    default:
      break;
  }
  std::vector<uchar> png;
  if (!cv::imencode(".png", mat, png)) throw std::runtime_error("cannot encode page image " + image.string());
  return std::string(png.begin(), png.end());
}

HttpConverter::HttpConverter(HttpConverterOptions options, std::optional<std::filesystem::path> page_image)
    : options_(std::move(options)), url_(parse_http_url(options_.endpoint)), page_image_(std::move(page_image)) {}

json HttpConverter::request_body(const ConversionRequest& request) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  if (page_image_) {
    const auto png = rotated_png(*page_image_, request.rotation);
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(png)}}}});
  }
  json body;
  body["model"] = options_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", content}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = options_.max_tokens;
  return body;
}

std::string HttpConverter::convert(const ConversionRequest& request) {
  json body;
  try {
    body = request_body(request);
  } catch (const std::runtime_error& e) {
    throw ConverterError(e.what());
  }
  httplib::Client client(url_.host, url_.port);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);
  const auto res = client.Post(url_.path, headers, body.dump(-1, ' ', false, json::error_handler_t::replace),
                               "application/json");
  if (!res) throw ConverterError("request to " + options_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw ConverterError("converter returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  try {
    const auto reply = json::parse(res->body);
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ConverterError("converter reply has no text content");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw ConverterError(std::string("malformed converter reply: ") + e.what());
  }
}

}  // namespace ocrbench

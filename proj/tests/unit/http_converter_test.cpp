#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "ocrbench/http_converter.hpp"
#include "test_util.hpp"

namespace ocrbench {
namespace {

using nlohmann::json;

// Chat-completions stand-in that records the last request.
class FakeEndpoint {
 public:
  FakeEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mutex_);
        body_ = req.body;
        auth_ = req.get_header_value("Authorization");
      }
      if (status_ != 200) {
        res.status = status_;
        res.set_content("overloaded", "text/plain");
        return;
      }
      res.set_content(reply_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  json body() {
    std::lock_guard lock(mutex_);
    return json::parse(body_);
  }
  std::string auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }

  int status_ = 200;
  std::string reply_ = R"({"choices":[{"message":{"role":"assistant","content":"{\"k\":1}"}}]})";

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::string body_;
  std::string auth_;
};

std::filesystem::path write_png(const testing::TempDir& dir, int rows, int cols) {
  cv::Mat img(rows, cols, CV_8UC1, cv::Scalar(0));
  img.at<uchar>(0, 0) = 255;
  const auto path = dir / "page.png";
  cv::imwrite(path.string(), img);
  return path;
}

cv::Mat decode(const std::string& png) {
  const std::vector<uchar> bytes(png.begin(), png.end());
  return cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
}

TEST(ParseHttpUrl, Forms) {
  const auto u = parse_http_url("http://localhost:30000/v1/chat/completions");
  EXPECT_EQ(u.host, "localhost");
  EXPECT_EQ(u.port, 30000);
  EXPECT_EQ(u.path, "/v1/chat/completions");
  EXPECT_EQ(parse_http_url("http://example.org").port, 80);
  EXPECT_EQ(parse_http_url("http://example.org").path, "/");
  EXPECT_THROW(parse_http_url("https://example.org/v1"), std::invalid_argument);
  EXPECT_THROW(parse_http_url("example.org"), std::invalid_argument);
  EXPECT_THROW(parse_http_url("http://:80/"), std::invalid_argument);
  EXPECT_THROW(parse_http_url("http://h:99999/"), std::invalid_argument);
}

TEST(RotatedPng, QuarterTurns) {
  testing::TempDir dir;
  const auto path = write_png(dir, 2, 3);
  const auto same = decode(rotated_png(path, 0));
  EXPECT_EQ(same.rows, 2);
  EXPECT_EQ(same.cols, 3);
  const auto turned = decode(rotated_png(path, 90));
  EXPECT_EQ(turned.rows, 3);
  EXPECT_EQ(turned.cols, 2);
  // Top-left pixel moves to the top-right under a clockwise turn.
  EXPECT_EQ(turned.at<uchar>(0, 1), 255);
  EXPECT_EQ(decode(rotated_png(path, 180)).at<uchar>(1, 2), 255);
  EXPECT_EQ(decode(rotated_png(path, 270)).at<uchar>(2, 0), 255);
  EXPECT_THROW(rotated_png(dir / "missing.png", 0), std::runtime_error);
}

TEST(HttpConverter, RequestBodyShape) {
  testing::TempDir dir;
  const auto png = write_png(dir, 4, 4);
  HttpConverter c({"http://127.0.0.1:1/x", "m", "", std::chrono::seconds(5), 512}, png);
  const auto body = c.request_body({"PROMPT", 0.3, 0, 0});
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.3);
  EXPECT_EQ(body["max_tokens"], 512);
  const auto& content = body["messages"][0]["content"];
  ASSERT_EQ(content.size(), 2u);
  EXPECT_EQ(content[0]["text"], "PROMPT");
  EXPECT_EQ(content[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,iVBOR", 0), 0u);

  HttpConverter text_only({"http://127.0.0.1:1/x", "m"}, std::nullopt);
  EXPECT_EQ(text_only.request_body({"P", 0.1, 0, 0})["messages"][0]["content"].size(), 1u);
}

TEST(HttpConverter, RoundTripThroughServer) {
  FakeEndpoint endpoint;
  HttpConverter c({endpoint.url(), "model-x", "secret", std::chrono::seconds(5)}, std::nullopt);
  EXPECT_EQ(c.convert({"hello", 0.2, 0, 0}), R"({"k":1})");
  EXPECT_EQ(endpoint.auth(), "Bearer secret");
  const auto body = endpoint.body();
  EXPECT_EQ(body["model"], "model-x");
  EXPECT_EQ(body["messages"][0]["content"][0]["text"], "hello");
}

TEST(HttpConverter, FailuresAreConverterErrors) {
  FakeEndpoint endpoint;
  HttpConverter c({endpoint.url(), "m", "", std::chrono::seconds(5)}, std::nullopt);
  endpoint.status_ = 503;
  EXPECT_THROW(c.convert({"p", 0, 0, 0}), ConverterError);
  endpoint.status_ = 200;
  endpoint.reply_ = R"({"choices":[]})";
  EXPECT_THROW(c.convert({"p", 0, 0, 0}), ConverterError);
  endpoint.reply_ = "not json";
  EXPECT_THROW(c.convert({"p", 0, 0, 0}), ConverterError);

  HttpConverter missing_image({endpoint.url(), "m"}, std::filesystem::path("/nonexistent.png"));
  EXPECT_THROW(missing_image.convert({"p", 0, 0, 0}), ConverterError);
}

TEST(HttpConverter, ConnectionRefused) {
  // Bind and release a port so nothing listens on it.
  int port = 0;
  {
    httplib::Server s;
    port = s.bind_to_any_port("127.0.0.1");
  }
  HttpConverter c({"http://127.0.0.1:" + std::to_string(port) + "/", "m", "", std::chrono::seconds(2)},
                  std::nullopt);
  EXPECT_THROW(c.convert({"p", 0, 0, 0}), ConverterError);
}

}  // namespace
}  // namespace ocrbench

#include "ocrbench/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ocrbench/interval.hpp"
#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// At most one decimal, no trailing ".0".
std::string coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s(buf);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw std::invalid_argument(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
  return v;
}

ordered_json json_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 9e15) return static_cast<std::int64_t>(v);
  return v;
}

}  // namespace

const std::string_view kPromptTemplate =
    "Below is the image of one page of a document, as well as some raw textual content that was previously "
    "extracted for it.\n"
    "Just return the plain text representation of this document as if you were reading it naturally.\n"
    "Do not hallucinate.\n"
    "RAW_TEXT_START\n"
    "{base_text}\n"
    "RAW_TEXT_END";

AnchorLayout parse_layout_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("layout: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("layout must be a JSON object");
  AnchorLayout layout;
  if (!j.contains("w") || !j.contains("h")) throw std::invalid_argument("layout needs \"w\" and \"h\"");
  layout.page_width = number(j["w"], "w");
  layout.page_height = number(j["h"], "h");
  if (j.contains("blocks")) {
    for (const auto& b : j["blocks"]) {
      if (!b.is_object() || !b.contains("t") || !b["t"].is_string()) {
        throw std::invalid_argument("layout block needs a string \"t\"");
      }
      TextBlock block{number(b.value("x", json()), "block x"), number(b.value("y", json()), "block y"),
                      sanitize_utf8(b["t"].get<std::string>())};
      if (block.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      layout.text_blocks.push_back(std::move(block));
    }
  }
  if (j.contains("images")) {
    for (const auto& im : j["images"]) {
      if (!im.is_array() || im.size() != 4) throw std::invalid_argument("layout image must be [x0,y0,x1,y1]");
      layout.image_boxes.push_back({number(im[0], "image x0"), number(im[1], "image y0"), number(im[2], "image x1"),
                                    number(im[3], "image y1")});
    }
  }
  return layout;
}

std::string layout_to_json(const AnchorLayout& layout) {
  ordered_json j;
  j["w"] = json_number(layout.page_width);
  j["h"] = json_number(layout.page_height);
  j["blocks"] = ordered_json::array();
  for (const auto& b : layout.text_blocks) {
    ordered_json block;
    block["x"] = json_number(b.x);
    block["y"] = json_number(b.y);
    block["t"] = b.text;
    j["blocks"].push_back(std::move(block));
  }
  j["images"] = ordered_json::array();
  for (const auto& im : layout.image_boxes) {
    j["images"].push_back({json_number(im.x0), json_number(im.y0), json_number(im.x1), json_number(im.y1)});
  }
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string anchor_header(const AnchorLayout& layout) {
  return "Page dimensions: " + coord(layout.page_width) + "x" + coord(layout.page_height);
}

std::string anchor_line(const ImageBox& image) {
  return "[img " + coord(image.x0) + "," + coord(image.y0) + "→" + coord(image.x1) + "," + coord(image.y1) + "]";
}

std::string anchor_line(const TextBlock& block) {
  std::string text = block.text;
  for (auto& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return "[" + coord(block.x) + "," + coord(block.y) + "] " + text;
}

std::string build_anchor(const AnchorLayout& layout, std::size_t char_limit, std::uint64_t seed) {
  const std::string header = anchor_header(layout);
  const std::size_t header_len = count_code_points(header);
  if (header_len > char_limit) return {};

  // Canonical order: images, then text.
  std::vector<std::string> lines;
  lines.reserve(layout.image_boxes.size() + layout.text_blocks.size());
  for (const auto& im : layout.image_boxes) lines.push_back(anchor_line(im));
  for (const auto& b : layout.text_blocks) lines.push_back(anchor_line(b));
  std::vector<std::size_t> cost(lines.size());
  std::size_t total = header_len;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    cost[i] = count_code_points(lines[i]) + 1;  // preceding newline
    total += cost[i];
  }

  std::vector<bool> chosen(lines.size(), total <= char_limit);
  if (total > char_limit) {
    std::size_t used = header_len;
    const auto take = [&](std::size_t i) {
      if (chosen[i] || used + cost[i] > char_limit) return;
      chosen[i] = true;
      used += cost[i];
    };
    const std::size_t n_images = layout.image_boxes.size();
    if (!layout.text_blocks.empty()) {
      take(n_images);
      take(lines.size() - 1);
    }
    if (n_images > 0) {
      take(0);
      take(n_images - 1);
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (!chosen[i]) rest.push_back(i);
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = rest.size(); i > 1; --i) std::swap(rest[i - 1], rest[draw_index(rng, i)]);
    for (const auto i : rest) take(i);
  }

  std::string out = header;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!chosen[i]) continue;
    out.push_back('\n');
    out += lines[i];
  }
  return out;
}

std::string anchor_plain_text(const AnchorLayout& layout) {
  std::string out;
  for (const auto& b : layout.text_blocks) {
    if (!out.empty()) out.push_back('\n');
    out += b.text;
  }
  return out;
}

std::string render_prompt(std::string_view anchor) {
  std::string prompt(kPromptTemplate);
  const std::string_view slot = "{base_text}";
  prompt.replace(prompt.find(slot), slot.size(), anchor);
  return prompt;
}

std::size_t estimate_tokens(std::string_view prompt, const PromptOptions& options) {
  const std::size_t per = std::max<std::size_t>(options.chars_per_token, 1);
  return (count_code_points(prompt) + per - 1) / per;
}

std::string truncate_anchor(std::string_view anchor, std::size_t char_limit) {
  std::size_t used = 0;
  std::size_t end = 0;
  std::size_t pos = 0;
  while (pos <= anchor.size()) {
    const auto nl = anchor.find('\n', pos);
    const auto line_end = nl == std::string_view::npos ? anchor.size() : nl;
    const std::size_t len = count_code_points(anchor.substr(pos, line_end - pos)) + (pos == 0 ? 0 : 1);
    if (used + len > char_limit) break;
    used += len;
    end = line_end;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::string(anchor.substr(0, end));
}

PromptBuild build_prompt(const std::string& anchor, const AnchorRegenerator& regenerate,
                         const PromptOptions& options) {
  const std::size_t budget =
      options.max_tokens > options.reserved_tokens ? options.max_tokens - options.reserved_tokens : 0;
  const auto fits = [&](const std::string& prompt) { return estimate_tokens(prompt, options) <= budget; };

  PromptBuild build;
  build.anchor = anchor;
  build.prompt = render_prompt(anchor);
  if (fits(build.prompt)) return build;

  for (std::size_t limit = options.initial_limit; limit >= std::max<std::size_t>(options.min_limit, 1);
       limit /= 2) {
    build.limits_tried.push_back(limit);
    build.anchor = regenerate(limit);
    build.prompt = render_prompt(build.anchor);
    if (fits(build.prompt)) return build;
  }
  build.anchor.clear();
  build.prompt = render_prompt("");
  build.degenerate = true;
  build.warning = "prompt exceeds the token budget at every anchor limit; sending it without anchor text";
  return build;
}

PromptBuild build_prompt(const std::string& anchor, const PromptOptions& options) {
  return build_prompt(
      anchor, [&anchor](std::size_t limit) { return truncate_anchor(anchor, limit); }, options);
}

}  // namespace ocrbench

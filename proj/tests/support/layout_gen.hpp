#pragma once

#include <random>
#include <string>

#include "ocrbench/anchor.hpp"
#include "ocrbench/convert.hpp"

namespace ocrbench::testing {

/// Random page with `blocks` text blocks and `images` image boxes.
inline AnchorLayout random_layout(std::mt19937_64& rng, std::size_t blocks, std::size_t images) {
  static const std::string kWords[] = {"the", "ratio", "x", "Table", "4.5%", "über", "数据", "a\nb", "—", "appendix"};
  AnchorLayout layout{612, 792, {}, {}};
  for (std::size_t i = 0; i < blocks; ++i) {
    std::string text;
    const auto words = 1 + rng() % 12;
    for (std::size_t w = 0; w < words; ++w) {
      if (w > 0) text += ' ';
      text += kWords[rng() % std::size(kWords)];
    }
    layout.text_blocks.push_back({static_cast<double>(rng() % 6120) / 10, static_cast<double>(rng() % 7920) / 10,
                                  text});
  }
  for (std::size_t i = 0; i < images; ++i) {
    const double x0 = static_cast<double>(rng() % 300);
    const double y0 = static_cast<double>(rng() % 400);
    layout.image_boxes.push_back({x0, y0, x0 + 10 + static_cast<double>(rng() % 200), y0 + 5.5});
  }
  return layout;
}

/// Converter replaying a fixed list of replies; a reply of "!" throws
/// ConverterError. Records every request.
class ScriptedConverter : public Converter {
 public:
  explicit ScriptedConverter(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string convert(const ConversionRequest& request) override {
    requests.push_back(request);
    const auto& reply = replies_.at(std::min(requests.size() - 1, replies_.size() - 1));
    if (reply == "!") throw ConverterError("connection reset");
    return reply;
  }

  std::vector<ConversionRequest> requests;

 private:
  std::vector<std::string> replies_;
};

inline std::string valid_reply(std::string text, bool rotation_valid = true, int correction = 0) {
  PageResponse r;
  r.primary_language = "en";
  r.is_rotation_valid = rotation_valid;
  r.rotation_correction = correction;
  r.natural_text = std::move(text);
  return serialize_response(r);
}

}  // namespace ocrbench::testing

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ocrbench {

/// Positioned text, PDF units, origin at the lower left of the page.
struct TextBlock {
  double x = 0;
  double y = 0;
  std::string text;

  friend bool operator==(const TextBlock&, const TextBlock&) = default;
};

struct ImageBox {
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;

  friend bool operator==(const ImageBox&, const ImageBox&) = default;
};

/// Text blocks and images of one page, in content-stream order.
struct AnchorLayout {
  double page_width = 0;
  double page_height = 0;
  std::vector<TextBlock> text_blocks;
  std::vector<ImageBox> image_boxes;

  friend bool operator==(const AnchorLayout&, const AnchorLayout&) = default;
};

/// Sidecar format:
///   {"w":612,"h":792,"blocks":[{"x":70.8,"y":709.5,"t":"..."}],"images":[[x0,y0,x1,y1]]}
/// Throws std::invalid_argument on malformed input.
AnchorLayout parse_layout_json(std::string_view json_text);
std::string layout_to_json(const AnchorLayout& layout);

/// "Page dimensions: WxH"
std::string anchor_header(const AnchorLayout& layout);

/// `[img x0,y0→x1,y1]`
std::string anchor_line(const ImageBox& image);
/// `[x,y] text`, with line breaks inside the text replaced by spaces.
std::string anchor_line(const TextBlock& block);

/// Header line followed by image lines, then text lines, each group in
/// document order. When everything does not fit in `char_limit` code points,
/// the first and last text blocks and then the first and last images are
/// taken first, and the remaining budget is filled in an order shuffled by
/// `seed`. The result never exceeds `char_limit`; it is empty when even the
/// header does not fit.
std::string build_anchor(const AnchorLayout& layout, std::size_t char_limit, std::uint64_t seed);

/// The text blocks joined by newlines; what is left when no converter
/// produced a usable answer.
std::string anchor_plain_text(const AnchorLayout& layout);

/// Prompt template with `{base_text}` standing for the anchor.
extern const std::string_view kPromptTemplate;

/// The template with the anchor substituted.
std::string render_prompt(std::string_view anchor);

struct PromptOptions {
  std::size_t max_tokens = 8192;
  /// Tokens set aside for the page image and anything else sent alongside.
  std::size_t reserved_tokens = 0;
  std::size_t chars_per_token = 4;
  /// First limit tried when the given anchor is too long; halved after that.
  std::size_t initial_limit = 6000;
  /// Regeneration stops below this limit.
  std::size_t min_limit = 32;
};

/// Estimated tokens for a prompt: code points / chars_per_token, rounded up.
std::size_t estimate_tokens(std::string_view prompt, const PromptOptions& options);

using AnchorRegenerator = std::function<std::string(std::size_t char_limit)>;

struct PromptBuild {
  std::string prompt;
  std::string anchor;                      // the anchor embedded in `prompt`
  std::vector<std::size_t> limits_tried;   // regeneration limits, in order
  bool degenerate = false;                 // nothing fit; anchor left empty
  std::optional<std::string> warning;
};

/// Embeds `anchor`; when the prompt is over budget, asks `regenerate` for
/// anchors at initial_limit, initial_limit / 2, ... until one fits.
PromptBuild build_prompt(const std::string& anchor, const AnchorRegenerator& regenerate,
                         const PromptOptions& options = {});

/// As above, regenerating by cutting `anchor` back to whole lines.
PromptBuild build_prompt(const std::string& anchor, const PromptOptions& options = {});

/// The longest prefix of `anchor` made of whole lines and at most
/// `char_limit` code points.
std::string truncate_anchor(std::string_view anchor, std::size_t char_limit);

}  // namespace ocrbench

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/anchor.hpp"

namespace ocrbench {

/// Structured answer for one page. All six fields are required on the wire.
struct PageResponse {
  std::optional<std::string> primary_language;
  bool is_rotation_valid = true;
  int rotation_correction = 0;  // clockwise degrees: 0, 90, 180 or 270
  bool is_table = false;
  bool is_diagram = false;
  std::optional<std::string> natural_text;

  friend bool operator==(const PageResponse&, const PageResponse&) = default;
};

/// A response that does not parse or does not match the schema. Retrying
/// the same page may succeed.
class ResponseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict: a JSON object with exactly the six fields, correct types, and
/// rotation_correction in {0, 90, 180, 270}.
PageResponse validate_response(std::string_view raw_json);
std::string serialize_response(const PageResponse& response);

/// A failed call to the converter (network, HTTP status, empty reply).
class ConverterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConversionRequest {
  std::string prompt;
  double temperature = 0;
  int rotation = 0;  // clockwise degrees to turn the page image before sending
  std::size_t attempt = 0;
};

class Converter {
 public:
  virtual ~Converter() = default;
  /// Returns the raw structured response. Throws ConverterError on
  /// transport failure.
  virtual std::string convert(const ConversionRequest& request) = 0;
};

enum class Fallback { kRawAnchorText, kEmpty };

std::string_view to_string(Fallback fallback);
std::optional<Fallback> parse_fallback(std::string_view name);

struct ConverterPolicy {
  /// Failed calls allowed after the first one.
  std::size_t max_retries = 4;
  /// Temperature for the n-th failed call is temperatures[min(n, size - 1)].
  std::vector<double> temperatures{0.1, 0.2, 0.3, 0.5, 0.8};
  /// Anchor character limit per failed call, same indexing; strictly decreasing.
  std::vector<std::size_t> char_limits{6000};
  Fallback fallback = Fallback::kRawAnchorText;
  /// Rotation reprocessing is capped; a fourth quarter turn would return to
  /// the starting orientation.
  std::size_t max_rotations = 3;
  PromptOptions prompt;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

enum class AttemptKind { kSuccess, kInvalidResponse, kTransportError, kRotate };

std::string_view to_string(AttemptKind kind);

struct AttemptRecord {
  std::size_t attempt = 0;
  double temperature = 0;
  int rotation = 0;
  std::size_t char_limit = 0;
  AttemptKind kind = AttemptKind::kSuccess;
  std::string detail;
};

struct ConversionResult {
  std::string text;
  bool used_fallback = false;
  int final_rotation = 0;
  std::optional<PageResponse> response;
  std::vector<AttemptRecord> attempts;
  std::vector<std::string> warnings;
};

/// Retries exhausted with the `empty` fallback.
class EmptyOutputError : public std::runtime_error {
 public:
  EmptyOutputError(std::string message, std::vector<AttemptRecord> attempts)
      : std::runtime_error(std::move(message)), attempts_(std::move(attempts)) {}
  const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<AttemptRecord> attempts_;
};

/// Prompts the converter until it returns a valid response.
///
/// Each call builds a fresh anchor seeded with `seed + call index`. A
/// response that is invalid, or a transport error, moves to the next
/// temperature and char limit. A response asking for a rotation (not valid,
/// non-zero correction) turns the page and asks again without advancing the
/// temperature; this also counts as a call. After `max_retries + 1` failed
/// calls the fallback applies.
ConversionResult convert_page(const AnchorLayout& layout, Converter& converter, const ConverterPolicy& policy,
                              std::uint64_t seed = 0);

}  // namespace ocrbench

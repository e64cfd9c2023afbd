#include "ocrbench/convert.hpp"

#include <algorithm>
#include <array>

#include <nlohmann/json.hpp>

namespace ocrbench {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 6> kResponseFields = {
    "primary_language", "is_rotation_valid", "rotation_correction", "is_table", "is_diagram", "natural_text",
};

std::optional<std::string> nullable_string(const json& j, std::string_view field) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw ResponseError(std::string(field) + " must be a string or null");
  return j.get<std::string>();
}

bool boolean(const json& j, std::string_view field) {
  if (!j.is_boolean()) throw ResponseError(std::string(field) + " must be a boolean");
  return j.get<bool>();
}

}  // namespace

PageResponse validate_response(std::string_view raw_json) {
  json j;
  try {
    j = json::parse(raw_json);
  } catch (const json::parse_error& e) {
    throw ResponseError(std::string("response is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ResponseError("response must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kResponseFields.begin(), kResponseFields.end(), key) == kResponseFields.end()) {
      throw ResponseError("unexpected field '" + key + "'");
    }
  }
  for (const auto field : kResponseFields) {
    if (!j.contains(std::string(field))) throw ResponseError("missing required field '" + std::string(field) + "'");
  }
  PageResponse response;
  response.primary_language = nullable_string(j["primary_language"], "primary_language");
  response.is_rotation_valid = boolean(j["is_rotation_valid"], "is_rotation_valid");
  const auto& rotation = j["rotation_correction"];
  if (!rotation.is_number_integer()) throw ResponseError("rotation_correction must be an integer");
  const auto degrees = rotation.get<std::int64_t>();
  if (degrees != 0 && degrees != 90 && degrees != 180 && degrees != 270) {
    throw ResponseError("rotation_correction must be one of 0, 90, 180, 270; got " + std::to_string(degrees));
  }
  response.rotation_correction = static_cast<int>(degrees);
  response.is_table = boolean(j["is_table"], "is_table");
  response.is_diagram = boolean(j["is_diagram"], "is_diagram");
  response.natural_text = nullable_string(j["natural_text"], "natural_text");
  return response;
}

std::string serialize_response(const PageResponse& response) {
  ordered_json j;
  j["primary_language"] = response.primary_language ? ordered_json(*response.primary_language) : ordered_json();
  j["is_rotation_valid"] = response.is_rotation_valid;
  j["rotation_correction"] = response.rotation_correction;
  j["is_table"] = response.is_table;
  j["is_diagram"] = response.is_diagram;
  j["natural_text"] = response.natural_text ? ordered_json(*response.natural_text) : ordered_json();
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string_view to_string(Fallback fallback) { return fallback == Fallback::kEmpty ? "empty" : "raw"; }

std::optional<Fallback> parse_fallback(std::string_view name) {
  if (name == "raw" || name == "raw_anchor_text") return Fallback::kRawAnchorText;
  if (name == "empty") return Fallback::kEmpty;
  return std::nullopt;
}

std::string_view to_string(AttemptKind kind) {
  switch (kind) {
    case AttemptKind::kSuccess:
      return "success";
    case AttemptKind::kInvalidResponse:
      return "invalid_response";
    case AttemptKind::kTransportError:
      return "transport_error";
    case AttemptKind::kRotate:
      return "rotate";
  }
  return "success";
}

void ConverterPolicy::validate() const {
  if (temperatures.empty()) throw std::invalid_argument("temperatures must not be empty");
  for (const double t : temperatures) {
    if (!(t >= 0)) throw std::invalid_argument("temperatures must be non-negative");
  }
  if (char_limits.empty()) throw std::invalid_argument("char_limits must not be empty");
  for (std::size_t i = 1; i < char_limits.size(); ++i) {
    if (char_limits[i] >= char_limits[i - 1]) throw std::invalid_argument("char_limits must be strictly decreasing");
  }
}

ConversionResult convert_page(const AnchorLayout& layout, Converter& converter, const ConverterPolicy& policy,
                              std::uint64_t seed) {
  policy.validate();
  ConversionResult result;
  std::size_t failures = 0;
  std::size_t rotations = 0;
  int rotation = 0;

  for (std::size_t call = 0; failures <= policy.max_retries; ++call) {
    AttemptRecord record;
    record.attempt = call;
    record.rotation = rotation;
    record.temperature = policy.temperatures[std::min(failures, policy.temperatures.size() - 1)];
    record.char_limit = policy.char_limits[std::min(failures, policy.char_limits.size() - 1)];

    const std::uint64_t anchor_seed = seed + call;
    const auto anchor = build_anchor(layout, record.char_limit, anchor_seed);
    const auto prompt = build_prompt(
        anchor, [&](std::size_t limit) { return build_anchor(layout, limit, anchor_seed); }, policy.prompt);
    if (prompt.warning) result.warnings.push_back(*prompt.warning);

    std::string raw;
    try {
      raw = converter.convert({prompt.prompt, record.temperature, rotation, call});
    } catch (const ConverterError& e) {
      record.kind = AttemptKind::kTransportError;
      record.detail = e.what();
      result.attempts.push_back(std::move(record));
      ++failures;
      continue;
    }
    PageResponse response;
    try {
      response = validate_response(raw);
    } catch (const ResponseError& e) {
      record.kind = AttemptKind::kInvalidResponse;
      record.detail = e.what();
      result.attempts.push_back(std::move(record));
      ++failures;
      continue;
    }
    if (!response.is_rotation_valid && response.rotation_correction != 0) {
      if (rotations < policy.max_rotations) {
        ++rotations;
        rotation = (rotation + response.rotation_correction) % 360;
        record.kind = AttemptKind::kRotate;
        record.detail = "rotate by " + std::to_string(response.rotation_correction);
        result.attempts.push_back(std::move(record));
        continue;
      }
      result.warnings.push_back("rotation limit reached; keeping the last response");
    }
    record.kind = AttemptKind::kSuccess;
    result.attempts.push_back(std::move(record));
    result.text = response.natural_text.value_or("");
    result.final_rotation = rotation;
    result.response = std::move(response);
    return result;
  }

  if (policy.fallback == Fallback::kEmpty) {
    throw EmptyOutputError("converter failed " + std::to_string(failures) + " times", std::move(result.attempts));
  }
  result.text = anchor_plain_text(layout);
  result.used_fallback = true;
  result.final_rotation = rotation;
  return result;
}

}  // namespace ocrbench

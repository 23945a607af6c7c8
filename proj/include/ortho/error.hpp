#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ortho {

enum class ErrorCode {
  invalid_argument,
  duplicate_id,
  unknown_id,
  placement_overlap,
  placement_occupied,
  open_preview_exists,
  unknown_preview,
  commit_with_missing_route,
  parse_error,
  unknown_op,
  unsupported_version,
  document_parse,
  placement_violation,
  sampling_failed,
};

// Stable names, used verbatim on the wire.
constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::unknown_id: return "unknown-id";
    case ErrorCode::placement_overlap: return "placement-overlap";
    case ErrorCode::placement_occupied: return "placement-occupied";
    case ErrorCode::open_preview_exists: return "open-preview-exists";
    case ErrorCode::unknown_preview: return "unknown-preview";
    case ErrorCode::commit_with_missing_route: return "commit-with-missing-route";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::unknown_op: return "unknown-op";
    case ErrorCode::unsupported_version: return "unsupported-version";
    case ErrorCode::document_parse: return "document-parse";
    case ErrorCode::placement_violation: return "placement-violation";
    case ErrorCode::sampling_failed: return "sampling-failed";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ortho

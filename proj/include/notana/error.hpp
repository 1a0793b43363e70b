#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace notana {

// Machine-readable error codes. The string form (to_string) is the published
// ApiError code and must stay stable.
enum class Errc {
  // intent model
  NoJsonFound,
  SchemaViolation,
  DuplicateUnitId,
  OutOfRange,
  UnknownUnit,
  UnknownSlider,
  EmptyTriplet,
  InvalidEdit,
  // raster / grid
  DimensionMismatch,
  OutOfImage,
  PngError,
  // pipeline
  InterpretationInvalid,
  NothingPinned,
  Superseded,
  // timeline
  UnknownUnitInDecomposition,
  UnknownBlock,
  UnknownTrack,
  NonPositiveDuration,
  NegativeStart,
  // prompts / generation
  DanglingReference,
  GenerationRejected,
  ParentNotReady,
  FrameNotReady,
  Cancelled,
  // backends
  BackendUnavailable,
  Timeout,
  AuthMissing,
  TransportError,
  CassetteMiss,
  // storage
  StorageFull,
  SerializationError,
  IntegrityError,
  NotFound,
  LockHeld,
  // generic
  InvalidArgument,
  Conflict,
  Internal,
};

std::string_view to_string(Errc code);

// Every published code, in declaration order.
const std::vector<Errc>& all_error_codes();

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, nlohmann::json details = nullptr);

  Errc code() const noexcept { return code_; }
  // The message without the "<code>: " prefix that what() carries.
  const std::string& message() const noexcept { return message_; }
  const nlohmann::json& details() const noexcept { return details_; }

  // {"code": ..., "message": ..., "details": ...}; details omitted when null.
  nlohmann::json to_json() const;

 private:
  Errc code_;
  std::string message_;
  nlohmann::json details_;
};

// Shorthand for the parser's most common failure.
[[noreturn]] void throw_schema_violation(const std::string& path, const std::string& reason);

}  // namespace notana

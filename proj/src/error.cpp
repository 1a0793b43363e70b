#include "notana/error.hpp"

namespace notana {

namespace {

struct CodeName {
  Errc code;
  std::string_view name;
};

constexpr CodeName kNames[] = {
    {Errc::NoJsonFound, "NoJsonFound"},
    {Errc::SchemaViolation, "SchemaViolation"},
    {Errc::DuplicateUnitId, "DuplicateUnitId"},
    {Errc::OutOfRange, "OutOfRange"},
    {Errc::UnknownUnit, "UnknownUnit"},
    {Errc::UnknownSlider, "UnknownSlider"},
    {Errc::EmptyTriplet, "EmptyTriplet"},
    {Errc::InvalidEdit, "InvalidEdit"},
    {Errc::DimensionMismatch, "DimensionMismatch"},
    {Errc::OutOfImage, "OutOfImage"},
    {Errc::PngError, "PngError"},
    {Errc::InterpretationInvalid, "InterpretationInvalid"},
    {Errc::NothingPinned, "NothingPinned"},
    {Errc::Superseded, "Superseded"},
    {Errc::UnknownUnitInDecomposition, "UnknownUnitInDecomposition"},
    {Errc::UnknownBlock, "UnknownBlock"},
    {Errc::UnknownTrack, "UnknownTrack"},
    {Errc::NonPositiveDuration, "NonPositiveDuration"},
    {Errc::NegativeStart, "NegativeStart"},
    {Errc::DanglingReference, "DanglingReference"},
    {Errc::GenerationRejected, "GenerationRejected"},
    {Errc::ParentNotReady, "ParentNotReady"},
    {Errc::FrameNotReady, "FrameNotReady"},
    {Errc::Cancelled, "Cancelled"},
    {Errc::BackendUnavailable, "BackendUnavailable"},
    {Errc::Timeout, "Timeout"},
    {Errc::AuthMissing, "AuthMissing"},
    {Errc::TransportError, "TransportError"},
    {Errc::CassetteMiss, "CassetteMiss"},
    {Errc::StorageFull, "StorageFull"},
    {Errc::SerializationError, "SerializationError"},
    {Errc::IntegrityError, "IntegrityError"},
    {Errc::NotFound, "NotFound"},
    {Errc::LockHeld, "LockHeld"},
    {Errc::InvalidArgument, "InvalidArgument"},
    {Errc::Conflict, "Conflict"},
    {Errc::Internal, "Internal"},
};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& entry : kNames) {
    if (entry.code == code) return entry.name;
  }
  return "Internal";
}

const std::vector<Errc>& all_error_codes() {
  static const std::vector<Errc> codes = [] {
    std::vector<Errc> out;
    for (const auto& entry : kNames) out.push_back(entry.code);
    return out;
  }();
  return codes;
}

Error::Error(Errc code, const std::string& message, nlohmann::json details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message),
      details_(std::move(details)) {}

nlohmann::json Error::to_json() const {
  nlohmann::json out = {{"code", std::string(to_string(code_))}, {"message", message_}};
  if (!details_.is_null()) out["details"] = details_;
  return out;
}

void throw_schema_violation(const std::string& path, const std::string& reason) {
  throw Error(Errc::SchemaViolation, path + ": " + reason,
              {{"path", path}, {"reason", reason}});
}

}  // namespace notana

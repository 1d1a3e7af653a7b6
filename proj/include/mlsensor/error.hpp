#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlsensor {

enum class Errc {
  InvalidArgument,
  UnknownLine,
  TimeTravel,
  LineConflict,
  Powered,
  BadMagic,
  BadCrc,
  KindMismatch,
  MalformedBlob,
  MissingPin,
  AddressConflict,
  ModalityMismatch,
  LayoutOverflow,
  TooManyDigits,
  MalformedNibble,
  InvalidDatasheet,
  FactoryKindMismatch,
  ShapeMismatch,
  ParseError,
  DuplicateSection,
  Io,
};

constexpr std::string_view to_string(Errc c) noexcept {
  switch (c) {
    case Errc::InvalidArgument: return "INVALID_ARGUMENT";
    case Errc::UnknownLine: return "UNKNOWN_LINE";
    case Errc::TimeTravel: return "TIME_TRAVEL";
    case Errc::LineConflict: return "LINE_CONFLICT";
    case Errc::Powered: return "POWERED";
    case Errc::BadMagic: return "BAD_MAGIC";
    case Errc::BadCrc: return "BAD_CRC";
    case Errc::KindMismatch: return "KIND_MISMATCH";
    case Errc::MalformedBlob: return "MALFORMED_BLOB";
    case Errc::MissingPin: return "MISSING_PIN";
    case Errc::AddressConflict: return "ADDRESS_CONFLICT";
    case Errc::ModalityMismatch: return "MODALITY_MISMATCH";
    case Errc::LayoutOverflow: return "LAYOUT_OVERFLOW";
    case Errc::TooManyDigits: return "TOO_MANY_DIGITS";
    case Errc::MalformedNibble: return "MALFORMED_NIBBLE";
    case Errc::InvalidDatasheet: return "INVALID_DATASHEET";
    case Errc::FactoryKindMismatch: return "FACTORY_KIND_MISMATCH";
    case Errc::ShapeMismatch: return "SHAPE_MISMATCH";
    case Errc::ParseError: return "PARSE_ERROR";
    case Errc::DuplicateSection: return "DUPLICATE_SECTION";
    case Errc::Io: return "IO";
  }
  return "UNKNOWN";
}

/// Every failure in the library surfaces as this exception; code() is the
/// stable identifier, what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mlsensor

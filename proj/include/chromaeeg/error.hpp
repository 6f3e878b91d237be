#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chromaeeg {

// Every failure the library reports maps onto one of these kinds, so callers
// (and the CLI) can branch on the category without parsing messages.
enum class ErrorKind {
  MissingColumn,
  NonMonotoneTimestamps,
  EmptyRecording,
  MalformedRow,
  NoStartMarker,
  RecordingTooShort,
  SegmentTooShort,
  MaskLengthMismatch,
  NonPowerOfTwoLength,
  InsufficientSupport,
  BandNotCovered,
  SeriesTooShort,
  ZeroVariance,
  DegenerateWindow,
  InsufficientData,
  DegenerateClass,
  NonFiniteLoss,
  DimensionMismatch,
  SingularData,
  ClassMissing,
  LengthMismatch,
  Empty,
  SingleClass,
  ClassTooSmall,
  SingleSubject,
  EmptyReport,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace chromaeeg

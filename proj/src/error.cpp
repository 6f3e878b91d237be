#include "chromaeeg/error.hpp"

namespace chromaeeg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorKind::EmptyRecording: return "EmptyRecording";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NoStartMarker: return "NoStartMarker";
    case ErrorKind::RecordingTooShort: return "RecordingTooShort";
    case ErrorKind::SegmentTooShort: return "SegmentTooShort";
    case ErrorKind::MaskLengthMismatch: return "MaskLengthMismatch";
    case ErrorKind::NonPowerOfTwoLength: return "NonPowerOfTwoLength";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::BandNotCovered: return "BandNotCovered";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::DegenerateWindow: return "DegenerateWindow";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularData: return "SingularData";
    case ErrorKind::ClassMissing: return "ClassMissing";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::SingleSubject: return "SingleSubject";
    case ErrorKind::EmptyReport: return "EmptyReport";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace chromaeeg

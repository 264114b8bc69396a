#include "voxrisk/error.hpp"

namespace voxrisk {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorKind::EmptyBuffer: return "EmptyBuffer";
    case ErrorKind::ZeroTargetRate: return "ZeroTargetRate";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::OverlappingSpans: return "OverlappingSpans";
    case ErrorKind::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorKind::BufferTooShort: return "BufferTooShort";
    case ErrorKind::TooFewPeriods: return "TooFewPeriods";
    case ErrorKind::NonPositiveAmplitude: return "NonPositiveAmplitude";
    case ErrorKind::UnvoicedFrame: return "UnvoicedFrame";
    case ErrorKind::EmptyLld: return "EmptyLld";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::UnknownSubjectInFeatures: return "UnknownSubjectInFeatures";
    case ErrorKind::MissingRequiredField: return "MissingRequiredField";
    case ErrorKind::RatingOutOfRange: return "RatingOutOfRange";
    case ErrorKind::DuplicateFeatureName: return "DuplicateFeatureName";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::SingleClassTraining: return "SingleClassTraining";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::TooFewSubjects: return "TooFewSubjects";
    case ErrorKind::SingleClassCohort: return "SingleClassCohort";
    case ErrorKind::EmptyPredictionList: return "EmptyPredictionList";
    case ErrorKind::EmptyScope: return "EmptyScope";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      detail_(detail) {}

void raise(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

}  // namespace voxrisk

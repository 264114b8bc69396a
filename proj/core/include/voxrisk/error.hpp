#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voxrisk {

/// Failure categories raised by the library. Each maps to one documented
/// error condition of a public operation.
enum class ErrorKind {
  // audio
  MissingFile,
  MalformedHeader,
  UnsupportedEncoding,
  EmptyBuffer,
  ZeroTargetRate,
  // segmentation
  SchemaViolation,
  OverlappingSpans,
  SpanOutOfRange,
  BufferTooShort,
  // acoustic features
  TooFewPeriods,
  NonPositiveAmplitude,
  UnvoicedFrame,
  EmptyLld,
  // embeddings / tables
  NonFiniteValue,
  DimensionMismatch,
  EmptyMatrix,
  // cohort
  UnknownSubjectInFeatures,
  MissingRequiredField,
  RatingOutOfRange,
  DuplicateFeatureName,
  // learner
  TooFewRows,
  SingleClassTraining,
  NonFiniteInput,
  MissingClass,
  // evaluation
  TooFewSubjects,
  SingleClassCohort,
  EmptyPredictionList,
  EmptyScope,
  // tooling
  InvalidSpec,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& detail);

}  // namespace voxrisk

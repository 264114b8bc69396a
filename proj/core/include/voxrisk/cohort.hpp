#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/feature_vector.hpp"
#include "voxrisk/segment.hpp"

namespace voxrisk {

enum class Gender { Female, Male, Other };

std::string_view to_string(Gender g) noexcept;
std::optional<Gender> parse_gender(std::string_view text) noexcept;

/// Documented scale ranges (configuration, not clinical facts).
inline constexpr int kHopelessnessMax = 4;
inline constexpr int kRatingMin = 1;
inline constexpr int kRatingMax = 6;

/// One patient. Every metadata field may be missing (std::nullopt); a
/// missing value is never silently replaced by zero.
struct SubjectRecord {
  std::string subject_id;
  std::optional<double> age;
  std::optional<Gender> gender;
  std::optional<double> height_cm;
  std::optional<double> weight_kg;
  std::optional<bool> suicide_attempt_history;
  std::optional<bool> firearm_or_lethal_medication_access;
  std::optional<int> hopelessness;  ///< ordinal 0..kHopelessnessMax
  std::optional<bool> sexual_abuse_trauma;
  std::optional<bool> stress_situation;
  std::optional<bool> substance_abuse;
  std::optional<bool> mania;
  std::optional<bool> nssi;
  std::optional<int> bdi_score;
  int clinician_rating = 1;  ///< Likert 1..6
};

enum class BinaryLabel { Low, High };

std::string_view to_string(BinaryLabel label) noexcept;
/// +1 for High, -1 for Low.
inline int to_sign(BinaryLabel label) noexcept { return label == BinaryLabel::High ? 1 : -1; }
inline BinaryLabel from_sign(int sign) noexcept { return sign > 0 ? BinaryLabel::High : BinaryLabel::Low; }

/// 1-4 -> Low, 5-6 -> High. Throws RatingOutOfRange.
BinaryLabel binarize_label(int rating);

/// Metadata fields in ladder order. F1 is the four demographic fields;
/// F2..F10 each add the next field.
enum class MetaField {
  Age,
  Gender,
  Height,
  Weight,
  SuicideAttempts,
  FirearmsOrLethalMedication,
  Hopelessness,
  SexualAbuseTrauma,
  StressSituation,
  SubstanceAbuse,
  Mania,
  Nssi,
  Bdi,
};

inline constexpr std::size_t kNumMetaFields = 13;

/// Column name in the metadata CSV.
std::string_view csv_column(MetaField field) noexcept;
/// Table row label fragment, e.g. "Suicide Attempts".
std::string_view display_name(MetaField field) noexcept;

struct MetadataLadderLevel {
  int level = 1;  ///< 1..10
  std::vector<MetaField> included_fields;

  std::string name() const { return "F" + std::to_string(level); }
};

/// Throws InvalidSpec outside 1..10.
MetadataLadderLevel ladder_level(int level);
/// "F1".."F10" or "1".."10".
std::optional<int> parse_ladder_level(std::string_view text) noexcept;
/// Row label as rendered in the ablation table, e.g.
/// "F1 + Suicide Attempts (F2)".
std::string ladder_row_label(int level);

/// Number of encoded dimensions a field contributes (3 for gender).
std::size_t encoded_width(MetaField field) noexcept;

/// Numbers pass through, booleans become 0/1, gender is one-hot over
/// (female, male, other), hopelessness is one ordinal value. Names are
/// prefixed "meta.". Throws MissingRequiredField.
FeatureVector encode_metadata(const SubjectRecord& record, const MetadataLadderLevel& level);

/// Fills missing fields: numeric/ordinal/boolean fields take the median of
/// the fitted records (booleans rounded, ties toward true), a missing
/// gender takes the "other/unspecified" slot.
class MetadataImputer {
 public:
  static MetadataImputer fit(const std::vector<const SubjectRecord*>& training);
  SubjectRecord apply(const SubjectRecord& record) const;
  /// Median used for each field, absent when no training record had it.
  const std::map<MetaField, double>& medians() const noexcept { return medians_; }

 private:
  std::map<MetaField, double> medians_;
};

/// Concatenation: speech block first, then metadata. Throws
/// DuplicateFeatureName.
FeatureVector fuse(const FeatureVector& speech, const FeatureVector& meta);

/// One segment's identity and its vectors per feature source.
struct SegmentEntry {
  std::string segment_id;
  std::string subject_id;
  SpanKind kind = SpanKind::NeutralText;
  std::map<std::string, FeatureVector> features;  ///< keyed by source name
};

struct CohortDataset {
  std::vector<SubjectRecord> subjects;  ///< sorted by subject_id
  std::vector<SegmentEntry> segments;   ///< sorted by (subject_id, segment_id)

  const SubjectRecord* find_subject(std::string_view id) const;
  BinaryLabel label_of(std::string_view subject_id) const;
  std::vector<std::string> subject_ids() const;
};

std::vector<SubjectRecord> parse_metadata_csv(std::string_view text, std::string_view origin = "<memory>");
std::vector<SubjectRecord> load_metadata_csv(const std::filesystem::path& path);
std::string metadata_to_csv(const std::vector<SubjectRecord>& subjects);

/// Header line of the metadata CSV (exact field names).
std::string metadata_csv_header();

/// Reads the metadata CSV and every feature file below features_dir laid
/// out as <subject>/<segment>/<source>.{csv,bin}. Feature files carry
/// subject_id, segment_id, kind and source in their metadata. Throws
/// UnknownSubjectInFeatures, MissingRequiredField, RatingOutOfRange,
/// DimensionMismatch.
CohortDataset load_cohort(const std::filesystem::path& metadata_path, const std::filesystem::path& features_dir);

}  // namespace voxrisk

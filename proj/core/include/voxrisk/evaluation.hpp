#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/cohort.hpp"
#include "voxrisk/learner.hpp"

namespace voxrisk {

enum class FeatureSourceKind { CompactFunctionals, ExtendedFunctionals, MelspecSummary, Embedding };

struct FeatureSource {
  FeatureSourceKind kind = FeatureSourceKind::CompactFunctionals;
  std::string model_id;  ///< only for Embedding

  /// "compact_functionals", "extended_functionals", "melspec_summary" or
  /// "embedding:<model_id>". This is also the key in SegmentEntry::features.
  std::string name() const;
  /// Name usable as a file stem (':' replaced by '-').
  std::string file_stem() const;
  static std::optional<FeatureSource> parse(std::string_view text);

  friend bool operator==(const FeatureSource&, const FeatureSource&) = default;
};

enum class SpeechScope { All, PictureDescription, NeutralText, Vowels };

std::string_view to_string(SpeechScope scope) noexcept;
std::optional<SpeechScope> parse_speech_scope(std::string_view text) noexcept;
/// Column label in the ablation table ("All Speech", "Pic. Desc.", ...).
std::string_view scope_label(SpeechScope scope) noexcept;
bool scope_contains(SpeechScope scope, SpanKind kind) noexcept;

enum class Aggregation { Segment, SubjectMajority };
std::string_view to_string(Aggregation a) noexcept;
std::optional<Aggregation> parse_aggregation(std::string_view text) noexcept;

struct ExperimentConfig {
  std::optional<FeatureSource> feature_source;  ///< empty: metadata only
  SpeechScope speech_scope = SpeechScope::All;
  std::optional<int> metadata_level;  ///< empty: no metadata
  CGrid c_grid;
  std::uint64_t seed = 42;
  std::size_t inner_folds = 5;
  Aggregation aggregation = Aggregation::SubjectMajority;  ///< granularity shown in tables
  bool class_weighting = false;

  /// Throws InvalidSpec.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct SegmentPrediction {
  std::string segment_id;
  double decision = 0.0;
  BinaryLabel predicted = BinaryLabel::Low;
};

struct FoldOutcome {
  std::string held_out_subject;
  bool skipped = false;
  std::string skip_reason;
  double chosen_c = 0.0;
  std::size_t inner_folds = 0;
  std::vector<double> inner_scores;
  std::size_t train_rows = 0;
  std::vector<SegmentPrediction> per_segment;
  BinaryLabel subject_pred = BinaryLabel::Low;
  BinaryLabel subject_true = BinaryLabel::Low;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<FoldOutcome> folds;  ///< one per evaluated subject, sorted by id
  std::vector<std::string> excluded_subjects;  ///< no in-scope segments
  std::size_t feature_dim = 0;
  std::vector<std::string> feature_names;
  std::optional<double> balanced_accuracy_segment;  ///< empty if a class never got scored
  std::optional<double> balanced_accuracy_subject;
  double runtime_s = 0.0;  ///< wall clock; not part of the serialized report

  std::optional<double> headline() const {
    return config.aggregation == Aggregation::Segment ? balanced_accuracy_segment : balanced_accuracy_subject;
  }
};

/// Keeps only in-scope segments; subjects left without segments are
/// dropped and listed in `excluded`. Throws EmptyScope.
CohortDataset speech_scope_filter(const CohortDataset& dataset, SpeechScope scope,
                                  std::vector<std::string>* excluded = nullptr);

/// Majority vote; a tie goes to the sign of the mean decision value, and a
/// zero mean goes to High. Throws EmptyPredictionList.
BinaryLabel aggregate_subject(const std::vector<std::pair<double, BinaryLabel>>& per_segment);

/// Everything one LOSO fold trains and tests on. Exposed so leakage checks
/// can recompute the preprocessing from training rows alone.
struct FoldData {
  std::string held_out_subject;
  std::vector<std::string> train_subjects;
  std::vector<std::string> feature_names;
  Matrix x_train;  ///< unscaled
  std::vector<int> y_train;
  std::vector<std::string> train_groups;
  Matrix x_test;
  std::vector<std::string> test_segment_ids;
  BinaryLabel test_label = BinaryLabel::Low;
  std::map<MetaField, double> imputation_medians;
  ScalerParams scaler;  ///< fit on x_train only
};

/// Subjects that enter the outer loop for this config, sorted.
std::vector<std::string> evaluated_subjects(const CohortDataset& dataset, const ExperimentConfig& config);

FoldData prepare_fold(const CohortDataset& dataset, const ExperimentConfig& config, std::string_view held_out);

/// Leave-one-subject-out over every evaluated subject. Folds run on up to
/// `jobs` threads; the report does not depend on the job count. Throws
/// TooFewSubjects, SingleClassCohort, EmptyScope.
ExperimentReport loso_run(const CohortDataset& dataset, const ExperimentConfig& config, std::size_t jobs = 1);

inline constexpr std::size_t kLadderRows = 10;
inline constexpr std::size_t kLadderCols = 5;

/// Column c of the ablation table: 0 is metadata only, 1..4 fuse with the
/// scopes All, PictureDescription, NeutralText, Vowels.
ExperimentConfig ladder_cell_config(const ExperimentConfig& base, int level, std::size_t column);

struct AblationTable {
  ExperimentConfig base;
  std::vector<std::vector<ExperimentReport>> cells;  ///< [row F1..F10][column]
};

AblationTable ablation_ladder(const CohortDataset& dataset, const ExperimentConfig& base, std::size_t jobs = 1);

struct PermutationBand {
  std::vector<double> scores;  ///< subject-level balanced accuracy per permutation
  double lower = 0.0;          ///< 2.5th percentile
  double upper = 0.0;          ///< 97.5th percentile
};

/// Reruns LOSO with subject labels shuffled across subjects.
PermutationBand permutation_band(const CohortDataset& dataset, const ExperimentConfig& config,
                                 std::size_t permutations = 100, std::uint64_t seed = 7, std::size_t jobs = 1);

}  // namespace voxrisk

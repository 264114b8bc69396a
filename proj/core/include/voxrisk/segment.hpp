#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/audio.hpp"

namespace voxrisk {

/// Speech activity a segment was cut from.
enum class SpanKind { PictureDescription, NeutralText, Vowel };

inline constexpr std::array<SpanKind, 3> kAllSpanKinds = {
    SpanKind::PictureDescription, SpanKind::NeutralText, SpanKind::Vowel};

/// Manifest spelling: picture_description, neutral_text, vowel.
std::string_view to_string(SpanKind kind) noexcept;
std::optional<SpanKind> parse_span_kind(std::string_view text) noexcept;

/// Row label used by the duration statistics table.
std::string_view table_label(SpanKind kind) noexcept;

struct SegmentSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  SpanKind kind = SpanKind::NeutralText;
  std::optional<std::string> text;
  std::optional<char> vowel_label;  ///< one of a e i o u, present iff kind == Vowel

  double duration_s() const noexcept { return end_s - start_s; }
};

struct SegmentManifest {
  std::string recording_id;
  std::string subject_id;
  std::optional<double> duration_s;   ///< recording length, when known
  std::optional<std::string> audio_path;
  std::vector<SegmentSpan> spans;

  /// Stable per-segment identifier: <recording_id>_<index, 3 digits>.
  std::string segment_id(std::size_t index) const;
};

/// Checks field-level and cross-span invariants, sorting spans by start.
/// Throws SchemaViolation, OverlappingSpans or SpanOutOfRange.
void validate_manifest(SegmentManifest& manifest);

/// Reads a JSON manifest. When `recording_duration_s` is given it takes
/// precedence over the manifest's own duration_s field for range checks.
SegmentManifest ingest_manifest(const std::filesystem::path& path,
                                std::optional<double> recording_duration_s = std::nullopt);

SegmentManifest parse_manifest(std::string_view json_text,
                               std::optional<double> recording_duration_s = std::nullopt);

/// Canonical JSON text (2-space indent, fixed key order, trailing newline).
std::string manifest_to_json(const SegmentManifest& manifest);
void write_manifest(const std::filesystem::path& path, const SegmentManifest& manifest);

struct VadOptions {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double threshold_db = -35.0;   ///< relative to the loudest frame's RMS
  double min_seg_ms = 200.0;
  double min_gap_ms = 300.0;
  double abs_floor_db = -90.0;   ///< loudest frame below this: no speech at all
};

/// Energy-based activity detection. Frames whose RMS exceeds the loudest
/// frame's RMS by `threshold_db` are active. Run edges are then refined to
/// the first/last sample above the same amplitude threshold, gaps shorter
/// than min_gap_ms are bridged, and spans shorter than min_seg_ms dropped.
/// Every returned span carries `kind`.
std::vector<SegmentSpan> energy_vad(const AudioBuffer& buffer, const VadOptions& options = {},
                                    SpanKind kind = SpanKind::NeutralText);

/// Copies the samples covered by the span. Sample indices are
/// round(start_s * rate) .. round(end_s * rate).
AudioBuffer slice(const AudioBuffer& buffer, const SegmentSpan& span);

/// Duration statistics of one group of segments. Statistics are absent for
/// an empty group; the standard deviation uses the population formula.
struct SegmentStats {
  std::string label;
  std::size_t count = 0;
  std::optional<double> mean_s;
  std::optional<double> std_s;
  std::optional<double> min_s;
  std::optional<double> max_s;
  double total_min = 0.0;
};

/// One row per kind (picture description, neutral texts, vowels) followed
/// by a Total row. With group_by_kind == false only the Total row is
/// returned.
std::vector<SegmentStats> segment_stats(const std::vector<SegmentSpan>& spans, bool group_by_kind = true);

/// Column headers shared by both renderings.
inline constexpr std::array<std::string_view, 7> kStatsColumns = {
    "Sample Type", "# utt.", "mu [s]", "sigma [s]", "min [s]", "max [s]", "Sum dur. [m]"};

std::string stats_to_csv(const std::vector<SegmentStats>& rows);
std::string stats_to_text(const std::vector<SegmentStats>& rows);
std::vector<SegmentStats> stats_from_csv(std::string_view csv);

}  // namespace voxrisk

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/evaluation.hpp"

namespace voxrisk {

/// Canonical JSON of a config (compact, fixed key order).
std::string config_to_json(const ExperimentConfig& config);
/// Accepts the keys written by config_to_json; missing keys keep defaults.
/// Throws ConfigError.
ExperimentConfig config_from_json(std::string_view text);

/// FNV-1a 64 over the canonical JSON.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string config_hash_hex(const ExperimentConfig& config);

/// Machine-readable report. Wall-clock runtime is left out so that equal
/// inputs give byte-equal files.
std::string report_to_json(const ExperimentReport& report);
/// "report_<hash>.json"
std::string report_file_name(const ExperimentConfig& config);
/// Writes the report and a "timing_<hash>.json" sidecar; returns the report path.
std::filesystem::path write_report(const std::filesystem::path& dir, const ExperimentReport& report);

/// Header plus rows of preformatted cells.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const TextTable&, const TextTable&) = default;
};

std::string table_csv(const TextTable& table);
/// Throws SchemaViolation on ragged rows.
TextTable parse_table_csv(std::string_view text);
/// First column left-aligned, the rest right-aligned, a dashed rule under the header.
std::string table_text(const TextTable& table);

/// Balanced accuracy in percent with one decimal, "-" when undefined.
std::string format_percent(const std::optional<double>& value);

inline constexpr std::string_view kAblationCorner = "Metadata";
inline constexpr std::string_view kOnlyMetadataLabel = "Only Metadata";

/// 10 x 5 grid in ladder order; cells use the base config's aggregation.
TextTable ablation_table(const AblationTable& table);
/// Same layout from a bare score grid [row][column].
TextTable ablation_table(const std::vector<std::vector<std::optional<double>>>& scores);

}  // namespace voxrisk

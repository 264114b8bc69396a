#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/feature_vector.hpp"

namespace voxrisk {

/// A named-column matrix with string metadata. This is the on-disk unit for
/// feature vectors (one row) and embedding matrices (one row per time step).
///
/// CSV layout:
///
///     # voxrisk-table v1
///     # key: value            (zero or more, keys sorted)
///     name_0,name_1,...
///     v,v,...                 (one line per row)
///
/// Binary layout, all integers little-endian:
///
///     "VXTB"  u32 version=1
///     u32 meta_count, then per entry: u32 len, key bytes, u32 len, value bytes
///     u64 rows, u64 cols
///     per column: u32 len, name bytes
///     rows*cols IEEE-754 binary64, row-major
struct FeatureTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::vector<double> values;

  std::size_t cols() const noexcept { return names.size(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

inline constexpr std::uint32_t kTableFormatVersion = 1;

std::string table_to_csv(const FeatureTable& table);
FeatureTable table_from_csv(std::string_view text, std::string_view origin = "<memory>");

std::string table_to_binary(const FeatureTable& table);
FeatureTable table_from_binary(std::string_view bytes, std::string_view origin = "<memory>");

/// Dispatches on extension: ".bin" is binary, anything else CSV.
void write_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_table(const std::filesystem::path& path);

FeatureTable table_from_vector(const FeatureVector& vec, std::map<std::string, std::string> meta = {});
/// Requires exactly one row.
FeatureVector vector_from_table(const FeatureTable& table);

}  // namespace voxrisk

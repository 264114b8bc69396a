#include "voxrisk/table_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "text_util.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

constexpr std::string_view kCsvMagic = "# voxrisk-table v1";
constexpr char kBinMagic[4] = {'V', 'X', 'T', 'B'};

void check_shape(const FeatureTable& t, std::string_view origin) {
  if (t.values.size() != t.rows * t.cols()) {
    raise(ErrorKind::SchemaViolation, std::string(origin) + ": value count does not match rows x cols");
  }
  std::set<std::string_view> seen;
  for (const auto& n : t.names) {
    if (n.empty()) raise(ErrorKind::SchemaViolation, std::string(origin) + ": empty column name");
    if (!seen.insert(n).second) raise(ErrorKind::DuplicateFeatureName, std::string(origin) + ": " + n);
  }
}

void check_finite(const FeatureTable& t, std::string_view origin) {
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (!std::isfinite(t.values[r * t.cols() + c])) {
        raise(ErrorKind::NonFiniteValue,
              std::string(origin) + ": row " + std::to_string(r) + " col " + std::to_string(c));
      }
    }
  }
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;
  std::string_view origin;

  void need(std::size_t n) {
    if (bytes.size() - pos < n) raise(ErrorKind::SchemaViolation, std::string(origin) + ": truncated table");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(bytes.substr(pos, n));
    pos += n;
    return s;
  }
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

}  // namespace

std::string table_to_csv(const FeatureTable& t) {
  check_shape(t, "table_to_csv");
  std::string out(kCsvMagic);
  out += "\n";
  for (const auto& [k, v] : t.meta) {
    out += "# " + k + ": " + v + "\n";
  }
  for (std::size_t c = 0; c < t.cols(); ++c) {
    if (c) out += ",";
    out += t.names[c];
  }
  out += "\n";
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      if (c) out += ",";
      out += detail::format_double(t.values[r * t.cols() + c]);
    }
    out += "\n";
  }
  return out;
}

FeatureTable table_from_csv(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  auto ls = detail::lines(text);
  std::size_t i = 0;
  if (ls.empty() || ls[0] != kCsvMagic) raise(ErrorKind::SchemaViolation, where + ": missing table magic line");
  ++i;
  FeatureTable t;
  for (; i < ls.size() && !ls[i].empty() && ls[i][0] == '#'; ++i) {
    auto body = ls[i].substr(1);
    auto colon = body.find(':');
    if (colon == std::string_view::npos) raise(ErrorKind::SchemaViolation, where + ": bad metadata line");
    t.meta[std::string(detail::trim(body.substr(0, colon)))] = std::string(detail::trim(body.substr(colon + 1)));
  }
  if (i >= ls.size() || ls[i].empty()) raise(ErrorKind::SchemaViolation, where + ": missing header row");
  for (auto& n : detail::split(ls[i], ',')) t.names.emplace_back(detail::trim(n));
  ++i;
  for (; i < ls.size(); ++i) {
    if (ls[i].empty()) continue;
    auto cells = detail::split(ls[i], ',');
    if (cells.size() != t.cols()) {
      raise(ErrorKind::SchemaViolation, where + ": row " + std::to_string(t.rows) + " has " +
                                            std::to_string(cells.size()) + " cells, header has " +
                                            std::to_string(t.cols()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto cell = detail::trim(cells[c]);
      auto v = detail::parse_double(cell);
      if (!v) {
        if (cell == "nan" || cell == "NaN" || cell == "inf" || cell == "-inf") {
          raise(ErrorKind::NonFiniteValue, where + ": row " + std::to_string(t.rows) + " col " + std::to_string(c));
        }
        raise(ErrorKind::SchemaViolation, where + ": unparseable cell at row " + std::to_string(t.rows) + " col " +
                                              std::to_string(c));
      }
      t.values.push_back(*v);
    }
    ++t.rows;
  }
  check_shape(t, origin);
  check_finite(t, origin);
  return t;
}

std::string table_to_binary(const FeatureTable& t) {
  check_shape(t, "table_to_binary");
  std::string out(kBinMagic, 4);
  put_u32(out, kTableFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(t.meta.size()));
  for (const auto& [k, v] : t.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u64(out, t.rows);
  put_u64(out, t.cols());
  for (const auto& n : t.names) put_str(out, n);
  for (double v : t.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

FeatureTable table_from_binary(std::string_view bytes, std::string_view origin) {
  const std::string where(origin);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kBinMagic, 4) != 0) {
    raise(ErrorKind::SchemaViolation, where + ": missing binary table magic");
  }
  Reader rd{bytes, 4, origin};
  auto version = rd.u32();
  if (version != kTableFormatVersion) {
    raise(ErrorKind::SchemaViolation, where + ": unsupported table version " + std::to_string(version));
  }
  FeatureTable t;
  auto n_meta = rd.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = rd.str();
    t.meta[k] = rd.str();
  }
  const auto rows = rd.u64();
  const auto cols = rd.u64();
  if (cols > bytes.size() || rows > bytes.size()) raise(ErrorKind::SchemaViolation, where + ": implausible dims");
  t.rows = static_cast<std::size_t>(rows);
  for (std::uint64_t c = 0; c < cols; ++c) t.names.push_back(rd.str());
  rd.need(static_cast<std::size_t>(rows * cols * 8));
  t.values.resize(static_cast<std::size_t>(rows * cols));
  for (auto& v : t.values) v = std::bit_cast<double>(rd.u64());
  if (rd.pos != bytes.size()) raise(ErrorKind::SchemaViolation, where + ": trailing bytes");
  check_shape(t, origin);
  check_finite(t, origin);
  return t;
}

void write_table(const std::filesystem::path& path, const FeatureTable& table) {
  if (path.extension() == ".bin") {
    detail::write_text_file(path.string(), table_to_binary(table));
  } else {
    detail::write_text_file(path.string(), table_to_csv(table));
  }
}

FeatureTable read_table(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::MissingFile, path.string());
  auto content = detail::read_text_file(path.string());
  if (path.extension() == ".bin") return table_from_binary(content, path.string());
  return table_from_csv(content, path.string());
}

FeatureTable table_from_vector(const FeatureVector& vec, std::map<std::string, std::string> meta) {
  if (vec.names.size() != vec.values.size()) {
    raise(ErrorKind::DimensionMismatch, "feature vector names/values length differ");
  }
  FeatureTable t;
  t.meta = std::move(meta);
  t.names = vec.names;
  t.rows = 1;
  t.values = vec.values;
  return t;
}

FeatureVector vector_from_table(const FeatureTable& table) {
  if (table.rows != 1) {
    raise(ErrorKind::SchemaViolation, "feature file must hold exactly one row, found " + std::to_string(table.rows));
  }
  return FeatureVector{table.names, table.values};
}

}  // namespace voxrisk

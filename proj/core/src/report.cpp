#include "voxrisk/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {

using ojson = nlohmann::ordered_json;

namespace {

ojson config_json(const ExperimentConfig& c) {
  ojson j;
  j["feature_source"] = c.feature_source ? ojson(c.feature_source->name()) : ojson(nullptr);
  j["speech_scope"] = std::string(to_string(c.speech_scope));
  j["metadata_level"] = c.metadata_level ? ojson("F" + std::to_string(*c.metadata_level)) : ojson(nullptr);
  j["c_grid"] = c.c_grid.values;
  j["seed"] = c.seed;
  j["inner_folds"] = c.inner_folds;
  j["aggregation"] = std::string(to_string(c.aggregation));
  j["class_weighting"] = c.class_weighting;
  return j;
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(); }

ExperimentConfig config_from_json(std::string_view text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) raise(ErrorKind::ConfigError, "experiment config must be an object");
    if (j.contains("feature_source")) {
      const auto& v = j["feature_source"];
      if (v.is_null()) {
        c.feature_source.reset();
      } else {
        auto src = FeatureSource::parse(v.get<std::string>());
        if (!src) raise(ErrorKind::ConfigError, "unknown feature_source '" + v.get<std::string>() + "'");
        c.feature_source = *src;
      }
    }
    if (j.contains("speech_scope")) {
      auto s = parse_speech_scope(j["speech_scope"].get<std::string>());
      if (!s) raise(ErrorKind::ConfigError, "unknown speech_scope");
      c.speech_scope = *s;
    }
    if (j.contains("metadata_level")) {
      const auto& v = j["metadata_level"];
      if (v.is_null()) {
        c.metadata_level.reset();
      } else {
        auto lvl = v.is_number_integer() ? std::optional<int>(v.get<int>())
                                         : parse_ladder_level(v.get<std::string>());
        if (!lvl || *lvl < 1 || *lvl > 10) raise(ErrorKind::ConfigError, "metadata_level must be F1..F10 or null");
        c.metadata_level = lvl;
      }
    }
    if (j.contains("c_grid")) c.c_grid.values = j["c_grid"].get<std::vector<double>>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("inner_folds")) c.inner_folds = j["inner_folds"].get<std::size_t>();
    if (j.contains("aggregation")) {
      auto a = parse_aggregation(j["aggregation"].get<std::string>());
      if (!a) raise(ErrorKind::ConfigError, "unknown aggregation");
      c.aggregation = *a;
    }
    if (j.contains("class_weighting")) c.class_weighting = j["class_weighting"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::ConfigError, std::string("experiment config: ") + e.what());
  }
  return c;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_json(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

std::string report_to_json(const ExperimentReport& report) {
  ojson j;
  j["schema_version"] = 1;
  j["config"] = config_json(report.config);
  j["config_hash"] = config_hash_hex(report.config);
  j["feature_dim"] = report.feature_dim;
  j["excluded_subjects"] = report.excluded_subjects;
  j["balanced_accuracy_segment"] = optional_number(report.balanced_accuracy_segment);
  j["balanced_accuracy_subject"] = optional_number(report.balanced_accuracy_subject);
  ojson folds = ojson::array();
  for (const auto& f : report.folds) {
    ojson fj;
    fj["held_out_subject"] = f.held_out_subject;
    fj["skipped"] = f.skipped;
    if (f.skipped) fj["skip_reason"] = f.skip_reason;
    fj["chosen_c"] = f.chosen_c;
    fj["inner_folds"] = f.inner_folds;
    fj["inner_scores"] = f.inner_scores;
    fj["train_rows"] = f.train_rows;
    fj["subject_true"] = std::string(to_string(f.subject_true));
    fj["subject_pred"] = std::string(to_string(f.subject_pred));
    ojson segs = ojson::array();
    for (const auto& s : f.per_segment) {
      segs.push_back({{"segment_id", s.segment_id},
                      {"decision", s.decision},
                      {"predicted", std::string(to_string(s.predicted))}});
    }
    fj["segments"] = std::move(segs);
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["feature_names"] = report.feature_names;
  return j.dump(2) + "\n";
}

std::string report_file_name(const ExperimentConfig& config) { return "report_" + config_hash_hex(config) + ".json"; }

std::filesystem::path write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  const auto path = dir / report_file_name(report.config);
  detail::write_text_file(path.string(), report_to_json(report));
  ojson t;
  t["config_hash"] = config_hash_hex(report.config);
  t["runtime_s"] = report.runtime_s;
  detail::write_text_file((dir / ("timing_" + config_hash_hex(report.config) + ".json")).string(), t.dump(2) + "\n");
  return path;
}

namespace {

// Quotes a cell only when it holds a comma, quote or line break.
std::string csv_cell(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string q = "\"";
  for (char ch : cell) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

// Splits CSV text into records; quoted cells may span lines.
std::vector<std::vector<std::string>> csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> recs;
  std::vector<std::string> cur(1);
  bool quoted = false;
  bool any = false;
  auto finish = [&] {
    if (any) recs.push_back(std::move(cur));
    cur.assign(1, std::string());
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cur.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.back() += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = any = true;
    } else if (ch == ',') {
      cur.emplace_back();
      any = true;
    } else if (ch == '\n') {
      if (!cur.back().empty() && cur.back().back() == '\r') cur.back().pop_back();
      finish();
    } else {
      cur.back() += ch;
      any = true;
    }
  }
  if (quoted) raise(ErrorKind::SchemaViolation, "table: unterminated quote");
  if (!cur.back().empty() && cur.back().back() == '\r') cur.back().pop_back();
  finish();
  return recs;
}

}  // namespace

std::string table_csv(const TextTable& table) {
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_cell(cells[i]);
    out << "\n";
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out.str();
}

TextTable parse_table_csv(std::string_view text) {
  auto recs = csv_records(text);
  if (recs.empty()) raise(ErrorKind::SchemaViolation, "empty table");
  TextTable t;
  t.header = std::move(recs[0]);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    if (recs[i].size() != t.header.size()) {
      raise(ErrorKind::SchemaViolation, "table record " + std::to_string(i + 1) + " has " +
                                            std::to_string(recs[i].size()) + " cells");
    }
    t.rows.push_back(std::move(recs[i]));
  }
  return t;
}

std::string table_text(const TextTable& table) {
  const std::size_t ncol = table.header.size();
  std::vector<std::size_t> width(ncol, 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < ncol && c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  };
  measure(table.header);
  for (const auto& r : table.rows) measure(r);
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t c = 0; c < ncol; ++c) {
      const std::string& cell = c < r.size() ? r[c] : std::string();
      const std::string pad(width[c] - cell.size(), ' ');
      if (c) line += "  ";
      line += c == 0 ? cell + pad : pad + cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  };
  emit(table.header);
  std::size_t total = 0;
  for (std::size_t c = 0; c < ncol; ++c) total += width[c] + (c ? 2 : 0);
  out << std::string(total, '-') << "\n";
  for (const auto& r : table.rows) emit(r);
  return out.str();
}

std::string format_percent(const std::optional<double>& value) {
  if (!value) return "-";
  return detail::format_fixed(*value * 100.0, 1);
}

TextTable ablation_table(const std::vector<std::vector<std::optional<double>>>& scores) {
  if (scores.size() != kLadderRows) raise(ErrorKind::InvalidSpec, "ablation grid needs 10 rows");
  TextTable t;
  t.header = {std::string(kAblationCorner), std::string(kOnlyMetadataLabel)};
  for (SpeechScope s : {SpeechScope::All, SpeechScope::PictureDescription, SpeechScope::NeutralText,
                        SpeechScope::Vowels}) {
    t.header.emplace_back(scope_label(s));
  }
  for (std::size_t r = 0; r < kLadderRows; ++r) {
    if (scores[r].size() != kLadderCols) raise(ErrorKind::InvalidSpec, "ablation grid needs 5 columns");
    std::vector<std::string> row{ladder_row_label(static_cast<int>(r + 1))};
    for (const auto& v : scores[r]) row.push_back(format_percent(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

TextTable ablation_table(const AblationTable& table) {
  std::vector<std::vector<std::optional<double>>> scores(table.cells.size());
  for (std::size_t r = 0; r < table.cells.size(); ++r) {
    for (const auto& cell : table.cells[r]) scores[r].push_back(cell.headline());
  }
  return ablation_table(scores);
}

}  // namespace voxrisk

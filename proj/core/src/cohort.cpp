#include "voxrisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "text_util.hpp"
#include "voxrisk/error.hpp"
#include "voxrisk/table_io.hpp"

namespace voxrisk {

std::string_view to_string(Gender g) noexcept {
  switch (g) {
    case Gender::Female: return "female";
    case Gender::Male: return "male";
    case Gender::Other: return "other";
  }
  return "other";
}

std::optional<Gender> parse_gender(std::string_view text) noexcept {
  if (text == "female" || text == "f" || text == "F") return Gender::Female;
  if (text == "male" || text == "m" || text == "M") return Gender::Male;
  if (text == "other" || text == "unspecified" || text == "other/unspecified") return Gender::Other;
  return std::nullopt;
}

std::string_view to_string(BinaryLabel label) noexcept { return label == BinaryLabel::High ? "high" : "low"; }

BinaryLabel binarize_label(int rating) {
  if (rating < kRatingMin || rating > kRatingMax) {
    raise(ErrorKind::RatingOutOfRange, "clinician rating " + std::to_string(rating) + " outside [1, 6]");
  }
  return rating >= 5 ? BinaryLabel::High : BinaryLabel::Low;
}

namespace {

constexpr std::array<MetaField, kNumMetaFields> kLadderOrder = {
    MetaField::Age,
    MetaField::Gender,
    MetaField::Height,
    MetaField::Weight,
    MetaField::SuicideAttempts,
    MetaField::FirearmsOrLethalMedication,
    MetaField::Hopelessness,
    MetaField::SexualAbuseTrauma,
    MetaField::StressSituation,
    MetaField::SubstanceAbuse,
    MetaField::Mania,
    MetaField::Nssi,
    MetaField::Bdi,
};

constexpr std::size_t kDemographicFields = 4;

bool is_boolean(MetaField f) {
  switch (f) {
    case MetaField::SuicideAttempts:
    case MetaField::FirearmsOrLethalMedication:
    case MetaField::SexualAbuseTrauma:
    case MetaField::StressSituation:
    case MetaField::SubstanceAbuse:
    case MetaField::Mania:
    case MetaField::Nssi:
      return true;
    default:
      return false;
  }
}

std::optional<bool>* bool_slot(SubjectRecord& r, MetaField f) {
  switch (f) {
    case MetaField::SuicideAttempts: return &r.suicide_attempt_history;
    case MetaField::FirearmsOrLethalMedication: return &r.firearm_or_lethal_medication_access;
    case MetaField::SexualAbuseTrauma: return &r.sexual_abuse_trauma;
    case MetaField::StressSituation: return &r.stress_situation;
    case MetaField::SubstanceAbuse: return &r.substance_abuse;
    case MetaField::Mania: return &r.mania;
    case MetaField::Nssi: return &r.nssi;
    default: return nullptr;
  }
}

const std::optional<bool>* bool_slot(const SubjectRecord& r, MetaField f) {
  return bool_slot(const_cast<SubjectRecord&>(r), f);
}

// Numeric view of a non-gender field, absent when missing.
std::optional<double> numeric_value(const SubjectRecord& r, MetaField f) {
  switch (f) {
    case MetaField::Age: return r.age;
    case MetaField::Height: return r.height_cm;
    case MetaField::Weight: return r.weight_kg;
    case MetaField::Hopelessness:
      return r.hopelessness ? std::optional<double>(*r.hopelessness) : std::nullopt;
    case MetaField::Bdi: return r.bdi_score ? std::optional<double>(*r.bdi_score) : std::nullopt;
    case MetaField::Gender: return std::nullopt;
    default: {
      const auto* slot = bool_slot(r, f);
      if (slot && slot->has_value()) return **slot ? 1.0 : 0.0;
      return std::nullopt;
    }
  }
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "1" || s == "true" || s == "yes" || s == "True") {
    out = true;
    return true;
  }
  if (s == "0" || s == "false" || s == "no" || s == "False") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

std::string_view csv_column(MetaField field) noexcept {
  switch (field) {
    case MetaField::Age: return "age";
    case MetaField::Gender: return "gender";
    case MetaField::Height: return "height_cm";
    case MetaField::Weight: return "weight_kg";
    case MetaField::SuicideAttempts: return "suicide_attempt_history";
    case MetaField::FirearmsOrLethalMedication: return "firearm_or_lethal_medication_access";
    case MetaField::Hopelessness: return "hopelessness";
    case MetaField::SexualAbuseTrauma: return "sexual_abuse_trauma";
    case MetaField::StressSituation: return "stress_situation";
    case MetaField::SubstanceAbuse: return "substance_abuse";
    case MetaField::Mania: return "mania";
    case MetaField::Nssi: return "nssi";
    case MetaField::Bdi: return "bdi_score";
  }
  return "";
}

std::string_view display_name(MetaField field) noexcept {
  switch (field) {
    case MetaField::Age: return "Age";
    case MetaField::Gender: return "Gender";
    case MetaField::Height: return "Height";
    case MetaField::Weight: return "Weight";
    case MetaField::SuicideAttempts: return "Suicide Attempts";
    case MetaField::FirearmsOrLethalMedication: return "Firearms or Potentially Lethal Medication";
    case MetaField::Hopelessness: return "Hopelessness";
    case MetaField::SexualAbuseTrauma: return "Sexual Abuse/Trauma";
    case MetaField::StressSituation: return "Stress Situation";
    case MetaField::SubstanceAbuse: return "Substance Abuse";
    case MetaField::Mania: return "Mania";
    case MetaField::Nssi: return "NSSI";
    case MetaField::Bdi: return "BDI";
  }
  return "";
}

MetadataLadderLevel ladder_level(int level) {
  if (level < 1 || level > 10) raise(ErrorKind::InvalidSpec, "metadata level must be F1..F10");
  MetadataLadderLevel out;
  out.level = level;
  const std::size_t count = kDemographicFields + static_cast<std::size_t>(level - 1);
  out.included_fields.assign(kLadderOrder.begin(), kLadderOrder.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

std::optional<int> parse_ladder_level(std::string_view text) noexcept {
  if (!text.empty() && (text.front() == 'F' || text.front() == 'f')) text.remove_prefix(1);
  auto v = detail::parse_int(text);
  if (!v || *v < 1 || *v > 10) return std::nullopt;
  return static_cast<int>(*v);
}

std::string ladder_row_label(int level) {
  if (level == 1) return "Demographics (F1)";
  const MetaField added = kLadderOrder[kDemographicFields + static_cast<std::size_t>(level - 2)];
  return "F" + std::to_string(level - 1) + " + " + std::string(display_name(added)) + " (F" +
         std::to_string(level) + ")";
}

std::size_t encoded_width(MetaField field) noexcept { return field == MetaField::Gender ? 3 : 1; }

FeatureVector encode_metadata(const SubjectRecord& record, const MetadataLadderLevel& level) {
  FeatureVector fv;
  for (MetaField f : level.included_fields) {
    const std::string base = "meta." + std::string(csv_column(f));
    if (f == MetaField::Gender) {
      if (!record.gender) raise(ErrorKind::MissingRequiredField, record.subject_id + ": gender");
      for (Gender g : {Gender::Female, Gender::Male, Gender::Other}) {
        fv.names.push_back(base + "=" + std::string(to_string(g)));
        fv.values.push_back(*record.gender == g ? 1.0 : 0.0);
      }
      continue;
    }
    auto v = numeric_value(record, f);
    if (!v) raise(ErrorKind::MissingRequiredField, record.subject_id + ": " + std::string(csv_column(f)));
    fv.names.push_back(base);
    fv.values.push_back(*v);
  }
  return fv;
}

MetadataImputer MetadataImputer::fit(const std::vector<const SubjectRecord*>& training) {
  MetadataImputer imp;
  for (MetaField f : kLadderOrder) {
    if (f == MetaField::Gender) continue;
    std::vector<double> vals;
    for (const auto* r : training) {
      if (auto v = numeric_value(*r, f)) vals.push_back(*v);
    }
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    double med = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    if (is_boolean(f) || f == MetaField::Hopelessness || f == MetaField::Bdi) med = std::floor(med + 0.5);
    imp.medians_[f] = med;
  }
  return imp;
}

SubjectRecord MetadataImputer::apply(const SubjectRecord& record) const {
  SubjectRecord r = record;
  if (!r.gender) r.gender = Gender::Other;
  for (const auto& [f, med] : medians_) {
    switch (f) {
      case MetaField::Age:
        if (!r.age) r.age = med;
        break;
      case MetaField::Height:
        if (!r.height_cm) r.height_cm = med;
        break;
      case MetaField::Weight:
        if (!r.weight_kg) r.weight_kg = med;
        break;
      case MetaField::Hopelessness:
        if (!r.hopelessness) r.hopelessness = static_cast<int>(med);
        break;
      case MetaField::Bdi:
        if (!r.bdi_score) r.bdi_score = static_cast<int>(med);
        break;
      default: {
        auto* slot = bool_slot(r, f);
        if (slot && !slot->has_value()) *slot = med >= 0.5;
      }
    }
  }
  return r;
}

FeatureVector fuse(const FeatureVector& speech, const FeatureVector& meta) {
  std::set<std::string_view> seen(speech.names.begin(), speech.names.end());
  FeatureVector out = speech;
  out.names.reserve(speech.size() + meta.size());
  out.values.reserve(speech.size() + meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (!seen.insert(meta.names[i]).second) raise(ErrorKind::DuplicateFeatureName, meta.names[i]);
    out.names.push_back(meta.names[i]);
    out.values.push_back(meta.values[i]);
  }
  return out;
}

const SubjectRecord* CohortDataset::find_subject(std::string_view id) const {
  auto it = std::lower_bound(subjects.begin(), subjects.end(), id,
                             [](const SubjectRecord& r, std::string_view key) { return r.subject_id < key; });
  if (it == subjects.end() || it->subject_id != id) return nullptr;
  return &*it;
}

BinaryLabel CohortDataset::label_of(std::string_view subject_id) const {
  const auto* r = find_subject(subject_id);
  if (!r) raise(ErrorKind::UnknownSubjectInFeatures, std::string(subject_id));
  return binarize_label(r->clinician_rating);
}

std::vector<std::string> CohortDataset::subject_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : subjects) ids.push_back(s.subject_id);
  return ids;
}

std::string metadata_csv_header() {
  std::string h = "subject_id";
  for (MetaField f : kLadderOrder) h += "," + std::string(csv_column(f));
  h += ",clinician_rating";
  return h;
}

std::vector<SubjectRecord> parse_metadata_csv(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  auto ls = detail::lines(text);
  if (ls.empty()) raise(ErrorKind::SchemaViolation, where + ": empty metadata file");
  auto header = detail::split(ls[0], ',');
  for (auto& h : header) h = std::string(detail::trim(h));
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  auto col_of = [&](std::string_view name) {
    auto it = column.find(std::string(name));
    if (it == column.end()) {
      raise(ErrorKind::MissingRequiredField, where + ": header lacks column '" + std::string(name) + "'");
    }
    return it->second;
  };
  const std::size_t id_col = col_of("subject_id");
  const std::size_t rating_col = col_of("clinician_rating");
  std::array<std::size_t, kNumMetaFields> field_col{};
  for (std::size_t i = 0; i < kNumMetaFields; ++i) field_col[i] = col_of(csv_column(kLadderOrder[i]));

  std::vector<SubjectRecord> out;
  std::set<std::string> ids;
  for (std::size_t li = 1; li < ls.size(); ++li) {
    if (detail::trim(ls[li]).empty()) continue;
    auto cells = detail::split(ls[li], ',');
    const std::string row_where = where + " line " + std::to_string(li + 1);
    if (cells.size() != header.size()) {
      raise(ErrorKind::SchemaViolation, row_where + ": expected " + std::to_string(header.size()) + " cells");
    }
    auto cell = [&](std::size_t c) { return detail::trim(cells[c]); };

    SubjectRecord r;
    r.subject_id = std::string(cell(id_col));
    if (r.subject_id.empty()) raise(ErrorKind::MissingRequiredField, row_where + ": subject_id");
    if (!ids.insert(r.subject_id).second) raise(ErrorKind::SchemaViolation, row_where + ": duplicate subject");

    auto rating_text = cell(rating_col);
    if (rating_text.empty()) raise(ErrorKind::MissingRequiredField, row_where + ": clinician_rating");
    auto rating = detail::parse_int(rating_text);
    if (!rating) raise(ErrorKind::SchemaViolation, row_where + ": clinician_rating is not an integer");
    if (*rating < kRatingMin || *rating > kRatingMax) {
      raise(ErrorKind::RatingOutOfRange, row_where + ": clinician_rating " + std::to_string(*rating));
    }
    r.clinician_rating = static_cast<int>(*rating);

    for (std::size_t i = 0; i < kNumMetaFields; ++i) {
      const MetaField f = kLadderOrder[i];
      auto text = cell(field_col[i]);
      if (text.empty()) continue;
      const std::string bad = row_where + ": invalid " + std::string(csv_column(f)) + " '" + std::string(text) + "'";
      if (f == MetaField::Gender) {
        auto g = parse_gender(text);
        if (!g) raise(ErrorKind::SchemaViolation, bad);
        r.gender = g;
      } else if (is_boolean(f)) {
        bool b = false;
        if (!parse_bool(text, b)) raise(ErrorKind::SchemaViolation, bad);
        *bool_slot(r, f) = b;
      } else if (f == MetaField::Hopelessness || f == MetaField::Bdi) {
        auto v = detail::parse_int(text);
        if (!v || *v < 0) raise(ErrorKind::SchemaViolation, bad);
        if (f == MetaField::Hopelessness) {
          if (*v > kHopelessnessMax) raise(ErrorKind::SchemaViolation, bad);
          r.hopelessness = static_cast<int>(*v);
        } else {
          r.bdi_score = static_cast<int>(*v);
        }
      } else {
        auto v = detail::parse_double(text);
        if (!v || !std::isfinite(*v) || *v <= 0.0) raise(ErrorKind::SchemaViolation, bad);
        if (f == MetaField::Age) r.age = v;
        if (f == MetaField::Height) r.height_cm = v;
        if (f == MetaField::Weight) r.weight_kg = v;
      }
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) { return a.subject_id < b.subject_id; });
  return out;
}

std::vector<SubjectRecord> load_metadata_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::MissingFile, path.string());
  return parse_metadata_csv(detail::read_text_file(path.string()), path.string());
}

std::string metadata_to_csv(const std::vector<SubjectRecord>& subjects) {
  std::ostringstream out;
  out << metadata_csv_header() << "\n";
  for (const auto& r : subjects) {
    out << r.subject_id;
    for (MetaField f : kLadderOrder) {
      out << ",";
      if (f == MetaField::Gender) {
        if (r.gender) out << to_string(*r.gender);
      } else if (f == MetaField::Hopelessness) {
        if (r.hopelessness) out << *r.hopelessness;
      } else if (f == MetaField::Bdi) {
        if (r.bdi_score) out << *r.bdi_score;
      } else if (auto v = numeric_value(r, f)) {
        out << (is_boolean(f) ? (*v > 0.5 ? "1" : "0") : detail::format_double(*v));
      }
    }
    out << "," << r.clinician_rating << "\n";
  }
  return out.str();
}

CohortDataset load_cohort(const std::filesystem::path& metadata_path, const std::filesystem::path& features_dir) {
  CohortDataset ds;
  ds.subjects = load_metadata_csv(metadata_path);
  if (!std::filesystem::is_directory(features_dir)) raise(ErrorKind::MissingFile, features_dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(features_dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::pair<std::string, std::string>, SegmentEntry> by_segment;
  std::map<std::string, std::size_t> source_dims;
  for (const auto& path : files) {
    const FeatureTable table = read_table(path);
    auto field = [&](const char* key) -> std::string {
      auto it = table.meta.find(key);
      if (it == table.meta.end() || it->second.empty()) {
        raise(ErrorKind::SchemaViolation, path.string() + ": missing metadata '" + key + "'");
      }
      return it->second;
    };
    const std::string subject = field("subject_id");
    const std::string segment = field("segment_id");
    const std::string source = field("source");
    const auto kind = parse_span_kind(field("kind"));
    if (!kind) raise(ErrorKind::SchemaViolation, path.string() + ": unknown kind");
    if (!ds.find_subject(subject)) {
      raise(ErrorKind::UnknownSubjectInFeatures, path.string() + " references subject '" + subject + "'");
    }
    FeatureVector vec = vector_from_table(table);
    auto [dim_it, fresh] = source_dims.emplace(source, vec.size());
    if (!fresh && dim_it->second != vec.size()) {
      raise(ErrorKind::DimensionMismatch, path.string() + ": source '" + source + "' has dim " +
                                              std::to_string(vec.size()) + ", expected " +
                                              std::to_string(dim_it->second));
    }
    auto& entry = by_segment[{subject, segment}];
    if (entry.segment_id.empty()) {
      entry.segment_id = segment;
      entry.subject_id = subject;
      entry.kind = *kind;
    } else if (entry.kind != *kind) {
      raise(ErrorKind::SchemaViolation, path.string() + ": kind disagrees with other sources of the segment");
    }
    if (!entry.features.emplace(source, std::move(vec)).second) {
      raise(ErrorKind::SchemaViolation, path.string() + ": duplicate source '" + source + "' for segment");
    }
  }
  for (auto& [key, entry] : by_segment) ds.segments.push_back(std::move(entry));
  return ds;
}

}  // namespace voxrisk

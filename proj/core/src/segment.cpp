#include "voxrisk/segment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {

namespace detail {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::MissingFile, path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) raise(ErrorKind::IoError, "short write to " + path);
}

}  // namespace detail

using ojson = nlohmann::ordered_json;

std::string_view to_string(SpanKind kind) noexcept {
  switch (kind) {
    case SpanKind::PictureDescription: return "picture_description";
    case SpanKind::NeutralText: return "neutral_text";
    case SpanKind::Vowel: return "vowel";
  }
  return "neutral_text";
}

std::optional<SpanKind> parse_span_kind(std::string_view text) noexcept {
  for (SpanKind k : kAllSpanKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view table_label(SpanKind kind) noexcept {
  switch (kind) {
    case SpanKind::PictureDescription: return "Pic. Desc.";
    case SpanKind::NeutralText: return "Neut. Texts";
    case SpanKind::Vowel: return "Vowels";
  }
  return "";
}

std::string SegmentManifest::segment_id(std::size_t index) const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", index);
  return recording_id + "_" + buf;
}

void validate_manifest(SegmentManifest& m) {
  if (m.recording_id.empty()) raise(ErrorKind::SchemaViolation, "recording_id is empty");
  if (m.subject_id.empty()) raise(ErrorKind::SchemaViolation, "subject_id is empty");
  for (std::size_t i = 0; i < m.spans.size(); ++i) {
    const auto& s = m.spans[i];
    const std::string where = m.recording_id + " span " + std::to_string(i);
    if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s)) {
      raise(ErrorKind::SchemaViolation, where + ": non-finite bound");
    }
    if (s.start_s < 0.0) raise(ErrorKind::SchemaViolation, where + ": start_s < 0");
    if (!(s.end_s > s.start_s)) raise(ErrorKind::SchemaViolation, where + ": end_s <= start_s");
    const bool is_vowel = s.kind == SpanKind::Vowel;
    if (is_vowel != s.vowel_label.has_value()) {
      raise(ErrorKind::SchemaViolation, where + ": vowel_label must be present iff kind is vowel");
    }
    if (s.vowel_label && std::string_view("aeiou").find(*s.vowel_label) == std::string_view::npos) {
      raise(ErrorKind::SchemaViolation, where + ": vowel_label must be one of a,e,i,o,u");
    }
  }
  std::stable_sort(m.spans.begin(), m.spans.end(),
                   [](const SegmentSpan& a, const SegmentSpan& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 1; i < m.spans.size(); ++i) {
    if (m.spans[i].start_s < m.spans[i - 1].end_s) {
      raise(ErrorKind::OverlappingSpans,
            m.recording_id + ": [" + detail::format_double(m.spans[i - 1].start_s) + ", " +
                detail::format_double(m.spans[i - 1].end_s) + ") overlaps [" +
                detail::format_double(m.spans[i].start_s) + ", " +
                detail::format_double(m.spans[i].end_s) + ")");
    }
  }
  if (m.duration_s) {
    if (!(*m.duration_s > 0.0)) raise(ErrorKind::SchemaViolation, m.recording_id + ": duration_s <= 0");
    for (const auto& s : m.spans) {
      if (s.end_s > *m.duration_s + 1e-9) {
        raise(ErrorKind::SpanOutOfRange, m.recording_id + ": end_s " + detail::format_double(s.end_s) +
                                             " exceeds duration " + detail::format_double(*m.duration_s));
      }
    }
  }
}

namespace {

template <typename T>
T require(const ojson& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) raise(ErrorKind::SchemaViolation, where + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) raise(ErrorKind::SchemaViolation, where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
  } else {
    if (!v.is_number()) raise(ErrorKind::SchemaViolation, where + ": field '" + key + "' must be a number");
    return v.get<T>();
  }
}

}  // namespace

SegmentManifest parse_manifest(std::string_view json_text, std::optional<double> recording_duration_s) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorKind::SchemaViolation, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) raise(ErrorKind::SchemaViolation, "manifest root must be an object");

  SegmentManifest m;
  m.recording_id = require<std::string>(doc, "recording_id", "manifest");
  m.subject_id = require<std::string>(doc, "subject_id", "manifest");
  if (doc.contains("duration_s")) m.duration_s = require<double>(doc, "duration_s", "manifest");
  if (doc.contains("audio_path")) m.audio_path = require<std::string>(doc, "audio_path", "manifest");
  if (recording_duration_s) m.duration_s = recording_duration_s;

  if (!doc.contains("spans") || !doc.at("spans").is_array()) {
    raise(ErrorKind::SchemaViolation, m.recording_id + ": 'spans' must be an array");
  }
  std::size_t i = 0;
  for (const auto& js : doc.at("spans")) {
    const std::string where = m.recording_id + " span " + std::to_string(i++);
    if (!js.is_object()) raise(ErrorKind::SchemaViolation, where + ": must be an object");
    SegmentSpan s;
    s.start_s = require<double>(js, "start_s", where);
    s.end_s = require<double>(js, "end_s", where);
    const auto kind_text = require<std::string>(js, "kind", where);
    auto kind = parse_span_kind(kind_text);
    if (!kind) raise(ErrorKind::SchemaViolation, where + ": unknown kind '" + kind_text + "'");
    s.kind = *kind;
    if (js.contains("text") && !js.at("text").is_null()) s.text = require<std::string>(js, "text", where);
    if (js.contains("vowel_label") && !js.at("vowel_label").is_null()) {
      auto label = require<std::string>(js, "vowel_label", where);
      if (label.size() != 1) raise(ErrorKind::SchemaViolation, where + ": vowel_label must be one letter");
      s.vowel_label = label[0];
    }
    m.spans.push_back(std::move(s));
  }
  validate_manifest(m);
  return m;
}

SegmentManifest ingest_manifest(const std::filesystem::path& path, std::optional<double> recording_duration_s) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::MissingFile, path.string());
  return parse_manifest(detail::read_text_file(path.string()), recording_duration_s);
}

std::string manifest_to_json(const SegmentManifest& m) {
  ojson doc;
  doc["recording_id"] = m.recording_id;
  doc["subject_id"] = m.subject_id;
  if (m.duration_s) doc["duration_s"] = *m.duration_s;
  if (m.audio_path) doc["audio_path"] = *m.audio_path;
  doc["spans"] = ojson::array();
  for (const auto& s : m.spans) {
    ojson js;
    js["start_s"] = s.start_s;
    js["end_s"] = s.end_s;
    js["kind"] = std::string(to_string(s.kind));
    if (s.text) js["text"] = *s.text;
    if (s.vowel_label) js["vowel_label"] = std::string(1, *s.vowel_label);
    doc["spans"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const SegmentManifest& manifest) {
  detail::write_text_file(path.string(), manifest_to_json(manifest));
}

std::vector<SegmentSpan> energy_vad(const AudioBuffer& buffer, const VadOptions& opt, SpanKind kind) {
  const double rate = buffer.sample_rate_hz;
  const auto frame_len = static_cast<std::size_t>(std::lround(opt.frame_ms * rate / 1000.0));
  const auto hop_len = static_cast<std::size_t>(std::lround(opt.hop_ms * rate / 1000.0));
  if (frame_len == 0 || hop_len == 0) raise(ErrorKind::InvalidSpec, "VAD frame/hop shorter than a sample");
  if (buffer.size() < frame_len) {
    raise(ErrorKind::BufferTooShort, buffer.source_id + ": " + std::to_string(buffer.size()) +
                                         " samples < one frame of " + std::to_string(frame_len));
  }
  const std::size_t n_frames = (buffer.size() - frame_len) / hop_len + 1;
  std::vector<double> rms(n_frames);
  double max_rms = 0.0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    const double* p = buffer.samples.data() + f * hop_len;
    for (std::size_t i = 0; i < frame_len; ++i) acc += p[i] * p[i];
    rms[f] = std::sqrt(acc / static_cast<double>(frame_len));
    max_rms = std::max(max_rms, rms[f]);
  }
  std::vector<SegmentSpan> spans;
  if (max_rms <= std::pow(10.0, opt.abs_floor_db / 20.0)) return spans;
  const double threshold = max_rms * std::pow(10.0, opt.threshold_db / 20.0);

  auto make_span = [&](std::size_t first_frame, std::size_t last_frame) -> std::optional<SegmentSpan> {
    std::size_t lo = first_frame * hop_len;
    std::size_t hi = last_frame * hop_len + frame_len;  // exclusive
    while (lo < hi && std::abs(buffer.samples[lo]) < threshold) ++lo;
    while (hi > lo && std::abs(buffer.samples[hi - 1]) < threshold) --hi;
    if (hi <= lo) return std::nullopt;
    SegmentSpan s;
    s.start_s = static_cast<double>(lo) / rate;
    s.end_s = static_cast<double>(hi) / rate;
    s.kind = kind;
    return s;
  };

  std::size_t f = 0;
  while (f < n_frames) {
    if (rms[f] <= threshold) {
      ++f;
      continue;
    }
    std::size_t g = f;
    while (g + 1 < n_frames && rms[g + 1] > threshold) ++g;
    if (auto s = make_span(f, g)) spans.push_back(*s);
    f = g + 1;
  }

  std::vector<SegmentSpan> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && (s.start_s - merged.back().end_s) * 1000.0 < opt.min_gap_ms) {
      merged.back().end_s = std::max(merged.back().end_s, s.end_s);
    } else {
      merged.push_back(s);
    }
  }
  std::vector<SegmentSpan> out;
  for (const auto& s : merged) {
    if (s.duration_s() * 1000.0 >= opt.min_seg_ms - 1e-9) out.push_back(s);
  }
  if (kind == SpanKind::Vowel) {
    // Caller assigns the actual vowel; keep the invariant satisfied.
    for (auto& s : out) s.vowel_label = 'a';
  }
  return out;
}

AudioBuffer slice(const AudioBuffer& buffer, const SegmentSpan& span) {
  const double rate = buffer.sample_rate_hz;
  const double half_sample = 0.5 / rate;
  if (span.start_s < 0.0 || !(span.end_s > span.start_s) || span.end_s > buffer.duration_s() + half_sample) {
    raise(ErrorKind::SpanOutOfRange, buffer.source_id + ": [" + detail::format_double(span.start_s) + ", " +
                                         detail::format_double(span.end_s) + ") outside " +
                                         detail::format_double(buffer.duration_s()) + " s");
  }
  auto lo = static_cast<std::size_t>(std::llround(span.start_s * rate));
  auto hi = static_cast<std::size_t>(std::llround(span.end_s * rate));
  hi = std::min(hi, buffer.size());
  lo = std::min(lo, hi);
  AudioBuffer out;
  out.sample_rate_hz = buffer.sample_rate_hz;
  out.source_id = buffer.source_id;
  out.samples.assign(buffer.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                     buffer.samples.begin() + static_cast<std::ptrdiff_t>(hi));
  return out;
}

namespace {

SegmentStats stats_of(std::string label, const std::vector<double>& durations) {
  SegmentStats st;
  st.label = std::move(label);
  st.count = durations.size();
  if (durations.empty()) return st;
  double sum = 0.0;
  double lo = durations.front();
  double hi = durations.front();
  for (double d : durations) {
    sum += d;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const double mean = sum / static_cast<double>(durations.size());
  double var = 0.0;
  for (double d : durations) var += (d - mean) * (d - mean);
  var /= static_cast<double>(durations.size());
  st.mean_s = mean;
  st.std_s = std::sqrt(var);
  st.min_s = lo;
  st.max_s = hi;
  st.total_min = sum / 60.0;
  return st;
}

}  // namespace

std::vector<SegmentStats> segment_stats(const std::vector<SegmentSpan>& spans, bool group_by_kind) {
  std::vector<SegmentStats> rows;
  std::vector<double> all;
  all.reserve(spans.size());
  for (const auto& s : spans) all.push_back(s.duration_s());
  if (group_by_kind) {
    for (SpanKind k : kAllSpanKinds) {
      std::vector<double> group;
      for (const auto& s : spans) {
        if (s.kind == k) group.push_back(s.duration_s());
      }
      rows.push_back(stats_of(std::string(table_label(k)), group));
    }
  }
  rows.push_back(stats_of("Total", all));
  return rows;
}

namespace {

std::string opt_csv(const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string(); }
std::string opt_text(const std::optional<double>& v) { return v ? detail::format_fixed(*v, 2) : std::string("-"); }

}  // namespace

std::string stats_to_csv(const std::vector<SegmentStats>& rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kStatsColumns.size(); ++i) out << (i ? "," : "") << kStatsColumns[i];
  out << "\n";
  for (const auto& r : rows) {
    out << r.label << "," << r.count << "," << opt_csv(r.mean_s) << "," << opt_csv(r.std_s) << ","
        << opt_csv(r.min_s) << "," << opt_csv(r.max_s) << "," << detail::format_double(r.total_min) << "\n";
  }
  return out.str();
}

std::string stats_to_text(const std::vector<SegmentStats>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.emplace_back(kStatsColumns.begin(), kStatsColumns.end());
  for (const auto& r : rows) {
    cells.push_back({r.label, std::to_string(r.count), opt_text(r.mean_s), opt_text(r.std_s), opt_text(r.min_s),
                     opt_text(r.max_s), detail::format_fixed(r.total_min, 2)});
  }
  std::vector<std::size_t> width(kStatsColumns.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const auto& cell = cells[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      if (c == 0) {
        out << cell << pad;
      } else {
        out << "  " << pad << cell;
      }
    }
    out << "\n";
    if (r == 0 || (r + 1 == cells.size() - 1 && cells.size() > 2)) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

std::vector<SegmentStats> stats_from_csv(std::string_view csv) {
  auto ls = detail::lines(csv);
  if (ls.empty()) raise(ErrorKind::SchemaViolation, "empty stats CSV");
  std::vector<SegmentStats> rows;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    if (ls[i].empty()) continue;
    auto f = detail::split(ls[i], ',');
    if (f.size() != kStatsColumns.size()) raise(ErrorKind::SchemaViolation, "stats CSV row " + std::to_string(i));
    SegmentStats r;
    r.label = f[0];
    auto count = detail::parse_int(f[1]);
    if (!count || *count < 0) raise(ErrorKind::SchemaViolation, "stats CSV count in row " + std::to_string(i));
    r.count = static_cast<std::size_t>(*count);
    r.mean_s = detail::parse_double(f[2]);
    r.std_s = detail::parse_double(f[3]);
    r.min_s = detail::parse_double(f[4]);
    r.max_s = detail::parse_double(f[5]);
    auto total = detail::parse_double(f[6]);
    if (!total) raise(ErrorKind::SchemaViolation, "stats CSV total in row " + std::to_string(i));
    r.total_min = *total;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace voxrisk

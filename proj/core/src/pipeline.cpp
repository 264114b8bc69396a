#include "voxrisk/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "text_util.hpp"
#include "voxrisk/acoustic.hpp"
#include "voxrisk/embedding.hpp"
#include "voxrisk/error.hpp"
#include "voxrisk/parallel.hpp"
#include "voxrisk/report.hpp"
#include "voxrisk/table_io.hpp"

namespace fs = std::filesystem;

namespace voxrisk {

using ojson = nlohmann::ordered_json;

ExperimentConfig RunConfig::effective_experiment() const {
  ExperimentConfig e = experiment;
  e.seed = seed;
  return e;
}

SynthSpec RunConfig::effective_synth() const {
  SynthSpec s = synth;
  s.seed = seed;
  return s;
}

namespace {

constexpr std::array<MetaField, kNumMetaFields> kAllFields = {
    MetaField::Age,           MetaField::Gender,           MetaField::Height,
    MetaField::Weight,        MetaField::SuicideAttempts,  MetaField::FirearmsOrLethalMedication,
    MetaField::Hopelessness,  MetaField::SexualAbuseTrauma, MetaField::StressSituation,
    MetaField::SubstanceAbuse, MetaField::Mania,            MetaField::Nssi,
    MetaField::Bdi,
};

std::optional<MetaField> field_by_column(std::string_view name) {
  for (MetaField f : kAllFields) {
    if (csv_column(f) == name) return f;
  }
  return std::nullopt;
}

ojson synth_json(const SynthSpec& s) {
  ojson j;
  j["n_subjects"] = s.n_subjects;
  j["class_ratio"] = s.class_ratio;
  j["f0_shift_hz"] = s.f0_shift_hz;
  j["jitter_amount"] = s.jitter_amount;
  j["shimmer_amount"] = s.shimmer_amount;
  ojson det = ojson::object();
  for (const auto& [f, p] : s.metadata_determinism) det[std::string(csv_column(f))] = {p.first, p.second};
  j["metadata_determinism"] = det;
  j["missing_rate"] = s.missing_rate;
  j["vowels_per_subject"] = s.vowels_per_subject;
  j["text_utterances"] = s.text_utterances;
  j["picture_utterances"] = s.picture_utterances;
  return j;
}

void synth_from_json(const nlohmann::json& j, SynthSpec& s) {
  if (j.contains("n_subjects")) s.n_subjects = j["n_subjects"].get<std::size_t>();
  if (j.contains("class_ratio")) s.class_ratio = j["class_ratio"].get<double>();
  if (j.contains("f0_shift_hz")) s.f0_shift_hz = j["f0_shift_hz"].get<double>();
  if (j.contains("jitter_amount")) s.jitter_amount = j["jitter_amount"].get<double>();
  if (j.contains("shimmer_amount")) s.shimmer_amount = j["shimmer_amount"].get<double>();
  if (j.contains("metadata_determinism")) {
    s.metadata_determinism.clear();
    for (const auto& [key, val] : j["metadata_determinism"].items()) {
      auto f = field_by_column(key);
      if (!f) raise(ErrorKind::ConfigError, "unknown metadata field '" + key + "'");
      const auto p = val.get<std::vector<double>>();
      if (p.size() != 2) raise(ErrorKind::ConfigError, "metadata_determinism entries are [p_low, p_high]");
      s.metadata_determinism[*f] = {p[0], p[1]};
    }
  }
  if (j.contains("missing_rate")) s.missing_rate = j["missing_rate"].get<double>();
  if (j.contains("vowels_per_subject")) s.vowels_per_subject = j["vowels_per_subject"].get<std::size_t>();
  if (j.contains("text_utterances")) s.text_utterances = j["text_utterances"].get<std::size_t>();
  if (j.contains("picture_utterances")) s.picture_utterances = j["picture_utterances"].get<std::size_t>();
}

fs::path manifests_dir(const RunConfig& c) { return c.paths.out_dir / "manifests"; }
fs::path segments_dir(const RunConfig& c) { return c.paths.out_dir / "segments"; }
fs::path features_dir(const RunConfig& c) { return c.paths.out_dir / "features"; }
fs::path reports_dir(const RunConfig& c) { return c.paths.out_dir / "reports"; }
fs::path tables_dir(const RunConfig& c) { return c.paths.out_dir / "tables"; }

void write_schema_version(const RunConfig& c) {
  fs::create_directories(c.paths.out_dir);
  detail::write_text_file((c.paths.out_dir / "schema_version").string(), std::to_string(kOutputSchemaVersion) + "\n");
}

std::vector<fs::path> files_with_ext(const fs::path& dir, std::string_view ext, bool recursive) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  auto visit = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) visit(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) visit(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void require_dir(const fs::path& p, std::string_view what) {
  if (p.empty()) raise(ErrorKind::ConfigError, std::string(what) + " is not set");
  if (!fs::is_directory(p)) raise(ErrorKind::ConfigError, std::string(what) + " '" + p.string() + "' does not exist");
}

std::vector<SegmentManifest> read_manifests(const fs::path& dir, std::vector<std::string>& failures) {
  std::vector<SegmentManifest> out;
  for (const auto& p : files_with_ext(dir, ".json", false)) {
    try {
      out.push_back(ingest_manifest(p));
    } catch (const Error& e) {
      failures.push_back(p.string() + ": " + e.what());
    }
  }
  return out;
}

std::string stats_block(const std::vector<SegmentManifest>& manifests, const RunConfig& c) {
  std::vector<SegmentSpan> spans;
  for (const auto& m : manifests) spans.insert(spans.end(), m.spans.begin(), m.spans.end());
  const auto stats = segment_stats(spans, true);
  fs::create_directories(tables_dir(c));
  detail::write_text_file((tables_dir(c) / "segment_stats.csv").string(), stats_to_csv(stats));
  const std::string text = stats_to_text(stats);
  detail::write_text_file((tables_dir(c) / "segment_stats.txt").string(), text);
  return text;
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  ojson j;
  j["paths"] = {{"audio_dir", c.paths.audio_dir.string()},
                {"manifest_dir", c.paths.manifest_dir.string()},
                {"metadata", c.paths.metadata_csv.string()},
                {"embeddings_dir", c.paths.embeddings_dir.string()},
                {"out_dir", c.paths.out_dir.string()}};
  j["experiment"] = ojson::parse(config_to_json(c.experiment));
  ojson sources = ojson::array();
  for (const auto& s : c.sources) sources.push_back(s.name());
  j["sources"] = sources;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["log_level"] = c.log_level;
  j["permutations"] = c.permutations;
  j["vad"] = {{"frame_ms", c.vad.frame_ms},         {"hop_ms", c.vad.hop_ms},
              {"threshold_db", c.vad.threshold_db}, {"min_seg_ms", c.vad.min_seg_ms},
              {"min_gap_ms", c.vad.min_gap_ms},     {"abs_floor_db", c.vad.abs_floor_db}};
  j["synth"] = synth_json(c.synth);
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text, RunConfig c) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) raise(ErrorKind::ConfigError, "config must be a JSON object");
    static const std::vector<std::string> known = {"paths", "experiment", "sources",      "seed", "jobs",
                                                   "log_level", "permutations", "vad", "synth"};
    for (const auto& [key, val] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        raise(ErrorKind::ConfigError, "unknown config key '" + key + "'");
      }
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      if (p.contains("audio_dir")) c.paths.audio_dir = p["audio_dir"].get<std::string>();
      if (p.contains("manifest_dir")) c.paths.manifest_dir = p["manifest_dir"].get<std::string>();
      if (p.contains("metadata")) c.paths.metadata_csv = p["metadata"].get<std::string>();
      if (p.contains("embeddings_dir")) c.paths.embeddings_dir = p["embeddings_dir"].get<std::string>();
      if (p.contains("out_dir")) c.paths.out_dir = p["out_dir"].get<std::string>();
    }
    if (j.contains("experiment")) {
      // Start from the current experiment so partial blocks only override.
      auto merged = nlohmann::json::parse(config_to_json(c.experiment));
      merged.update(j["experiment"]);
      c.experiment = config_from_json(merged.dump());
    }
    if (j.contains("sources")) {
      c.sources.clear();
      for (const auto& s : j["sources"]) {
        auto src = FeatureSource::parse(s.get<std::string>());
        if (!src) raise(ErrorKind::ConfigError, "unknown feature source '" + s.get<std::string>() + "'");
        c.sources.push_back(*src);
      }
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
    if (j.contains("log_level")) c.log_level = j["log_level"].get<std::string>();
    if (j.contains("permutations")) c.permutations = j["permutations"].get<std::size_t>();
    if (j.contains("vad")) {
      const auto& v = j["vad"];
      if (v.contains("frame_ms")) c.vad.frame_ms = v["frame_ms"].get<double>();
      if (v.contains("hop_ms")) c.vad.hop_ms = v["hop_ms"].get<double>();
      if (v.contains("threshold_db")) c.vad.threshold_db = v["threshold_db"].get<double>();
      if (v.contains("min_seg_ms")) c.vad.min_seg_ms = v["min_seg_ms"].get<double>();
      if (v.contains("min_gap_ms")) c.vad.min_gap_ms = v["min_gap_ms"].get<double>();
      if (v.contains("abs_floor_db")) c.vad.abs_floor_db = v["abs_floor_db"].get<double>();
    }
    if (j.contains("synth")) synth_from_json(j["synth"], c.synth);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::ConfigError, std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  if (!fs::exists(path)) raise(ErrorKind::ConfigError, "config file '" + path.string() + "' not found");
  return run_config_from_json(detail::read_text_file(path.string()), std::move(base));
}

std::optional<SpanKind> kind_from_recording_name(std::string_view stem, char* vowel) {
  if (stem.substr(0, 6) == "vowel_" && stem.size() >= 7) {
    const char v = stem[6];
    if (std::string_view("aeiou").find(v) == std::string_view::npos) return std::nullopt;
    if (vowel) *vowel = v;
    return SpanKind::Vowel;
  }
  if (stem.substr(0, 4) == "text") return SpanKind::NeutralText;
  if (stem.substr(0, 7) == "picture") return SpanKind::PictureDescription;
  return std::nullopt;
}

CommandResult cmd_segment(const RunConfig& config) {
  require_dir(config.paths.audio_dir, "audio_dir");
  const auto wavs = files_with_ext(config.paths.audio_dir, ".wav", true);
  write_schema_version(config);
  fs::create_directories(manifests_dir(config));

  std::vector<std::optional<SegmentManifest>> results(wavs.size());
  std::vector<std::string> errors(wavs.size());
  parallel_for(wavs.size(), config.jobs, [&](std::size_t i) {
    const fs::path& wav = wavs[i];
    try {
      const fs::path rel = fs::relative(wav, config.paths.audio_dir);
      if (!rel.has_parent_path()) raise(ErrorKind::SchemaViolation, "recordings must live in <subject>/ folders");
      const std::string subject = rel.parent_path().filename().string();
      const std::string stem = wav.stem().string();
      const std::string recording_id = subject + "_" + stem;

      AudioBuffer audio = load_wav(wav);
      if (audio.empty()) raise(ErrorKind::EmptyBuffer, "recording has no samples");
      audio = normalize_peak(resample(audio, kCanonicalRateHz));
      audio.source_id = recording_id;

      SegmentManifest m;
      const fs::path given = config.paths.manifest_dir / (recording_id + ".json");
      if (!config.paths.manifest_dir.empty() && fs::exists(given)) {
        m = ingest_manifest(given, audio.duration_s());
      } else {
        char vowel = 'a';
        auto kind = kind_from_recording_name(stem, &vowel);
        if (!kind) {
          spdlog::warn("{}: cannot infer speech type from the file name, assuming neutral_text", rel.string());
          kind = SpanKind::NeutralText;
        }
        m.recording_id = recording_id;
        m.subject_id = subject;
        m.spans = energy_vad(audio, config.vad, *kind);
        for (auto& s : m.spans) {
          if (s.kind == SpanKind::Vowel) s.vowel_label = vowel;
        }
      }
      m.duration_s = audio.duration_s();
      m.audio_path = rel.generic_string();
      if (m.spans.empty()) spdlog::warn("{}: no speech found", rel.string());
      write_manifest(manifests_dir(config) / (m.recording_id + ".json"), m);
      for (std::size_t k = 0; k < m.spans.size(); ++k) {
        const fs::path out = segments_dir(config) / m.subject_id / (m.segment_id(k) + ".wav");
        fs::create_directories(out.parent_path());
        write_wav(out, slice(audio, m.spans[k]), WavEncoding::Float32);
      }
      results[i] = std::move(m);
    } catch (const Error& e) {
      errors[i] = wav.string() + ": " + e.what();
    }
  });

  CommandResult res;
  std::vector<SegmentManifest> done;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    if (!errors[i].empty()) {
      spdlog::error("{}", errors[i]);
      res.failures.push_back(errors[i]);
    } else {
      ++res.processed;
      done.push_back(std::move(*results[i]));
    }
  }
  res.summary = stats_block(done, config);
  return res;
}

FeatureVector extract_source(const AudioBuffer& segment, const FeatureSource& source, const fs::path& embeddings_dir,
                             std::string_view segment_id) {
  switch (source.kind) {
    case FeatureSourceKind::CompactFunctionals: return extract_functionals(segment, FunctionalSet::compact());
    case FeatureSourceKind::ExtendedFunctionals: return extract_functionals(segment, FunctionalSet::extended());
    case FeatureSourceKind::MelspecSummary: return melspec_summary(segment);
    case FeatureSourceKind::Embedding: {
      const fs::path base = embeddings_dir / source.model_id / std::string(segment_id);
      fs::path file = base;
      file += ".csv";
      if (!fs::exists(file)) {
        file = base;
        file += ".bin";
      }
      if (!fs::exists(file)) raise(ErrorKind::MissingFile, "no embedding file for " + std::string(segment_id));
      EmbeddingMatrix m = load_embeddings(file);
      if (m.model_id != source.model_id) {
        raise(ErrorKind::SchemaViolation, file.string() + ": model_id '" + m.model_id + "' does not match");
      }
      return mean_pool(m);
    }
  }
  raise(ErrorKind::InvalidSpec, "unknown feature source");
}

CommandResult cmd_extract(const RunConfig& config) {
  CommandResult res;
  if (!fs::is_directory(manifests_dir(config))) {
    raise(ErrorKind::ConfigError, "no manifests under '" + manifests_dir(config).string() + "'; run segment first");
  }
  for (const auto& s : config.sources) {
    if (s.kind == FeatureSourceKind::Embedding) require_dir(config.paths.embeddings_dir, "embeddings_dir");
  }
  write_schema_version(config);
  const auto manifests = read_manifests(manifests_dir(config), res.failures);

  struct Job {
    const SegmentManifest* manifest;
    std::size_t span;
  };
  std::vector<Job> jobs;
  for (const auto& m : manifests) {
    for (std::size_t k = 0; k < m.spans.size(); ++k) jobs.push_back({&m, k});
  }
  std::vector<std::string> errors(jobs.size());
  std::vector<std::vector<std::size_t>> dims(jobs.size());
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& m = *jobs[i].manifest;
    const std::string seg_id = m.segment_id(jobs[i].span);
    try {
      const AudioBuffer audio = load_wav(segments_dir(config) / m.subject_id / (seg_id + ".wav"));
      const fs::path dir = features_dir(config) / m.subject_id / seg_id;
      fs::create_directories(dir);
      for (const auto& src : config.sources) {
        const FeatureVector v = extract_source(audio, src, config.paths.embeddings_dir, seg_id);
        dims[i].push_back(v.size());
        std::map<std::string, std::string> meta{{"subject_id", m.subject_id},
                                                {"segment_id", seg_id},
                                                {"recording_id", m.recording_id},
                                                {"kind", std::string(to_string(m.spans[jobs[i].span].kind))},
                                                {"source", src.name()}};
        write_table(dir / (src.file_stem() + ".csv"), table_from_vector(v, std::move(meta)));
      }
    } catch (const Error& e) {
      errors[i] = seg_id + ": " + e.what();
    }
  });
  std::vector<std::size_t> expected;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i].empty()) {
      spdlog::error("{}", errors[i]);
      res.failures.push_back(errors[i]);
      continue;
    }
    if (expected.empty()) expected = dims[i];
    if (dims[i] != expected) {
      res.failures.push_back(jobs[i].manifest->segment_id(jobs[i].span) + ": feature dimension differs from cohort");
      continue;
    }
    ++res.processed;
  }
  std::ostringstream s;
  s << "extracted " << res.processed << " segment(s) x " << config.sources.size() << " source(s)";
  for (std::size_t k = 0; k < config.sources.size() && k < expected.size(); ++k) {
    s << "\n  " << config.sources[k].name() << ": " << expected[k] << " dims";
  }
  s << "\n";
  res.summary = s.str();
  return res;
}

namespace {

CohortDataset load_for_eval(const RunConfig& config) {
  if (config.paths.metadata_csv.empty()) raise(ErrorKind::ConfigError, "metadata path is not set");
  if (!fs::exists(config.paths.metadata_csv)) {
    raise(ErrorKind::ConfigError, "metadata file '" + config.paths.metadata_csv.string() + "' does not exist");
  }
  const fs::path feats = features_dir(config);
  if (!fs::is_directory(feats)) raise(ErrorKind::ConfigError, "no features under '" + feats.string() + "'");
  return load_cohort(config.paths.metadata_csv, feats);
}

std::string score_text(const std::optional<double>& v) { return v ? detail::format_fixed(*v, 4) : "n/a"; }

}  // namespace

CommandResult cmd_evaluate(const RunConfig& config) {
  const ExperimentConfig exp = config.effective_experiment();
  exp.validate();
  const CohortDataset ds = load_for_eval(config);
  write_schema_version(config);
  const ExperimentReport rep = loso_run(ds, exp, config.jobs);
  const fs::path path = write_report(reports_dir(config), rep);

  CommandResult res;
  res.processed = rep.folds.size();
  std::ostringstream s;
  s << "config " << config_hash_hex(exp) << "  folds " << rep.folds.size() << "  dims " << rep.feature_dim << "\n";
  s << "balanced accuracy (segment): " << score_text(rep.balanced_accuracy_segment) << "\n";
  s << "balanced accuracy (subject): " << score_text(rep.balanced_accuracy_subject) << "\n";
  if (config.permutations > 0) {
    const PermutationBand band = permutation_band(ds, exp, config.permutations, exp.seed + 1, config.jobs);
    ojson j;
    j["config_hash"] = config_hash_hex(exp);
    j["permutations"] = config.permutations;
    j["lower"] = band.lower;
    j["upper"] = band.upper;
    j["scores"] = band.scores;
    detail::write_text_file((reports_dir(config) / ("permutation_" + config_hash_hex(exp) + ".json")).string(),
                            j.dump(2) + "\n");
    s << "chance band (" << config.permutations << " permutations): [" << detail::format_fixed(band.lower, 4) << ", "
      << detail::format_fixed(band.upper, 4) << "]\n";
  }
  s << "report: " << path.string() << "\n";
  res.summary = s.str();
  return res;
}

CommandResult cmd_ablation(const RunConfig& config) {
  ExperimentConfig base = config.effective_experiment();
  if (!base.feature_source) base.feature_source = FeatureSource{};
  if (!base.metadata_level) base.metadata_level = 1;
  base.validate();
  const CohortDataset ds = load_for_eval(config);
  write_schema_version(config);
  const AblationTable table = ablation_ladder(ds, base, config.jobs);
  for (const auto& row : table.cells) {
    for (const auto& cell : row) write_report(reports_dir(config), cell);
  }
  const TextTable rendered = ablation_table(table);
  fs::create_directories(tables_dir(config));
  const std::string stem = "ablation_" + config_hash_hex(base);
  detail::write_text_file((tables_dir(config) / (stem + ".csv")).string(), table_csv(rendered));
  const std::string text = table_text(rendered);
  detail::write_text_file((tables_dir(config) / (stem + ".txt")).string(), text);
  CommandResult res;
  res.processed = kLadderRows * kLadderCols;
  res.summary = text;
  return res;
}

CommandResult cmd_stats(const RunConfig& config) {
  CommandResult res;
  fs::path dir = manifests_dir(config);
  if (!fs::is_directory(dir)) dir = config.paths.manifest_dir;
  require_dir(dir, "manifest directory");
  const auto manifests = read_manifests(dir, res.failures);
  res.processed = manifests.size();
  res.summary = stats_block(manifests, config);
  return res;
}

CommandResult cmd_synth(const RunConfig& config) {
  const SynthSpec spec = config.effective_synth();
  synth_cohort(spec, config.paths.out_dir);
  CommandResult res;
  res.processed = spec.n_subjects;
  std::ostringstream s;
  s << "synthesized " << spec.n_subjects << " subjects into " << config.paths.out_dir.string() << "\n";
  res.summary = s.str();
  return res;
}

}  // namespace voxrisk

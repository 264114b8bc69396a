#include "voxrisk/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "voxrisk/error.hpp"
#include "voxrisk/parallel.hpp"

namespace voxrisk {

std::string FeatureSource::name() const {
  switch (kind) {
    case FeatureSourceKind::CompactFunctionals: return "compact_functionals";
    case FeatureSourceKind::ExtendedFunctionals: return "extended_functionals";
    case FeatureSourceKind::MelspecSummary: return "melspec_summary";
    case FeatureSourceKind::Embedding: return "embedding:" + model_id;
  }
  return "";
}

std::string FeatureSource::file_stem() const {
  std::string s = name();
  std::replace(s.begin(), s.end(), ':', '-');
  return s;
}

std::optional<FeatureSource> FeatureSource::parse(std::string_view text) {
  if (text == "compact_functionals" || text == "compact") return FeatureSource{FeatureSourceKind::CompactFunctionals, {}};
  if (text == "extended_functionals" || text == "extended") return FeatureSource{FeatureSourceKind::ExtendedFunctionals, {}};
  if (text == "melspec_summary" || text == "melspec") return FeatureSource{FeatureSourceKind::MelspecSummary, {}};
  for (std::string_view prefix : {"embedding:", "embedding-"}) {
    if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
      return FeatureSource{FeatureSourceKind::Embedding, std::string(text.substr(prefix.size()))};
    }
  }
  return std::nullopt;
}

std::string_view to_string(SpeechScope scope) noexcept {
  switch (scope) {
    case SpeechScope::All: return "all";
    case SpeechScope::PictureDescription: return "picture_description";
    case SpeechScope::NeutralText: return "neutral_text";
    case SpeechScope::Vowels: return "vowels";
  }
  return "all";
}

std::optional<SpeechScope> parse_speech_scope(std::string_view text) noexcept {
  if (text == "all") return SpeechScope::All;
  if (text == "picture_description") return SpeechScope::PictureDescription;
  if (text == "neutral_text") return SpeechScope::NeutralText;
  if (text == "vowels" || text == "vowel") return SpeechScope::Vowels;
  return std::nullopt;
}

std::string_view scope_label(SpeechScope scope) noexcept {
  switch (scope) {
    case SpeechScope::All: return "All Speech";
    case SpeechScope::PictureDescription: return "Pic. Desc.";
    case SpeechScope::NeutralText: return "Neut. Texts";
    case SpeechScope::Vowels: return "Vowels";
  }
  return "";
}

bool scope_contains(SpeechScope scope, SpanKind kind) noexcept {
  switch (scope) {
    case SpeechScope::All: return true;
    case SpeechScope::PictureDescription: return kind == SpanKind::PictureDescription;
    case SpeechScope::NeutralText: return kind == SpanKind::NeutralText;
    case SpeechScope::Vowels: return kind == SpanKind::Vowel;
  }
  return false;
}

std::string_view to_string(Aggregation a) noexcept {
  return a == Aggregation::Segment ? "segment" : "subject_majority";
}

std::optional<Aggregation> parse_aggregation(std::string_view text) noexcept {
  if (text == "segment") return Aggregation::Segment;
  if (text == "subject_majority" || text == "subject") return Aggregation::SubjectMajority;
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (!feature_source && !metadata_level) raise(ErrorKind::InvalidSpec, "config selects neither speech nor metadata");
  if (metadata_level && (*metadata_level < 1 || *metadata_level > 10)) {
    raise(ErrorKind::InvalidSpec, "metadata level must be F1..F10");
  }
  if (feature_source && feature_source->kind == FeatureSourceKind::Embedding && feature_source->model_id.empty()) {
    raise(ErrorKind::InvalidSpec, "embedding source needs a model id");
  }
  if (inner_folds < 2) raise(ErrorKind::InvalidSpec, "inner_folds must be >= 2");
  c_grid.validate();
}

CohortDataset speech_scope_filter(const CohortDataset& dataset, SpeechScope scope, std::vector<std::string>* excluded) {
  CohortDataset out;
  std::set<std::string> with_segments;
  for (const auto& seg : dataset.segments) {
    if (!scope_contains(scope, seg.kind)) continue;
    out.segments.push_back(seg);
    with_segments.insert(seg.subject_id);
  }
  if (out.segments.empty()) raise(ErrorKind::EmptyScope, "no segments in scope '" + std::string(to_string(scope)) + "'");
  for (const auto& s : dataset.subjects) {
    if (with_segments.count(s.subject_id)) {
      out.subjects.push_back(s);
    } else {
      spdlog::warn("subject {} has no {} segments and is excluded", s.subject_id, to_string(scope));
      if (excluded) excluded->push_back(s.subject_id);
    }
  }
  return out;
}

BinaryLabel aggregate_subject(const std::vector<std::pair<double, BinaryLabel>>& per_segment) {
  if (per_segment.empty()) raise(ErrorKind::EmptyPredictionList, "no segment predictions to aggregate");
  std::size_t high = 0;
  double sum = 0.0;
  for (const auto& [decision, label] : per_segment) {
    if (label == BinaryLabel::High) ++high;
    sum += decision;
  }
  const std::size_t low = per_segment.size() - high;
  if (high != low) return high > low ? BinaryLabel::High : BinaryLabel::Low;
  return sum / static_cast<double>(per_segment.size()) >= 0.0 ? BinaryLabel::High : BinaryLabel::Low;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct RowBlock {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

// Rows contributed by one subject: its in-scope segments, or a single row for
// metadata-only configs. `meta` is already imputed and encoded.
RowBlock subject_rows(const CohortDataset& ds, const ExperimentConfig& cfg, const std::string& subject,
                      const FeatureVector* meta, std::vector<std::string>& names) {
  RowBlock block;
  auto take = [&](const FeatureVector& v, const std::string& id) {
    if (names.empty()) {
      names = v.names;
    } else if (v.names != names) {
      raise(ErrorKind::DimensionMismatch, "row '" + id + "' has a different feature layout");
    }
    block.ids.push_back(id);
    block.rows.push_back(v.values);
  };
  if (!cfg.feature_source) {
    take(*meta, subject);
    return block;
  }
  const std::string source = cfg.feature_source->name();
  for (const auto& seg : ds.segments) {
    if (seg.subject_id != subject) continue;
    auto it = seg.features.find(source);
    if (it == seg.features.end()) {
      raise(ErrorKind::SchemaViolation, "segment " + seg.segment_id + " lacks features '" + source + "'");
    }
    take(meta ? fuse(it->second, *meta) : it->second, seg.segment_id);
  }
  return block;
}

FoldData prepare_filtered(const CohortDataset& ds, const ExperimentConfig& cfg, const std::vector<std::string>& subjects,
                          std::string_view held_out) {
  FoldData fd;
  fd.held_out_subject = std::string(held_out);
  const SubjectRecord* test_rec = ds.find_subject(held_out);
  if (!test_rec) raise(ErrorKind::UnknownSubjectInFeatures, std::string(held_out));
  std::vector<const SubjectRecord*> train_recs;
  for (const auto& s : subjects) {
    if (s == held_out) continue;
    fd.train_subjects.push_back(s);
    train_recs.push_back(ds.find_subject(s));
  }

  std::optional<MetadataImputer> imputer;
  std::optional<MetadataLadderLevel> level;
  if (cfg.metadata_level) {
    imputer = MetadataImputer::fit(train_recs);
    level = ladder_level(*cfg.metadata_level);
    fd.imputation_medians = imputer->medians();
  }
  auto meta_for = [&](const SubjectRecord& r) -> std::optional<FeatureVector> {
    if (!imputer) return std::nullopt;
    return encode_metadata(imputer->apply(r), *level);
  };

  std::vector<std::vector<double>> train_rows;
  for (const auto* rec : train_recs) {
    const auto meta = meta_for(*rec);
    RowBlock b = subject_rows(ds, cfg, rec->subject_id, meta ? &*meta : nullptr, fd.feature_names);
    const int y = to_sign(binarize_label(rec->clinician_rating));
    for (auto& r : b.rows) {
      train_rows.push_back(std::move(r));
      fd.y_train.push_back(y);
      fd.train_groups.push_back(rec->subject_id);
    }
  }
  const auto test_meta = meta_for(*test_rec);
  RowBlock tb = subject_rows(ds, cfg, test_rec->subject_id, test_meta ? &*test_meta : nullptr, fd.feature_names);
  fd.x_train = Matrix::from_rows(train_rows);
  fd.x_test = Matrix::from_rows(tb.rows);
  fd.test_segment_ids = std::move(tb.ids);
  fd.test_label = binarize_label(test_rec->clinician_rating);
  if (fd.x_train.rows >= 2) fd.scaler = fit_scaler(fd.x_train);
  return fd;
}

std::vector<std::string> subjects_of(const CohortDataset& ds) {
  std::vector<std::string> ids = ds.subject_ids();
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

std::vector<std::string> evaluated_subjects(const CohortDataset& dataset, const ExperimentConfig& config) {
  if (!config.feature_source) return subjects_of(dataset);
  return subjects_of(speech_scope_filter(dataset, config.speech_scope));
}

FoldData prepare_fold(const CohortDataset& dataset, const ExperimentConfig& config, std::string_view held_out) {
  config.validate();
  if (!config.feature_source) return prepare_filtered(dataset, config, subjects_of(dataset), held_out);
  const CohortDataset scoped = speech_scope_filter(dataset, config.speech_scope);
  return prepare_filtered(scoped, config, subjects_of(scoped), held_out);
}

ExperimentReport loso_run(const CohortDataset& dataset, const ExperimentConfig& config, std::size_t jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  ExperimentReport report;
  report.config = config;

  const CohortDataset scoped =
      config.feature_source ? speech_scope_filter(dataset, config.speech_scope, &report.excluded_subjects) : dataset;
  const auto subjects = subjects_of(scoped);
  if (subjects.size() < 3) {
    raise(ErrorKind::TooFewSubjects, "LOSO needs at least 3 subjects, got " + std::to_string(subjects.size()));
  }
  std::set<BinaryLabel> classes;
  for (const auto& s : subjects) classes.insert(scoped.label_of(s));
  if (classes.size() < 2) raise(ErrorKind::SingleClassCohort, "all evaluated subjects share one label");

  report.folds.resize(subjects.size());
  std::vector<std::vector<std::string>> names(subjects.size());
  parallel_for(subjects.size(), jobs, [&](std::size_t f) {
    FoldOutcome& out = report.folds[f];
    out.held_out_subject = subjects[f];
    const FoldData fd = prepare_filtered(scoped, config, subjects, subjects[f]);
    names[f] = fd.feature_names;
    out.subject_true = fd.test_label;
    out.train_rows = fd.x_train.rows;
    const bool has_pos = std::count(fd.y_train.begin(), fd.y_train.end(), 1) > 0;
    const bool has_neg = std::count(fd.y_train.begin(), fd.y_train.end(), -1) > 0;
    if (!has_pos || !has_neg) {
      out.skipped = true;
      out.skip_reason = "training partition lacks a class";
      return;
    }
    SelectCOptions sel;
    sel.k = config.inner_folds;
    sel.seed = splitmix64(config.seed ^ (0x51ed27ULL * (f + 1)));
    sel.svm.class_weighting = config.class_weighting;
    const SelectCResult chosen = select_c(fd.x_train, fd.y_train, fd.train_groups, config.c_grid, sel);
    out.chosen_c = chosen.c;
    out.inner_folds = chosen.folds;
    out.inner_scores = chosen.mean_scores;

    TrainedModel model = train_linear_svm(fd.scaler.transform(fd.x_train), fd.y_train, chosen.c, sel.svm);
    model.scaler = fd.scaler;
    model.seed = sel.seed;
    model.training_meta.fold_id = subjects[f];
    const Prediction pred = predict(model, fd.x_test);
    std::vector<std::pair<double, BinaryLabel>> votes;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      const BinaryLabel lab = from_sign(pred.labels[i]);
      out.per_segment.push_back({fd.test_segment_ids[i], pred.decision[i], lab});
      votes.emplace_back(pred.decision[i], lab);
    }
    out.subject_pred = aggregate_subject(votes);
  });

  for (const auto& f : report.folds) {
    if (f.skipped) spdlog::warn("fold {} skipped: {}", f.held_out_subject, f.skip_reason);
  }
  report.feature_names = names.front();
  report.feature_dim = report.feature_names.size();

  std::vector<int> seg_true, seg_pred, subj_true, subj_pred;
  for (const auto& f : report.folds) {
    if (f.skipped) continue;
    for (const auto& p : f.per_segment) {
      seg_true.push_back(to_sign(f.subject_true));
      seg_pred.push_back(to_sign(p.predicted));
    }
    subj_true.push_back(to_sign(f.subject_true));
    subj_pred.push_back(to_sign(f.subject_pred));
  }
  auto score = [](const std::vector<int>& t, const std::vector<int>& p) -> std::optional<double> {
    const bool both = std::count(t.begin(), t.end(), 1) > 0 && std::count(t.begin(), t.end(), -1) > 0;
    if (!both) return std::nullopt;
    return balanced_accuracy(t, p);
  };
  report.balanced_accuracy_segment = score(seg_true, seg_pred);
  report.balanced_accuracy_subject = score(subj_true, subj_pred);
  report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

ExperimentConfig ladder_cell_config(const ExperimentConfig& base, int level, std::size_t column) {
  static constexpr SpeechScope kScopes[] = {SpeechScope::All, SpeechScope::PictureDescription,
                                            SpeechScope::NeutralText, SpeechScope::Vowels};
  if (column >= kLadderCols) raise(ErrorKind::InvalidSpec, "ablation column out of range");
  ExperimentConfig cfg = base;
  cfg.metadata_level = level;
  if (column == 0) {
    cfg.feature_source.reset();
    cfg.speech_scope = SpeechScope::All;
  } else {
    if (!cfg.feature_source) cfg.feature_source = FeatureSource{};
    cfg.speech_scope = kScopes[column - 1];
  }
  return cfg;
}

AblationTable ablation_ladder(const CohortDataset& dataset, const ExperimentConfig& base, std::size_t jobs) {
  AblationTable table;
  table.base = base;
  table.cells.assign(kLadderRows, std::vector<ExperimentReport>(kLadderCols));
  for (std::size_t r = 0; r < kLadderRows; ++r) {
    for (std::size_t c = 0; c < kLadderCols; ++c) {
      table.cells[r][c] = loso_run(dataset, ladder_cell_config(base, static_cast<int>(r + 1), c), jobs);
    }
  }
  return table;
}

PermutationBand permutation_band(const CohortDataset& dataset, const ExperimentConfig& config,
                                 std::size_t permutations, std::uint64_t seed, std::size_t jobs) {
  PermutationBand band;
  if (permutations == 0) raise(ErrorKind::InvalidSpec, "permutation count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<CohortDataset> shuffled(permutations, dataset);
  for (auto& ds : shuffled) {
    std::vector<int> ratings;
    for (const auto& s : ds.subjects) ratings.push_back(s.clinician_rating);
    for (std::size_t i = ratings.size(); i > 1; --i) std::swap(ratings[i - 1], ratings[rng() % i]);
    for (std::size_t i = 0; i < ratings.size(); ++i) ds.subjects[i].clinician_rating = ratings[i];
  }
  band.scores.assign(permutations, 0.0);
  parallel_for(permutations, jobs, [&](std::size_t p) {
    const auto rep = loso_run(shuffled[p], config, 1);
    band.scores[p] = rep.balanced_accuracy_subject.value_or(0.5);
  });
  std::vector<double> sorted = band.scores;
  std::sort(sorted.begin(), sorted.end());
  // Linear interpolation between order statistics.
  auto pct = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  band.lower = pct(0.025);
  band.upper = pct(0.975);
  return band;
}

}  // namespace voxrisk

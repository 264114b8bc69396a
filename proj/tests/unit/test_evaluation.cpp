#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <spdlog/spdlog.h>

#include "cohort_fixture.hpp"
#include "svm_oracle.hpp"
#include "voxrisk/error.hpp"
#include "voxrisk/evaluation.hpp"
#include "voxrisk/report.hpp"

using namespace voxrisk;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

ExperimentConfig speech_config(SpeechScope scope = SpeechScope::All) {
  ExperimentConfig cfg;
  cfg.feature_source = FeatureSource{};
  cfg.speech_scope = scope;
  cfg.c_grid = CGrid{{1.0, 1e-2, 1e-4}};
  return cfg;
}

class QuietLogs : public ::testing::Environment {
 public:
  void SetUp() override { spdlog::set_level(spdlog::level::err); }
};
const auto* const kQuiet = ::testing::AddGlobalTestEnvironment(new QuietLogs);

}  // namespace

TEST(Aggregate, Examples) {
  using BL = BinaryLabel;
  EXPECT_EQ(aggregate_subject({{1.0, BL::High}, {0.5, BL::High}, {-2.0, BL::Low}}), BL::High);
  EXPECT_EQ(aggregate_subject({{1.0, BL::High}, {-0.4, BL::Low}}), BL::High);  // mean +0.3
  EXPECT_EQ(aggregate_subject({{0.2, BL::High}, {-0.8, BL::Low}}), BL::Low);
  EXPECT_EQ(aggregate_subject({{0.5, BL::High}, {-0.5, BL::Low}}), BL::High);  // zero mean
  EXPECT_EQ(aggregate_subject({{-0.1, BL::Low}}), BL::Low);
  EXPECT_EQ(kind_of([] { aggregate_subject({}); }), ErrorKind::EmptyPredictionList);
}

TEST(ScopeFilter, Examples) {
  vxtest::FixtureSpec fs;
  fs.kinds.assign(5, SpanKind::Vowel);
  fs.kinds.push_back(SpanKind::NeutralText);
  auto ds = vxtest::make_fixture(fs);
  const auto vowels = speech_scope_filter(ds, SpeechScope::Vowels);
  EXPECT_EQ(vowels.segments.size(), 5 * ds.subjects.size());
  for (const auto& s : ds.subjects) {
    EXPECT_EQ(std::count_if(vowels.segments.begin(), vowels.segments.end(),
                            [&](const SegmentEntry& e) { return e.subject_id == s.subject_id; }),
              5);
  }
  const auto all = speech_scope_filter(ds, SpeechScope::All);
  EXPECT_EQ(all.segments.size(), ds.segments.size());
  EXPECT_EQ(all.subjects.size(), ds.subjects.size());

  // Drop S03's vowels.
  std::erase_if(ds.segments, [](const SegmentEntry& e) { return e.subject_id == "S03" && e.kind == SpanKind::Vowel; });
  std::vector<std::string> excluded;
  const auto v2 = speech_scope_filter(ds, SpeechScope::Vowels, &excluded);
  EXPECT_EQ(excluded, std::vector<std::string>{"S03"});
  EXPECT_EQ(v2.find_subject("S03"), nullptr);
  EXPECT_EQ(kind_of([&] { speech_scope_filter(ds, SpeechScope::PictureDescription); }), ErrorKind::EmptyScope);
}

TEST(Loso, SeparableFourSubjects) {
  vxtest::FixtureSpec fs;
  fs.subjects = 4;
  fs.high = 2;
  fs.dim = 1;
  fs.signal = 12.0;
  const auto ds = vxtest::make_fixture(fs);
  const auto rep = loso_run(ds, speech_config());
  EXPECT_EQ(rep.folds.size(), 4u);
  EXPECT_EQ(rep.balanced_accuracy_segment, 1.0);
  EXPECT_EQ(rep.balanced_accuracy_subject, 1.0);
}

TEST(Loso, FoldCountAndPooledConsistency) {
  vxtest::FixtureSpec fs;
  fs.signal = 1.0;
  const auto ds = vxtest::make_fixture(fs);
  const auto rep = loso_run(ds, speech_config());
  ASSERT_EQ(rep.folds.size(), ds.subjects.size());
  std::vector<int> t, p, ts, ps;
  for (std::size_t i = 0; i < rep.folds.size(); ++i) {
    const auto& f = rep.folds[i];
    EXPECT_EQ(f.held_out_subject, ds.subjects[i].subject_id);
    EXPECT_FALSE(f.skipped);
    EXPECT_EQ(f.per_segment.size(), 4u);
    for (const auto& sp : f.per_segment) {
      t.push_back(to_sign(f.subject_true));
      p.push_back(to_sign(sp.predicted));
      EXPECT_EQ(sp.predicted, from_sign(sp.decision >= 0.0 ? 1 : -1));
    }
    ts.push_back(to_sign(f.subject_true));
    ps.push_back(to_sign(f.subject_pred));
  }
  EXPECT_EQ(*rep.balanced_accuracy_segment, vxtest::recall_oracle(t, p));
  EXPECT_EQ(*rep.balanced_accuracy_subject, vxtest::recall_oracle(ts, ps));
}

TEST(Loso, Errors) {
  vxtest::FixtureSpec fs;
  fs.subjects = 2;
  fs.high = 1;
  EXPECT_EQ(kind_of([&] { loso_run(vxtest::make_fixture(fs), speech_config()); }), ErrorKind::TooFewSubjects);
  fs.subjects = 5;
  fs.high = 0;
  EXPECT_EQ(kind_of([&] { loso_run(vxtest::make_fixture(fs), speech_config()); }), ErrorKind::SingleClassCohort);
}

TEST(Loso, FoldLosingAClassIsSkipped) {
  vxtest::FixtureSpec fs;
  fs.subjects = 5;
  fs.high = 1;
  fs.signal = 5.0;
  const auto ds = vxtest::make_fixture(fs);
  const auto rep = loso_run(ds, speech_config());
  ASSERT_EQ(rep.folds.size(), 5u);
  std::size_t skipped = 0;
  for (const auto& f : rep.folds) {
    if (f.skipped) {
      ++skipped;
      EXPECT_EQ(f.subject_true, BinaryLabel::High);
      EXPECT_FALSE(f.skip_reason.empty());
      EXPECT_TRUE(f.per_segment.empty());
    }
  }
  EXPECT_EQ(skipped, 1u);
}

TEST(Loso, NoLeakageIntoPreprocessing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    vxtest::FixtureSpec fs;
    fs.subjects = 8;
    fs.high = 4;
    fs.seed = 300 + seed;
    auto ds = vxtest::make_fixture(fs);
    ds.subjects[seed % 8].age.reset();
    ds.subjects[(seed + 3) % 8].hopelessness.reset();
    ExperimentConfig cfg = speech_config();
    cfg.metadata_level = 10;
    for (const auto& held : evaluated_subjects(ds, cfg)) {
      const auto fold = prepare_fold(ds, cfg, held);
      EXPECT_EQ(fold.scaler, fit_scaler(fold.x_train));
      EXPECT_TRUE(std::find(fold.train_subjects.begin(), fold.train_subjects.end(), held) == fold.train_subjects.end());

      // Perturb everything the held-out subject owns; training-side statistics must not move.
      auto mutated = ds;
      for (auto& s : mutated.subjects) {
        if (s.subject_id == held) {
          s.age = 999.0;
          s.height_cm = 1.0;
          s.bdi_score = 63;
          s.hopelessness.reset();
        }
      }
      for (auto& e : mutated.segments) {
        if (e.subject_id == held) {
          for (auto& v : e.features["compact_functionals"].values) v = v * 100.0 + 7.0;
        }
      }
      const auto again = prepare_fold(mutated, cfg, held);
      EXPECT_EQ(again.scaler, fold.scaler);
      EXPECT_EQ(again.imputation_medians, fold.imputation_medians);
      EXPECT_EQ(again.x_train, fold.x_train);
    }
  }
}

TEST(Loso, JobCountDoesNotChangeReport) {
  vxtest::FixtureSpec fs;
  fs.signal = 0.8;
  const auto ds = vxtest::make_fixture(fs);
  const auto a = loso_run(ds, speech_config(), 1);
  const auto b = loso_run(ds, speech_config(), 4);
  EXPECT_EQ(report_to_json(a), report_to_json(b));
  EXPECT_EQ(report_to_json(a), report_to_json(loso_run(ds, speech_config(), 1)));
}

TEST(Loso, MetadataOnlyWithDeterminingBoolean) {
  const auto ds = vxtest::make_fixture({});
  ExperimentConfig cfg;
  cfg.metadata_level = 2;
  const auto rep = loso_run(ds, cfg);
  EXPECT_EQ(rep.folds.size(), 20u);
  EXPECT_EQ(rep.balanced_accuracy_subject, 1.0);
  EXPECT_EQ(rep.feature_dim, 7u);
  for (const auto& f : rep.folds) EXPECT_EQ(f.per_segment.size(), 1u);
}

TEST(Loso, NullCohortFallsInsidePermutationBand) {
  vxtest::FixtureSpec fs;
  fs.signal = 0.0;
  const auto ds = vxtest::make_fixture(fs);
  ExperimentConfig cfg = speech_config();
  const auto rep = loso_run(ds, cfg);
  const auto band = permutation_band(ds, cfg, 40, 7);
  ASSERT_EQ(band.scores.size(), 40u);
  EXPECT_LE(band.lower, band.upper);
  EXPECT_GE(*rep.balanced_accuracy_subject, band.lower);
  EXPECT_LE(*rep.balanced_accuracy_subject, band.upper);
  // Chance-level calibration: no permutation is systematically above chance.
  double mean = 0.0;
  for (double v : band.scores) mean += v;
  EXPECT_LE(mean / 40.0, 0.6);
  EXPECT_EQ(kind_of([&] { permutation_band(ds, cfg, 0); }), ErrorKind::InvalidSpec);
}

TEST(Ablation, SkeletonAndComparability) {
  vxtest::FixtureSpec fs;
  fs.subjects = 6;
  fs.high = 3;
  fs.signal = 2.0;
  const auto ds = vxtest::make_fixture(fs);
  ExperimentConfig base = speech_config();
  base.c_grid = CGrid{{1.0, 1e-3}};
  const auto table = ablation_ladder(ds, base, 2);
  ASSERT_EQ(table.cells.size(), kLadderRows);
  std::size_t prev_meta_dim = 0;
  for (std::size_t r = 0; r < kLadderRows; ++r) {
    ASSERT_EQ(table.cells[r].size(), kLadderCols);
    for (std::size_t c = 0; c < kLadderCols; ++c) {
      const auto& cell = table.cells[r][c];
      EXPECT_EQ(cell.config.metadata_level, static_cast<int>(r + 1));
      ASSERT_TRUE(cell.balanced_accuracy_subject.has_value());
      EXPECT_TRUE(std::isfinite(*cell.balanced_accuracy_subject));
      // Same folds, same held-out subjects, at every level.
      ASSERT_EQ(cell.folds.size(), table.cells[0][c].folds.size());
      for (std::size_t f = 0; f < cell.folds.size(); ++f) {
        EXPECT_EQ(cell.folds[f].held_out_subject, table.cells[0][c].folds[f].held_out_subject);
      }
    }
    EXPECT_FALSE(table.cells[r][0].config.feature_source.has_value());
    EXPECT_EQ(table.cells[r][4].config.speech_scope, SpeechScope::Vowels);
    const std::size_t meta_dim = table.cells[r][0].feature_dim;
    EXPECT_EQ(meta_dim, r == 0 ? 6u : prev_meta_dim + 1);
    EXPECT_EQ(table.cells[r][1].feature_dim, fs.dim + meta_dim);
    prev_meta_dim = meta_dim;
  }
}

TEST(Config, Validation) {
  ExperimentConfig cfg;
  EXPECT_THROW(cfg.validate(), Error);  // neither speech nor metadata
  cfg.metadata_level = 11;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.metadata_level = 3;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(FeatureSource::parse("embedding:w2v")->name(), "embedding:w2v");
  EXPECT_EQ(FeatureSource::parse("extended")->name(), "extended_functionals");
  EXPECT_FALSE(FeatureSource::parse("nope").has_value());
  EXPECT_EQ(parse_speech_scope("vowels"), SpeechScope::Vowels);
  EXPECT_EQ(kind_of([&] { ladder_cell_config(cfg, 1, 5); }), ErrorKind::InvalidSpec);
}

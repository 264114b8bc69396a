#include <gtest/gtest.h>

#include <functional>
#include <numeric>

#include "test_support.hpp"
#include "voxrisk/error.hpp"
#include "voxrisk/segment.hpp"

using namespace voxrisk;

namespace {

std::string manifest_json(const std::string& spans, const std::string& extra = "") {
  return R"({"recording_id": "r1", "subject_id": "S01")" + extra + R"(, "spans": [)" + spans + "]}";
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoError;
}

SegmentSpan span(double a, double b, SpanKind k = SpanKind::NeutralText) {
  SegmentSpan s{a, b, k, std::nullopt, std::nullopt};
  if (k == SpanKind::Vowel) s.vowel_label = 'a';
  return s;
}

}  // namespace

TEST(Manifest, SortsSpans) {
  const auto m = parse_manifest(manifest_json(
      R"({"start_s": 3.0, "end_s": 5.0, "kind": "neutral_text"}, {"start_s": 0.0, "end_s": 2.5, "kind": "neutral_text"})"));
  ASSERT_EQ(m.spans.size(), 2u);
  EXPECT_EQ(m.spans[0].start_s, 0.0);
  EXPECT_EQ(m.spans[1].start_s, 3.0);
  EXPECT_EQ(m.segment_id(1), "r1_001");
}

TEST(Manifest, RejectsOverlapRangeAndSchema) {
  EXPECT_EQ(kind_of([] {
              parse_manifest(manifest_json(
                  R"({"start_s": 0, "end_s": 2, "kind": "vowel", "vowel_label": "a"}, {"start_s": 1.5, "end_s": 3, "kind": "vowel", "vowel_label": "e"})"));
            }),
            ErrorKind::OverlappingSpans);
  EXPECT_EQ(kind_of([] {
              parse_manifest(manifest_json(R"({"start_s": 29.0, "end_s": 31.0, "kind": "neutral_text"})"), 30.0);
            }),
            ErrorKind::SpanOutOfRange);
  EXPECT_EQ(kind_of([] {
              parse_manifest(manifest_json(R"({"start_s": 29.0, "end_s": 31.0, "kind": "neutral_text"})",
                                           R"(, "duration_s": 30.0)"));
            }),
            ErrorKind::SpanOutOfRange);
  EXPECT_EQ(kind_of([] { parse_manifest(manifest_json(R"({"start_s": 0, "kind": "neutral_text"})")); }),
            ErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of([] { parse_manifest(manifest_json(R"({"start_s": 0, "end_s": "1", "kind": "neutral_text"})")); }),
            ErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of([] { parse_manifest(manifest_json(R"({"start_s": 0, "end_s": 1, "kind": "vowel"})")); }),
            ErrorKind::SchemaViolation);
  EXPECT_EQ(kind_of([] { parse_manifest(manifest_json(R"({"start_s": 0, "end_s": 1, "kind": "song"})")); }),
            ErrorKind::SchemaViolation);
}

TEST(Manifest, FileRoundTrip) {
  vxtest::TempDir dir("seg");
  SegmentManifest m;
  m.recording_id = "S02_text";
  m.subject_id = "S02";
  m.duration_s = 10.0;
  m.spans = {span(0.5, 2.25), span(3.0, 4.125)};
  m.spans[0].text = "hello";
  write_manifest(dir / "m.json", m);
  const auto back = ingest_manifest(dir / "m.json");
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_EQ(back.spans[0].text, std::optional<std::string>("hello"));
  EXPECT_EQ(kind_of([&] { ingest_manifest(dir / "nope.json"); }), ErrorKind::MissingFile);
}

TEST(EnergyVad, SilenceGivesNoSpans) { EXPECT_TRUE(energy_vad(vxtest::silence(2.0)).empty()); }

TEST(EnergyVad, TooShortBuffer) {
  EXPECT_EQ(kind_of([] { energy_vad(vxtest::silence(0.01)); }), ErrorKind::BufferTooShort);
}

TEST(EnergyVad, TwoTonesGiveTwoSpansWithinOneHop) {
  AudioBuffer b = vxtest::sine(300.0, 1.0);
  vxtest::append(b, vxtest::silence(1.0));
  vxtest::append(b, vxtest::sine(300.0, 1.0));
  const auto spans = energy_vad(b);
  ASSERT_EQ(spans.size(), 2u);
  const double hop = 0.010;
  EXPECT_NEAR(spans[0].start_s, 0.0, hop);
  EXPECT_NEAR(spans[0].end_s, 1.0, hop);
  EXPECT_NEAR(spans[1].start_s, 2.0, hop);
  EXPECT_NEAR(spans[1].end_s, 3.0, hop);
}

TEST(EnergyVad, ShortDipIsBridged) {
  AudioBuffer b = vxtest::sine(300.0, 1.0);
  vxtest::append(b, vxtest::silence(0.1));
  vxtest::append(b, vxtest::sine(300.0, 1.0));
  const auto spans = energy_vad(b);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_NEAR(spans[0].start_s, 0.0, 0.01);
  EXPECT_NEAR(spans[0].end_s, 2.1, 0.01);
}

TEST(EnergyVad, OutputInvariants) {
  // Bursts of assorted lengths separated by assorted gaps.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    AudioBuffer b = vxtest::silence(0.2);
    for (int k = 0; k < 6; ++k) {
      vxtest::append(b, vxtest::sine(200.0 + 50.0 * k, 0.05 + 0.1 * static_cast<double>(rng() % 8)));
      vxtest::append(b, vxtest::silence(0.05 + 0.1 * static_cast<double>(rng() % 6)));
    }
    VadOptions opt;
    const auto spans = energy_vad(b, opt, SpanKind::Vowel);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      EXPECT_GE(spans[i].duration_s() * 1000.0, opt.min_seg_ms - 1e-9);
      EXPECT_EQ(spans[i].kind, SpanKind::Vowel);
      if (i > 0) EXPECT_GE(spans[i].start_s, spans[i - 1].end_s);
    }
  }
}

TEST(Slice, IdentityAndExactLength) {
  AudioBuffer b = vxtest::sine(123.0, 3.0);
  const AudioBuffer all = slice(b, span(0.0, b.duration_s()));
  EXPECT_EQ(all.samples, b.samples);
  const AudioBuffer one = slice(b, span(1.0, 2.0));
  EXPECT_EQ(one.size(), 16000u);
  EXPECT_TRUE(std::equal(one.samples.begin(), one.samples.end(), b.samples.begin() + 16000));
  EXPECT_EQ(kind_of([&] { slice(b, span(2.5, 3.5)); }), ErrorKind::SpanOutOfRange);
}

TEST(Slice, AdjacentSlicesPartitionTheRegion) {
  AudioBuffer b;
  b.samples = vxtest::gaussian_noise(16000 * 2, 0.1, 9);
  const std::vector<double> cuts = {0.1, 0.3371, 0.90005, 1.25, 1.99};
  std::vector<double> joined;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto part = slice(b, span(cuts[i], cuts[i + 1]));
    EXPECT_NEAR(part.duration_s(), cuts[i + 1] - cuts[i], 1.0 / 16000);
    joined.insert(joined.end(), part.samples.begin(), part.samples.end());
  }
  const auto whole = slice(b, span(cuts.front(), cuts.back()));
  EXPECT_EQ(joined, whole.samples);
}

TEST(SegmentStats, SingleSpan) {
  const auto rows = segment_stats({span(0.0, 6.0)}, false);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].count, 1u);
  EXPECT_DOUBLE_EQ(*rows[0].mean_s, 6.0);
  EXPECT_DOUBLE_EQ(*rows[0].std_s, 0.0);
  EXPECT_DOUBLE_EQ(*rows[0].min_s, 6.0);
  EXPECT_DOUBLE_EQ(*rows[0].max_s, 6.0);
  EXPECT_DOUBLE_EQ(rows[0].total_min, 0.1);
}

TEST(SegmentStats, TwoSpans) {
  const auto rows = segment_stats({span(0.0, 2.0), span(3.0, 7.0)}, false);
  EXPECT_DOUBLE_EQ(*rows[0].mean_s, 3.0);
  EXPECT_DOUBLE_EQ(*rows[0].std_s, 1.0);  // population formula
  EXPECT_DOUBLE_EQ(*rows[0].min_s, 2.0);
  EXPECT_DOUBLE_EQ(*rows[0].max_s, 4.0);
  EXPECT_DOUBLE_EQ(rows[0].total_min, 0.1);
}

TEST(SegmentStats, GroupedRowsAndTotalConsistency) {
  std::vector<SegmentSpan> spans;
  std::mt19937_64 rng(4);
  double t = 0.0;
  for (int i = 0; i < 30; ++i) {
    const auto k = kAllSpanKinds[rng() % 3];
    const double d = 0.05 + static_cast<double>(rng() % 1000) / 100.0;
    spans.push_back(span(t, t + d, k));
    t += d + 0.5;
  }
  const auto rows = segment_stats(spans, true);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].label, "Pic. Desc.");
  EXPECT_EQ(rows[1].label, "Neut. Texts");
  EXPECT_EQ(rows[2].label, "Vowels");
  EXPECT_EQ(rows[3].label, "Total");
  std::size_t count = 0;
  double total = 0.0, lo = 1e9, hi = 0.0;
  for (int i = 0; i < 3; ++i) {
    count += rows[i].count;
    total += rows[i].total_min;
    if (rows[i].count) {
      lo = std::min(lo, *rows[i].min_s);
      hi = std::max(hi, *rows[i].max_s);
      EXPECT_LE(*rows[i].min_s, *rows[i].mean_s);
      EXPECT_LE(*rows[i].mean_s, *rows[i].max_s);
    }
  }
  EXPECT_EQ(rows[3].count, count);
  EXPECT_NEAR(rows[3].total_min, total, 1e-12);
  EXPECT_EQ(*rows[3].min_s, lo);
  EXPECT_EQ(*rows[3].max_s, hi);
}

TEST(SegmentStats, EmptyGroupHasAbsentStatistics) {
  const auto rows = segment_stats({span(0.0, 1.0, SpanKind::Vowel)}, true);
  EXPECT_EQ(rows[0].count, 0u);
  EXPECT_FALSE(rows[0].mean_s.has_value());
  EXPECT_FALSE(rows[0].std_s.has_value());
  EXPECT_EQ(rows[0].total_min, 0.0);
  const auto text = stats_to_text(rows);
  EXPECT_NE(text.find(" - "), std::string::npos);
}

TEST(SegmentStats, ColumnOrderAndCsvRoundTrip) {
  std::vector<SegmentSpan> spans = {span(0, 6.34), span(7, 12.62, SpanKind::PictureDescription),
                                    span(13, 13.3, SpanKind::Vowel), span(14, 14.02, SpanKind::Vowel)};
  const auto rows = segment_stats(spans);
  const auto csv = stats_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Sample Type,# utt.,mu [s],sigma [s],min [s],max [s],Sum dur. [m]");
  const auto back = stats_from_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].label, rows[i].label);
    EXPECT_EQ(back[i].count, rows[i].count);
    EXPECT_EQ(back[i].mean_s, rows[i].mean_s);
    EXPECT_EQ(back[i].std_s, rows[i].std_s);
    EXPECT_EQ(back[i].min_s, rows[i].min_s);
    EXPECT_EQ(back[i].max_s, rows[i].max_s);
    EXPECT_EQ(back[i].total_min, rows[i].total_min);
  }
  EXPECT_EQ(stats_to_csv(back), csv);
}

// Fixed spans rendered to the committed golden files, byte for byte.
TEST(SegmentStats, GoldenTable) {
  std::vector<SegmentSpan> spans;
  auto add = [&](double d, SpanKind k) { spans.push_back(span(0.0, d, k)); };
  for (double d : {6.5, 4.25, 12.0, 0.75}) add(d, SpanKind::PictureDescription);
  for (double d : {5.5, 3.0, 8.25}) add(d, SpanKind::NeutralText);
  for (double d : {0.3, 0.02, 1.32, 0.25, 0.5}) add(d, SpanKind::Vowel);
  const auto rows = segment_stats(spans);
  EXPECT_EQ(stats_to_csv(rows), vxtest::read_file(std::string(VOXRISK_GOLDEN_DIR) + "/segment_stats.csv"));
  EXPECT_EQ(stats_to_text(rows), vxtest::read_file(std::string(VOXRISK_GOLDEN_DIR) + "/segment_stats.txt"));
}

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "test_support.hpp"
#include "voxrisk/audio.hpp"
#include "voxrisk/report.hpp"
#include "voxrisk/segment.hpp"

namespace fs = std::filesystem;
using namespace voxrisk;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout captured; stderr goes to a side file.
CliRun cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const std::string cmd = std::string("\"") + VOXRISK_CLI_PATH + "\" " + args + " --log-level error > \"" +
                          out.string() + "\" 2> \"" + (scratch / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = fs::exists(out) ? vxtest::read_file(out) : "";
  return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = vxtest::read_file(e.path());
  }
  return files;
}

void put_wav(const fs::path& p, const AudioBuffer& b) {
  fs::create_directories(p.parent_path());
  write_wav(p, b);
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Synthesized cohort, segmented and extracted once for the whole suite.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new vxtest::TempDir("cli_suite");
    const fs::path d = dir_->path();
    ASSERT_EQ(cli("synth --out " + q(d / "syn") + " --subjects 6 --seed 3 --f0-shift 40", d).code, 0);
    const CliRun seg = cli("segment --audio " + q(d / "syn/audio") + " --manifests " + q(d / "syn/manifests") +
                            " --out " + q(d / "run"),
                        d);
    ASSERT_EQ(seg.code, 0);
    segment_stdout_ = new std::string(seg.out);
    ASSERT_EQ(cli("extract --out " + q(d / "run"), d).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    delete segment_stdout_;
  }
  static fs::path root() { return dir_->path(); }

  static vxtest::TempDir* dir_;
  static std::string* segment_stdout_;
};

vxtest::TempDir* CliPipeline::dir_ = nullptr;
std::string* CliPipeline::segment_stdout_ = nullptr;

}  // namespace

TEST_F(CliPipeline, LayoutAfterExtract) {
  const fs::path run = root() / "run";
  EXPECT_EQ(vxtest::read_file(run / "schema_version"), "1\n");
  EXPECT_TRUE(fs::exists(run / "tables/segment_stats.csv"));
  std::size_t manifests = 0, feature_files = 0;
  for (const auto& e : fs::directory_iterator(run / "manifests")) manifests += e.path().extension() == ".json";
  for (const auto& e : fs::recursive_directory_iterator(run / "features")) {
    feature_files += e.path().filename() == "compact_functionals.csv";
  }
  // 6 subjects x (5 vowels + text + picture) recordings.
  EXPECT_EQ(manifests, 42u);
  EXPECT_EQ(feature_files, 54u);
}

TEST_F(CliPipeline, StatsHeaderAndRowOrder) {
  std::istringstream in(*segment_stdout_);
  std::string header, rule, pic, neut, vow, rule2, total;
  std::getline(in, header);
  std::getline(in, rule);
  std::getline(in, pic);
  std::getline(in, neut);
  std::getline(in, vow);
  std::getline(in, rule2);
  std::getline(in, total);
  EXPECT_EQ(header, "Sample Type  # utt.  mu [s]  sigma [s]  min [s]  max [s]  Sum dur. [m]");
  EXPECT_EQ(pic.rfind("Pic. Desc.", 0), 0u);
  EXPECT_EQ(neut.rfind("Neut. Texts", 0), 0u);
  EXPECT_EQ(vow.rfind("Vowels", 0), 0u);
  EXPECT_EQ(total.rfind("Total", 0), 0u);
  const std::string csv = vxtest::read_file(root() / "run/tables/segment_stats.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Sample Type,# utt.,mu [s],sigma [s],min [s],max [s],Sum dur. [m]");

  const CliRun again = cli("stats --out " + q(root() / "run"), root());
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(again.out, *segment_stdout_);
}

TEST_F(CliPipeline, SegmentAndExtractAreIdempotent) {
  vxtest::TempDir other("cli_other");
  const fs::path d = root();
  ASSERT_EQ(cli("segment --jobs 3 --audio " + q(d / "syn/audio") + " --manifests " + q(d / "syn/manifests") +
                    " --out " + q(other.path()),
                d)
                .code,
            0);
  ASSERT_EQ(cli("extract --jobs 3 --out " + q(other.path()), d).code, 0);
  for (const char* sub : {"manifests", "segments", "features", "tables"}) {
    EXPECT_EQ(tree(other / sub), tree(d / "run" / sub)) << sub;
  }
}

TEST_F(CliPipeline, EvaluateIndependentOfJobs) {
  const fs::path d = root();
  vxtest::TempDir a("cli_a"), b("cli_b");
  for (const fs::path& p : {a.path(), b.path()}) fs::copy(d / "run/features", p / "features", fs::copy_options::recursive);
  const std::string common = " --metadata " + q(d / "syn/metadata.csv") + " --scope vowels --permutations 3";
  const CliRun ra = cli("evaluate --jobs 1 --out " + q(a.path()) + common, d);
  const CliRun rb = cli("evaluate --jobs 4 --out " + q(b.path()) + common, d);
  ASSERT_EQ(ra.code, 0);
  ASSERT_EQ(rb.code, 0);
  const auto ta = tree(a / "reports");
  const auto tb = tree(b / "reports");
  ASSERT_EQ(ta.size(), tb.size());
  std::size_t compared = 0;
  for (const auto& [name, content] : ta) {
    if (name.rfind("timing_", 0) == 0) continue;
    EXPECT_EQ(content, tb.at(name)) << name;
    ++compared;
  }
  EXPECT_EQ(compared, 2u);  // report and permutation band

  const auto report = nlohmann::json::parse(ta.begin()->first.rfind("permutation_", 0) == 0
                                                ? std::next(ta.begin())->second
                                                : ta.begin()->second);
  EXPECT_EQ(report["folds"].size(), 6u);
  EXPECT_EQ(report["feature_dim"], 88);
}

TEST_F(CliPipeline, AblationRendersFullGrid) {
  const fs::path d = root();
  vxtest::TempDir a("cli_ablation");
  fs::copy(d / "run/features", a / "features", fs::copy_options::recursive);
  const CliRun r = cli("ablation --out " + q(a.path()) + " --metadata " + q(d / "syn/metadata.csv"), d);
  ASSERT_EQ(r.code, 0);
  fs::path csv;
  for (const auto& e : fs::directory_iterator(a / "tables")) {
    if (e.path().extension() == ".csv") csv = e.path();
  }
  ASSERT_FALSE(csv.empty());
  const TextTable t = parse_table_csv(vxtest::read_file(csv));
  ASSERT_EQ(t.header.size(), 6u);
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.rows.front().front(), "Demographics (F1)");
  EXPECT_EQ(t.rows.back().front(), "F9 + BDI (F10)");
  EXPECT_EQ(r.out, table_text(t));
}

TEST(Cli, SilenceOnlyRecordingHasNoSpans) {
  vxtest::TempDir d("cli");
  put_wav(d / "audio/S01/text.wav", vxtest::silence(2.0));
  const CliRun r = cli("segment --audio " + q(d / "audio") + " --out " + q(d / "out"), d.path());
  EXPECT_EQ(r.code, 0);
  const SegmentManifest m = ingest_manifest(d / "out/manifests/S01_text.json");
  EXPECT_TRUE(m.spans.empty());
  EXPECT_FALSE(fs::exists(d / "out/segments/S01"));
}

TEST(Cli, VeryShortVowelStillGetsVector) {
  vxtest::TempDir d("cli");
  auto audio = vxtest::silence(0.2);
  vxtest::append(audio, vxtest::sine(180.0, 0.02));
  vxtest::append(audio, vxtest::silence(0.2));
  put_wav(d / "audio/S01/vowel_a.wav", audio);
  SegmentManifest m;
  m.recording_id = "S01_vowel_a";
  m.subject_id = "S01";
  m.spans.push_back({0.2, 0.22, SpanKind::Vowel, std::nullopt, 'a'});
  fs::create_directories(d / "given");
  write_manifest(d / "given/S01_vowel_a.json", m);
  ASSERT_EQ(cli("segment --audio " + q(d / "audio") + " --manifests " + q(d / "given") + " --out " + q(d / "out"),
                d.path())
                .code,
            0);
  const CliRun r = cli("extract --out " + q(d / "out"), d.path());
  EXPECT_EQ(r.code, 0);
  const std::string csv = vxtest::read_file(d / "out/features/S01/S01_vowel_a_000/compact_functionals.csv");
  EXPECT_NE(csv.find("F0_semitone__mean"), std::string::npos);
  EXPECT_NE(r.out.find("88 dims"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  vxtest::TempDir d("cli");
  EXPECT_EQ(cli("frobnicate", d.path()).code, 2);
  EXPECT_EQ(cli("segment --no-such-flag", d.path()).code, 2);
  EXPECT_EQ(cli("segment --jobs 0 --audio " + q(d.path()), d.path()).code, 2);
  EXPECT_EQ(cli("evaluate --scope nowhere", d.path()).code, 2);
  EXPECT_EQ(cli("evaluate --out " + q(d / "o") + " --metadata " + q(d / "missing.csv"), d.path()).code, 2);
  EXPECT_EQ(cli("extract --out " + q(d / "empty"), d.path()).code, 2);

  // One unreadable file among good ones: the batch finishes, exit 3.
  put_wav(d / "audio/S01/text.wav", vxtest::sine(200.0, 1.0));
  vxtest::write_file(d / "audio/S02/text.wav", "not a wav file at all");
  const CliRun r = cli("segment --audio " + q(d / "audio") + " --out " + q(d / "out"), d.path());
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(fs::exists(d / "out/manifests/S01_text.json"));
  EXPECT_FALSE(fs::exists(d / "out/manifests/S02_text.json"));

  EXPECT_EQ(cli("segment --help", d.path()).code, 0);
}

TEST(Cli, ConfigPrecedence) {
  vxtest::TempDir d("cli");
  const CliRun base = cli("evaluate --dump-config", d.path());
  ASSERT_EQ(base.code, 0);
  auto j = nlohmann::json::parse(base.out);
  EXPECT_EQ(j["seed"], 42);
  j["seed"] = 7;
  j["jobs"] = 2;
  vxtest::write_file(d / "cfg.json", j.dump());

  auto from_file = nlohmann::json::parse(cli("evaluate --dump-config --config " + q(d / "cfg.json"), d.path()).out);
  EXPECT_EQ(from_file["seed"], 7);
  EXPECT_EQ(from_file["jobs"], 2);
  auto flagged =
      nlohmann::json::parse(cli("evaluate --dump-config --seed 9 --config " + q(d / "cfg.json"), d.path()).out);
  EXPECT_EQ(flagged["seed"], 9);
  EXPECT_EQ(flagged["jobs"], 2);

  vxtest::write_file(d / "bad.json", "{\"seed\": \"many\"}");
  EXPECT_EQ(cli("evaluate --dump-config --config " + q(d / "bad.json"), d.path()).code, 2);
}

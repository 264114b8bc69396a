// voxrisk command-line entry point.
//
// Exit codes: 0 success, 2 configuration error, 3 data error (including
// per-file failures in batch commands), 4 unexpected runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "voxrisk/cohort.hpp"
#include "voxrisk/error.hpp"
#include "voxrisk/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct Flags {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scope;
  std::optional<std::string> features;
  std::optional<std::string> metadata_level;
  std::optional<std::string> aggregation;
  std::optional<std::string> out;
  std::optional<std::string> audio;
  std::optional<std::string> manifests;
  std::optional<std::string> metadata;
  std::optional<std::string> embeddings;
  std::optional<std::size_t> permutations;
  std::optional<std::string> log_level;
  std::optional<std::size_t> subjects;
  std::optional<double> class_ratio;
  std::optional<double> f0_shift;
  std::optional<double> jitter;
  std::optional<double> shimmer;
  std::optional<double> missing_rate;
  std::vector<std::string> meta_effects;
  bool dump_config = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

[[noreturn]] void config_error(const std::string& msg) { voxrisk::raise(voxrisk::ErrorKind::ConfigError, msg); }

// Defaults, then the config file, then flags.
voxrisk::RunConfig resolve(const Flags& f) {
  using namespace voxrisk;
  RunConfig c;
  if (!f.config.empty()) c = load_run_config(f.config, c);
  if (f.jobs) c.jobs = *f.jobs;
  if (c.jobs == 0) config_error("--jobs must be >= 1");
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.paths.out_dir = *f.out;
  if (f.audio) c.paths.audio_dir = *f.audio;
  if (f.manifests) c.paths.manifest_dir = *f.manifests;
  if (f.metadata) c.paths.metadata_csv = *f.metadata;
  if (f.embeddings) c.paths.embeddings_dir = *f.embeddings;
  if (f.permutations) c.permutations = *f.permutations;
  if (f.log_level) c.log_level = *f.log_level;
  if (f.scope) {
    auto s = parse_speech_scope(*f.scope);
    if (!s) config_error("unknown --scope '" + *f.scope + "'");
    c.experiment.speech_scope = *s;
  }
  if (f.features) {
    if (*f.features == "none") {
      c.experiment.feature_source.reset();
    } else {
      std::vector<FeatureSource> sources;
      for (const auto& name : split_list(*f.features)) {
        auto src = FeatureSource::parse(name);
        if (!src) config_error("unknown feature source '" + name + "'");
        sources.push_back(*src);
      }
      if (sources.empty()) config_error("--features is empty");
      c.sources = sources;
      c.experiment.feature_source = sources.front();
    }
  }
  if (f.metadata_level) {
    if (*f.metadata_level == "none") {
      c.experiment.metadata_level.reset();
    } else {
      auto lvl = parse_ladder_level(*f.metadata_level);
      if (!lvl) config_error("--metadata-level must be F1..F10 or none");
      c.experiment.metadata_level = lvl;
    }
  }
  if (f.aggregation) {
    auto a = parse_aggregation(*f.aggregation);
    if (!a) config_error("--aggregation must be segment or subject_majority");
    c.experiment.aggregation = *a;
  }
  if (f.subjects) c.synth.n_subjects = *f.subjects;
  if (f.class_ratio) c.synth.class_ratio = *f.class_ratio;
  if (f.f0_shift) c.synth.f0_shift_hz = *f.f0_shift;
  if (f.jitter) c.synth.jitter_amount = *f.jitter;
  if (f.shimmer) c.synth.shimmer_amount = *f.shimmer;
  if (f.missing_rate) c.synth.missing_rate = *f.missing_rate;
  for (const auto& e : f.meta_effects) {
    // field:p_low:p_high
    const auto a = e.find(':');
    const auto b = e.rfind(':');
    if (a == std::string::npos || a == b) config_error("--meta-effect expects field:p_low:p_high");
    const std::string field = e.substr(0, a);
    std::optional<MetaField> mf;
    for (int i = 0; i < static_cast<int>(kNumMetaFields); ++i) {
      if (csv_column(static_cast<MetaField>(i)) == field) mf = static_cast<MetaField>(i);
    }
    if (!mf) config_error("unknown metadata field '" + field + "'");
    try {
      c.synth.metadata_determinism[*mf] = {std::stod(e.substr(a + 1, b - a - 1)), std::stod(e.substr(b + 1))};
    } catch (const std::exception&) {
      config_error("--meta-effect probabilities must be numbers");
    }
  }
  return c;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--jobs", f.jobs, "worker threads (results do not depend on it)");
  cmd->add_option("--seed", f.seed, "seed for inner CV folds and synthesis");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--log-level", f.log_level, "trace, debug, info, warn, error, off");
  cmd->add_flag("--dump-config", f.dump_config, "print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voxrisk: speech features and LOSO evaluation for suicide-risk classification"};
  app.require_subcommand(1);
  Flags f;

  auto* segment = app.add_subcommand("segment", "normalize, segment and slice recordings");
  auto* extract = app.add_subcommand("extract", "write per-segment feature files");
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-subject-out evaluation");
  auto* ablation = app.add_subcommand("ablation", "metadata ladder F1..F10 across speech scopes");
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  auto* stats = app.add_subcommand("stats", "segment duration statistics");
  for (auto* cmd : {segment, extract, evaluate, ablation, synth, stats}) add_common(cmd, f);

  segment->add_option("--audio", f.audio, "recordings, laid out as <subject>/<recording>.wav");
  segment->add_option("--manifests", f.manifests, "optional alignment manifests <recording_id>.json");
  stats->add_option("--manifests", f.manifests, "manifest directory (default: <out>/manifests)");
  extract->add_option("--features", f.features, "comma list of sources");
  extract->add_option("--embeddings", f.embeddings, "embedding files <model_id>/<segment_id>.csv");
  for (auto* cmd : {evaluate, ablation}) {
    cmd->add_option("--metadata", f.metadata, "subject metadata CSV");
    cmd->add_option("--features", f.features, "feature source, or none for metadata only");
    cmd->add_option("--aggregation", f.aggregation, "segment or subject_majority");
  }
  evaluate->add_option("--scope", f.scope, "all, picture_description, neutral_text, vowels");
  evaluate->add_option("--metadata-level", f.metadata_level, "F1..F10 or none");
  evaluate->add_option("--permutations", f.permutations, "label permutations for a chance band");
  ablation->add_option("--scope", f.scope, "ignored by the ladder; accepted for symmetry");
  ablation->add_option("--metadata-level", f.metadata_level, "ignored by the ladder; accepted for symmetry");
  synth->add_option("--subjects", f.subjects, "number of subjects");
  synth->add_option("--class-ratio", f.class_ratio, "fraction of high-risk subjects");
  synth->add_option("--f0-shift", f.f0_shift, "F0 offset of the high-risk class in Hz");
  synth->add_option("--jitter", f.jitter, "extra period perturbation of the high-risk class");
  synth->add_option("--shimmer", f.shimmer, "extra amplitude perturbation of the high-risk class");
  synth->add_option("--missing-rate", f.missing_rate, "chance of an empty metadata cell");
  synth->add_option("--meta-effect", f.meta_effects, "field:p_low:p_high, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  auto logger = spdlog::stderr_color_mt("voxrisk");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  try {
    const voxrisk::RunConfig config = resolve(f);
    spdlog::set_level(spdlog::level::from_str(config.log_level));
    if (f.dump_config) {
      std::cout << voxrisk::run_config_to_json(config);
      return kExitOk;
    }
    voxrisk::CommandResult result;
    if (segment->parsed()) result = voxrisk::cmd_segment(config);
    else if (extract->parsed()) result = voxrisk::cmd_extract(config);
    else if (evaluate->parsed()) result = voxrisk::cmd_evaluate(config);
    else if (ablation->parsed()) result = voxrisk::cmd_ablation(config);
    else if (synth->parsed()) result = voxrisk::cmd_synth(config);
    else result = voxrisk::cmd_stats(config);
    std::cout << result.summary;
    if (!result.ok()) {
      spdlog::error("{} item(s) failed", result.failures.size());
      return kExitData;
    }
    return kExitOk;
  } catch (const voxrisk::Error& e) {
    spdlog::error("{}", e.what());
    const auto k = e.kind();
    return (k == voxrisk::ErrorKind::ConfigError || k == voxrisk::ErrorKind::InvalidSpec) ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    spdlog::critical("{}", e.what());
    return kExitRuntime;
  }
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/evaluation.hpp"
#include "voxrisk/segment.hpp"
#include "voxrisk/synth.hpp"

namespace voxrisk {

/// Version of the output directory layout, written to <out>/schema_version.
inline constexpr int kOutputSchemaVersion = 1;

struct RunPaths {
  std::filesystem::path audio_dir;       ///< <subject>/<recording>.wav
  std::filesystem::path manifest_dir;    ///< optional <recording_id>.json alignments
  std::filesystem::path metadata_csv;
  std::filesystem::path embeddings_dir;  ///< <model_id>/<segment_id>.{csv,bin}
  std::filesystem::path out_dir = "out";

  friend bool operator==(const RunPaths&, const RunPaths&) = default;
};

struct RunConfig {
  RunPaths paths;
  ExperimentConfig experiment = [] {
    ExperimentConfig e;
    e.feature_source = FeatureSource{};
    return e;
  }();  ///< compact functionals, all speech, no metadata
  std::vector<FeatureSource> sources{FeatureSource{}};  ///< what `extract` writes
  std::uint64_t seed = 42;   ///< drives both the experiment and synthesis
  std::size_t jobs = 1;
  std::string log_level = "info";
  std::size_t permutations = 0;  ///< chance band runs after `evaluate`
  VadOptions vad;
  SynthSpec synth;

  /// Experiment config with the run seed applied.
  ExperimentConfig effective_experiment() const;
  SynthSpec effective_synth() const;
};

/// Pretty JSON with every key; parses back to an equal config.
std::string run_config_to_json(const RunConfig& config);
/// Keys absent from the text keep their current values in `base`.
/// Throws ConfigError.
RunConfig run_config_from_json(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Kind implied by a recording file name: vowel_<v>, text*, picture*.
std::optional<SpanKind> kind_from_recording_name(std::string_view stem, char* vowel = nullptr);

/// Outcome of a batch command. Per-item failures are collected, not thrown.
struct CommandResult {
  std::size_t processed = 0;
  std::vector<std::string> failures;
  std::string summary;  ///< text printed by the CLI

  bool ok() const noexcept { return failures.empty(); }
};

/// Normalizes and resamples every recording below audio_dir, segments it by
/// manifest (when manifest_dir has one) or energy VAD, and writes
/// manifests/, segments/ and the duration statistics table.
CommandResult cmd_segment(const RunConfig& config);
/// One feature file per segment and source under features/.
CommandResult cmd_extract(const RunConfig& config);
/// LOSO run for the configured experiment; writes reports/.
CommandResult cmd_evaluate(const RunConfig& config);
/// The 10 x 5 metadata ladder; writes reports/ and tables/.
CommandResult cmd_ablation(const RunConfig& config);
/// Duration statistics of the manifests in out_dir/manifests (or manifest_dir).
CommandResult cmd_stats(const RunConfig& config);
/// Synthetic cohort into out_dir.
CommandResult cmd_synth(const RunConfig& config);

/// Computes one source's vector for a segment (embeddings come from files).
FeatureVector extract_source(const AudioBuffer& segment, const FeatureSource& source,
                             const std::filesystem::path& embeddings_dir, std::string_view segment_id);

}  // namespace voxrisk

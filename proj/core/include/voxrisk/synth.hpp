#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "voxrisk/audio.hpp"
#include "voxrisk/cohort.hpp"
#include "voxrisk/segment.hpp"

namespace voxrisk {

/// Recipe for a synthetic cohort with the three speech activities.
struct SynthSpec {
  std::size_t n_subjects = 20;
  double class_ratio = 0.5;     ///< fraction of high-risk subjects
  double f0_shift_hz = 0.0;     ///< added to the high class's base F0
  double jitter_amount = 0.0;   ///< added to the high class's period perturbation
  double shimmer_amount = 0.0;  ///< added to the high class's amplitude perturbation
  /// Boolean metadata field -> (P(true | low), P(true | high)). Fields not
  /// listed use 0.3 for both classes.
  std::map<MetaField, std::pair<double, double>> metadata_determinism;
  double missing_rate = 0.0;    ///< chance that an optional metadata cell is left empty
  std::uint64_t seed = 1;
  std::size_t vowels_per_subject = 5;
  std::size_t text_utterances = 2;
  std::size_t picture_utterances = 2;

  /// Throws InvalidSpec.
  void validate() const;
};

struct SynthRecording {
  std::string subject_id;
  AudioBuffer audio;
  SegmentManifest manifest;  ///< ground-truth spans
};

struct SynthCohort {
  std::vector<SubjectRecord> subjects;
  std::vector<SynthRecording> recordings;
};

/// Pure generation; identical specs give identical samples.
SynthCohort generate_cohort(const SynthSpec& spec);

/// Writes audio/<subject>/<recording>.wav (PCM16), manifests/<recording>.json
/// and metadata.csv below out_dir.
void synth_cohort(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Sustained vowel from a pulse train through formant resonators. Exposed
/// for tests of the voice-quality measures.
struct VowelParams {
  double f0_hz = 150.0;
  double jitter = 0.0;   ///< relative period perturbation amplitude
  double shimmer = 0.0;  ///< relative pulse amplitude perturbation
  char vowel = 'a';
  double duration_s = 0.5;
  double formant_scale = 1.0;
  double noise_level = 0.0;  ///< aspiration noise relative to the pulse amplitude
};

std::vector<double> synth_vowel(const VowelParams& params, std::uint64_t seed, int rate_hz = kCanonicalRateHz);

}  // namespace voxrisk

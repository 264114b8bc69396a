#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace voxrisk {

/// Sample rate every DSP stage assumes. Ingestion resamples to it.
inline constexpr int kCanonicalRateHz = 16000;

/// Default target of peak normalization, kept below full scale.
inline constexpr double kDefaultTargetPeak = 0.95;

/// Mono floating-point signal. Samples are expected in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalRateHz;
  std::string source_id;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

enum class WavEncoding { Pcm16, Pcm24, Float32 };

/// Reads a RIFF/WAVE file (PCM16, PCM24 or IEEE float32, including
/// WAVE_FORMAT_EXTENSIBLE wrappers of those). Multi-channel audio is mixed
/// down by the per-sample mean. Integer samples are divided by 2^(bits-1).
AudioBuffer load_wav(const std::filesystem::path& path);

/// Writes a mono WAV. Integer encodings scale by 2^(bits-1) and saturate.
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer,
               WavEncoding encoding = WavEncoding::Pcm16);

/// Writes interleaved multi-channel PCM; used to build test fixtures.
void write_wav_interleaved(const std::filesystem::path& path,
                           const std::vector<double>& interleaved, int channels,
                           int sample_rate_hz, WavEncoding encoding);

/// Scales the buffer by a single gain so that max |sample| == target_peak.
/// All-zero input is returned unchanged. A buffer already at the target
/// (within a few ulp) is returned bitwise unchanged, which makes the
/// operation idempotent.
AudioBuffer normalize_peak(const AudioBuffer& buffer, double target_peak = kDefaultTargetPeak);

/// Kaiser-window parameters of the band-limited resampler.
struct ResampleOptions {
  double kaiser_beta = 8.6;    ///< ~ -90 dB stopband
  int half_taps = 32;          ///< zero crossings on each side of the kernel
  double rolloff = 0.945;      ///< cutoff as a fraction of the lower Nyquist
};

/// Windowed-sinc resampling. Identity when the rates already match.
AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz,
                     const ResampleOptions& options = {});

}  // namespace voxrisk

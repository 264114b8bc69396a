#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxrisk/audio.hpp"
#include "voxrisk/feature_vector.hpp"

namespace voxrisk {

// ---------------------------------------------------------------------------
// Framing

enum class WindowType { Hann, Hamming, Gauss };

struct FrameConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  WindowType window = WindowType::Hann;

  std::size_t frame_len(int rate_hz) const;
  std::size_t hop_len(int rate_hz) const;
  /// Throws InvalidSpec unless frame_ms >= hop_ms > 0.
  void validate() const;
};

/// Symmetric window of length n (Hann and Hamming peak at 1 in the middle;
/// Gauss uses sigma = 0.4 * (n-1)/2).
std::vector<double> make_window(WindowType type, std::size_t n);

/// Overlapping frames, each multiplied by the window. Frame i covers samples
/// [i*hop, i*hop + frame_len).
struct FrameSet {
  std::size_t frame_len = 0;
  std::size_t hop_len = 0;
  std::size_t count = 0;
  std::vector<double> data;  ///< count x frame_len, row-major

  std::span<const double> frame(std::size_t i) const { return {data.data() + i * frame_len, frame_len}; }
};

/// floor((len - frame_len) / hop) + 1 frames. Throws BufferTooShort.
FrameSet frame_signal(const AudioBuffer& buffer, const FrameConfig& config);

// ---------------------------------------------------------------------------
// Pitch and voice quality

struct PitchOptions {
  double fmin_hz = 60.0;
  double fmax_hz = 500.0;
  double voicing_threshold = 0.45;  ///< max normalized difference of a voiced frame
  double dip_threshold = 0.1;       ///< first dip below this is taken as the period
  double silence_rms = 1e-5;        ///< frames quieter than this are unvoiced
};

struct PitchTrack {
  std::vector<double> f0_hz;          ///< 0 on unvoiced frames
  std::vector<double> voicing_prob;   ///< 1 - normalized difference at the chosen lag
  std::vector<std::uint8_t> voiced;
};

/// YIN-style estimator: squared-difference function over a frame-length
/// integration window, cumulative-mean normalization, first dip below
/// dip_threshold (else the global minimum in [fmin, fmax]), parabolic
/// interpolation. One estimate per FrameConfig frame.
PitchTrack f0_contour(const AudioBuffer& buffer, const FrameConfig& config, const PitchOptions& options = {});

/// Mean absolute difference of consecutive periods over the mean period.
double jitter_local(std::span<const double> period_lengths);

/// Mean absolute difference of consecutive peak amplitudes over the mean
/// amplitude.
double shimmer_local(std::span<const double> peak_amplitudes);

/// Cycle-by-cycle period marks. Each cycle length is the lag in
/// [0.7, 1.3] x nominal period maximizing the normalized cross-correlation
/// of consecutive one-period windows (parabolic refinement); each amplitude
/// is the cycle's largest excursion with the polarity of the first peak.
struct PeriodMarks {
  std::vector<double> periods_s;
  std::vector<double> amplitudes;
};

PeriodMarks extract_periods(std::span<const double> samples, int rate_hz, double f0_hz);

inline constexpr double kHnrMinDb = -20.0;
inline constexpr double kHnrMaxDb = 40.0;

/// 10*log10(r / (1 - r)) clamped to [kHnrMinDb, kHnrMaxDb].
double hnr_from_correlation(double r);

/// Harmonics-to-noise ratio from the normalized autocorrelation at the
/// pitch lag (peak-refined within +-2 samples). `frame` should be the raw,
/// unwindowed analysis region. Throws UnvoicedFrame when f0 <= 0 or the
/// frame is too short to hold two periods.
double hnr_db(std::span<const double> frame, int rate_hz, double f0_hz);

// ---------------------------------------------------------------------------
// Low-level descriptors

/// Column order of every LldMatrix.
enum class Lld : std::size_t {
  F0Semitone,
  F0Hz,
  VoicingProb,
  Jitter,
  Shimmer,
  Hnr,
  EnergyDb,
  Zcr,
  SpectralCentroid,
  SpectralSlope0To500,
  SpectralSlope500To1500,
  SpectralFlux,
  SpectralRolloff85,
  Mfcc0,
  // Mfcc1 .. Mfcc12 follow contiguously
};

inline constexpr std::size_t kNumMfcc = 13;
inline constexpr std::size_t kNumMelBandsMfcc = 26;
inline constexpr std::size_t kNumLld = static_cast<std::size_t>(Lld::Mfcc0) + kNumMfcc;
inline constexpr double kSemitoneRefHz = 27.5;
inline constexpr double kEnergyFloorDb = -100.0;

const std::vector<std::string>& lld_names();
/// True for F0, jitter, shimmer and HNR columns.
bool lld_voiced_only(std::size_t column);

struct LldMatrix {
  std::vector<std::string> descriptor_names;
  std::size_t frames = 0;
  double hop_ms = 10.0;
  std::vector<double> values;          ///< frames x descriptors; 0 where absent
  std::vector<std::uint8_t> present;   ///< frames x descriptors
  std::vector<std::uint8_t> voicing_mask;

  std::size_t descriptors() const noexcept { return descriptor_names.size(); }
  double at(std::size_t frame, std::size_t column) const { return values[frame * descriptors() + column]; }
  bool has(std::size_t frame, std::size_t column) const { return present[frame * descriptors() + column] != 0; }
};

/// Per-frame descriptors in the fixed Lld order. MFCCs use a 26-band HTK
/// mel filterbank on the power spectrum, natural log, orthonormal DCT-II.
/// Spectral slopes are least-squares slopes of the dB spectrum in dB/kHz.
LldMatrix compute_lld(const AudioBuffer& buffer, const FrameConfig& config = {},
                      const PitchOptions& pitch = {});

// ---------------------------------------------------------------------------
// Functionals

enum class FunctionalSetId { Compact, Extended };

/// Descriptor/functional inventory producing one fixed-length vector per
/// segment.
///
/// compact: 10 contours (F0 semitone, jitter, shimmer, HNR, energy, both
/// spectral slopes, flux, MFCC1, MFCC2) x 8 functionals (mean, coefficient
/// of variation, 20/50/80th percentile, 20-80 range, mean rising and
/// falling slope) + 4 presence indicators + 4 voicing-timing features = 88.
///
/// extended: all 26 descriptors and their deltas x 20 functionals (the 8
/// above plus min, max, skewness, kurtosis, linear slope/offset, quadratic
/// a/b/c, up-level crossing rates at 25/50/75 %) + 10 presence indicators
/// + 4 timing features = 1054.
struct FunctionalSet {
  FunctionalSetId id = FunctionalSetId::Compact;
  std::vector<std::size_t> descriptors;   ///< Lld columns summarized
  bool include_deltas = false;
  std::vector<std::string> functional_names;
  std::vector<std::string> feature_names;  ///< output_dim entries
  std::size_t output_dim = 0;

  static const FunctionalSet& compact();
  static const FunctionalSet& extended();
  /// "compact" or "extended"; throws InvalidSpec otherwise.
  static const FunctionalSet& by_name(std::string_view name);

  std::string_view name() const noexcept;
};

/// Summarizes every contour. Voiced-only contours use voiced frames only;
/// a contour with no valid frame yields zeros and presence indicator 0.
/// Output length always equals set.output_dim. Throws EmptyLld.
FeatureVector apply_functionals(const LldMatrix& lld, const FunctionalSet& set);

/// Zero-pads segments shorter than one frame, then compute_lld and
/// apply_functionals.
FeatureVector extract_functionals(const AudioBuffer& segment, const FunctionalSet& set,
                                  const FrameConfig& config = {});

// ---------------------------------------------------------------------------
// Mel spectrogram

struct MelSpecConfig {
  std::size_t n_mels = 128;
  std::size_t fft_size = 2048;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;
  double log_floor_db = -100.0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular HTK-mel filters with unit peak, evaluated at the FFT bin
/// frequencies. Returns n_mels x (fft_size/2 + 1), row-major.
std::vector<double> mel_filterbank(std::size_t n_mels, std::size_t fft_size, int rate_hz, double fmin_hz,
                                   double fmax_hz);

struct MelSpectrogram {
  std::size_t frames = 0;
  std::size_t n_mels = 0;
  std::vector<double> db;  ///< frames x n_mels

  double at(std::size_t frame, std::size_t band) const { return db[frame * n_mels + band]; }
};

/// Hann-windowed STFT power -> mel filterbank -> 10*log10, floored at
/// log_floor_db.
MelSpectrogram mel_spectrogram(const AudioBuffer& buffer, const MelSpecConfig& config = {});

/// Per-band mean and standard deviation over frames (2 * n_mels values),
/// zero-padding segments shorter than one window.
FeatureVector melspec_summary(const AudioBuffer& segment, const MelSpecConfig& config = {});

}  // namespace voxrisk

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spectrum.hpp"
#include "voxrisk/acoustic.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

constexpr double kSpectralFloor = 1e-20;

std::size_t col(Lld d) { return static_cast<std::size_t>(d); }

// Least-squares slope of the dB spectrum against frequency (dB per kHz).
double band_slope_db_per_khz(const std::vector<double>& power, double bin_hz, double lo_hz, double hi_hz) {
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  double n = 0.0;
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f < lo_hz || f > hi_hz) continue;
    const double x = f / 1000.0;
    const double y = 10.0 * std::log10(power[k] + kSpectralFloor);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1.0;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2.0 || denom <= 0.0) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

std::vector<double> dct_matrix(std::size_t n_out, std::size_t n_in) {
  std::vector<double> m(n_out * n_in);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double scale = i == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (std::size_t j = 0; j < n_in; ++j) {
      m[i * n_in + j] = scale * std::cos(std::numbers::pi * i * (j + 0.5) / static_cast<double>(n_in));
    }
  }
  return m;
}

}  // namespace

const std::vector<std::string>& lld_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {"F0_semitone",      "F0_hz",
                                  "voicing_prob",     "jitter_local",
                                  "shimmer_local",    "hnr_db",
                                  "energy_rms_db",    "zcr",
                                  "spectral_centroid", "spectral_slope_0_500",
                                  "spectral_slope_500_1500", "spectral_flux",
                                  "spectral_rolloff85"};
    for (std::size_t i = 0; i < kNumMfcc; ++i) v.push_back("mfcc" + std::to_string(i));
    return v;
  }();
  return names;
}

bool lld_voiced_only(std::size_t column) {
  return column == col(Lld::F0Semitone) || column == col(Lld::F0Hz) || column == col(Lld::Jitter) ||
         column == col(Lld::Shimmer) || column == col(Lld::Hnr);
}

LldMatrix compute_lld(const AudioBuffer& buffer, const FrameConfig& config, const PitchOptions& pitch_opt) {
  const FrameSet frames = frame_signal(buffer, config);
  const PitchTrack pitch = f0_contour(buffer, config, pitch_opt);
  const int rate = buffer.sample_rate_hz;
  const std::size_t n_desc = kNumLld;

  LldMatrix lld;
  lld.descriptor_names = lld_names();
  lld.frames = frames.count;
  lld.hop_ms = config.hop_ms;
  lld.values.assign(lld.frames * n_desc, 0.0);
  lld.present.assign(lld.frames * n_desc, 0);
  lld.voicing_mask = pitch.voiced;

  detail::PowerSpectrum spectrum(detail::next_pow2(frames.frame_len));
  const double bin_hz = static_cast<double>(rate) / static_cast<double>(spectrum.fft_size());
  const double nyquist = rate / 2.0;
  const auto melfb = mel_filterbank(kNumMelBandsMfcc, spectrum.fft_size(), rate, 0.0, nyquist);
  const auto dct = dct_matrix(kNumMfcc, kNumMelBandsMfcc);

  std::vector<double> power;
  std::vector<double> magnitude;
  std::vector<double> prev_magnitude;
  std::vector<double> log_mel(kNumMelBandsMfcc);

  for (std::size_t f = 0; f < frames.count; ++f) {
    double* row = lld.values.data() + f * n_desc;
    std::uint8_t* has = lld.present.data() + f * n_desc;
    auto set = [&](Lld d, double v) {
      row[col(d)] = v;
      has[col(d)] = 1;
    };

    const std::size_t start = f * frames.hop_len;
    std::span<const double> raw(buffer.samples.data() + start, frames.frame_len);

    // Voice-quality descriptors on voiced frames.
    if (pitch.voiced[f]) {
      const double f0 = pitch.f0_hz[f];
      const double period = rate / f0;
      set(Lld::F0Semitone, 12.0 * std::log2(f0 / kSemitoneRefHz));
      set(Lld::F0Hz, f0);
      const auto span_len = std::max<std::size_t>(frames.frame_len, static_cast<std::size_t>(std::ceil(5.0 * period)));
      std::span<const double> region(buffer.samples.data() + start, std::min(span_len, buffer.size() - start));
      const auto marks = extract_periods(region, rate, f0);
      if (marks.periods_s.size() >= 2) set(Lld::Jitter, jitter_local(marks.periods_s));
      const bool amps_ok = marks.amplitudes.size() >= 2 &&
                           std::all_of(marks.amplitudes.begin(), marks.amplitudes.end(), [](double a) { return a > 0.0; });
      if (amps_ok) set(Lld::Shimmer, shimmer_local(marks.amplitudes));
      try {
        set(Lld::Hnr, hnr_db(region, rate, f0));
      } catch (const Error&) {
        // too short for two periods: leave absent
      }
    }
    set(Lld::VoicingProb, pitch.voicing_prob[f]);

    double energy = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      energy += raw[i] * raw[i];
      if (i && ((raw[i] >= 0.0) != (raw[i - 1] >= 0.0))) ++crossings;
    }
    const double rms = std::sqrt(energy / static_cast<double>(raw.size()));
    set(Lld::EnergyDb, rms > 0.0 ? std::max(kEnergyFloorDb, 20.0 * std::log10(rms)) : kEnergyFloorDb);
    set(Lld::Zcr, raw.size() > 1 ? static_cast<double>(crossings) / static_cast<double>(raw.size() - 1) : 0.0);

    spectrum.compute(frames.frame(f), power);
    double total = 0.0;
    double weighted = 0.0;
    double mag_sum = 0.0;
    magnitude.resize(power.size());
    for (std::size_t k = 0; k < power.size(); ++k) {
      total += power[k];
      weighted += power[k] * static_cast<double>(k) * bin_hz;
      magnitude[k] = std::sqrt(power[k]);
      mag_sum += magnitude[k];
    }
    set(Lld::SpectralCentroid, total > 0.0 ? weighted / total : 0.0);
    set(Lld::SpectralSlope0To500, band_slope_db_per_khz(power, bin_hz, 0.0, 500.0));
    set(Lld::SpectralSlope500To1500, band_slope_db_per_khz(power, bin_hz, 500.0, 1500.0));

    double rolloff = 0.0;
    if (total > 0.0) {
      double cum = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) {
        cum += power[k];
        if (cum >= 0.85 * total) {
          rolloff = static_cast<double>(k) * bin_hz;
          break;
        }
      }
    }
    set(Lld::SpectralRolloff85, rolloff);

    if (mag_sum > 0.0) {
      for (double& m : magnitude) m /= mag_sum;
    }
    double flux = 0.0;
    if (!prev_magnitude.empty()) {
      for (std::size_t k = 0; k < magnitude.size(); ++k) {
        const double d = magnitude[k] - prev_magnitude[k];
        flux += d * d;
      }
    }
    set(Lld::SpectralFlux, flux);
    prev_magnitude = magnitude;

    const std::size_t bins = power.size();
    for (std::size_t m = 0; m < kNumMelBandsMfcc; ++m) {
      double e = 0.0;
      const double* w = melfb.data() + m * bins;
      for (std::size_t k = 0; k < bins; ++k) e += w[k] * power[k];
      log_mel[m] = std::log(std::max(e, kSpectralFloor));
    }
    for (std::size_t c = 0; c < kNumMfcc; ++c) {
      double acc = 0.0;
      for (std::size_t m = 0; m < kNumMelBandsMfcc; ++m) acc += dct[c * kNumMelBandsMfcc + m] * log_mel[m];
      row[col(Lld::Mfcc0) + c] = acc;
      has[col(Lld::Mfcc0) + c] = 1;
    }
  }
  return lld;
}

}  // namespace voxrisk

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "voxrisk/acoustic.hpp"
#include "voxrisk/error.hpp"

using namespace voxrisk;

namespace {

double feature(const FeatureVector& fv, const std::string& name) {
  const auto it = std::find(fv.names.begin(), fv.names.end(), name);
  if (it == fv.names.end()) {
    ADD_FAILURE() << "missing feature " << name;
    return std::nan("");
  }
  return fv.values[static_cast<std::size_t>(it - fv.names.begin())];
}

std::size_t col(Lld l) { return static_cast<std::size_t>(l); }

// Every column present and zero except those set afterwards.
LldMatrix blank_lld(std::size_t frames) {
  LldMatrix m;
  m.descriptor_names = lld_names();
  m.frames = frames;
  m.values.assign(frames * kNumLld, 0.0);
  m.present.assign(frames * kNumLld, 1);
  m.voicing_mask.assign(frames, 1);
  return m;
}

void set_column(LldMatrix& m, std::size_t c, const std::vector<double>& v) {
  for (std::size_t f = 0; f < m.frames; ++f) m.values[f * kNumLld + c] = v[f];
}

// Periodic waveform whose k-th cycle lasts periods[k] samples, scaled by amps[k].
std::vector<double> cycles(const std::vector<double>& periods, const std::vector<double>& amps) {
  std::vector<double> out;
  for (std::size_t k = 0; k < periods.size(); ++k) {
    const auto n = static_cast<std::size_t>(std::lround(periods[k]));
    for (std::size_t j = 0; j < n; ++j) {
      const double ph = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
      out.push_back(amps[k] * (std::sin(ph) + 0.3 * std::sin(2 * ph)));
    }
  }
  return out;
}

double htk_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

}  // namespace

TEST(Framing, FrameCountAndWindow) {
  const auto fs = frame_signal(vxtest::sine(100.0, 1.0), FrameConfig{});
  EXPECT_EQ(fs.count, 98u);
  EXPECT_EQ(fs.frame_len, 400u);
  EXPECT_EQ(fs.hop_len, 160u);
  const auto w = make_window(WindowType::Hann, 401);
  EXPECT_DOUBLE_EQ(w[200], 1.0);
  EXPECT_NEAR(w[0], 0.0, 1e-15);
}

TEST(Framing, ConstantSignalReproducesWindow) {
  AudioBuffer b;
  b.samples.assign(2000, 1.0);
  for (auto type : {WindowType::Hann, WindowType::Hamming, WindowType::Gauss}) {
    FrameConfig cfg;
    cfg.window = type;
    const auto fs = frame_signal(b, cfg);
    const auto w = make_window(type, fs.frame_len);
    for (std::size_t i = 0; i < fs.count; ++i) {
      const auto fr = fs.frame(i);
      EXPECT_TRUE(std::equal(fr.begin(), fr.end(), w.begin()));
    }
  }
}

TEST(Framing, Errors) {
  EXPECT_THROW(frame_signal(vxtest::silence(0.01), FrameConfig{}), Error);
  FrameConfig bad;
  bad.hop_ms = 30.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Pitch, PureSineAllVoiced) {
  const auto track = f0_contour(vxtest::sine(220.0, 1.0), FrameConfig{});
  ASSERT_FALSE(track.f0_hz.empty());
  for (std::size_t i = 0; i < track.f0_hz.size(); ++i) {
    EXPECT_TRUE(track.voiced[i]);
    EXPECT_NEAR(track.f0_hz[i], 220.0, 1.0);
  }
}

TEST(Pitch, WhiteNoiseMostlyUnvoiced) {
  AudioBuffer b;
  b.samples = vxtest::gaussian_noise(32000, 0.2, 17);
  const auto track = f0_contour(b, FrameConfig{});
  const auto unvoiced = std::count(track.voiced.begin(), track.voiced.end(), 0);
  EXPECT_GE(static_cast<double>(unvoiced), 0.9 * static_cast<double>(track.voiced.size()));
}

TEST(Pitch, LinearChirpTracksInstantaneousFrequency) {
  const double secs = 2.0;
  const int rate = 16000;
  AudioBuffer b;
  const auto n = static_cast<std::size_t>(secs * rate);
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    b.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * (100.0 * t + 150.0 / 2.0 * t * t));
  }
  const FrameConfig cfg;
  const auto track = f0_contour(b, cfg);
  std::vector<double> err;
  for (std::size_t f = 0; f < track.f0_hz.size(); ++f) {
    const double center = (static_cast<double>(f * cfg.hop_len(rate)) + cfg.frame_len(rate) / 2.0) / rate;
    err.push_back(std::abs(track.f0_hz[f] - (100.0 + 150.0 * center)));
  }
  std::nth_element(err.begin(), err.begin() + static_cast<long>(err.size() / 2), err.end());
  EXPECT_LE(err[err.size() / 2], 3.0);
}

TEST(VoiceQuality, JitterExamples) {
  EXPECT_EQ(jitter_local(std::vector<double>(10, 0.005)), 0.0);
  EXPECT_NEAR(jitter_local(std::vector<double>{0.005, 0.006, 0.005, 0.006}), 0.001 / 0.0055, 1e-12);
  // mean |dT| = 1 ms over mean T = 5.5 ms
  EXPECT_NEAR(jitter_local(std::vector<double>{0.005, 0.006, 0.005, 0.006}), 0.1818181818, 1e-9);
  EXPECT_THROW(jitter_local(std::vector<double>{0.005}), Error);
  double prev = -1.0;
  for (double eps : {0.0, 1e-5, 5e-5, 2e-4, 1e-3}) {
    std::vector<double> p;
    for (int i = 0; i < 20; ++i) p.push_back(0.005 + (i % 2 ? eps : -eps));
    const double j = jitter_local(p);
    EXPECT_GT(j, prev);
    prev = j;
  }
}

TEST(VoiceQuality, ShimmerExamples) {
  EXPECT_EQ(shimmer_local(std::vector<double>(6, 0.4)), 0.0);
  EXPECT_NEAR(shimmer_local(std::vector<double>{1.0, 0.8, 1.0}), 0.2 / (2.8 / 3.0), 1e-12);
  EXPECT_NEAR(shimmer_local(std::vector<double>{1.0, 0.8, 1.0}), 0.2142857143, 1e-9);
  const std::vector<double> a = {0.3, 0.5, 0.41, 0.2, 0.33};
  std::vector<double> scaled;
  for (double v : a) scaled.push_back(v * 7.5);
  EXPECT_NEAR(shimmer_local(a), shimmer_local(scaled), 1e-14);
  try {
    shimmer_local(std::vector<double>{1.0, 0.0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveAmplitude);
  }
  try {
    shimmer_local(std::vector<double>{1.0});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewPeriods);
  }
}

TEST(VoiceQuality, PeriodMarksMonotoneInPerturbation) {
  const double nominal = 16000.0 / 125.0;
  double prev_j = -1.0;
  double prev_s = -1.0;
  for (double eps : {0.0, 2.0, 4.0, 8.0}) {
    std::vector<double> periods, amps;
    for (int k = 0; k < 60; ++k) {
      periods.push_back(nominal + (k % 2 ? eps : -eps));
      amps.push_back(0.5 * (1.0 + (k % 2 ? 1.0 : -1.0) * eps / 40.0));
    }
    const auto x = cycles(periods, amps);
    const auto marks = extract_periods(x, 16000, 125.0);
    ASSERT_GE(marks.periods_s.size(), 10u);
    const double j = jitter_local(marks.periods_s);
    const double s = shimmer_local(marks.amplitudes);
    EXPECT_GT(j, prev_j) << eps;
    EXPECT_GT(s, prev_s) << eps;
    prev_j = j;
    prev_s = s;
  }
}

TEST(VoiceQuality, HnrExamples) {
  EXPECT_DOUBLE_EQ(hnr_from_correlation(0.5), 0.0);
  EXPECT_EQ(hnr_from_correlation(1.0), kHnrMaxDb);
  EXPECT_EQ(hnr_from_correlation(-0.2), kHnrMinDb);
  const auto tone = vxtest::sine(200.0, 0.1);
  EXPECT_GE(hnr_db(tone.samples, 16000, 200.0), 30.0);

  // Equal signal and noise power: r ~ 1/2.
  double total = 0.0;
  const int trials = 8;
  for (int s = 0; s < trials; ++s) {
    auto b = vxtest::sine(200.0, 0.25, 0.5);
    const auto noise = vxtest::gaussian_noise(b.size(), 0.5 / std::sqrt(2.0), 100 + s);
    for (std::size_t i = 0; i < b.size(); ++i) b.samples[i] += noise[i];
    const double h = hnr_db(b.samples, 16000, 200.0);
    EXPECT_NEAR(h, 0.0, 1.5);
    total += h;
  }
  EXPECT_NEAR(total / trials, 0.0, 1.0);
  EXPECT_THROW(hnr_db(tone.samples, 16000, 0.0), Error);
}

TEST(Lld, ToneDescriptors) {
  const auto lld = compute_lld(vxtest::sine(220.0, 1.0));
  EXPECT_EQ(lld.descriptor_names, lld_names());
  EXPECT_EQ(lld.descriptors(), kNumLld);
  for (std::size_t f = 0; f < lld.frames; ++f) {
    EXPECT_NEAR(lld.at(f, col(Lld::SpectralCentroid)), 220.0, 20.0);
    EXPECT_NEAR(lld.at(f, col(Lld::Zcr)), 2.0 * 220.0 / 16000.0, 0.003);
    EXPECT_TRUE(lld.has(f, col(Lld::F0Hz)));
    EXPECT_NEAR(lld.at(f, col(Lld::F0Semitone)), 12.0 * std::log2(lld.at(f, col(Lld::F0Hz)) / 27.5), 1e-9);
  }
  for (double v : lld.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Lld, SilenceIsFloorAndUnvoiced) {
  const auto lld = compute_lld(vxtest::silence(0.5));
  for (std::size_t f = 0; f < lld.frames; ++f) {
    EXPECT_EQ(lld.at(f, col(Lld::EnergyDb)), kEnergyFloorDb);
    EXPECT_FALSE(lld.voicing_mask[f]);
    for (std::size_t c = 0; c < kNumLld; ++c) {
      if (lld_voiced_only(c)) EXPECT_FALSE(lld.has(f, c));
    }
  }
}

TEST(Lld, DeterministicAndNamesUnique) {
  AudioBuffer b = vxtest::sine(180.0, 0.6);
  const auto noise = vxtest::gaussian_noise(b.size(), 0.02, 3);
  for (std::size_t i = 0; i < b.size(); ++i) b.samples[i] += noise[i];
  const auto a = compute_lld(b);
  const auto c = compute_lld(b);
  EXPECT_EQ(a.values, c.values);
  EXPECT_EQ(a.present, c.present);
  auto names = a.descriptor_names;
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
}

TEST(Lld, GainCovariance) {
  AudioBuffer b;
  b.samples = cycles(std::vector<double>(150, 16000.0 / 150.0), std::vector<double>(150, 0.3));
  const auto noise = vxtest::gaussian_noise(b.size(), 0.003, 5);
  for (std::size_t i = 0; i < b.size(); ++i) b.samples[i] += noise[i];
  const auto base = compute_lld(b);
  for (double k : {0.5, 2.0}) {
    AudioBuffer s = b;
    for (auto& v : s.samples) v *= k;
    const auto g = compute_lld(s);
    ASSERT_EQ(g.frames, base.frames);
    EXPECT_EQ(g.voicing_mask, base.voicing_mask);
    auto rel = [](double a, double c) { return std::abs(a - c) <= 1e-6 * std::max(1.0, std::abs(a)); };
    for (std::size_t f = 0; f < base.frames; ++f) {
      EXPECT_NEAR(g.at(f, col(Lld::EnergyDb)) - base.at(f, col(Lld::EnergyDb)), 20.0 * std::log10(k), 1e-6);
      for (Lld c : {Lld::F0Hz, Lld::Jitter, Lld::Shimmer, Lld::Hnr, Lld::Zcr, Lld::SpectralCentroid}) {
        EXPECT_TRUE(rel(g.at(f, col(c)), base.at(f, col(c)))) << lld_names()[col(c)] << " frame " << f;
      }
      for (std::size_t m = 1; m < kNumMfcc; ++m) {
        const std::size_t c = col(Lld::Mfcc0) + m;
        EXPECT_TRUE(rel(g.at(f, c), base.at(f, c))) << lld_names()[c];
      }
    }
  }
}

TEST(Functionals, ConstantContour) {
  auto lld = blank_lld(12);
  set_column(lld, col(Lld::EnergyDb), std::vector<double>(12, -17.5));
  const auto fv = apply_functionals(lld, FunctionalSet::extended());
  EXPECT_EQ(feature(fv, "energy_rms_db__mean"), -17.5);
  EXPECT_EQ(feature(fv, "energy_rms_db__cov"), 0.0);
  for (const char* p : {"p20", "p50", "p80"}) EXPECT_EQ(feature(fv, std::string("energy_rms_db__") + p), -17.5);
  EXPECT_EQ(feature(fv, "energy_rms_db__rising_slope_mean"), 0.0);
  EXPECT_EQ(feature(fv, "energy_rms_db__falling_slope_mean"), 0.0);
  EXPECT_EQ(feature(fv, "energy_rms_db__linreg_slope"), 0.0);
}

TEST(Functionals, RampContour) {
  auto lld = blank_lld(5);
  set_column(lld, col(Lld::EnergyDb), {1, 2, 3, 4, 5});
  const auto fv = apply_functionals(lld, FunctionalSet::extended());
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__mean"), 3.0);
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__p50"), 3.0);
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__rising_slope_mean"), 1.0);
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__falling_slope_mean"), 0.0);
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__min"), 1.0);
  EXPECT_DOUBLE_EQ(feature(fv, "energy_rms_db__max"), 5.0);
  EXPECT_NEAR(feature(fv, "energy_rms_db__linreg_slope"), 1.0, 1e-12);
  EXPECT_NEAR(feature(fv, "energy_rms_db__linreg_offset"), 1.0, 1e-12);
  EXPECT_NEAR(feature(fv, "energy_rms_db__quad_a"), 0.0, 1e-10);
  EXPECT_NEAR(feature(fv, "energy_rms_db__cov"), std::sqrt(2.0) / 3.0, 1e-12);
  EXPECT_NEAR(feature(fv, "energy_rms_db__p20"), 1.8, 1e-12);
  EXPECT_NEAR(feature(fv, "energy_rms_db__p80"), 4.2, 1e-12);
}

TEST(Functionals, RotationLeavesOrderFreeStatistics) {
  std::vector<double> v = {3.1, -0.4, 2.2, 7.9, 5.0, 1.1, 0.0, 4.4, 6.6, -2.5};
  auto lld = blank_lld(v.size());
  set_column(lld, col(Lld::SpectralFlux), v);
  const auto a = apply_functionals(lld, FunctionalSet::extended());
  for (std::size_t r = 1; r < v.size(); ++r) {
    std::rotate(v.begin(), v.begin() + 1, v.end());
    set_column(lld, col(Lld::SpectralFlux), v);
    const auto b = apply_functionals(lld, FunctionalSet::extended());
    for (const char* fn : {"mean", "p20", "p50", "p80", "min", "max"}) {
      const std::string name = std::string("spectral_flux__") + fn;
      EXPECT_EQ(feature(a, name), feature(b, name)) << name;
    }
  }
}

TEST(Functionals, UnvoicedSegmentKeepsDimension) {
  for (const auto* set : {&FunctionalSet::compact(), &FunctionalSet::extended()}) {
    const auto fv = extract_functionals(vxtest::silence(0.4), *set);
    EXPECT_EQ(fv.size(), set->output_dim);
    EXPECT_EQ(fv.names, set->feature_names);
    EXPECT_EQ(feature(fv, "F0_semitone__present"), 0.0);
    EXPECT_EQ(feature(fv, "F0_semitone__mean"), 0.0);
    for (double v : fv.values) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_EQ(FunctionalSet::compact().output_dim, 88u);
  EXPECT_GE(FunctionalSet::extended().output_dim, 10 * FunctionalSet::compact().output_dim);
}

TEST(Functionals, DimensionContractOnDegenerateInputs) {
  std::vector<AudioBuffer> inputs = {vxtest::silence(0.001), vxtest::sine(300.0, 0.02), vxtest::sine(150.0, 0.5)};
  AudioBuffer noisy;
  noisy.samples = vxtest::gaussian_noise(8000, 0.5, 1);
  inputs.push_back(noisy);
  for (const auto& b : inputs) {
    for (const auto* set : {&FunctionalSet::compact(), &FunctionalSet::extended()}) {
      const auto fv = extract_functionals(b, *set);
      EXPECT_EQ(fv.size(), set->output_dim);
      for (double v : fv.values) EXPECT_TRUE(std::isfinite(v));
    }
  }
  EXPECT_THROW(apply_functionals(LldMatrix{}, FunctionalSet::compact()), Error);
  EXPECT_THROW(FunctionalSet::by_name("huge"), Error);
}

TEST(Functionals, VoicedContourUsesVoicedFramesOnly) {
  auto lld = blank_lld(6);
  set_column(lld, col(Lld::F0Semitone), {40, 0, 42, 0, 44, 0});
  for (std::size_t f = 1; f < 6; f += 2) lld.present[f * kNumLld + col(Lld::F0Semitone)] = 0;
  const auto fv = apply_functionals(lld, FunctionalSet::compact());
  EXPECT_DOUBLE_EQ(feature(fv, "F0_semitone__mean"), 42.0);
  EXPECT_EQ(feature(fv, "F0_semitone__present"), 1.0);
}

TEST(MelSpec, ToneArgmaxIsBandHolding1kHz) {
  const MelSpecConfig cfg;
  const auto mel = mel_spectrogram(vxtest::sine(1000.0, 0.5), cfg);
  ASSERT_EQ(mel.n_mels, 128u);
  // Band whose triangle peaks nearest 1 kHz on the mel axis.
  const double lo = htk_mel(cfg.fmin_hz);
  const double hi = htk_mel(cfg.fmax_hz);
  const double step = (hi - lo) / (cfg.n_mels + 1);
  const auto expected = static_cast<std::size_t>(std::lround((htk_mel(1000.0) - lo) / step)) - 1;
  for (std::size_t f = 0; f < mel.frames; ++f) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < mel.n_mels; ++m) {
      if (mel.at(f, m) > mel.at(f, best)) best = m;
    }
    EXPECT_EQ(best, expected) << "frame " << f;
  }
}

TEST(MelSpec, SilenceAtFloorAndWidth) {
  const MelSpecConfig cfg;
  const auto mel = mel_spectrogram(vxtest::silence(0.3), cfg);
  EXPECT_EQ(mel.n_mels, 128u);
  for (double v : mel.db) EXPECT_EQ(v, cfg.log_floor_db);
  const auto summary = melspec_summary(vxtest::sine(440.0, 0.01));
  EXPECT_EQ(summary.size(), 256u);
  EXPECT_NEAR(hz_to_mel(1000.0), htk_mel(1000.0), 1e-9);
  EXPECT_NEAR(mel_to_hz(hz_to_mel(3210.0)), 3210.0, 1e-9);
}

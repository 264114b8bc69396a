#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "spectrum.hpp"
#include "voxrisk/acoustic.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {

namespace detail {

struct PowerSpectrum::Impl {
  Eigen::FFT<double> fft;
  std::vector<double> input;
  std::vector<std::complex<double>> output;
};

PowerSpectrum::PowerSpectrum(std::size_t fft_size) : fft_size_(fft_size), impl_(std::make_unique<Impl>()) {
  impl_->fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  impl_->input.assign(fft_size_, 0.0);
}

PowerSpectrum::~PowerSpectrum() = default;

void PowerSpectrum::compute(std::span<const double> frame, std::vector<double>& power) {
  auto& in = impl_->input;
  std::fill(in.begin(), in.end(), 0.0);
  std::copy_n(frame.begin(), std::min(frame.size(), fft_size_), in.begin());
  impl_->fft.fwd(impl_->output, in);
  power.resize(bins());
  for (std::size_t k = 0; k < bins(); ++k) power[k] = std::norm(impl_->output[k]);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace detail

std::size_t FrameConfig::frame_len(int rate_hz) const {
  return static_cast<std::size_t>(std::lround(frame_ms * rate_hz / 1000.0));
}

std::size_t FrameConfig::hop_len(int rate_hz) const {
  return static_cast<std::size_t>(std::lround(hop_ms * rate_hz / 1000.0));
}

void FrameConfig::validate() const {
  if (!(hop_ms > 0.0) || !(frame_ms >= hop_ms)) {
    raise(ErrorKind::InvalidSpec, "frame config requires frame_ms >= hop_ms > 0");
  }
}

std::vector<double> make_window(WindowType type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n <= 1) return w;
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    switch (type) {
      case WindowType::Hann:
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * x / denom);
        break;
      case WindowType::Hamming:
        w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * x / denom);
        break;
      case WindowType::Gauss: {
        const double half = denom / 2.0;
        const double z = (x - half) / (0.4 * half);
        w[i] = std::exp(-0.5 * z * z);
        break;
      }
    }
  }
  return w;
}

FrameSet frame_signal(const AudioBuffer& buffer, const FrameConfig& config) {
  config.validate();
  FrameSet fs;
  fs.frame_len = config.frame_len(buffer.sample_rate_hz);
  fs.hop_len = config.hop_len(buffer.sample_rate_hz);
  if (fs.frame_len == 0 || fs.hop_len == 0) raise(ErrorKind::InvalidSpec, "frame shorter than one sample");
  if (buffer.size() < fs.frame_len) {
    raise(ErrorKind::BufferTooShort, buffer.source_id + ": " + std::to_string(buffer.size()) +
                                         " samples < frame of " + std::to_string(fs.frame_len));
  }
  fs.count = (buffer.size() - fs.frame_len) / fs.hop_len + 1;
  const auto window = make_window(config.window, fs.frame_len);
  fs.data.resize(fs.count * fs.frame_len);
  for (std::size_t f = 0; f < fs.count; ++f) {
    const double* src = buffer.samples.data() + f * fs.hop_len;
    double* dst = fs.data.data() + f * fs.frame_len;
    for (std::size_t i = 0; i < fs.frame_len; ++i) dst[i] = src[i] * window[i];
  }
  return fs;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_filterbank(std::size_t n_mels, std::size_t fft_size, int rate_hz, double fmin_hz,
                                   double fmax_hz) {
  if (n_mels == 0) raise(ErrorKind::InvalidSpec, "n_mels must be >= 1");
  if (fmax_hz > rate_hz / 2.0 + 1e-9) raise(ErrorKind::InvalidSpec, "fmax above Nyquist");
  if (!(fmax_hz > fmin_hz) || fmin_hz < 0.0) raise(ErrorKind::InvalidSpec, "mel band limits");
  const std::size_t bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  std::vector<double> fb(n_mels * bins, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * rate_hz / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      fb[m * bins + k] = w;
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioBuffer& buffer, const MelSpecConfig& config) {
  FrameConfig frames_cfg{config.win_ms, config.hop_ms, WindowType::Hann};
  const FrameSet frames = frame_signal(buffer, frames_cfg);
  if (config.fft_size < frames.frame_len) raise(ErrorKind::InvalidSpec, "fft_size shorter than the window");
  const auto fb = mel_filterbank(config.n_mels, config.fft_size, buffer.sample_rate_hz, config.fmin_hz,
                                 config.fmax_hz);
  detail::PowerSpectrum spectrum(config.fft_size);
  const std::size_t bins = spectrum.bins();
  const double floor_power = std::pow(10.0, config.log_floor_db / 10.0);

  MelSpectrogram out;
  out.frames = frames.count;
  out.n_mels = config.n_mels;
  out.db.resize(out.frames * out.n_mels);
  std::vector<double> power;
  for (std::size_t f = 0; f < frames.count; ++f) {
    spectrum.compute(frames.frame(f), power);
    for (std::size_t m = 0; m < config.n_mels; ++m) {
      const double* w = fb.data() + m * bins;
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += w[k] * power[k];
      out.db[f * out.n_mels + m] = e > floor_power ? 10.0 * std::log10(e) : config.log_floor_db;
    }
  }
  return out;
}

FeatureVector melspec_summary(const AudioBuffer& segment, const MelSpecConfig& config) {
  AudioBuffer padded = segment;
  const auto win = FrameConfig{config.win_ms, config.hop_ms, WindowType::Hann}.frame_len(segment.sample_rate_hz);
  if (padded.samples.size() < win) padded.samples.resize(win, 0.0);
  const auto spec = mel_spectrogram(padded, config);
  FeatureVector out;
  out.names.reserve(2 * spec.n_mels);
  out.values.reserve(2 * spec.n_mels);
  std::vector<double> stds(spec.n_mels);
  for (std::size_t m = 0; m < spec.n_mels; ++m) {
    double sum = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) sum += spec.at(f, m);
    const double mean = sum / static_cast<double>(spec.frames);
    double var = 0.0;
    for (std::size_t f = 0; f < spec.frames; ++f) var += (spec.at(f, m) - mean) * (spec.at(f, m) - mean);
    stds[m] = std::sqrt(var / static_cast<double>(spec.frames));
    out.names.push_back("mel" + std::to_string(m) + "__mean");
    out.values.push_back(mean);
  }
  for (std::size_t m = 0; m < spec.n_mels; ++m) {
    out.names.push_back("mel" + std::to_string(m) + "__std");
    out.values.push_back(stds[m]);
  }
  return out;
}

}  // namespace voxrisk

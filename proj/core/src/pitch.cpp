#include <algorithm>
#include <cmath>
#include <limits>

#include "voxrisk/acoustic.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -1.0, 1.0);
}

double parabolic_value(double a, double b, double c, double offset) {
  return b - 0.25 * (a - c) * offset;
}

double normalized_xcorr(std::span<const double> x, std::size_t a, std::size_t b, std::size_t len) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    const double u = x[a + j];
    const double v = x[b + j];
    ab += u * v;
    aa += u * u;
    bb += v * v;
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace

PitchTrack f0_contour(const AudioBuffer& buffer, const FrameConfig& config, const PitchOptions& opt) {
  config.validate();
  const int rate = buffer.sample_rate_hz;
  if (!(opt.fmin_hz > 0.0) || !(opt.fmax_hz > opt.fmin_hz)) raise(ErrorKind::InvalidSpec, "pitch range");
  if (rate < 2.0 * opt.fmax_hz) {
    raise(ErrorKind::InvalidSpec, "sample rate " + std::to_string(rate) + " below 2 * fmax");
  }
  const std::size_t win = config.frame_len(rate);
  const std::size_t hop = config.hop_len(rate);
  if (buffer.size() < win || win == 0) {
    raise(ErrorKind::BufferTooShort, buffer.source_id + ": shorter than one frame");
  }
  const std::size_t n_frames = (buffer.size() - win) / hop + 1;
  const auto tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / opt.fmax_hz)));
  const auto tau_max = static_cast<std::size_t>(std::ceil(rate / opt.fmin_hz));

  PitchTrack track;
  track.f0_hz.assign(n_frames, 0.0);
  track.voicing_prob.assign(n_frames, 0.0);
  track.voiced.assign(n_frames, 0);

  std::vector<double> x(win + tau_max + 2);
  std::vector<double> diff(tau_max + 2);
  std::vector<double> cmnd(tau_max + 2);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const std::size_t idx = start + j;
      x[j] = idx < buffer.size() ? buffer.samples[idx] : 0.0;
    }
    double energy = 0.0;
    for (std::size_t j = 0; j < win; ++j) energy += x[j] * x[j];
    if (std::sqrt(energy / static_cast<double>(win)) < opt.silence_rms) continue;

    diff[0] = 0.0;
    cmnd[0] = 1.0;
    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
      double acc = 0.0;
      for (std::size_t j = 0; j < win; ++j) {
        const double d = x[j] - x[j + tau];
        acc += d * d;
      }
      diff[tau] = acc;
      running += acc;
      cmnd[tau] = running > 0.0 ? acc * static_cast<double>(tau) / running : 1.0;
    }

    std::size_t best = 0;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < opt.dip_threshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best == 0) {
      best = tau_min;
      for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
        if (cmnd[tau] < cmnd[best]) best = tau;
      }
    }
    double offset = 0.0;
    double value = cmnd[best];
    if (best > 1) {
      offset = parabolic_offset(cmnd[best - 1], cmnd[best], cmnd[best + 1]);
      value = std::min(value, parabolic_value(cmnd[best - 1], cmnd[best], cmnd[best + 1], offset));
    }
    value = std::max(0.0, value);
    track.voicing_prob[f] = std::clamp(1.0 - value, 0.0, 1.0);
    if (value <= opt.voicing_threshold) {
      track.voiced[f] = 1;
      track.f0_hz[f] = rate / (static_cast<double>(best) + offset);
    }
  }
  return track;
}

double jitter_local(std::span<const double> periods) {
  if (periods.size() < 2) raise(ErrorKind::TooFewPeriods, std::to_string(periods.size()) + " periods");
  double sum = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < periods.size(); ++i) {
    if (!(periods[i] > 0.0)) raise(ErrorKind::InvalidSpec, "period lengths must be positive");
    sum += periods[i];
    if (i) diff += std::abs(periods[i] - periods[i - 1]);
  }
  const double mean = sum / static_cast<double>(periods.size());
  return (diff / static_cast<double>(periods.size() - 1)) / mean;
}

double shimmer_local(std::span<const double> amps) {
  if (amps.size() < 2) raise(ErrorKind::TooFewPeriods, std::to_string(amps.size()) + " amplitudes");
  double sum = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (!(amps[i] > 0.0)) raise(ErrorKind::NonPositiveAmplitude, "amplitude " + std::to_string(i));
    sum += amps[i];
    if (i) diff += std::abs(amps[i] - amps[i - 1]);
  }
  const double mean = sum / static_cast<double>(amps.size());
  return (diff / static_cast<double>(amps.size() - 1)) / mean;
}

PeriodMarks extract_periods(std::span<const double> x, int rate_hz, double f0_hz) {
  PeriodMarks marks;
  if (!(f0_hz > 0.0)) return marks;
  const double nominal = rate_hz / f0_hz;
  const auto len = static_cast<std::size_t>(std::lround(nominal));
  const auto lag_lo = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(0.7 * nominal)));
  const auto lag_hi = static_cast<std::size_t>(std::ceil(1.3 * nominal));
  if (len < 2 || x.size() < len + lag_hi + 2) return marks;

  // Center cycles on the strongest peak of the first period.
  std::size_t peak = 0;
  for (std::size_t j = 0; j < len; ++j) {
    if (std::abs(x[j]) > std::abs(x[peak])) peak = j;
  }
  std::size_t pos = peak >= len / 2 ? peak - len / 2 : peak + len - len / 2;
  // Amplitudes follow the anchor's polarity; a cycle-centred window also
  // reaches the neighbouring cycle's opposite extremum.
  const double polarity = x[peak] < 0.0 ? -1.0 : 1.0;

  std::vector<double> r(lag_hi + 2, 0.0);
  while (pos + lag_hi + 1 + len <= x.size()) {
    std::size_t best = lag_lo;
    for (std::size_t lag = lag_lo - 1; lag <= lag_hi + 1; ++lag) r[lag] = normalized_xcorr(x, pos, pos + lag, len);
    for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) {
      if (r[lag] > r[best]) best = lag;
    }
    const double offset = parabolic_offset(-r[best - 1], -r[best], -r[best + 1]);
    const double lag = static_cast<double>(best) + offset;
    const auto step = static_cast<std::size_t>(std::lround(lag));
    double amp = 0.0;
    for (std::size_t j = pos; j < pos + step && j < x.size(); ++j) amp = std::max(amp, polarity * x[j]);
    marks.periods_s.push_back(lag / rate_hz);
    marks.amplitudes.push_back(amp);
    pos += step;
  }
  return marks;
}

double hnr_from_correlation(double r) {
  if (!(r > 0.0)) return kHnrMinDb;
  if (r >= 1.0) return kHnrMaxDb;
  return std::clamp(10.0 * std::log10(r / (1.0 - r)), kHnrMinDb, kHnrMaxDb);
}

double hnr_db(std::span<const double> frame, int rate_hz, double f0_hz) {
  if (!(f0_hz > 0.0)) raise(ErrorKind::UnvoicedFrame, "no f0 estimate");
  const double lag0 = rate_hz / f0_hz;
  const auto center = static_cast<std::size_t>(std::lround(lag0));
  const std::size_t n = frame.size();
  if (n < 2 * (center + 2) + 1) raise(ErrorKind::UnvoicedFrame, "frame shorter than two periods");
  const std::size_t lo = std::max<std::size_t>(1, center >= 2 ? center - 2 : 1);
  const std::size_t hi = center + 2;

  auto corr = [&](std::size_t lag) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t j = 0; j + lag < n; ++j) {
      ab += frame[j] * frame[j + lag];
      aa += frame[j] * frame[j];
      bb += frame[j + lag] * frame[j + lag];
    }
    if (aa <= 0.0 || bb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return ab / std::sqrt(aa * bb);
  };

  std::vector<double> r(hi + 2, 0.0);
  for (std::size_t lag = lo - 1 == 0 ? lo : lo - 1; lag <= hi + 1; ++lag) r[lag] = corr(lag);
  std::size_t best = lo;
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    if (std::isnan(r[lag])) raise(ErrorKind::UnvoicedFrame, "silent frame");
    if (r[lag] > r[best]) best = lag;
  }
  double peak = r[best];
  if (best > 1 && !std::isnan(r[best - 1]) && !std::isnan(r[best + 1])) {
    const double off = parabolic_offset(r[best - 1], r[best], r[best + 1]);
    peak = std::max(peak, parabolic_value(r[best - 1], r[best], r[best + 1], off));
  }
  return hnr_from_correlation(std::min(peak, 1.0));
}

}  // namespace voxrisk

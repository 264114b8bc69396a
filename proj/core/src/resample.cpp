#include <algorithm>
#include <cmath>
#include <numbers>

#include "voxrisk/audio.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz, const ResampleOptions& options) {
  if (buffer.empty()) raise(ErrorKind::EmptyBuffer, "resample on " + buffer.source_id);
  if (target_rate_hz <= 0) raise(ErrorKind::ZeroTargetRate, std::to_string(target_rate_hz));
  if (target_rate_hz == buffer.sample_rate_hz) return buffer;

  const auto in_rate = static_cast<long long>(buffer.sample_rate_hz);
  const auto out_rate = static_cast<long long>(target_rate_hz);
  const auto n_in = static_cast<long long>(buffer.samples.size());
  const long long n_out = std::max<long long>(1, (n_in * out_rate + in_rate / 2) / in_rate);

  // Cutoff in cycles per input sample.
  const double ratio = static_cast<double>(out_rate) / static_cast<double>(in_rate);
  const double cutoff = 0.5 * options.rolloff * std::min(1.0, ratio);
  const double half_width = options.half_taps / (2.0 * cutoff);
  const double i0_beta = bessel_i0(options.kaiser_beta);

  AudioBuffer out;
  out.sample_rate_hz = target_rate_hz;
  out.source_id = buffer.source_id;
  out.samples.resize(static_cast<std::size_t>(n_out));

  for (long long n = 0; n < n_out; ++n) {
    // Exact rational position of this output sample on the input grid.
    const double t = static_cast<double>(n * in_rate) / static_cast<double>(out_rate);
    const long long k_lo = std::max<long long>(0, static_cast<long long>(std::ceil(t - half_width)));
    const long long k_hi = std::min<long long>(n_in - 1, static_cast<long long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long long k = k_lo; k <= k_hi; ++k) {
      const double d = t - static_cast<double>(k);
      const double x = d / half_width;
      const double arg = 1.0 - x * x;
      if (arg <= 0.0) continue;
      const double window = bessel_i0(options.kaiser_beta * std::sqrt(arg)) / i0_beta;
      acc += buffer.samples[static_cast<std::size_t>(k)] * 2.0 * cutoff * sinc(2.0 * cutoff * d) * window;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace voxrisk

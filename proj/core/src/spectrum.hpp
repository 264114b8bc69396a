#pragma once

// Internal real-FFT power spectrum helper shared by the LLD and mel code.

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace voxrisk::detail {

class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t fft_size);
  ~PowerSpectrum();
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::size_t fft_size() const noexcept { return fft_size_; }
  std::size_t bins() const noexcept { return fft_size_ / 2 + 1; }

  /// |X_k|^2 for k = 0..fft_size/2 of the zero-padded input.
  void compute(std::span<const double> frame, std::vector<double>& power);

 private:
  struct Impl;
  std::size_t fft_size_;
  std::unique_ptr<Impl> impl_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace voxrisk::detail

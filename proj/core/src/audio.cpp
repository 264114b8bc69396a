#include "voxrisk/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FormatChunk {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const FormatChunk& fmt) {
  if (fmt.tag == kFormatFloat) {
    std::uint32_t raw = read_u32(p);
    float v = std::bit_cast<float>(raw);
    return static_cast<double>(v);
  }
  if (fmt.bits == 16) {
    auto v = static_cast<std::int16_t>(read_u16(p));
    return static_cast<double>(v) / 32768.0;
  }
  // 24-bit, sign-extended from the top byte.
  std::int32_t v = static_cast<std::int32_t>(p[0]) | (static_cast<std::int32_t>(p[1]) << 8) |
                   (static_cast<std::int32_t>(static_cast<std::int8_t>(p[2])) << 16);
  return static_cast<double>(v) / 8388608.0;
}

std::int32_t quantize(double x, double scale, std::int32_t lo, std::int32_t hi) {
  double v = std::nearbyint(x * scale);
  if (!(v >= lo)) return lo;  // also catches NaN
  if (v > hi) return hi;
  return static_cast<std::int32_t>(v);
}

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorKind::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::MissingFile, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    raise(ErrorKind::MalformedHeader, path.string() + ": not a RIFF/WAVE container");
  }

  FormatChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) {
        raise(ErrorKind::MalformedHeader, path.string() + ": truncated fmt chunk");
      }
      const unsigned char* f = bytes.data() + body;
      fmt.tag = read_u16(f);
      fmt.channels = read_u16(f + 2);
      fmt.rate = read_u32(f + 4);
      fmt.block_align = read_u16(f + 12);
      fmt.bits = read_u16(f + 14);
      if (fmt.tag == kFormatExtensible) {
        if (size < 40 || available < 40) {
          raise(ErrorKind::MalformedHeader, path.string() + ": truncated extensible fmt chunk");
        }
        // The first two bytes of the subformat GUID carry the real format tag.
        fmt.tag = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, available);
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) raise(ErrorKind::MalformedHeader, path.string() + ": missing fmt chunk");
  if (data == nullptr) raise(ErrorKind::MalformedHeader, path.string() + ": missing data chunk");
  if (fmt.channels == 0) raise(ErrorKind::MalformedHeader, path.string() + ": zero channels");
  if (fmt.rate == 0) raise(ErrorKind::MalformedHeader, path.string() + ": zero sample rate");

  bool supported = (fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24)) ||
                   (fmt.tag == kFormatFloat && fmt.bits == 32);
  if (!supported) {
    raise(ErrorKind::UnsupportedEncoding, path.string() + ": format tag " +
                                              std::to_string(fmt.tag) + ", " +
                                              std::to_string(fmt.bits) + " bits");
  }
  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  if (fmt.block_align != frame_bytes) {
    raise(ErrorKind::MalformedHeader, path.string() + ": block_align " +
                                          std::to_string(fmt.block_align) + " != " +
                                          std::to_string(frame_bytes));
  }

  const std::size_t frames = data_size / frame_bytes;
  AudioBuffer out;
  out.sample_rate_hz = static_cast<int>(fmt.rate);
  out.source_id = path.stem().string();
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = data + i * frame_bytes;
    double sum = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      double v = decode_sample(frame + c * bytes_per_sample, fmt);
      if (!std::isfinite(v)) {
        raise(ErrorKind::NonFiniteValue,
              path.string() + ": sample " + std::to_string(i) + " channel " + std::to_string(c));
      }
      sum += v;
    }
    out.samples[i] = fmt.channels == 1 ? sum : sum / fmt.channels;
  }
  return out;
}

void write_wav_interleaved(const std::filesystem::path& path,
                           const std::vector<double>& interleaved, int channels,
                           int sample_rate_hz, WavEncoding encoding) {
  if (channels <= 0) raise(ErrorKind::InvalidSpec, "channel count must be positive");
  if (sample_rate_hz <= 0) raise(ErrorKind::InvalidSpec, "sample rate must be positive");
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : (encoding == WavEncoding::Pcm24 ? 24 : 32);
  const std::uint16_t tag = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t bytes_per_sample = bits / 8u;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * bytes_per_sample);

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes + 1);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes + (data_bytes & 1u));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * channels * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (double x : interleaved) {
    switch (encoding) {
      case WavEncoding::Pcm16: {
        auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(quantize(x, 32768.0, -32768, 32767)));
        put_u16(out, v);
        break;
      }
      case WavEncoding::Pcm24: {
        auto v = static_cast<std::uint32_t>(quantize(x, 8388608.0, -8388608, 8388607));
        out.push_back(static_cast<unsigned char>(v & 0xFF));
        out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
        out.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
        break;
      }
      case WavEncoding::Float32:
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
        break;
    }
  }
  if (data_bytes & 1u) out.push_back(0);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorKind::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) raise(ErrorKind::IoError, "short write to " + path.string());
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer, WavEncoding encoding) {
  write_wav_interleaved(path, buffer.samples, 1, buffer.sample_rate_hz, encoding);
}

AudioBuffer normalize_peak(const AudioBuffer& buffer, double target_peak) {
  if (buffer.empty()) raise(ErrorKind::EmptyBuffer, "normalize_peak on " + buffer.source_id);
  if (!(target_peak > 0.0 && target_peak <= 1.0)) {
    raise(ErrorKind::InvalidSpec, "target_peak must lie in (0, 1]");
  }
  double peak = 0.0;
  for (double x : buffer.samples) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return buffer;
  // A previous pass leaves the peak within a couple of ulp of the target.
  if (std::abs(peak - target_peak) <= 4.0 * std::numeric_limits<double>::epsilon() * target_peak) {
    return buffer;
  }
  const double gain = target_peak / peak;
  AudioBuffer out = buffer;
  for (double& x : out.samples) x *= gain;
  return out;
}

}  // namespace voxrisk

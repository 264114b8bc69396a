#include <algorithm>
#include <array>
#include <cmath>

#include "voxrisk/acoustic.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

const std::vector<std::string> kCompactFunctionals = {
    "mean", "cov", "p20", "p50", "p80", "range20_80", "rising_slope_mean", "falling_slope_mean"};

const std::vector<std::string> kExtendedExtra = {"min",    "max",    "skewness", "kurtosis", "linreg_slope",
                                                 "linreg_offset", "quad_a", "quad_b", "quad_c",
                                                 "upcross25", "upcross50", "upcross75"};

const std::array<std::string, 4> kTimingNames = {"voiced_fraction", "voiced_segments_per_s",
                                                 "voiced_segment_mean_s", "unvoiced_segment_mean_s"};

struct Contour {
  std::vector<std::size_t> index;  // frame index of each value
  std::vector<double> value;
};

Contour contour_of(const LldMatrix& lld, std::size_t column) {
  Contour c;
  for (std::size_t f = 0; f < lld.frames; ++f) {
    if (lld.has(f, column)) {
      c.index.push_back(f);
      c.value.push_back(lld.at(f, column));
    }
  }
  return c;
}

// First difference between adjacent frames that are both present.
Contour delta_of(const Contour& c) {
  Contour d;
  for (std::size_t i = 1; i < c.value.size(); ++i) {
    if (c.index[i] == c.index[i - 1] + 1) {
      d.index.push_back(c.index[i]);
      d.value.push_back(c.value[i] - c.value[i - 1]);
    }
  }
  return d;
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// Solves the 3x3 system in place; false when singular.
bool solve3(std::array<std::array<double, 4>, 3>& a, std::array<double, 3>& x) {
  for (int c = 0; c < 3; ++c) {
    int pivot = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    if (std::abs(a[pivot][c]) < 1e-300) return false;
    std::swap(a[c], a[pivot]);
    for (int r = c + 1; r < 3; ++r) {
      const double factor = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= factor * a[c][k];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double acc = a[r][3];
    for (int k = r + 1; k < 3; ++k) acc -= a[r][k] * x[k];
    x[r] = acc / a[r][r];
  }
  return true;
}

void summarize(const Contour& c, bool extended, std::vector<double>& out) {
  const std::size_t n_fn = kCompactFunctionals.size() + (extended ? kExtendedExtra.size() : 0);
  if (c.value.empty()) {
    out.insert(out.end(), n_fn, 0.0);
    return;
  }
  const auto& v = c.value;
  const double n = static_cast<double>(v.size());
  // Moments are accumulated in sorted order so they do not depend on frame order.
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double x : sorted) sum += x;
  const double mean = sum / n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : sorted) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double sd = std::sqrt(m2);

  const double p20 = percentile_sorted(sorted, 0.2);
  const double p50 = percentile_sorted(sorted, 0.5);
  const double p80 = percentile_sorted(sorted, 0.8);

  double rise_sum = 0.0;
  double fall_sum = 0.0;
  std::size_t rises = 0;
  std::size_t falls = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (c.index[i] != c.index[i - 1] + 1) continue;
    const double d = v[i] - v[i - 1];
    if (d > 0.0) {
      rise_sum += d;
      ++rises;
    } else if (d < 0.0) {
      fall_sum -= d;
      ++falls;
    }
  }

  out.push_back(mean);
  out.push_back(mean != 0.0 ? sd / std::abs(mean) : 0.0);
  out.push_back(p20);
  out.push_back(p50);
  out.push_back(p80);
  out.push_back(p80 - p20);
  out.push_back(rises ? rise_sum / static_cast<double>(rises) : 0.0);
  out.push_back(falls ? fall_sum / static_cast<double>(falls) : 0.0);
  if (!extended) return;

  const double lo = sorted.front();
  const double hi = sorted.back();
  out.push_back(lo);
  out.push_back(hi);
  out.push_back(sd > 0.0 ? m3 / (sd * sd * sd) : 0.0);
  out.push_back(sd > 0.0 ? m4 / (m2 * m2) : 0.0);

  // Regressions on frame time relative to the first present frame.
  const double t0 = static_cast<double>(c.index.front());
  double st = 0.0, stt = 0.0, sttt = 0.0, stttt = 0.0, sy = 0.0, sty = 0.0, stty = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = static_cast<double>(c.index[i]) - t0;
    st += t;
    stt += t * t;
    sttt += t * t * t;
    stttt += t * t * t * t;
    sy += v[i];
    sty += t * v[i];
    stty += t * t * v[i];
  }
  double slope = 0.0;
  double offset = mean;
  const double lin_den = n * stt - st * st;
  if (v.size() >= 2 && lin_den > 0.0) {
    slope = (n * sty - st * sy) / lin_den;
    offset = (sy - slope * st) / n;
  }
  out.push_back(slope);
  out.push_back(offset);

  std::array<double, 3> quad = {0.0, slope, offset};
  if (v.size() >= 3) {
    std::array<std::array<double, 4>, 3> a = {{{stttt, sttt, stt, stty}, {sttt, stt, st, sty}, {stt, st, n, sy}}};
    std::array<double, 3> x{};
    if (solve3(a, x) && std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2])) quad = x;
  }
  out.push_back(quad[0]);
  out.push_back(quad[1]);
  out.push_back(quad[2]);

  for (double q : {0.25, 0.5, 0.75}) {
    double rate = 0.0;
    if (hi > lo && v.size() > 1) {
      const double level = lo + q * (hi - lo);
      std::size_t count = 0;
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i - 1] < level && v[i] >= level) ++count;
      }
      rate = static_cast<double>(count) / static_cast<double>(v.size() - 1);
    }
    out.push_back(rate);
  }
}

}  // namespace

FunctionalSet make_functional_set(FunctionalSetId id) {
  FunctionalSet set;
  set.id = id;
  const auto& names = lld_names();
  if (id == FunctionalSetId::Compact) {
    set.descriptors = {static_cast<std::size_t>(Lld::F0Semitone),
                       static_cast<std::size_t>(Lld::Jitter),
                       static_cast<std::size_t>(Lld::Shimmer),
                       static_cast<std::size_t>(Lld::Hnr),
                       static_cast<std::size_t>(Lld::EnergyDb),
                       static_cast<std::size_t>(Lld::SpectralSlope0To500),
                       static_cast<std::size_t>(Lld::SpectralSlope500To1500),
                       static_cast<std::size_t>(Lld::SpectralFlux),
                       static_cast<std::size_t>(Lld::Mfcc0) + 1,
                       static_cast<std::size_t>(Lld::Mfcc0) + 2};
    set.include_deltas = false;
    set.functional_names = kCompactFunctionals;
  } else {
    for (std::size_t c = 0; c < kNumLld; ++c) set.descriptors.push_back(c);
    set.include_deltas = true;
    set.functional_names = kCompactFunctionals;
    set.functional_names.insert(set.functional_names.end(), kExtendedExtra.begin(), kExtendedExtra.end());
  }

  auto& out = set.feature_names;
  for (std::size_t d : set.descriptors) {
    for (const auto& fn : set.functional_names) out.push_back(names[d] + "__" + fn);
  }
  if (set.include_deltas) {
    for (std::size_t d : set.descriptors) {
      for (const auto& fn : set.functional_names) out.push_back(names[d] + "_de__" + fn);
    }
  }
  for (std::size_t d : set.descriptors) {
    if (lld_voiced_only(d)) out.push_back(names[d] + "__present");
  }
  if (set.include_deltas) {
    for (std::size_t d : set.descriptors) {
      if (lld_voiced_only(d)) out.push_back(names[d] + "_de__present");
    }
  }
  out.insert(out.end(), kTimingNames.begin(), kTimingNames.end());
  set.output_dim = out.size();
  return set;
}

const FunctionalSet& FunctionalSet::compact() {
  static const FunctionalSet set = make_functional_set(FunctionalSetId::Compact);
  return set;
}

const FunctionalSet& FunctionalSet::extended() {
  static const FunctionalSet set = make_functional_set(FunctionalSetId::Extended);
  return set;
}

const FunctionalSet& FunctionalSet::by_name(std::string_view name) {
  if (name == "compact") return compact();
  if (name == "extended") return extended();
  raise(ErrorKind::InvalidSpec, "unknown functional set '" + std::string(name) + "'");
}

std::string_view FunctionalSet::name() const noexcept {
  return id == FunctionalSetId::Compact ? "compact" : "extended";
}

FeatureVector apply_functionals(const LldMatrix& lld, const FunctionalSet& set) {
  if (lld.frames == 0) raise(ErrorKind::EmptyLld, "no frames");
  if (lld.descriptors() != kNumLld) raise(ErrorKind::DimensionMismatch, "unexpected descriptor count");
  const bool extended = set.id == FunctionalSetId::Extended;

  std::vector<Contour> contours;
  contours.reserve(set.descriptors.size());
  for (std::size_t d : set.descriptors) contours.push_back(contour_of(lld, d));

  FeatureVector fv;
  fv.names = set.feature_names;
  fv.values.reserve(set.output_dim);
  for (const auto& c : contours) summarize(c, extended, fv.values);
  std::vector<Contour> deltas;
  if (set.include_deltas) {
    for (const auto& c : contours) deltas.push_back(delta_of(c));
    for (const auto& c : deltas) summarize(c, extended, fv.values);
  }
  for (std::size_t i = 0; i < set.descriptors.size(); ++i) {
    if (lld_voiced_only(set.descriptors[i])) fv.values.push_back(contours[i].value.empty() ? 0.0 : 1.0);
  }
  if (set.include_deltas) {
    for (std::size_t i = 0; i < set.descriptors.size(); ++i) {
      if (lld_voiced_only(set.descriptors[i])) fv.values.push_back(deltas[i].value.empty() ? 0.0 : 1.0);
    }
  }

  const double hop_s = lld.hop_ms / 1000.0;
  std::size_t voiced = 0;
  std::size_t voiced_runs = 0;
  std::size_t unvoiced_runs = 0;
  for (std::size_t f = 0; f < lld.frames; ++f) {
    const bool v = lld.voicing_mask[f] != 0;
    voiced += v;
    const bool run_start = f == 0 || (lld.voicing_mask[f - 1] != 0) != v;
    if (run_start) (v ? voiced_runs : unvoiced_runs) += 1;
  }
  const std::size_t unvoiced = lld.frames - voiced;
  const double duration = static_cast<double>(lld.frames) * hop_s;
  fv.values.push_back(static_cast<double>(voiced) / static_cast<double>(lld.frames));
  fv.values.push_back(duration > 0.0 ? static_cast<double>(voiced_runs) / duration : 0.0);
  fv.values.push_back(voiced_runs ? static_cast<double>(voiced) * hop_s / static_cast<double>(voiced_runs) : 0.0);
  fv.values.push_back(unvoiced_runs ? static_cast<double>(unvoiced) * hop_s / static_cast<double>(unvoiced_runs) : 0.0);

  if (fv.values.size() != set.output_dim) {
    raise(ErrorKind::DimensionMismatch, "functional output " + std::to_string(fv.values.size()) + " != " +
                                            std::to_string(set.output_dim));
  }
  for (auto& x : fv.values) {
    if (!std::isfinite(x)) x = 0.0;
  }
  return fv;
}

FeatureVector extract_functionals(const AudioBuffer& segment, const FunctionalSet& set, const FrameConfig& config) {
  const std::size_t frame_len = config.frame_len(segment.sample_rate_hz);
  if (segment.size() >= frame_len) return apply_functionals(compute_lld(segment, config), set);
  AudioBuffer padded = segment;
  padded.samples.resize(frame_len, 0.0);
  return apply_functionals(compute_lld(padded, config), set);
}

}  // namespace voxrisk

#include "voxrisk/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "text_util.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {

namespace {

// Portable generator: the same seed gives the same stream on every platform,
// unlike the standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }

 private:
  std::uint64_t state_;
};

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  Rng r(seed ^ (a * 0xd1b54a32d192ed03ULL) ^ (b * 0x8cb92ba72f3d8dd7ULL));
  return r.next();
}

struct Formants {
  std::array<double, 3> freq;
  std::array<double, 3> bw;
};

Formants formants_for(char vowel) {
  switch (vowel) {
    case 'e': return {{530, 1840, 2480}, {70, 100, 140}};
    case 'i': return {{270, 2290, 3010}, {60, 100, 160}};
    case 'o': return {{570, 840, 2410}, {70, 90, 140}};
    case 'u': return {{300, 870, 2240}, {60, 90, 140}};
    default: return {{730, 1090, 2440}, {80, 100, 140}};
  }
}

void resonate(std::vector<double>& x, double freq, double bw, int rate) {
  const double r = std::exp(-std::numbers::pi * bw / rate);
  const double theta = 2.0 * std::numbers::pi * freq / rate;
  const double a1 = 2.0 * r * std::cos(theta);
  const double a2 = -r * r;
  const double gain = 1.0 - a1 - a2;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = gain * v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

void fade(std::vector<double>& x, int rate, double fade_s = 0.01) {
  const std::size_t n = std::min(x.size() / 2, static_cast<std::size_t>(fade_s * rate));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    x[i] *= g;
    x[x.size() - 1 - i] *= g;
  }
}

// Pulse train with per-period jitter/shimmer, a glottal low-pass, optional
// aspiration noise and a three-formant cascade. f0 is a function of time
// within the stretch.
template <typename F0>
std::vector<double> voiced_stretch(double duration_s, F0&& f0_at, double jitter, double shimmer, char vowel,
                                   double formant_scale, double noise_level, Rng& rng, int rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<double> src(n + 2, 0.0);
  double t = 0.002;
  while (t < duration_s) {
    const double amp = 1.0 + shimmer * rng.uniform(-1.0, 1.0);
    const double pos = t * rate;
    const auto i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    if (i0 + 1 < src.size()) {
      src[i0] += amp * (1.0 - frac);
      src[i0 + 1] += amp * frac;
    }
    t += (1.0 / f0_at(t)) * (1.0 + jitter * rng.uniform(-1.0, 1.0));
  }
  src.resize(n);
  double g = 0.0;
  for (double& v : src) {
    g = v + 0.9 * g;
    v = g;
  }
  if (noise_level > 0.0) {
    for (double& v : src) v += noise_level * 0.1 * rng.normal();
  }
  const Formants fm = formants_for(vowel);
  for (std::size_t k = 0; k < 3; ++k) resonate(src, fm.freq[k] * formant_scale, fm.bw[k], rate);
  double peak = 0.0;
  for (double v : src) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : src) v /= peak;
  }
  fade(src, rate);
  return src;
}

std::vector<double> fricative(double duration_s, Rng& rng, int rate) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
  std::vector<double> x(n);
  double prev = 0.0;
  for (auto& v : x) {
    const double w = rng.normal();
    v = 0.25 * (w - prev);
    prev = w;
  }
  fade(x, rate, 0.008);
  return x;
}

struct Voice {
  double f0 = 140.0;
  double jitter = 0.005;
  double shimmer = 0.03;
  double formant_scale = 1.0;
  double noise = 0.02;
};

constexpr std::array<char, 5> kVowels = {'a', 'e', 'i', 'o', 'u'};

void append_silence(std::vector<double>& x, double seconds, int rate) {
  x.insert(x.end(), static_cast<std::size_t>(std::llround(seconds * rate)), 0.0);
}

// One connected utterance of syllables; `lively` widens the intonation.
std::vector<double> utterance(const Voice& v, double target_s, double lively, Rng& rng, int rate) {
  std::vector<double> out;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double rate_hz = rng.uniform(0.6, 1.2);
  while (static_cast<double>(out.size()) / rate < target_s) {
    if (rng.bernoulli(0.5)) {
      auto f = fricative(rng.uniform(0.04, 0.09), rng, rate);
      for (double& s : f) s *= 0.6;
      out.insert(out.end(), f.begin(), f.end());
    }
    const double t0 = static_cast<double>(out.size()) / rate;
    auto f0_at = [&](double t) {
      const double abs_t = t0 + t;
      return v.f0 * (1.0 + lively * std::sin(2.0 * std::numbers::pi * rate_hz * abs_t + phase)) *
             (1.0 - 0.08 * abs_t / target_s);
    };
    const char vowel = kVowels[rng.index(kVowels.size())];
    auto syl = voiced_stretch(rng.uniform(0.12, 0.26), f0_at, v.jitter, v.shimmer, vowel, v.formant_scale, v.noise,
                              rng, rate);
    const double level = rng.uniform(0.6, 1.0);
    for (double& s : syl) s *= level;
    out.insert(out.end(), syl.begin(), syl.end());
    append_silence(out, rng.uniform(0.03, 0.08), rate);
  }
  while (!out.empty() && out.back() == 0.0) out.pop_back();
  return out;
}

void add_floor_noise(std::vector<double>& x, Rng& rng) {
  for (double& s : x) s = std::clamp(0.7 * s + 2e-4 * rng.normal(), -1.0, 1.0);
}

std::string subject_name(std::size_t i, std::size_t n) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(n).size());
  std::string num = std::to_string(i + 1);
  return "S" + std::string(width - num.size(), '0') + num;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_subjects < 4) raise(ErrorKind::InvalidSpec, "n_subjects must be >= 4");
  if (!(class_ratio > 0.0 && class_ratio < 1.0)) raise(ErrorKind::InvalidSpec, "class_ratio must be in (0, 1)");
  const auto high = static_cast<std::size_t>(std::llround(class_ratio * static_cast<double>(n_subjects)));
  if (high < 2 || n_subjects - high < 2) raise(ErrorKind::InvalidSpec, "class_ratio must give >= 2 subjects per class");
  if (f0_shift_hz < -60.0 || f0_shift_hz > 200.0) raise(ErrorKind::InvalidSpec, "f0_shift_hz out of range");
  if (jitter_amount < 0.0 || jitter_amount > 0.2) raise(ErrorKind::InvalidSpec, "jitter_amount must be in [0, 0.2]");
  if (shimmer_amount < 0.0 || shimmer_amount > 0.5) raise(ErrorKind::InvalidSpec, "shimmer_amount must be in [0, 0.5]");
  if (missing_rate < 0.0 || missing_rate >= 1.0) raise(ErrorKind::InvalidSpec, "missing_rate must be in [0, 1)");
  for (const auto& [field, probs] : metadata_determinism) {
    switch (field) {
      case MetaField::Age:
      case MetaField::Gender:
      case MetaField::Height:
      case MetaField::Weight:
      case MetaField::Hopelessness:
      case MetaField::Bdi:
        raise(ErrorKind::InvalidSpec, "metadata_determinism only applies to boolean fields");
      default:
        break;
    }
    for (double p : {probs.first, probs.second}) {
      if (!(p >= 0.0 && p <= 1.0)) raise(ErrorKind::InvalidSpec, "probabilities must lie in [0, 1]");
    }
  }
  if (vowels_per_subject > kVowels.size()) raise(ErrorKind::InvalidSpec, "at most 5 vowels per subject");
  if (vowels_per_subject + text_utterances + picture_utterances == 0) {
    raise(ErrorKind::InvalidSpec, "spec produces no speech");
  }
}

std::vector<double> synth_vowel(const VowelParams& p, std::uint64_t seed, int rate_hz) {
  Rng rng(seed);
  return voiced_stretch(
      p.duration_s, [&](double) { return p.f0_hz; }, p.jitter, p.shimmer, p.vowel, p.formant_scale, p.noise_level,
      rng, rate_hz);
}

SynthCohort generate_cohort(const SynthSpec& spec) {
  spec.validate();
  const int rate = kCanonicalRateHz;
  SynthCohort cohort;
  const std::size_t n = spec.n_subjects;
  const auto n_high = static_cast<std::size_t>(std::llround(spec.class_ratio * static_cast<double>(n)));

  Rng assign(derive(spec.seed, 1));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[assign.index(i)]);
  std::vector<bool> high(n, false);
  for (std::size_t i = 0; i < n_high; ++i) high[order[i]] = true;

  static constexpr MetaField kBooleans[] = {
      MetaField::SuicideAttempts, MetaField::FirearmsOrLethalMedication, MetaField::SexualAbuseTrauma,
      MetaField::StressSituation, MetaField::SubstanceAbuse,             MetaField::Mania,
      MetaField::Nssi,
  };

  for (std::size_t s = 0; s < n; ++s) {
    Rng meta(derive(spec.seed, 2, s));
    SubjectRecord r;
    r.subject_id = subject_name(s, n);
    r.clinician_rating = high[s] ? 5 + static_cast<int>(meta.index(2)) : 1 + static_cast<int>(meta.index(4));
    const double g = meta.uniform();
    const Gender gender = g < 0.48 ? Gender::Female : (g < 0.96 ? Gender::Male : Gender::Other);
    r.gender = gender;
    r.age = std::round(meta.uniform(19.0, 70.0));
    const double h_mean = gender == Gender::Female ? 165.0 : (gender == Gender::Male ? 178.0 : 171.0);
    const double height = std::round(h_mean + 7.0 * meta.normal());
    r.height_cm = height;
    r.weight_kg = std::round(22.5 * (height / 100.0) * (height / 100.0) * (1.0 + 0.12 * meta.normal()));
    for (MetaField f : kBooleans) {
      auto it = spec.metadata_determinism.find(f);
      const double p = it == spec.metadata_determinism.end() ? 0.3 : (high[s] ? it->second.second : it->second.first);
      const bool v = meta.bernoulli(p);
      switch (f) {
        case MetaField::SuicideAttempts: r.suicide_attempt_history = v; break;
        case MetaField::FirearmsOrLethalMedication: r.firearm_or_lethal_medication_access = v; break;
        case MetaField::SexualAbuseTrauma: r.sexual_abuse_trauma = v; break;
        case MetaField::StressSituation: r.stress_situation = v; break;
        case MetaField::SubstanceAbuse: r.substance_abuse = v; break;
        case MetaField::Mania: r.mania = v; break;
        default: r.nssi = v; break;
      }
    }
    r.hopelessness = static_cast<int>(meta.index(kHopelessnessMax + 1));
    r.bdi_score = static_cast<int>(meta.index(46));
    if (spec.missing_rate > 0.0) {
      Rng miss(derive(spec.seed, 3, s));
      auto drop = [&](auto& field) {
        if (miss.bernoulli(spec.missing_rate)) field.reset();
      };
      drop(r.age);
      drop(r.gender);
      drop(r.height_cm);
      drop(r.weight_kg);
      drop(r.suicide_attempt_history);
      drop(r.firearm_or_lethal_medication_access);
      drop(r.hopelessness);
      drop(r.sexual_abuse_trauma);
      drop(r.stress_situation);
      drop(r.substance_abuse);
      drop(r.mania);
      drop(r.nssi);
      drop(r.bdi_score);
    }

    Rng voice_rng(derive(spec.seed, 4, s));
    Voice v;
    v.f0 = 130.0 + (gender == Gender::Female ? 20.0 : 0.0) + 8.0 * voice_rng.normal();
    v.jitter = voice_rng.uniform(0.004, 0.012);
    v.shimmer = voice_rng.uniform(0.02, 0.06);
    v.formant_scale = (gender == Gender::Female ? 1.08 : 1.0) * voice_rng.uniform(0.96, 1.04);
    v.noise = voice_rng.uniform(0.01, 0.04);
    if (high[s]) {
      v.f0 += spec.f0_shift_hz;
      v.jitter += spec.jitter_amount;
      v.shimmer += spec.shimmer_amount;
    }

    auto add_recording = [&](const std::string& name, std::vector<double> samples, std::vector<SegmentSpan> spans,
                             std::uint64_t noise_seed) {
      Rng floor_rng(noise_seed);
      add_floor_noise(samples, floor_rng);
      SynthRecording rec;
      rec.subject_id = r.subject_id;
      rec.audio.samples = std::move(samples);
      rec.audio.sample_rate_hz = rate;
      rec.audio.source_id = r.subject_id + "_" + name;
      rec.manifest.recording_id = rec.audio.source_id;
      rec.manifest.subject_id = r.subject_id;
      rec.manifest.duration_s = rec.audio.duration_s();
      rec.manifest.audio_path = r.subject_id + "/" + name + ".wav";
      rec.manifest.spans = std::move(spans);
      cohort.recordings.push_back(std::move(rec));
    };

    for (std::size_t k = 0; k < spec.vowels_per_subject; ++k) {
      Rng vr(derive(spec.seed, 5, s * 16 + k));
      const char vowel = kVowels[k];
      std::vector<double> x;
      append_silence(x, 0.25, rate);
      const double start = static_cast<double>(x.size()) / rate;
      const double f0 = v.f0 * vr.uniform(0.98, 1.02);
      auto body = voiced_stretch(
          vr.uniform(0.4, 0.9), [&](double) { return f0; }, v.jitter, v.shimmer, vowel, v.formant_scale, v.noise, vr,
          rate);
      x.insert(x.end(), body.begin(), body.end());
      const double end = static_cast<double>(x.size()) / rate;
      append_silence(x, 0.25, rate);
      SegmentSpan span{start, end, SpanKind::Vowel, std::nullopt, vowel};
      add_recording(std::string("vowel_") + vowel, std::move(x), {span}, derive(spec.seed, 6, s * 16 + k));
    }

    auto multi = [&](const std::string& name, std::size_t count, SpanKind kind, double min_s, double max_s,
                     double lively, std::uint64_t stream) {
      if (count == 0) return;
      Rng ur(derive(spec.seed, stream, s));
      std::vector<double> x;
      std::vector<SegmentSpan> spans;
      append_silence(x, 0.4, rate);
      for (std::size_t u = 0; u < count; ++u) {
        if (u > 0) append_silence(x, ur.uniform(0.6, 0.9), rate);
        const double start = static_cast<double>(x.size()) / rate;
        auto utt = utterance(v, ur.uniform(min_s, max_s), lively, ur, rate);
        x.insert(x.end(), utt.begin(), utt.end());
        spans.push_back({start, static_cast<double>(x.size()) / rate, kind, std::nullopt, std::nullopt});
      }
      append_silence(x, 0.4, rate);
      add_recording(name, std::move(x), std::move(spans), derive(spec.seed, stream + 100, s));
    };
    multi("text", spec.text_utterances, SpanKind::NeutralText, 1.5, 2.5, 0.06, 7);
    multi("picture", spec.picture_utterances, SpanKind::PictureDescription, 2.0, 3.5, 0.1, 8);
    cohort.subjects.push_back(std::move(r));
  }
  return cohort;
}

void synth_cohort(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const SynthCohort cohort = generate_cohort(spec);
  std::filesystem::create_directories(out_dir / "manifests");
  for (const auto& rec : cohort.recordings) {
    const auto wav = out_dir / "audio" / *rec.manifest.audio_path;
    std::filesystem::create_directories(wav.parent_path());
    write_wav(wav, rec.audio, WavEncoding::Pcm16);
    write_manifest(out_dir / "manifests" / (rec.manifest.recording_id + ".json"), rec.manifest);
  }
  detail::write_text_file((out_dir / "metadata.csv").string(), metadata_to_csv(cohort.subjects));
}

}  // namespace voxrisk

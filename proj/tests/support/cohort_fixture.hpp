#pragma once

// In-memory cohorts with controllable class signal, for evaluation tests.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "voxrisk/cohort.hpp"

namespace vxtest {

struct FixtureSpec {
  std::size_t subjects = 20;
  std::size_t high = 10;             ///< subjects with rating 6; the rest get 2
  std::size_t dim = 6;
  double signal = 0.0;               ///< class shift on feature 0 (in noise sds)
  double subject_spread = 0.5;       ///< per-subject offset sd
  std::vector<voxrisk::SpanKind> kinds = {voxrisk::SpanKind::PictureDescription, voxrisk::SpanKind::NeutralText,
                                          voxrisk::SpanKind::Vowel, voxrisk::SpanKind::Vowel};
  std::uint64_t seed = 1;
};

inline std::string subject_name(std::size_t i) {
  return (i < 9 ? "S0" : "S") + std::to_string(i + 1);
}

inline voxrisk::CohortDataset make_fixture(const FixtureSpec& spec) {
  using namespace voxrisk;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<bool> is_high(spec.subjects, false);
  for (std::size_t s = 0; s < spec.high && s < spec.subjects; ++s) is_high[s] = true;
  std::shuffle(is_high.begin(), is_high.end(), rng);
  CohortDataset ds;
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    SubjectRecord r;
    r.subject_id = subject_name(s);
    const bool high = is_high[s];
    r.clinician_rating = high ? 6 : 2;
    r.age = 20.0 + static_cast<double>(rng() % 50);
    r.gender = static_cast<Gender>(rng() % 3);
    r.height_cm = 160.0 + static_cast<double>(rng() % 30);
    r.weight_kg = 55.0 + static_cast<double>(rng() % 40);
    r.suicide_attempt_history = high;  // class-determining at F2
    r.firearm_or_lethal_medication_access = rng() % 2;
    r.hopelessness = static_cast<int>(rng() % 5);
    r.sexual_abuse_trauma = rng() % 2;
    r.stress_situation = rng() % 2;
    r.substance_abuse = rng() % 2;
    r.mania = rng() % 2;
    r.nssi = rng() % 2;
    r.bdi_score = static_cast<int>(rng() % 40);
    ds.subjects.push_back(r);

    std::vector<double> offset(spec.dim);
    for (auto& o : offset) o = spec.subject_spread * g(rng);
    for (std::size_t k = 0; k < spec.kinds.size(); ++k) {
      SegmentEntry e;
      e.subject_id = r.subject_id;
      e.segment_id = r.subject_id + "_seg_" + std::to_string(k);
      e.kind = spec.kinds[k];
      FeatureVector v;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        v.names.push_back("f" + std::to_string(j));
        v.values.push_back(offset[j] + g(rng) + (j == 0 && high ? spec.signal : 0.0));
      }
      e.features["compact_functionals"] = v;
      ds.segments.push_back(e);
    }
  }
  return ds;
}

}  // namespace vxtest

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace voxrisk {

/// Fixed-order named feature values for one segment or subject.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

}  // namespace voxrisk

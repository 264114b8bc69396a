#include "voxrisk/embedding.hpp"

#include <cmath>
#include <map>

#include "text_util.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {
namespace {

// Exactly rounded sum (Shewchuk partials), so the pooled mean does not depend
// on the order of time steps.
class ExactSum {
 public:
  void add(double x) {
    std::size_t used = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[used++] = lo;
      x = hi;
    }
    partials_.resize(used);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    auto i = partials_.size() - 1;
    double hi = partials_[i];
    double lo = 0.0;
    while (i > 0) {
      const double x = hi;
      const double y = partials_[--i];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    if (i > 0 && ((lo < 0.0 && partials_[i - 1] < 0.0) || (lo > 0.0 && partials_[i - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace

EmbeddingMatrix embeddings_from_table(const FeatureTable& table, std::string_view origin) {
  const std::string where(origin);
  auto field = [&](const char* key) -> const std::string& {
    auto it = table.meta.find(key);
    if (it == table.meta.end() || it->second.empty()) {
      raise(ErrorKind::SchemaViolation, where + ": missing header field '" + key + "'");
    }
    return it->second;
  };
  EmbeddingMatrix m;
  m.model_id = field("model_id");
  m.segment_id = field("segment_id");
  auto dim = detail::parse_int(field("dim"));
  if (!dim || *dim <= 0) raise(ErrorKind::SchemaViolation, where + ": dim must be a positive integer");
  m.dim = static_cast<std::size_t>(*dim);
  if (table.cols() != m.dim) {
    raise(ErrorKind::SchemaViolation, where + ": header dim " + std::to_string(m.dim) + " but rows have " +
                                          std::to_string(table.cols()) + " values");
  }
  m.steps = table.rows;
  m.values = table.values;
  return m;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return embeddings_from_table(read_table(path), path.string());
}

FeatureTable embeddings_to_table(const EmbeddingMatrix& m) {
  FeatureTable t;
  t.meta["model_id"] = m.model_id;
  t.meta["segment_id"] = m.segment_id;
  t.meta["dim"] = std::to_string(m.dim);
  for (std::size_t i = 0; i < m.dim; ++i) t.names.push_back("e" + std::to_string(i));
  t.rows = m.steps;
  t.values = m.values;
  return t;
}

FeatureVector mean_pool(const EmbeddingMatrix& m) {
  if (m.steps == 0) raise(ErrorKind::EmptyMatrix, m.model_id + "/" + m.segment_id);
  if (m.values.size() != m.steps * m.dim) raise(ErrorKind::DimensionMismatch, "embedding storage size");
  FeatureVector fv;
  fv.values.resize(m.dim);
  for (std::size_t i = 0; i < m.dim; ++i) {
    ExactSum sum;
    for (std::size_t t = 0; t < m.steps; ++t) sum.add(m.values[t * m.dim + i]);
    fv.values[i] = sum.value() / static_cast<double>(m.steps);
  }
  fv.names.reserve(m.dim);
  for (std::size_t i = 0; i < m.dim; ++i) fv.names.push_back(m.model_id + "[" + std::to_string(i) + "]");
  return fv;
}

void check_cohort_dims(const std::vector<EmbeddingMatrix>& matrices) {
  std::map<std::string, std::size_t> dims;
  for (const auto& m : matrices) {
    auto [it, inserted] = dims.emplace(m.model_id, m.dim);
    if (!inserted && it->second != m.dim) {
      raise(ErrorKind::DimensionMismatch, m.model_id + ": segment " + m.segment_id + " has dim " +
                                              std::to_string(m.dim) + ", cohort uses " + std::to_string(it->second));
    }
  }
}

}  // namespace voxrisk

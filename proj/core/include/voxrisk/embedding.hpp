#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "voxrisk/feature_vector.hpp"
#include "voxrisk/table_io.hpp"

namespace voxrisk {

/// Time-steps x dim matrix produced by an external encoder (wav2vec-style
/// models give dim 1024, DenseNet-based spectrogram encoders 1920).
struct EmbeddingMatrix {
  std::string model_id;
  std::string segment_id;
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::vector<double> values;  ///< steps x dim, row-major
};

/// Reads an embedding file in the shared table format (CSV or .bin). The
/// metadata must carry model_id, segment_id and dim; every row must have
/// exactly `dim` columns. Throws SchemaViolation, NonFiniteValue.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

EmbeddingMatrix embeddings_from_table(const FeatureTable& table, std::string_view origin = "<memory>");
FeatureTable embeddings_to_table(const EmbeddingMatrix& matrix);

/// Per-dimension mean over time steps; names are "<model_id>[i]".
/// Throws EmptyMatrix.
FeatureVector mean_pool(const EmbeddingMatrix& matrix);

/// Throws DimensionMismatch unless every matrix of a model shares one dim.
void check_cohort_dims(const std::vector<EmbeddingMatrix>& matrices);

}  // namespace voxrisk

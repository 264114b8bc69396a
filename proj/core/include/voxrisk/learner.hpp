#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace voxrisk {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  Matrix select_rows(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline constexpr double kStdFloor = 1e-8;

struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stds;

  std::size_t dims() const noexcept { return means.size(); }
  /// Identity scaler of the given width.
  static ScalerParams identity(std::size_t dims);
  Matrix transform(const Matrix& x) const;
  Matrix inverse_transform(const Matrix& z) const;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Population mean/std per column; stds below kStdFloor become 1.
/// Throws TooFewRows, NonFiniteInput.
ScalerParams fit_scaler(const Matrix& x);

struct SvmOptions {
  double tolerance = 1e-4;        ///< stop when the maximal KKT violation drops below
  std::size_t max_iter_factor = 10000;  ///< iteration cap = factor * rows
  bool class_weighting = false;   ///< per-class C scaled by n / (2 n_class)
  bool check_monotone = false;    ///< verify the dual objective never increases
};

struct TrainingMeta {
  std::string fold_id;
  std::size_t iterations = 0;
  bool converged = false;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  bool objective_monotone = true;
};

struct TrainedModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c_value = 1.0;
  bool class_weighting = false;
  std::uint64_t seed = 0;
  ScalerParams scaler;
  TrainingMeta training_meta;
};

/// Soft-margin linear SVM with an unregularized bias, solved in the dual by
/// pairwise coordinate steps on the maximal violating pair. x is expected to
/// be standardized already; the model carries an identity scaler. y holds
/// -1/+1. Throws SingleClassTraining, NonFiniteInput, DimensionMismatch.
TrainedModel train_linear_svm(const Matrix& x, const std::vector<int>& y, double c, const SvmOptions& opts = {});

/// Fits the scaler on x_raw, then trains on the standardized rows.
TrainedModel fit_model(const Matrix& x_raw, const std::vector<int>& y, double c, const SvmOptions& opts = {});

/// 0.5*|w|^2 + sum_i c_i * max(0, 1 - y_i (w.x_i + b)) on already scaled rows.
double primal_objective(std::span<const double> w, double b, const Matrix& x, const std::vector<int>& y, double c,
                        bool class_weighting = false);

struct Prediction {
  std::vector<int> labels;  ///< -1/+1; a zero decision maps to +1
  std::vector<double> decision;
};

/// Applies the model's scaler, then sign(w.x + b). Throws DimensionMismatch.
Prediction predict(const TrainedModel& model, const Matrix& x_raw);

/// Mean per-class recall over the two labels -1/+1. Throws MissingClass.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct CGrid {
  std::vector<double> values{1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  /// Throws InvalidSpec unless strictly decreasing and positive.
  void validate() const;
  friend bool operator==(const CGrid&, const CGrid&) = default;
};

struct SelectCOptions {
  std::size_t k = 5;
  std::uint64_t seed = 42;
  SvmOptions svm;
};

struct SelectCResult {
  double c = 1.0;
  std::vector<double> mean_scores;  ///< aligned with the grid; empty without CV
  std::size_t folds = 0;
  bool grouped = false;
};

/// Stratified inner k-fold CV, grouped by `groups` (one id per row) when
/// every class spans at least two groups. k shrinks to the smallest class
/// count. The scaler is refit on each inner training split. Ties go to the
/// smaller c. Throws SingleClassTraining.
SelectCResult select_c(const Matrix& x_raw, const std::vector<int>& y, const std::vector<std::string>& groups,
                       const CGrid& grid, const SelectCOptions& opts = {});

/// Fold index per row, deterministic in the seed. Exposed for tests.
std::vector<std::size_t> stratified_group_folds(const std::vector<int>& y, const std::vector<std::string>& groups,
                                                std::size_t k, std::uint64_t seed);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(std::string_view text);

}  // namespace voxrisk

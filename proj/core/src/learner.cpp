#include "voxrisk/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "svm_solver.hpp"
#include "voxrisk/error.hpp"

namespace voxrisk {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows) {
    if (r.size() != m.cols) raise(ErrorKind::DimensionMismatch, "ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

Matrix Matrix::select_rows(const std::vector<std::size_t>& indices) const {
  Matrix m(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

ScalerParams ScalerParams::identity(std::size_t dims) {
  return ScalerParams{std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
}

Matrix ScalerParams::transform(const Matrix& x) const {
  if (x.cols != dims()) {
    raise(ErrorKind::DimensionMismatch,
          "scaler has " + std::to_string(dims()) + " dims, input has " + std::to_string(x.cols));
  }
  Matrix z = x;
  for (std::size_t r = 0; r < z.rows; ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < z.cols; ++c) row[c] = (row[c] - means[c]) / stds[c];
  }
  return z;
}

Matrix ScalerParams::inverse_transform(const Matrix& z) const {
  if (z.cols != dims()) raise(ErrorKind::DimensionMismatch, "inverse_transform width");
  Matrix x = z;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) row[c] = row[c] * stds[c] + means[c];
  }
  return x;
}

namespace {

void require_finite(const Matrix& x) {
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    if (!std::isfinite(x.data[i])) {
      raise(ErrorKind::NonFiniteInput,
            "row " + std::to_string(i / std::max<std::size_t>(x.cols, 1)) + " col " +
                std::to_string(i % std::max<std::size_t>(x.cols, 1)));
    }
  }
}

std::pair<std::size_t, std::size_t> class_counts(const std::vector<int>& y) {
  std::size_t pos = 0, neg = 0;
  for (int v : y) {
    if (v > 0) ++pos;
    else ++neg;
  }
  return {neg, pos};
}

std::pair<double, double> class_caps(const std::vector<int>& y, double c, bool weighting) {
  if (!weighting) return {c, c};
  auto [neg, pos] = class_counts(y);
  const double n = static_cast<double>(y.size());
  return {c * n / (2.0 * static_cast<double>(pos)), c * n / (2.0 * static_cast<double>(neg))};
}

void check_labels(const std::vector<int>& y) {
  for (int v : y) {
    if (v != 1 && v != -1) raise(ErrorKind::InvalidSpec, "labels must be -1 or +1");
  }
  auto [neg, pos] = class_counts(y);
  if (neg == 0 || pos == 0) raise(ErrorKind::SingleClassTraining, "training labels contain one class only");
}

TrainedModel train_on_gram(const Matrix& x, const std::vector<double>& gram, const std::vector<int>& y, double c,
                           const SvmOptions& opts) {
  auto [c_pos, c_neg] = class_caps(y, c, opts.class_weighting);
  const auto sol = detail::solve_dual(gram, y, c_pos, c_neg, opts);

  TrainedModel m;
  m.c_value = c;
  m.class_weighting = opts.class_weighting;
  m.weights.assign(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (sol.alpha[i] == 0.0) continue;
    const double coef = sol.alpha[i] * y[i];
    auto xi = x.row(i);
    for (std::size_t d = 0; d < x.cols; ++d) m.weights[d] += coef * xi[d];
  }
  m.bias = -sol.rho;
  m.scaler = ScalerParams::identity(x.cols);
  auto& meta = m.training_meta;
  meta.iterations = sol.iterations;
  meta.converged = sol.converged;
  meta.objective_monotone = sol.monotone;
  meta.dual_objective = -sol.dual_objective;
  meta.primal_objective = primal_objective(m.weights, m.bias, x, y, c, opts.class_weighting);
  meta.duality_gap = meta.primal_objective - meta.dual_objective;
  if (!sol.converged) {
    spdlog::warn("svm: iteration cap reached at c={} (gap {:.3g})", c, meta.duality_gap);
  }
  return m;
}

}  // namespace

ScalerParams fit_scaler(const Matrix& x) {
  if (x.rows < 2) raise(ErrorKind::TooFewRows, "scaler needs at least 2 rows, got " + std::to_string(x.rows));
  require_finite(x);
  ScalerParams p;
  p.means.assign(x.cols, 0.0);
  p.stds.assign(x.cols, 0.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) p.means[c] += row[c];
  }
  for (auto& m : p.means) m /= n;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = row[c] - p.means[c];
      p.stds[c] += d * d;
    }
  }
  for (auto& s : p.stds) {
    s = std::sqrt(s / n);
    if (s < kStdFloor) s = 1.0;
  }
  return p;
}

double primal_objective(std::span<const double> w, double b, const Matrix& x, const std::vector<int>& y, double c,
                        bool class_weighting) {
  auto [c_pos, c_neg] = class_caps(y, c, class_weighting);
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto xi = x.row(i);
    double f = b;
    for (std::size_t d = 0; d < x.cols; ++d) f += w[d] * xi[d];
    loss += (y[i] > 0 ? c_pos : c_neg) * std::max(0.0, 1.0 - y[i] * f);
  }
  return 0.5 * reg + loss;
}

TrainedModel train_linear_svm(const Matrix& x, const std::vector<int>& y, double c, const SvmOptions& opts) {
  if (x.rows != y.size()) raise(ErrorKind::DimensionMismatch, "row count differs from label count");
  if (!(c > 0.0) || !std::isfinite(c)) raise(ErrorKind::InvalidSpec, "c must be positive");
  check_labels(y);
  require_finite(x);
  return train_on_gram(x, detail::linear_gram(x), y, c, opts);
}

TrainedModel fit_model(const Matrix& x_raw, const std::vector<int>& y, double c, const SvmOptions& opts) {
  ScalerParams scaler = fit_scaler(x_raw);
  TrainedModel m = train_linear_svm(scaler.transform(x_raw), y, c, opts);
  m.scaler = std::move(scaler);
  return m;
}

Prediction predict(const TrainedModel& model, const Matrix& x_raw) {
  if (x_raw.cols != model.weights.size()) {
    raise(ErrorKind::DimensionMismatch, "model has " + std::to_string(model.weights.size()) +
                                            " dims, input has " + std::to_string(x_raw.cols));
  }
  const Matrix z = model.scaler.transform(x_raw);
  Prediction p;
  p.labels.reserve(z.rows);
  p.decision.reserve(z.rows);
  for (std::size_t r = 0; r < z.rows; ++r) {
    auto row = z.row(r);
    double f = model.bias;
    for (std::size_t d = 0; d < z.cols; ++d) f += model.weights[d] * row[d];
    p.decision.push_back(f);
    p.labels.push_back(f >= 0.0 ? 1 : -1);
  }
  return p;
}

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) raise(ErrorKind::DimensionMismatch, "label vectors differ in length");
  std::size_t n_pos = 0, n_neg = 0, hit_pos = 0, hit_neg = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] > 0) {
      ++n_pos;
      if (y_pred[i] > 0) ++hit_pos;
    } else {
      ++n_neg;
      if (y_pred[i] <= 0) ++hit_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) raise(ErrorKind::MissingClass, "balanced accuracy needs both classes");
  return 0.5 * (static_cast<double>(hit_pos) / static_cast<double>(n_pos) +
                static_cast<double>(hit_neg) / static_cast<double>(n_neg));
}

void CGrid::validate() const {
  if (values.empty()) raise(ErrorKind::InvalidSpec, "empty C grid");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) raise(ErrorKind::InvalidSpec, "C values must be > 0");
    if (i > 0 && !(values[i] < values[i - 1])) raise(ErrorKind::InvalidSpec, "C grid must strictly decrease");
  }
}

namespace {

// Fisher-Yates with plain modulo so the fold layout is the same on every
// standard library.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::vector<std::size_t> stratified_group_folds(const std::vector<int>& y, const std::vector<std::string>& groups,
                                                std::size_t k, std::uint64_t seed) {
  // Groups are ordered by first appearance; a group's class is its first row's.
  std::map<std::string, std::size_t> index;
  std::vector<std::string> order;
  std::vector<int> group_label;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (index.emplace(groups[i], order.size()).second) {
      order.push_back(groups[i]);
      group_label.push_back(y[i]);
    }
  }
  std::sort(order.begin(), order.end());
  std::mt19937_64 rng(seed);
  std::map<std::string, std::size_t> fold_of;
  for (int cls : {-1, 1}) {
    std::vector<std::string> members;
    for (const auto& g : order) {
      if ((group_label[index[g]] > 0 ? 1 : -1) == cls) members.push_back(g);
    }
    seeded_shuffle(members, rng);
    for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = i % k;
  }
  std::vector<std::size_t> folds(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) folds[i] = fold_of[groups[i]];
  return folds;
}

SelectCResult select_c(const Matrix& x_raw, const std::vector<int>& y, const std::vector<std::string>& groups,
                       const CGrid& grid, const SelectCOptions& opts) {
  grid.validate();
  check_labels(y);
  if (groups.size() != y.size() || x_raw.rows != y.size()) {
    raise(ErrorKind::DimensionMismatch, "rows, labels and groups must align");
  }
  SelectCResult res;
  if (grid.values.size() == 1) {
    res.c = grid.values.front();
    return res;
  }

  std::map<std::string, int> group_class;
  for (std::size_t i = 0; i < y.size(); ++i) group_class.emplace(groups[i], y[i] > 0 ? 1 : -1);
  std::size_t g_pos = 0, g_neg = 0;
  for (const auto& [g, cls] : group_class) (cls > 0 ? g_pos : g_neg)++;
  auto [r_neg, r_pos] = class_counts(y);

  std::vector<std::size_t> folds;
  std::size_t k = std::min({opts.k, g_pos, g_neg});
  if (k >= 2) {
    res.grouped = true;
    folds = stratified_group_folds(y, groups, k, opts.seed);
  } else {
    k = std::min({opts.k, r_pos, r_neg});
    if (k < 2) {
      spdlog::warn("inner CV impossible (class counts {}/{}); using smallest c", r_neg, r_pos);
      res.c = grid.values.back();
      return res;
    }
    spdlog::warn("inner CV falls back to ungrouped rows: a class spans fewer than 2 subjects");
    std::vector<std::string> row_ids(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) row_ids[i] = std::to_string(i);
    folds = stratified_group_folds(y, row_ids, k, opts.seed);
  }
  if (k < opts.k) spdlog::warn("inner CV reduced from {} to {} folds", opts.k, k);
  res.folds = k;

  std::vector<double> score_sum(grid.values.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (folds[i] == f ? te : tr).push_back(i);
    std::vector<int> y_tr, y_te;
    for (auto i : tr) y_tr.push_back(y[i]);
    for (auto i : te) y_te.push_back(y[i]);
    auto [n0, n1] = class_counts(y_tr);
    auto [t0, t1] = class_counts(y_te);
    if (n0 == 0 || n1 == 0 || t0 == 0 || t1 == 0) continue;
    const Matrix x_tr_raw = x_raw.select_rows(tr);
    const ScalerParams scaler = fit_scaler(x_tr_raw);
    const Matrix x_tr = scaler.transform(x_tr_raw);
    const auto gram = detail::linear_gram(x_tr);
    const Matrix x_te = x_raw.select_rows(te);
    for (std::size_t ci = 0; ci < grid.values.size(); ++ci) {
      TrainedModel m = train_on_gram(x_tr, gram, y_tr, grid.values[ci], opts.svm);
      m.scaler = scaler;
      score_sum[ci] += balanced_accuracy(y_te, predict(m, x_te).labels);
    }
    ++used;
  }
  if (used == 0) {
    res.c = grid.values.back();
    return res;
  }
  res.mean_scores.resize(grid.values.size());
  for (std::size_t ci = 0; ci < grid.values.size(); ++ci) res.mean_scores[ci] = score_sum[ci] / used;
  // The grid decreases, so scanning from the back visits smaller c first.
  std::size_t best = grid.values.size() - 1;
  for (std::size_t ci = grid.values.size(); ci-- > 0;) {
    if (res.mean_scores[ci] > res.mean_scores[best] + 1e-12) best = ci;
  }
  res.c = grid.values[best];
  return res;
}

std::string model_to_json(const TrainedModel& model) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["c_value"] = model.c_value;
  j["class_weighting"] = model.class_weighting;
  j["seed"] = model.seed;
  j["bias"] = model.bias;
  j["weights"] = model.weights;
  j["scaler"] = {{"means", model.scaler.means}, {"stds", model.scaler.stds}};
  const auto& t = model.training_meta;
  j["training_meta"] = {{"fold_id", t.fold_id},
                        {"iterations", t.iterations},
                        {"converged", t.converged},
                        {"primal_objective", t.primal_objective},
                        {"dual_objective", t.dual_objective},
                        {"duality_gap", t.duality_gap}};
  return j.dump(2) + "\n";
}

TrainedModel model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != 1) raise(ErrorKind::SchemaViolation, "unknown model format_version");
    TrainedModel m;
    m.c_value = j.at("c_value").get<double>();
    m.class_weighting = j.at("class_weighting").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.bias = j.at("bias").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scaler.means = j.at("scaler").at("means").get<std::vector<double>>();
    m.scaler.stds = j.at("scaler").at("stds").get<std::vector<double>>();
    const auto& t = j.at("training_meta");
    m.training_meta.fold_id = t.at("fold_id").get<std::string>();
    m.training_meta.iterations = t.at("iterations").get<std::size_t>();
    m.training_meta.converged = t.at("converged").get<bool>();
    m.training_meta.primal_objective = t.at("primal_objective").get<double>();
    m.training_meta.dual_objective = t.at("dual_objective").get<double>();
    m.training_meta.duality_gap = t.at("duality_gap").get<double>();
    if (m.scaler.means.size() != m.weights.size() || m.scaler.stds.size() != m.weights.size()) {
      raise(ErrorKind::SchemaViolation, "scaler width differs from weight width");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::SchemaViolation, std::string("model file: ") + e.what());
  }
}

}  // namespace voxrisk

#include <algorithm>
#include <cmath>
#include <limits>

#include "svm_solver.hpp"

namespace voxrisk::detail {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

std::vector<double> linear_gram(const Matrix& x) {
  const std::size_t n = x.rows;
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = i; j < n; ++j) {
      auto xj = x.row(j);
      double s = 0.0;
      for (std::size_t d = 0; d < x.cols; ++d) s += xi[d] * xj[d];
      k[i * n + j] = s;
      k[j * n + i] = s;
    }
  }
  return k;
}

// Pairwise coordinate steps with second-order working-set selection. The
// equality constraint sum y_i a_i = 0 comes from the unregularized bias, which
// is why single-coordinate updates are not enough here.
DualSolution solve_dual(const std::vector<double>& gram, const std::vector<int>& y, double c_pos, double c_neg,
                        const SvmOptions& opts) {
  const std::size_t n = y.size();
  auto cap = [&](std::size_t t) { return y[t] > 0 ? c_pos : c_neg; };
  auto kq = [&](std::size_t a, std::size_t b) { return static_cast<double>(y[a] * y[b]) * gram[a * n + b]; };
  auto at_upper = [&](std::size_t t, double a) { return a >= cap(t); };
  auto at_lower = [](std::size_t, double a) { return a <= 0.0; };

  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = sol.alpha;
  auto objective = [&]() {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return 0.5 * f;
  };
  double last_obj = 0.0;

  const std::size_t max_iter = std::max<std::size_t>(1, opts.max_iter_factor * std::max<std::size_t>(n, 1));
  std::size_t iter = 0;
  while (iter < max_iter) {
    // i: maximal -y G over the "up" set.
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      const bool up = y[t] > 0 ? !at_upper(t, alpha[t]) : !at_lower(t, alpha[t]);
      if (up && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    double obj_min = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      const auto ii = static_cast<std::size_t>(i);
      for (std::size_t t = 0; t < n; ++t) {
        const bool low = y[t] > 0 ? !at_lower(t, alpha[t]) : !at_upper(t, alpha[t]);
        if (!low) continue;
        const double yg = y[t] * grad[t];
        gmax2 = std::max(gmax2, yg);
        const double diff = gmax + yg;
        if (diff > 0.0) {
          double quad = gram[ii * n + ii] + gram[t * n + t] - 2.0 * gram[ii * n + t];
          if (quad <= 0.0) quad = kTau;
          const double o = -(diff * diff) / quad;
          if (o <= obj_min) {
            obj_min = o;
            j = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < opts.tolerance) {
      sol.converged = true;
      break;
    }
    ++iter;

    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(j);
    const double ca = cap(a);
    const double cb = cap(b);
    const double old_a = alpha[a];
    const double old_b = alpha[b];
    if (y[a] != y[b]) {
      double quad = kq(a, a) + kq(b, b) + 2.0 * kq(a, b);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = alpha[a] - alpha[b];
      alpha[a] += delta;
      alpha[b] += delta;
      if (diff > 0.0) {
        if (alpha[b] < 0.0) {
          alpha[b] = 0.0;
          alpha[a] = diff;
        }
      } else if (alpha[a] < 0.0) {
        alpha[a] = 0.0;
        alpha[b] = -diff;
      }
      if (diff > ca - cb) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = ca - diff;
        }
      } else if (alpha[b] > cb) {
        alpha[b] = cb;
        alpha[a] = cb + diff;
      }
    } else {
      double quad = kq(a, a) + kq(b, b) - 2.0 * kq(a, b);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[a] - grad[b]) / quad;
      const double sum = alpha[a] + alpha[b];
      alpha[a] -= delta;
      alpha[b] += delta;
      if (sum > ca) {
        if (alpha[a] > ca) {
          alpha[a] = ca;
          alpha[b] = sum - ca;
        }
      } else if (alpha[b] < 0.0) {
        alpha[b] = 0.0;
        alpha[a] = sum;
      }
      if (sum > cb) {
        if (alpha[b] > cb) {
          alpha[b] = cb;
          alpha[a] = sum - cb;
        }
      } else if (alpha[a] < 0.0) {
        alpha[a] = 0.0;
        alpha[b] = sum;
      }
    }
    const double da = alpha[a] - old_a;
    const double db = alpha[b] - old_b;
    for (std::size_t t = 0; t < n; ++t) grad[t] += kq(t, a) * da + kq(t, b) * db;

    if (opts.check_monotone) {
      const double f = objective();
      if (f > last_obj + 1e-12 * (1.0 + std::abs(last_obj))) sol.monotone = false;
      last_obj = f;
    }
  }
  sol.iterations = iter;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t, alpha[t])) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (at_lower(t, alpha[t])) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      sum_free += yg;
      ++n_free;
    }
  }
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.dual_objective = objective();
  return sol;
}

}  // namespace voxrisk::detail

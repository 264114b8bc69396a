#pragma once

// Dual solver for the soft-margin SVM with bias on a precomputed kernel.

#include <vector>

#include "voxrisk/learner.hpp"

namespace voxrisk::detail {

struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;  ///< decision = sum_i alpha_i y_i K(x_i, x) - rho
  std::size_t iterations = 0;
  bool converged = false;
  double dual_objective = 0.0;  ///< 0.5 a'Qa - e'a (minimized)
  bool monotone = true;
};

/// gram is n x n row-major, y in {-1,+1}.
DualSolution solve_dual(const std::vector<double>& gram, const std::vector<int>& y, double c_pos, double c_neg,
                        const SvmOptions& opts);

/// X X^T of a row-major matrix.
std::vector<double> linear_gram(const Matrix& x);

}  // namespace voxrisk::detail

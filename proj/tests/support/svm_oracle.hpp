#pragma once

// Reference solvers written independently of the library: brute-force
// subgradient descent on the primal hinge objective, and a direct
// per-class recall count.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace vxtest {

struct OracleInstance {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> x;  // n x d
  std::vector<int> y;
  double c = 1.0;
};

inline double hinge_objective(const OracleInstance& p, const std::vector<double>& w, double b) {
  double f = 0.0;
  for (double v : w) f += 0.5 * v * v;
  for (std::size_t i = 0; i < p.n; ++i) {
    double s = b;
    for (std::size_t j = 0; j < p.d; ++j) s += w[j] * p.x[i * p.d + j];
    f += p.c * std::max(0.0, 1.0 - p.y[i] * s);
  }
  return f;
}

/// Best objective seen along subgradient iterates. Steps follow Polyak's
/// rule towards a target level below the best value found so far; the gap
/// to the target shrinks round by round.
inline double subgradient_oracle(const OracleInstance& p, std::size_t iters = 20000) {
  std::vector<double> w(p.d, 0.0), best_w = w, g(p.d);
  double b = 0.0, best_b = 0.0;
  double best = hinge_objective(p, w, b);
  for (int round = 0; round < 14; ++round) {
    const double delta = std::max(best, 1e-12) * std::pow(0.3, round + 1);
    w = best_w;
    b = best_b;
    for (std::size_t t = 0; t < iters; ++t) {
      for (std::size_t j = 0; j < p.d; ++j) g[j] = w[j];
      double gb = 0.0;
      for (std::size_t i = 0; i < p.n; ++i) {
        double s = b;
        for (std::size_t j = 0; j < p.d; ++j) s += w[j] * p.x[i * p.d + j];
        if (p.y[i] * s < 1.0) {
          for (std::size_t j = 0; j < p.d; ++j) g[j] -= p.c * p.y[i] * p.x[i * p.d + j];
          gb -= p.c * p.y[i];
        }
      }
      double gg = gb * gb;
      for (double v : g) gg += v * v;
      if (gg == 0.0) break;
      const double f = hinge_objective(p, w, b);
      const double eta = (f - (best - delta)) / gg;
      for (std::size_t j = 0; j < p.d; ++j) w[j] -= eta * g[j];
      b -= eta * gb;
      const double fn = hinge_objective(p, w, b);
      if (fn < best) {
        best = fn;
        best_w = w;
        best_b = b;
      }
    }
  }
  return best;
}

/// Seeded Gaussian instance with both classes present and a weak shift.
inline OracleInstance random_instance(std::size_t n, std::size_t d, double c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  OracleInstance p;
  p.n = n;
  p.d = d;
  p.c = c;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    p.y.push_back(label);
    for (std::size_t j = 0; j < d; ++j) p.x.push_back(g(rng) + 0.7 * label * (j == 0));
  }
  return p;
}

/// Mean of per-class recalls, counted directly.
inline double recall_oracle(const std::vector<int>& t, const std::vector<int>& p) {
  double hit_pos = 0, n_pos = 0, hit_neg = 0, n_neg = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > 0) {
      n_pos += 1;
      hit_pos += p[i] > 0;
    } else {
      n_neg += 1;
      hit_neg += p[i] <= 0;
    }
  }
  return (hit_pos / n_pos + hit_neg / n_neg) / 2.0;
}

}  // namespace vxtest

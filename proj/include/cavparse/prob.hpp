#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cavparse/error.hpp"

namespace cavparse {

// Length-M class distribution: non-negative, sums to 1.
using ProbVector = std::vector<double>;

inline constexpr double kProbTolerance = 1e-6;

inline ProbVector uniform_prob(std::size_t m) {
  return ProbVector(m, 1.0 / static_cast<double>(m));
}

// Normalizes in place; a vector with non-positive total becomes uniform.
inline void normalize_l1(std::span<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) {
    for (double& x : v) x = 1.0 / static_cast<double>(v.size());
    return;
  }
  for (double& x : v) x /= total;
}

// Argmax with ties resolved to the lowest index.
inline int most_probable_class(std::span<const double> p) {
  if (p.empty()) throw InvalidInput("most_probable_class: empty vector");
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = static_cast<int>(i);
  }
  return best;
}

inline bool is_valid_prob(std::span<const double> p, double tol = kProbTolerance) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    total += x;
  }
  return std::abs(total - 1.0) <= tol;
}

}  // namespace cavparse

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "labelnoise/errors.hpp"
#include "labelnoise/rng.hpp"

namespace labelnoise {

/// A probability vector over K classes. Index 0 is class 1.
using ProbVec = std::vector<double>;

/// Tolerance for probability vectors coming from outside (files, estimators).
inline constexpr double kInputSimplexTol = 1e-9;
/// Tolerance for vectors and matrices constructed from exact formulas.
inline constexpr double kConstructedSimplexTol = 1e-12;

inline bool on_simplex(std::span<const double> p, double tol = kInputSimplexTol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -tol) || !(v <= 1.0 + tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline void require_simplex(std::span<const double> p, const char* what,
                            double tol = kInputSimplexTol) {
  if (!on_simplex(p, tol)) {
    throw ValidationError(std::string(what) + " is not a probability vector");
  }
}

/// Lowest index attaining the maximum.
inline std::size_t argmax(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

/// True if at least two entries attain the maximum within `tol`.
inline bool has_tied_max(std::span<const double> p, double tol = 0.0) {
  const double top = p[argmax(p)];
  std::size_t count = 0;
  for (double v : p) {
    if (top - v <= tol) ++count;
  }
  return count > 1;
}

/// Sets negative entries to zero and rescales to unit sum. An all-zero
/// result falls back to the uniform vector.
inline ProbVec clip_renormalize(ProbVec v) {
  double sum = 0.0;
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
    sum += x;
  }
  if (!(sum > 0.0)) {
    for (double& x : v) x = 1.0 / static_cast<double>(v.size());
    return v;
  }
  for (double& x : v) x /= sum;
  return v;
}

inline ProbVec uniform_vector(std::size_t k) {
  return ProbVec(k, 1.0 / static_cast<double>(k));
}

/// Draw from the flat Dirichlet distribution on the K-simplex.
inline ProbVec flat_dirichlet(std::size_t k, Rng& rng) {
  ProbVec v(k);
  double sum = 0.0;
  for (double& x : v) {
    x = rng.exponential();
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

/// Inverse-CDF draw from a probability vector, scanning categories in index
/// order. Rounding slack past the last positive entry maps to that entry.
inline std::size_t sample_categorical(std::span<const double> p, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    cumulative += p[j];
    last_positive = j;
    if (u < cumulative) return j;
  }
  return last_positive;
}

}  // namespace labelnoise

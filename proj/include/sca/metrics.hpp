#pragma once

// Permutation-matched recovery metrics. Both MSE and SAD separate over
// column pairs, so the minimum over permutations is a linear assignment.

#include <sca/core.hpp>
#include <sca/numeric.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace sca {

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns assignment[i] = column matched to row i.
inline std::vector<Index> linear_assignment(const Matrix& cost) {
  detail::require(cost.rows() == cost.cols(), "linear_assignment: cost must be square");
  const Index n = cost.rows();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j)
    if (match[static_cast<std::size_t>(j)] != 0) assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

struct MatchResult {
  double score = 0.0;
  std::vector<Index> permutation;  // permutation[i]: column of A_hat matched to column i of A0
  Vector per_column;
};

/// min over permutations of (1/MN) ||A0 - A_hat P||_F^2. per_column holds
/// the per-column mean squared error, and score is their mean.
inline MatchResult mse(const Matrix& a0, const Matrix& a_hat) {
  detail::require(a0.rows() == a_hat.rows() && a0.cols() == a_hat.cols(), "mse: shape mismatch");
  const Index n = a0.cols();
  Matrix cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = (a0.col(i) - a_hat.col(j)).squaredNorm();
  MatchResult out;
  out.permutation = linear_assignment(cost);
  out.per_column.resize(n);
  for (Index i = 0; i < n; ++i)
    out.per_column[i] = cost(i, out.permutation[static_cast<std::size_t>(i)]) / static_cast<double>(a0.rows());
  out.score = out.per_column.mean();
  return out;
}

/// Spectral angle between two vectors in radians.
inline double spectral_angle(const Vector& a, const Vector& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Permutation-matched spectral angle distance; per_column in radians,
/// score is the mean angle.
inline MatchResult sad(const Matrix& a0, const Matrix& a_hat) {
  detail::require(a0.rows() == a_hat.rows() && a0.cols() == a_hat.cols(), "sad: shape mismatch");
  const Index n = a0.cols();
  for (Index j = 0; j < n; ++j) {
    if (!(a0.col(j).norm() > 0.0)) throw std::invalid_argument("sad: A0 column " + std::to_string(j) + " is zero");
    if (!(a_hat.col(j).norm() > 0.0)) throw std::invalid_argument("sad: A_hat column " + std::to_string(j) + " is zero");
  }
  Matrix cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = spectral_angle(a0.col(i), a_hat.col(j));
  MatchResult out;
  out.permutation = linear_assignment(cost);
  out.per_column.resize(n);
  for (Index i = 0; i < n; ++i) out.per_column[i] = cost(i, out.permutation[static_cast<std::size_t>(i)]);
  out.score = out.per_column.mean();
  return out;
}

inline double radians_to_degrees(double r) { return r * 180.0 / std::numbers::pi; }

/// 10 log10( (1/T) sum ||x_t||^2 / (M sigma2) ); +inf when sigma2 = 0.
inline double snr_db(const Matrix& a0s, double sigma2) {
  detail::require(sigma2 >= 0.0, "snr_db: sigma2 must be non-negative");
  if (sigma2 == 0.0) return kInf;
  const double power = a0s.squaredNorm() / static_cast<double>(a0s.cols());
  return 10.0 * std::log10(power / (static_cast<double>(a0s.rows()) * sigma2));
}

}  // namespace sca

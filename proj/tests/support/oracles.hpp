#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library routine it is used to check.

#include <sca/core.hpp>
#include <sca/rng.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

using sca::Index;
using sca::Matrix;
using sca::Vector;

inline double gauss_density(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Composite 8-point Gauss-Legendre on [a, b] with `panels` panels.
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels = 400) {
  static const double xs[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double ws[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * h, half = 0.5 * h;
    for (int j = 0; j < 4; ++j) s += ws[j] * (f(mid - half * xs[j]) + f(mid + half * xs[j]));
  }
  return s * 0.5 * h;
}

/// Gaussian lower tail by quadrature of the density; for x > 0 via the
/// upper tail so that both sides keep relative accuracy.
inline double gauss_cdf(double x) {
  if (x <= 0.0) return integrate(gauss_density, x - 40.0, x, 2000);
  return 1.0 - integrate(gauss_density, x, x + 40.0, 2000);
}

inline double gauss_upper_tail(double x) { return integrate(gauss_density, x, x + 40.0, 2000); }

/// Asymptotic expansion of log Phi(x) for x << 0.
inline double log_gauss_cdf_asymptotic(double x) {
  const double z2 = 1.0 / (x * x);
  const double series = 1.0 - z2 + 3.0 * z2 * z2 - 15.0 * z2 * z2 * z2 + 105.0 * z2 * z2 * z2 * z2;
  return -0.5 * x * x - std::log(-x * std::sqrt(2.0 * std::numbers::pi)) + std::log(series);
}

/// argmin of f over [lo, hi]: dense grid, then golden-section refinement.
inline double minimize_1d(const std::function<double(double)>& f, double lo, double hi, int grid = 2001) {
  double best = lo, fbest = f(lo);
  const double h = (hi - lo) / (grid - 1);
  for (int k = 1; k < grid; ++k) {
    const double x = lo + k * h;
    const double fx = f(x);
    if (fx < fbest) fbest = fx, best = x;
  }
  double a = std::max(lo, best - h), b = std::min(hi, best + h);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Cofactor expansion along the first row.
inline double cofactor_det(const Matrix& a) {
  const Index n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double det = 0.0;
  for (Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r)
      for (Index c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = a(r, c);
    det += ((j % 2) ? -1.0 : 1.0) * a(0, j) * cofactor_det(minor);
  }
  return det;
}

/// Central differences of a scalar matrix function.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) {
      Matrix xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      g(i, j) = (f(xp) - f(xm)) / (2.0 * h);
    }
  return g;
}

inline Vector fd_gradient_vec(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

inline Matrix uniform_matrix(Index r, Index c, sca::Rng& rng, double lo = 0.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Matrix normal_matrix(Index r, Index c, sca::Rng& rng) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

/// Random matrix with singular values in [1, 2]: I plus a small perturbation.
inline Matrix well_conditioned(Index n, sca::Rng& rng) {
  Matrix m = Matrix::Identity(n, n) * 1.5;
  m += 0.4 / std::sqrt(static_cast<double>(n)) * normal_matrix(n, n, rng);
  return m;
}

/// min over permutations of sum_i cost(i, perm[i]).
inline double exhaustive_assignment(const Matrix& cost) {
  std::vector<Index> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = sca::kInf;
  do {
    double s = 0.0;
    for (Index i = 0; i < cost.rows(); ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Least squares min ||A w - y|| over the unit simplex by projected gradient;
/// returns the residual norm.
inline double simplex_regression_residual(const Matrix& a, const Vector& y, int iters = 200000) {
  const Index n = a.cols();
  Vector w = Vector::Constant(n, 1.0 / n);
  const double lip = std::max(1e-12, (a.transpose() * a).eigenvalues().real().maxCoeff());
  auto project = [n](Vector v) {
    Vector u = v;
    std::sort(u.data(), u.data() + n, std::greater<double>());
    double cum = 0.0, theta = 0.0;
    for (Index k = 0; k < n; ++k) {
      cum += u[k];
      const double t = (cum - 1.0) / (k + 1);
      if (u[k] - t > 0.0) theta = t;
    }
    return Vector((v.array() - theta).max(0.0));
  };
  for (int it = 0; it < iters; ++it) w = project(w - a.transpose() * (a * w - y) / lip);
  return (a * w - y).norm();
}

}  // namespace oracle

#pragma once

// Dense linear algebra for small-to-moderate matrices: symmetric
// eigendecomposition (cyclic Jacobi), pseudo-inverse application,
// spectral condition number and SPD solves.

#include <sca/core.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sca {

/// Eigenpairs in descending eigenvalue order; columns of `vectors` are
/// orthonormal.
struct EigPair {
  Vector values;
  Matrix vectors;
};

namespace detail {

inline void check_symmetric(const Matrix& r, const char* who) {
  require(r.rows() == r.cols(), std::string(who) + ": matrix must be square");
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  const double asym = (r - r.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * scale, std::string(who) + ": matrix is not symmetric");
}

/// Cyclic Jacobi sweeps until the off-diagonal mass is negligible.
inline EigPair jacobi_eig(const Matrix& r) {
  const Index n = r.rows();
  Matrix a = 0.5 * (r + r.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double total = a.squaredNorm();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-32 * total || off == 0.0) break;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigPair out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    Vector col = v.col(src);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

}  // namespace detail

/// Top-k eigenpairs of a symmetric matrix. Each eigenvector is signed so
/// that its largest-magnitude entry is positive.
inline EigPair sym_eig_top(const Matrix& r, Index k) {
  detail::check_symmetric(r, "sym_eig_top");
  detail::require(k >= 1 && k <= r.rows(), "sym_eig_top: k out of range");
  EigPair full = detail::jacobi_eig(r);
  return {full.values.head(k), full.vectors.leftCols(k)};
}

/// Full spectrum, descending.
inline EigPair sym_eig(const Matrix& r) { return sym_eig_top(r, r.rows()); }

/// (Y^T)^dagger 1 for a full-row-rank N x T matrix Y, i.e. the least-squares
/// solution of Y^T x = 1.
inline Vector pinv_apply_ones(const Matrix& y) {
  detail::require(y.cols() >= y.rows(), "pinv_apply_ones: need T >= N");
  const Matrix yt = y.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(yt);
  qr.setThreshold(static_cast<double>(std::max(y.rows(), y.cols())) * std::numeric_limits<double>::epsilon());
  if (qr.rank() < y.rows()) throw NumericalError("pinv_apply_ones: Y is rank deficient");
  return qr.solve(Vector::Ones(y.cols()));
}

/// Ratio of the extreme singular values; +inf when the smallest vanishes.
inline double cond_2(const Matrix& a) {
  detail::require(a.size() > 0 && a.cwiseAbs().maxCoeff() > 0.0, "cond_2: matrix must be nonzero");
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (!(smin > 0.0)) return kInf;
  const double c = s[0] / smin;
  return std::isfinite(c) ? c : kInf;
}

/// Cholesky factorization of an SPD matrix, reusable for many right-hand sides.
class SpdSolver {
 public:
  explicit SpdSolver(const Matrix& h) : llt_(h) {
    detail::require(h.rows() == h.cols(), "SpdSolver: matrix must be square");
    if (llt_.info() != Eigen::Success) throw NumericalError("SpdSolver: matrix is not positive definite");
  }

  /// X with H X = G.
  Matrix solve(const Matrix& g) const { return llt_.solve(g); }

  /// X with X H = G (H symmetric).
  Matrix solve_right(const Matrix& g) const { return llt_.solve(g.transpose()).transpose(); }

 private:
  Eigen::LLT<Matrix> llt_;
};

inline Matrix solve_spd(const Matrix& h, const Matrix& g) { return SpdSolver(h).solve(g); }

}  // namespace sca

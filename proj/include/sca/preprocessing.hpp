#pragma once

// PCA dimensionality reduction on the (uncentered) sample correlation
// matrix, noise-floor variance estimate, anchor vector estimation and
// lifting of reduced-space estimates.

#include <sca/core.hpp>
#include <sca/linalg.hpp>

#include <string>

namespace sca {

struct DrModel {
  Matrix U;  // M x N, orthonormal columns
  bool mean_used = false;
  Index original_dim = 0;

  Matrix reduce(const Matrix& y) const { return U.transpose() * y; }
};

enum class AnchorMethod { pinv, second_order };

inline const char* to_string(AnchorMethod m) { return m == AnchorMethod::pinv ? "pinv" : "second-order"; }

struct AnchorEstimate {
  Vector p;
  AnchorMethod method = AnchorMethod::pinv;
  double sigma2_used = 0.0;
};

/// (1/T) Y Y^T.
inline Matrix sample_correlation(const Matrix& y) {
  Matrix r = y * y.transpose() / static_cast<double>(y.cols());
  return 0.5 * (r + r.transpose());
}

inline DrModel fit_pca(const Matrix& y, Index n) {
  detail::require(n >= 1 && n <= y.rows(), "fit_pca: model order out of range");
  detail::require(y.cols() >= n, "fit_pca: need T >= N");
  return DrModel{sym_eig_top(sample_correlation(y), n).vectors, false, y.rows()};
}

/// The (n+1)-th largest eigenvalue of the sample correlation, clamped at 0.
inline double estimate_sigma2(const Matrix& y, Index n) {
  if (y.rows() <= n)
    throw std::invalid_argument("estimate_sigma2: cannot estimate noise at M = N; supply sigma explicitly");
  detail::require(n >= 1, "estimate_sigma2: model order must be positive");
  const EigPair eig = sym_eig_top(sample_correlation(y), n + 1);
  return std::max(0.0, eig.values[n]);
}

/// Eigenvalues of R - sigma2 I below this fraction of the largest are an error.
inline constexpr double kAnchorSingularRatio = 1e-12;
/// Eigenvalues between the error threshold and this fraction are floored here.
inline constexpr double kAnchorFloorRatio = 1e-10;

inline AnchorEstimate estimate_anchor(const Matrix& y, double sigma2, AnchorMethod method) {
  detail::require(sigma2 >= 0.0, "estimate_anchor: sigma2 must be non-negative");
  AnchorEstimate out;
  out.method = method;
  out.sigma2_used = sigma2;
  if (method == AnchorMethod::pinv) {
    out.p = pinv_apply_ones(y);
    return out;
  }
  const Index n = y.rows();
  const Matrix shifted = sample_correlation(y) - sigma2 * Matrix::Identity(n, n);
  const Vector mean = y.rowwise().mean();
  const EigPair eig = sym_eig(shifted);
  const double top = eig.values[0];
  if (!(top > 0.0) || eig.values[n - 1] < kAnchorSingularRatio * top)
    throw NumericalError("estimate_anchor: R - sigma2 I is near-singular");
  Vector inv(n);
  for (Index i = 0; i < n; ++i) inv[i] = 1.0 / std::max(eig.values[i], kAnchorFloorRatio * top);
  out.p = eig.vectors * inv.asDiagonal() * (eig.vectors.transpose() * mean);
  return out;
}

/// U * A_reduced.
inline Matrix lift_estimate(const DrModel& model, const Matrix& a_reduced) {
  detail::require(model.U.cols() == a_reduced.rows(), "lift_estimate: shape mismatch");
  return model.U * a_reduced;
}

}  // namespace sca

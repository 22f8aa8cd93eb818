#pragma once

// Scalar and small-matrix primitives shared by the solvers: Gaussian CDF
// machinery, proximal operators, projections, log-determinant and the
// FISTA extrapolation sequence. Everything here is a pure function.

#include <sca/core.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace sca {

// ---------------------------------------------------------------------------
// Gaussian CDF
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;
// Below this point log Phi switches to the continued-fraction branch.
inline constexpr double kLowerTailSwitch = -8.0;

/// Mills ratio Q(z)/phi(z) for z >= 8 by backward evaluation of the
/// Laplace continued fraction 1/(z + 1/(z + 2/(z + 3/(z + ...)))).
inline double mills_ratio_upper(double z) {
  double t = z;
  for (int k = 60; k >= 1; --k) t = z + k / t;
  return 1.0 / t;
}

}  // namespace detail

/// Standard Gaussian CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * detail::kInvSqrt2); }

/// log of the standard Gaussian CDF, finite for any finite x.
inline double log_norm_cdf(double x) {
  if (x < detail::kLowerTailSwitch) {
    const double z = -x;
    return -0.5 * x * x - detail::kHalfLog2Pi + std::log(detail::mills_ratio_upper(z));
  }
  if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * detail::kInvSqrt2));
  return std::log(norm_cdf(x));
}

/// phi(x) / Phi(x), the inverse Mills ratio. Equals -d/dx log Phi(x) negated.
inline double norm_pdf_over_cdf(double x) {
  if (x < detail::kLowerTailSwitch) return 1.0 / detail::mills_ratio_upper(-x);
  return detail::kInvSqrt2Pi * std::exp(-0.5 * x * x) / norm_cdf(x);
}

/// Standard Gaussian density.
inline double norm_pdf(double x) { return detail::kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// ---------------------------------------------------------------------------
// Hinge penalties
// ---------------------------------------------------------------------------

inline double hinge(double x) { return x < 0.0 ? -x : 0.0; }

inline double hinge_sq(double x) {
  const double h = hinge(x);
  return h * h;
}

/// d/dx hinge(x)^2 = -2 hinge(x); continuous at 0.
inline double hinge_sq_deriv(double x) { return -2.0 * hinge(x); }

// ---------------------------------------------------------------------------
// Proximal operators
// ---------------------------------------------------------------------------

/// argmin_z 0.5 (z - x)^2 + c hinge(z).
inline double prox_hinge(double x, double c) {
  detail::require(c > 0.0, "prox_hinge: c must be positive");
  if (x >= 0.0) return x;
  if (x >= -c) return 0.0;
  return x + c;
}

/// Elementwise prox of -(1/mu) sum log(z): (d + sqrt(d^2 + 4/mu)) / 2.
/// The branch for negative d avoids cancellation.
inline double prox_neg_log(double d, double mu) {
  detail::require(mu > 0.0, "prox_neg_log: mu must be positive");
  const double root = std::sqrt(d * d + 4.0 / mu);
  if (d >= 0.0) return 0.5 * (d + root);
  return (2.0 / mu) / (root - d);
}

inline Vector prox_neg_log(const Vector& d, double mu) {
  detail::require(mu > 0.0, "prox_neg_log: mu must be positive");
  Vector out(d.size());
  for (Index i = 0; i < d.size(); ++i) out[i] = prox_neg_log(d[i], mu);
  return out;
}

// ---------------------------------------------------------------------------
// MM majorant of -log Phi
// ---------------------------------------------------------------------------

/// Tangent point shift of the quadratic majorant
///   -log Phi(x) <= 0.5 (x + w(xt))^2 + r(xt),
/// w(xt) = -xt - phi(xt)/Phi(xt).
inline double mm_weight(double x_tilde) { return -x_tilde - norm_pdf_over_cdf(x_tilde); }

/// The additive constant r(xt) recovered from equality at x = xt.
inline double mm_offset(double x_tilde) {
  const double lam = norm_pdf_over_cdf(x_tilde);
  return -log_norm_cdf(x_tilde) - 0.5 * lam * lam;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting; log |det|
// ---------------------------------------------------------------------------

struct LogAbsDet {
  int sign = 0;
  double logdet = kInf;
  bool singular = true;
};

/// Dense LU with row pivoting. A pivot whose magnitude falls below
/// n * eps * max|A| marks the matrix singular.
class LuFactor {
 public:
  explicit LuFactor(const Matrix& a) : lu_(a), perm_(a.rows()) {
    detail::require(a.rows() == a.cols(), "LuFactor: matrix must be square");
    const Index n = a.rows();
    for (Index i = 0; i < n; ++i) perm_[i] = i;
    const double scale = n > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
    const double tiny = static_cast<double>(std::max<Index>(n, 1)) *
                        std::numeric_limits<double>::epsilon() * scale;
    singular_ = !(scale > 0.0) || !std::isfinite(scale);
    sign_ = 1;
    for (Index k = 0; k < n && !singular_; ++k) {
      Index piv = k;
      double best = std::abs(lu_(k, k));
      for (Index i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          piv = i;
        }
      }
      if (!(best > tiny)) {
        singular_ = true;
        break;
      }
      if (piv != k) {
        lu_.row(k).swap(lu_.row(piv));
        std::swap(perm_[k], perm_[piv]);
        sign_ = -sign_;
      }
      const double pivot = lu_(k, k);
      for (Index i = k + 1; i < n; ++i) {
        const double l = lu_(i, k) / pivot;
        lu_(i, k) = l;
        if (l != 0.0) lu_.row(i).tail(n - k - 1) -= l * lu_.row(k).tail(n - k - 1);
      }
    }
    if (singular_) sign_ = 0;
  }

  bool singular() const { return singular_; }

  LogAbsDet log_abs_det() const {
    if (singular_) return {};
    LogAbsDet out;
    out.singular = false;
    out.sign = sign_;
    out.logdet = 0.0;
    for (Index k = 0; k < lu_.rows(); ++k) {
      const double u = lu_(k, k);
      if (u < 0.0) out.sign = -out.sign;
      out.logdet += std::log(std::abs(u));
    }
    return out;
  }

  /// Solves A X = B.
  Matrix solve(const Matrix& b) const {
    if (singular_) throw NumericalError("LuFactor::solve: singular matrix");
    const Index n = lu_.rows();
    Matrix x(n, b.cols());
    for (Index i = 0; i < n; ++i) x.row(i) = b.row(perm_[i]);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < i; ++j) x.row(i) -= lu_(i, j) * x.row(j);
    for (Index i = n - 1; i >= 0; --i) {
      for (Index j = i + 1; j < n; ++j) x.row(i) -= lu_(i, j) * x.row(j);
      x.row(i) /= lu_(i, i);
    }
    return x;
  }

  Matrix inverse() const { return solve(Matrix::Identity(lu_.rows(), lu_.rows())); }

 private:
  Matrix lu_;
  std::vector<Index> perm_;
  int sign_ = 1;
  bool singular_ = false;
};

inline LogAbsDet log_abs_det(const Matrix& b) { return LuFactor(b).log_abs_det(); }

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// Euclidean projection onto {X : X^T 1 = p}: X = B - (1/N) 1 (1^T B - p^T).
inline Matrix project_affine_colsum(const Matrix& b, const Vector& p) {
  detail::require(b.cols() == p.size(), "project_affine_colsum: p size mismatch");
  const Eigen::RowVectorXd excess = (b.colwise().sum() - p.transpose()) / static_cast<double>(b.rows());
  Matrix out = b;
  out.rowwise() -= excess;
  return out;
}

/// Normalizes each row to unit norm. A zero row becomes `tie_break`.
inline Matrix project_rows_unit_sphere(const Matrix& c, const Vector& tie_break) {
  detail::require(tie_break.size() == c.cols(), "project_rows_unit_sphere: tie_break size mismatch");
  Matrix out = c;
  for (Index i = 0; i < c.rows(); ++i) {
    const double norm = c.row(i).norm();
    if (norm > 0.0)
      out.row(i) /= norm;
    else
      out.row(i) = tie_break.transpose();
  }
  return out;
}

inline Matrix project_rows_unit_sphere(const Matrix& c) {
  return project_rows_unit_sphere(c, Vector::Unit(c.cols(), 0));
}

// ---------------------------------------------------------------------------
// FISTA extrapolation
// ---------------------------------------------------------------------------

/// t_0 = 1, t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2, alpha_k = (t_{k-1} - 1) / t_k.
/// `t_prev` is t_{k-1} for the next alpha to be produced; `t_cur` the last t.
struct FistaSchedule {
  double t_prev = 1.0;
  double t_cur = 1.0;
  long k = 1;
};

struct FistaStep {
  double alpha;
  FistaSchedule next;
};

inline FistaStep fista_alpha(const FistaSchedule& s) {
  const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.t_prev * s.t_prev));
  return {(s.t_prev - 1.0) / t_next, FistaSchedule{t_next, t_next, s.k + 1}};
}

/// Relative change ||new - old||_F / ||old||_F.
inline double rel_change(const Matrix& x_new, const Matrix& x_old) {
  detail::require(x_new.rows() == x_old.rows() && x_new.cols() == x_old.cols(),
                  "rel_change: shape mismatch");
  const double denom = x_old.norm();
  detail::require(denom > 0.0, "rel_change: reference is zero");
  return (x_new - x_old).norm() / denom;
}

}  // namespace sca

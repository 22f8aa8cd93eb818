#pragma once

// H2-SISAL: min -log|det B| + lambda sum hinge(b_i^T y_t)^2 s.t. B^T 1 = p.
// The objective is smooth on its domain, so the solver is an extrapolated
// projected gradient method with backtracking on the curvature mu_k; the
// proximal step is the closed-form projection onto {B : B^T 1 = p}.

#include <sca/core.hpp>
#include <sca/numeric.hpp>
#include <sca/report.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>

namespace sca {

/// Which point the sufficient-decrease test compares against.
enum class DecreaseAnchor { extrapolated, current };

inline const char* to_string(DecreaseAnchor a) { return a == DecreaseAnchor::extrapolated ? "extrapolated" : "current"; }

struct ProjectedGradientConfig {
  double beta = 0.5;
  double nu = 1.0;
  double c = 2.0;
  double rc_tol = 1e-6;
  long max_iter = 10000;
  bool extrapolate = true;
  DecreaseAnchor anchor = DecreaseAnchor::extrapolated;
  int max_doublings = 60;
  bool keep_iterates = false;
};

inline void validate(const ProjectedGradientConfig& cfg) {
  detail::require(cfg.beta > 0.0 && cfg.beta < 1.0, "beta must be in (0,1)");
  detail::require(cfg.nu > 0.0, "nu must be positive");
  detail::require(cfg.c > 1.0, "c must exceed 1");
  detail::require(cfg.max_iter >= 0, "max_iter must be non-negative");
}

inline nlohmann::json to_json(const ProjectedGradientConfig& c) {
  return {{"beta", c.beta},         {"nu", c.nu},
          {"c", c.c},               {"rc_tol", c.rc_tol},
          {"max_iter", c.max_iter}, {"extrapolate", c.extrapolate},
          {"anchor", to_string(c.anchor)}, {"max_doublings", c.max_doublings}};
}

/// A smooth objective on invertible matrices. `value` returns +inf outside
/// the domain; `value_and_grad` fills the gradient when the value is finite.
template <class F>
concept SmoothObjective = requires(const F& f, const Matrix& b, Matrix& g) {
  { f.value(b) } -> std::convertible_to<double>;
  { f.value_and_grad(b, g) } -> std::convertible_to<double>;
};

/// Extrapolated projected gradient onto {B : B^T 1 = p} with backtracking:
/// mu starts at max(nu, mu_prev / c) and grows by c until
///   f(B+) <= f(anchor) + beta * (<grad, B+ - B_ex> + mu/2 ||B+ - B_ex||^2).
/// A singular extrapolated point forces alpha = 0 for that iteration.
template <SmoothObjective F>
Matrix projected_gradient_solve(const F& f0, const Vector& p, const Matrix& b0, const ProjectedGradientConfig& cfg,
                                RunReport& rep) {
  validate(cfg);
  Stopwatch clock;
  Matrix b = project_affine_colsum(b0, p);
  double f_b = f0.value(b);
  if (!std::isfinite(f_b)) throw std::invalid_argument("projected_gradient_solve: projected start is singular");

  Matrix b_prev = b;
  FistaSchedule schedule;
  double mu_prev = cfg.nu;
  Matrix grad(b.rows(), b.cols()), cand, b_ex;
  rep.objective.push_back(f_b);
  if (cfg.keep_iterates) rep.iterates.push_back(b);
  rep.termination = termination::max_iter;

  for (long k = 0; k < cfg.max_iter; ++k) {
    double alpha = 0.0;
    if (cfg.extrapolate) {
      const FistaStep step = fista_alpha(schedule);
      alpha = step.alpha;
      schedule = step.next;
    }
    b_ex = b + alpha * (b - b_prev);
    double f_ex = f0.value_and_grad(b_ex, grad);
    if (!std::isfinite(f_ex)) {
      ++rep.restarts;
      b_ex = b;
      f_ex = f0.value_and_grad(b_ex, grad);
    }
    const double f_anchor = cfg.anchor == DecreaseAnchor::extrapolated ? f_ex : f_b;

    double mu = std::max(cfg.nu, mu_prev / cfg.c);
    bool accepted = false;
    double f_cand = kInf, h = 0.0;
    for (int j = 0; j <= cfg.max_doublings; ++j) {
      cand = project_affine_colsum(b_ex - grad / mu, p);
      f_cand = f0.value(cand);
      const Matrix step = cand - b_ex;
      h = (grad.array() * step.array()).sum() + 0.5 * mu * step.squaredNorm();
      if (std::isfinite(f_cand) && f_cand <= f_anchor + cfg.beta * h) {
        accepted = true;
        break;
      }
      mu *= cfg.c;
    }
    if (!accepted) {
      rep.termination = termination::line_search_stall;
      break;
    }
    const double rc = rel_change(cand, b);
    b_prev = std::move(b);
    b = std::move(cand);
    f_b = f_cand;
    mu_prev = mu;
    ++rep.iterations;
    rep.objective.push_back(f_b);
    rep.mu.push_back(mu);
    rep.alpha.push_back(alpha);
    rep.model_decrease.push_back(h);
    if (cfg.keep_iterates) rep.iterates.push_back(b);
    if (rc <= cfg.rc_tol) {
      rep.termination = termination::rel_change;
      break;
    }
  }
  rep.wall_ms = clock.elapsed_ms();
  return b;
}

/// f0(B) = -log|det B| + lambda sum hinge(B Y)^2 and its gradient
/// -B^{-T} - 2 lambda hinge(B Y) Y^T.
class H2Objective {
 public:
  H2Objective(const Matrix& y, double lambda) : y_(y), lambda_(lambda) {}

  double value(const Matrix& b) const {
    const LogAbsDet ld = log_abs_det(b);
    if (ld.singular) return kInf;
    const Matrix x = b * y_;
    double s = 0.0;
    for (Index k = 0; k < x.size(); ++k) s += hinge_sq(x.data()[k]);
    return -ld.logdet + lambda_ * s;
  }

  double value_and_grad(const Matrix& b, Matrix& grad) const {
    const LuFactor lu(b);
    if (lu.singular()) return kInf;
    Matrix x = b * y_;
    double s = 0.0;
    for (Index k = 0; k < x.size(); ++k) {
      const double h = hinge(x.data()[k]);
      s += h * h;
      x.data()[k] = h;
    }
    grad = -lu.inverse().transpose();
    grad.noalias() -= (2.0 * lambda_) * x * y_.transpose();
    return -lu.log_abs_det().logdet + lambda_ * s;
  }

 private:
  const Matrix& y_;
  double lambda_;
};

struct H2Config {
  double lambda = 10.0;
  ProjectedGradientConfig pg;
};

struct ValueAndGrad {
  double value = kInf;
  Matrix grad;  // empty when value is +inf
};

inline ValueAndGrad h2_objective_and_grad(const Matrix& b, const Matrix& y, double lambda) {
  detail::require(b.rows() == b.cols() && b.cols() == y.rows(), "h2_objective_and_grad: shape mismatch");
  ValueAndGrad out;
  Matrix g;
  out.value = H2Objective(y, lambda).value_and_grad(b, g);
  if (std::isfinite(out.value)) out.grad = std::move(g);
  return out;
}

struct H2Result {
  Matrix B;
  RunReport report;
};

/// Algorithm-identical to projected_gradient_solve with the H2 objective,
/// but keeps X = B Y up to date through the linear recurrences of the
/// extrapolation and of the affine projection, so every backtracking trial
/// costs O(NT) instead of a fresh N x N x T product.
inline H2Result h2_solve(const Matrix& y, const Vector& p, const Matrix& b0, const H2Config& cfg) {
  detail::require(cfg.lambda >= 0.0, "H2Config: lambda must be non-negative");
  detail::require(b0.rows() == y.rows() && b0.cols() == y.rows() && p.size() == y.rows(), "h2_solve: shape mismatch");
  const ProjectedGradientConfig& pg = cfg.pg;
  validate(pg);
  Stopwatch clock;
  H2Result out;
  RunReport& rep = out.report;
  rep.algorithm = "h2-sisal";
  rep.config = to_json(pg);
  rep.config["lambda"] = cfg.lambda;

  const double lambda = cfg.lambda;
  const double inv_n = 1.0 / static_cast<double>(y.rows());
  auto penalty = [lambda](const Matrix& x) {
    double s = 0.0;
    for (Index k = 0; k < x.size(); ++k) s += hinge_sq(x.data()[k]);
    return lambda * s;
  };

  Matrix b = project_affine_colsum(b0, p);
  Matrix x = b * y;
  double f_b = -log_abs_det(b).logdet + penalty(x);
  if (!std::isfinite(f_b)) throw std::invalid_argument("h2_solve: projected start is singular");

  Matrix b_prev = b, x_prev = x;
  Matrix b_ex, x_ex, grad, gy, cand, x_cand;
  Matrix acc_t(y.rows(), y.rows());
  Eigen::RowVectorXd e0y, g1y;
  FistaSchedule schedule;
  double mu_prev = pg.nu;
  rep.objective.push_back(f_b);
  if (pg.keep_iterates) rep.iterates.push_back(b);
  rep.termination = termination::max_iter;

  for (long k = 0; k < pg.max_iter; ++k) {
    double alpha = 0.0;
    if (pg.extrapolate) {
      const FistaStep step = fista_alpha(schedule);
      alpha = step.alpha;
      schedule = step.next;
    }
    b_ex = b + alpha * (b - b_prev);
    LuFactor lu(b_ex);
    if (lu.singular()) {
      ++rep.restarts;
      alpha = 0.0;
      b_ex = b;
      lu = LuFactor(b_ex);
    }
    // hinge(X) Y^T only involves the violating entries, usually a small
    // fraction of X; accumulate its transpose column by column.
    x_ex.resize(x.rows(), x.cols());
    acc_t.setZero();
    double viol = 0.0;
    {
      const double* xc = x.data();
      const double* xp = x_prev.data();
      double* xe = x_ex.data();
      const Index rows = x.rows();
      for (Index t = 0; t < x.cols(); ++t)
        for (Index i = 0; i < rows; ++i) {
          const Index k = t * rows + i;
          const double v = xc[k] + alpha * (xc[k] - xp[k]);
          xe[k] = v;
          if (v < 0.0) {
            viol += v * v;
            acc_t.col(i).noalias() -= v * y.col(t);
          }
        }
    }
    const double f_ex = -lu.log_abs_det().logdet + lambda * viol;
    grad = -lu.inverse().transpose();
    grad.noalias() -= (2.0 * lambda) * acc_t.transpose();
    gy.noalias() = grad * y;
    e0y.noalias() = ((b_ex.colwise().sum() - p.transpose()) * inv_n) * y;
    g1y.noalias() = (grad.colwise().sum() * inv_n) * y;
    const double f_anchor = pg.anchor == DecreaseAnchor::extrapolated ? f_ex : f_b;

    double mu = std::max(pg.nu, mu_prev / pg.c);
    bool accepted = false;
    double f_cand = kInf, h = 0.0;
    for (int j = 0; j <= pg.max_doublings; ++j) {
      cand = project_affine_colsum(b_ex - grad / mu, p);
      const LogAbsDet ld = log_abs_det(cand);
      if (!ld.singular) {
        x_cand.resize(x.rows(), x.cols());
        const double inv_mu = 1.0 / mu;
        double pen = 0.0;
        const Index rows = x.rows();
        for (Index t = 0; t < x.cols(); ++t) {
          const double shift = e0y[t] - g1y[t] * inv_mu;
          for (Index i = 0; i < rows; ++i) {
            const Index k = t * rows + i;
            const double v = x_ex.data()[k] - gy.data()[k] * inv_mu - shift;
            x_cand.data()[k] = v;
            if (v < 0.0) pen += v * v;
          }
        }
        f_cand = -ld.logdet + lambda * pen;
        const Matrix step = cand - b_ex;
        h = (grad.array() * step.array()).sum() + 0.5 * mu * step.squaredNorm();
        if (std::isfinite(f_cand) && f_cand <= f_anchor + pg.beta * h) {
          accepted = true;
          break;
        }
      }
      mu *= pg.c;
    }
    if (!accepted) {
      rep.termination = termination::line_search_stall;
      break;
    }
    const double rc = rel_change(cand, b);
    b_prev = std::move(b);
    x_prev = std::move(x);
    b = std::move(cand);
    x = std::move(x_cand);
    // Refresh the cached product now and then so rounding cannot accumulate.
    if ((k + 1) % 64 == 0) {
      x_prev = b_prev * y;
      x = b * y;
    }
    f_b = f_cand;
    mu_prev = mu;
    ++rep.iterations;
    rep.objective.push_back(f_b);
    rep.mu.push_back(mu);
    rep.alpha.push_back(alpha);
    rep.model_decrease.push_back(h);
    if (pg.keep_iterates) rep.iterates.push_back(b);
    if (rc <= pg.rc_tol) {
      rep.termination = termination::rel_change;
      break;
    }
  }
  rep.wall_ms = clock.elapsed_ms();
  out.B = std::move(b);
  return out;
}

}  // namespace sca

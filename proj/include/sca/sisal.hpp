#pragma once

// SISAL: min -log|det B| + lambda sum hinge(b_i^T y_t) s.t. B^T 1 = p, solved
// by successive convex approximation. Each quadratic-plus-hinge subproblem is
// handled by ADMM on the split Z = B Y; the step toward its solution is
// chosen by a line search (plain decrease or Armijo).

#include <sca/core.hpp>
#include <sca/linalg.hpp>
#include <sca/numeric.hpp>
#include <sca/report.hpp>

#include <cmath>
#include <string>

namespace sca {

struct AdmmConfig {
  double rho = 1.0;
  int max_iter = 200;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
};

enum class LineSearch { legacy, armijo };

inline const char* to_string(LineSearch ls) { return ls == LineSearch::armijo ? "armijo" : "legacy"; }

struct SisalConfig {
  double lambda = 0.1;
  double mu = 1.0;
  int max_outer = 250;
  LineSearch line_search = LineSearch::armijo;
  double beta = 1e-4;
  double delta = 0.5;
  int max_halvings = 60;
  double rc_tol = 1e-9;
  AdmmConfig admm;
  bool keep_iterates = false;
};

inline void validate(const SisalConfig& cfg) {
  detail::require(cfg.lambda >= 0.0, "SisalConfig: lambda must be non-negative");
  detail::require(cfg.mu > 0.0, "SisalConfig: mu must be positive");
  detail::require(cfg.beta > 0.0 && cfg.beta < 1.0, "SisalConfig: beta must be in (0,1)");
  detail::require(cfg.delta > 0.0 && cfg.delta < 1.0, "SisalConfig: delta must be in (0,1)");
  detail::require(cfg.admm.rho > 0.0, "SisalConfig: rho must be positive");
  detail::require(cfg.admm.max_iter >= 1 && cfg.max_outer >= 0, "SisalConfig: iteration caps must be positive");
}

inline nlohmann::json to_json(const SisalConfig& c) {
  return {{"lambda", c.lambda},         {"mu", c.mu},
          {"max_outer", c.max_outer},   {"line_search", to_string(c.line_search)},
          {"beta", c.beta},             {"delta", c.delta},
          {"max_halvings", c.max_halvings}, {"rc_tol", c.rc_tol},
          {"admm", {{"rho", c.admm.rho}, {"max_iter", c.admm.max_iter},
                    {"tol_primal", c.admm.tol_primal}, {"tol_dual", c.admm.tol_dual}}}};
}

/// sum_{i,t} hinge(x_it).
inline double hinge_sum(const Matrix& x) {
  double s = 0.0;
  const double* v = x.data();
  for (Index k = 0; k < x.size(); ++k) s += hinge(v[k]);
  return s;
}

/// -log|det B| + lambda sum hinge(B Y); +inf when B is singular.
inline double sisal_objective(const Matrix& b, const Matrix& y, double lambda) {
  detail::require(b.rows() == b.cols() && b.cols() == y.rows(), "sisal_objective: shape mismatch");
  const LogAbsDet ld = log_abs_det(b);
  if (ld.singular) return kInf;
  return -ld.logdet + lambda * hinge_sum(b * y);
}

struct AdmmResult {
  Matrix B_bar;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

/// ADMM for
///   min_B  <grad f0(Bk), B - Bk> + mu/2 ||B - Bk||^2 + lambda sum hinge(B Y)
///   s.t.   B^T 1 = p
/// with Z = B Y and scaled dual U. The SPD factor of mu I + rho Y Y^T is
/// built once and reused for every subproblem with the same Y, mu, rho.
class SisalSubproblem {
 public:
  SisalSubproblem(const Matrix& y, double mu, const AdmmConfig& cfg)
      : y_(y), gram_(y * y.transpose()), mu_(mu), cfg_(cfg),
        h_(mu * Matrix::Identity(y.rows(), y.rows()) + cfg.rho * gram_) {
    detail::require(mu > 0.0 && cfg.rho > 0.0, "SisalSubproblem: mu and rho must be positive");
  }

  /// `z` and `u` carry the splitting state; pass B_k Y and zeros on a cold start.
  AdmmResult solve(const Matrix& bk, const Vector& p, double lambda, Matrix& z, Matrix& u) const {
    LuFactor lu(bk);
    if (lu.singular()) throw std::invalid_argument("admm_subproblem: B_k is singular");
    const Index n = bk.rows();
    const double rho = cfg_.rho;
    // Q = B_k - grad f0(B_k) / mu with grad f0(B) = -B^{-T}.
    const Matrix q = bk + lu.inverse().transpose() / mu_;
    const Matrix mu_q = mu_ * q;

    AdmmResult out;
    // Z Y^T and U Y^T are carried along; U Y^T follows its own recurrence
    // through the Gram matrix, so each sweep needs two N x N x T products.
    Matrix b(n, n), by(n, y_.cols());
    Matrix zy = z * y_.transpose();
    Matrix uy = u * y_.transpose();
    Matrix zy_old;
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      b = project_affine_colsum(h_.solve_right(mu_q + rho * (zy - uy)), p);
      by.noalias() = b * y_;
      z = by + u;
      if (lambda > 0.0) {
        const double c = lambda / rho;
        double* zv = z.data();
        for (Index k = 0; k < z.size(); ++k) zv[k] = prox_hinge(zv[k], c);
      }
      u += by - z;
      zy_old = zy;
      zy.noalias() = z * y_.transpose();
      uy += b * gram_ - zy;
      out.iterations = it;
      out.primal_residual = (by - z).norm();
      out.dual_residual = rho * (zy - zy_old).norm();
      const double primal_scale = std::max({by.norm(), z.norm(), 1e-300});
      const double dual_scale = std::max({rho * uy.norm(), mu_ * b.norm(), 1e-300});
      if (out.primal_residual <= cfg_.tol_primal * primal_scale && out.dual_residual <= cfg_.tol_dual * dual_scale) {
        out.converged = true;
        break;
      }
    }
    out.B_bar = std::move(b);
    return out;
  }

  double mu() const { return mu_; }

 private:
  Matrix y_;
  Matrix gram_;
  double mu_;
  AdmmConfig cfg_;
  SpdSolver h_;
};

/// One-shot subproblem solve from a cold start.
inline AdmmResult admm_subproblem(const Matrix& bk, const Matrix& y, const Vector& p, double lambda, double mu,
                                  const AdmmConfig& cfg) {
  SisalSubproblem sub(y, mu, cfg);
  Matrix z = bk * y;
  Matrix u = Matrix::Zero(z.rows(), z.cols());
  return sub.solve(bk, p, lambda, z, u);
}

struct SisalState {
  Matrix B;
  Vector p;
  std::vector<double> objective;
  std::vector<double> theta;
};

struct SisalResult {
  SisalState state;
  RunReport report;
};

inline SisalResult sisal_solve(const Matrix& y, const Vector& p, const Matrix& b0, const SisalConfig& cfg) {
  validate(cfg);
  detail::require(b0.rows() == y.rows() && b0.cols() == y.rows() && p.size() == y.rows(),
                  "sisal_solve: shape mismatch");
  Stopwatch clock;
  RunReport rep;
  rep.algorithm = "sisal";
  rep.config = to_json(cfg);

  Matrix b = b0;
  if ((b.colwise().sum().transpose() - p).norm() > 1e-8 * std::max(1.0, p.norm())) b = project_affine_colsum(b, p);
  double f = sisal_objective(b, y, cfg.lambda);
  if (!std::isfinite(f)) throw std::invalid_argument("sisal_solve: initial point is singular after projection");

  SisalSubproblem sub(y, cfg.mu, cfg.admm);
  Matrix z = b * y;
  Matrix u = Matrix::Zero(z.rows(), z.cols());
  rep.objective.push_back(f);
  if (cfg.keep_iterates) rep.iterates.push_back(b);
  rep.termination = termination::max_iter;

  for (int k = 0; k < cfg.max_outer; ++k) {
    const AdmmResult sol = sub.solve(b, p, cfg.lambda, z, u);
    rep.admm_iterations.push_back(sol.iterations);
    if (rel_change(sol.B_bar, b) <= cfg.rc_tol) {
      rep.termination = termination::stationary;
      break;
    }
    const Matrix dir = sol.B_bar - b;
    const Matrix grad_f0 = -LuFactor(b).inverse().transpose();
    const double hinge_now = hinge_sum(b * y);
    const double h = (grad_f0.array() * dir.array()).sum() + 0.5 * cfg.mu * dir.squaredNorm() +
                     cfg.lambda * (hinge_sum(sol.B_bar * y) - hinge_now);
    if (cfg.line_search == LineSearch::armijo && !(h < 0.0)) {
      // The inexact subproblem solution predicts no decrease.
      rep.termination = termination::stationary;
      break;
    }

    double theta = 1.0;
    const double shrink = cfg.line_search == LineSearch::armijo ? cfg.delta : 0.5;
    bool accepted = false;
    Matrix cand;
    double f_cand = kInf;
    for (int j = 0; j <= cfg.max_halvings; ++j) {
      cand = b + theta * dir;
      f_cand = sisal_objective(cand, y, cfg.lambda);
      const double bound = cfg.line_search == LineSearch::armijo ? f + cfg.beta * theta * h : f;
      if (std::isfinite(f_cand) && f_cand <= bound) {
        accepted = true;
        break;
      }
      theta *= shrink;
    }
    if (!accepted) {
      rep.termination = termination::line_search_stall;
      break;
    }
    const double rc = rel_change(cand, b);
    b = std::move(cand);
    f = f_cand;
    ++rep.iterations;
    rep.objective.push_back(f);
    rep.theta.push_back(theta);
    rep.model_decrease.push_back(h);
    if (cfg.keep_iterates) rep.iterates.push_back(b);
    if (rc <= cfg.rc_tol) {
      rep.termination = termination::rel_change;
      break;
    }
  }
  rep.wall_ms = clock.elapsed_ms();
  SisalState state{b, p, rep.objective, rep.theta};
  return {std::move(state), std::move(rep)};
}

}  // namespace sca

#pragma once

// Probabilistic SISAL. The approximate ML objective
//   -log|det B| - (tau/T) sum_{i,t} log Phi(b_i^T y_t / (sigma ||b_i||))   s.t. B^T 1 = p
// is rewritten with B = Diag(d) C (unit-norm rows c_i, d > 0) and the
// constraint is penalized:
//   F_eta(C, d) = -log|det C| - sum log d_i - (tau/T) sum log Phi(c_i^T ybar_t)
//                 + eta ||C^T d - p||^2,        ybar_t = y_t / sigma.
// Inexact block coordinate descent alternates an exact d-step (FISTA with
// the closed-form prox of -log) and a C-step (MM with a quadratic majorant
// of -log Phi, minimized by extrapolated projected gradient over unit-norm
// rows), while eta is increased geometrically between stages.

#include <sca/core.hpp>
#include <sca/h2sisal.hpp>
#include <sca/numeric.hpp>
#include <sca/report.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace sca {

struct CStepConfig {
  double mm_rc_tol = 1e-5;
  long mm_max_iter = 1000;
  double pg_rc_tol = 1e-3;
  long pg_max_iter = 1000;
  double nu = 1.0;
  double c = 2.0;
  int max_doublings = 60;
  bool extrapolate = true;
};

struct PrConfig {
  double eta0 = 1.0;
  double eta_growth = 5.0;
  int outer_max = 10;
  double inner_rc_tol = 1e-7;
  long inner_max = 400000;  // BCD sweeps per eta stage
  double d_rc_tol = 1e-5;
  long d_max_iter = 100000;
  CStepConfig c_step;
  double tau = 1.0;
};

inline void validate(const PrConfig& c) {
  detail::require(c.eta0 > 0.0, "PrConfig: eta0 must be positive");
  detail::require(c.eta_growth > 1.0, "PrConfig: eta growth must exceed 1");
  detail::require(c.tau > 0.0, "PrConfig: tau must be positive");
  detail::require(c.outer_max >= 1 && c.inner_max >= 1, "PrConfig: loop caps must be positive");
  detail::require(c.c_step.nu > 0.0 && c.c_step.c > 1.0, "PrConfig: C-step backtracking constants invalid");
}

inline nlohmann::json to_json(const PrConfig& c) {
  return {{"eta0", c.eta0},
          {"eta_growth", c.eta_growth},
          {"outer_max", c.outer_max},
          {"inner_rc_tol", c.inner_rc_tol},
          {"inner_max", c.inner_max},
          {"inner_budget_unit", "sweeps"},
          {"d_rc_tol", c.d_rc_tol},
          {"d_max_iter", c.d_max_iter},
          {"C_mm_rc_tol", c.c_step.mm_rc_tol},
          {"C_mm_max_iter", c.c_step.mm_max_iter},
          {"C_pg_rc_tol", c.c_step.pg_rc_tol},
          {"C_pg_max_iter", c.c_step.pg_max_iter},
          {"C_nu", c.c_step.nu},
          {"C_c", c.c_step.c},
          {"tau", c.tau}};
}

/// sum_{i,t} log Phi(x_it).
inline double log_norm_cdf_sum(const Matrix& x) {
  double s = 0.0;
  const double* v = x.data();
  for (Index k = 0; k < x.size(); ++k) s += log_norm_cdf(v[k]);
  return s;
}

namespace detail {

/// Rows of B scaled to unit norm; false when a row is zero.
inline bool normalize_rows(const Matrix& b, Matrix& c, Vector& d) {
  d = b.rowwise().norm();
  if (!(d.minCoeff() > 0.0)) return false;
  c = d.cwiseInverse().asDiagonal() * b;
  return true;
}

}  // namespace detail

/// -log|det B| + g(B) - (1/T) sum log Phi(b_i^T y_t / (sigma ||b_i||)) with
/// g(B) = log||B^T 1|| + ||Y^T B^T 1 - 1||^2 / (2 sigma^2 T ||B^T 1||^2).
/// +inf for singular B, a zero row or B^T 1 = 0.
inline double form2_objective(const Matrix& b, const Matrix& y, double sigma) {
  detail::require(b.rows() == b.cols() && b.cols() == y.rows(), "form2_objective: shape mismatch");
  detail::require(sigma > 0.0, "form2_objective: sigma must be positive");
  const LogAbsDet ld = log_abs_det(b);
  if (ld.singular) return kInf;
  Matrix c;
  Vector d;
  if (!detail::normalize_rows(b, c, d)) return kInf;
  const Vector v = b.colwise().sum().transpose();
  const double vn = v.norm();
  if (!(vn > 0.0)) return kInf;
  const double t = static_cast<double>(y.cols());
  const double g = std::log(vn) + (y.transpose() * v - Vector::Ones(y.cols())).squaredNorm() / (2.0 * sigma * sigma * t * vn * vn);
  return -ld.logdet + g - log_norm_cdf_sum(c * y / sigma) / t;
}

/// The penalized objective F_eta(C, d) with the log Phi sum weighted by tau.
inline double F_eta(const Matrix& c, const Vector& d, const Matrix& ybar, const Vector& p, double eta, double tau) {
  detail::require(c.rows() == c.cols() && c.cols() == ybar.rows() && d.size() == c.rows() && p.size() == c.rows(),
                  "F_eta: shape mismatch");
  const LogAbsDet ld = log_abs_det(c);
  if (ld.singular || !(d.minCoeff() > 0.0)) return kInf;
  const double t = static_cast<double>(ybar.cols());
  return -ld.logdet - d.array().log().sum() - tau * log_norm_cdf_sum(c * ybar) / t +
         eta * (c.transpose() * d - p).squaredNorm();
}

/// -log|det B| - (tau/T) sum log Phi(b_i^T ybar_t / ||b_i||). When `p` is
/// given, points violating B^T 1 = p (relative 1e-8) evaluate to +inf.
inline double pr_objective_direct(const Matrix& b, const Matrix& ybar, double tau, const Vector* p = nullptr) {
  detail::require(b.rows() == b.cols() && b.cols() == ybar.rows(), "pr_objective_direct: shape mismatch");
  if (p != nullptr && (b.colwise().sum().transpose() - *p).norm() > 1e-8 * std::max(1.0, p->norm())) return kInf;
  const LogAbsDet ld = log_abs_det(b);
  if (ld.singular) return kInf;
  Matrix c;
  Vector d;
  if (!detail::normalize_rows(b, c, d)) return kInf;
  return -ld.logdet - tau * log_norm_cdf_sum(c * ybar) / static_cast<double>(ybar.cols());
}

// ---------------------------------------------------------------------------
// d-step
// ---------------------------------------------------------------------------

/// The d-dependent part of F_eta: -sum log d_i + eta ||C^T d - p||^2.
inline double d_objective(const Matrix& c, const Vector& d, const Vector& p, double eta) {
  if (!(d.minCoeff() > 0.0)) return kInf;
  return -d.array().log().sum() + eta * (c.transpose() * d - p).squaredNorm();
}

/// Gradient of eta ||C^T d - p||^2.
inline Vector d_smooth_grad(const Matrix& c, const Vector& d, const Vector& p, double eta) {
  return 2.0 * eta * c * (c.transpose() * d - p);
}

struct DStepResult {
  Vector d;
  long iterations = 0;
};

/// min_d -sum log d_i + eta ||C^T d - p||^2 by FISTA with the exact
/// Lipschitz step mu = 2 eta sigma_max(C)^2; stops at rc(d+, d) <= rc_tol.
inline DStepResult solve_d(const Matrix& c, const Vector& d0, const Vector& p, double eta, double rc_tol,
                           long max_iter = 100000) {
  detail::require(eta > 0.0, "solve_d: eta must be positive");
  detail::require(d0.size() == c.rows() && d0.minCoeff() > 0.0, "solve_d: d0 must be positive");
  const Eigen::JacobiSVD<Matrix> svd(c);
  const double smax = svd.singularValues()[0];
  const double mu = 2.0 * eta * smax * smax;
  DStepResult out;
  Vector d = d0, d_prev = d0;
  FistaSchedule schedule;
  for (long k = 0; k < max_iter; ++k) {
    const FistaStep step = fista_alpha(schedule);
    schedule = step.next;
    const Vector d_ex = d + step.alpha * (d - d_prev);
    Vector d_new = prox_neg_log(d_ex - d_smooth_grad(c, d_ex, p, eta) / mu, mu);
    const double rc = (d_new - d).norm() / d.norm();
    d_prev = std::move(d);
    d = std::move(d_new);
    out.iterations = k + 1;
    if (rc <= rc_tol) break;
  }
  out.d = std::move(d);
  return out;
}

// ---------------------------------------------------------------------------
// C-step
// ---------------------------------------------------------------------------

/// Majorant of the C-dependent part of F_eta built at C_tilde:
///   g0(C) = -log|det C| + (tau/2T) sum (c_i^T ybar_t + w_it)^2 + eta ||C^T d - p||^2
/// with w_it = w(c_tilde_i^T ybar_t). The additive constant r(C_tilde) is not
/// included; `offset()` recovers it for tangency checks. Evaluations of Phi
/// happen only in the constructor.
class CMajorant {
 public:
  CMajorant(const Matrix& ybar, const Matrix& gram, const Matrix& c_tilde, const Vector& d, const Vector& p,
            double eta, double tau)
      : ybar_(ybar), gram_(gram), d_(d), p_(p), eta_(eta), tau_(tau), c_tilde_(c_tilde) {
    w_ = c_tilde * ybar;
    double* v = w_.data();
    for (Index k = 0; k < w_.size(); ++k) v[k] = mm_weight(v[k]);
    wy_ = w_ * ybar.transpose();
    w_sq_ = w_.squaredNorm();
    scale_ = tau / static_cast<double>(ybar.cols());
  }

  double value(const Matrix& c) const {
    const LogAbsDet ld = log_abs_det(c);
    if (ld.singular) return kInf;
    return -ld.logdet + quadratic(c) + eta_ * (c.transpose() * d_ - p_).squaredNorm();
  }

  double value_and_grad(const Matrix& c, Matrix& grad) const {
    const LuFactor lu(c);
    if (lu.singular()) return kInf;
    const Vector resid = c.transpose() * d_ - p_;
    grad = -lu.inverse().transpose();
    grad.noalias() += scale_ * (c * gram_ + wy_);
    grad.noalias() += 2.0 * eta_ * d_ * resid.transpose();
    return -lu.log_abs_det().logdet + quadratic(c) + eta_ * resid.squaredNorm();
  }

  /// (tau/T) sum_{i,t} r(c_tilde_i^T ybar_t).
  double offset() const {
    const Matrix x = c_tilde_ * ybar_;
    double s = 0.0;
    for (Index k = 0; k < x.size(); ++k) s += mm_offset(x.data()[k]);
    return scale_ * s;
  }

  const Matrix& weights() const { return w_; }

 private:
  // (tau/2T) ||C Ybar + W||^2 expanded through the Gram matrix Ybar Ybar^T.
  double quadratic(const Matrix& c) const {
    const double cross = (c.array() * wy_.array()).sum();
    const double quad = (c * gram_).cwiseProduct(c).sum();
    return 0.5 * scale_ * (quad + 2.0 * cross + w_sq_);
  }

  const Matrix& ybar_;
  const Matrix& gram_;
  Vector d_;
  Vector p_;
  double eta_;
  double tau_;
  Matrix c_tilde_;
  Matrix w_;
  Matrix wy_;
  double w_sq_ = 0.0;
  double scale_ = 0.0;
};

struct CStepResult {
  Matrix C;
  long mm_iterations = 0;
  long pg_iterations = 0;
  long w_recomputes = 0;
  long stalls = 0;
  long restarts = 0;
  std::vector<double> objective;  // F_eta at each MM iterate, when requested
};

/// MM outer loop with an extrapolated projected-gradient inner loop over
/// unit-norm rows. `mu_warm` carries the backtracking curvature between
/// calls. An MM step that fails to decrease the majorant is rejected in
/// favour of the best inner iterate, so F_eta never increases.
inline CStepResult solve_C(const Matrix& c0, const Vector& d, const Matrix& ybar, const Matrix& gram, const Vector& p,
                           double eta, double tau, const CStepConfig& cfg, double& mu_warm,
                           bool trace_objective = false) {
  detail::require(c0.rows() == c0.cols() && c0.cols() == ybar.rows(), "solve_C: shape mismatch");
  const Vector tie_break = Vector::Unit(c0.cols(), 0);
  CStepResult out;
  Matrix c = c0;
  if (trace_objective) out.objective.push_back(F_eta(c, d, ybar, p, eta, tau));
  Matrix grad, cand, c_ex, c_l, c_prev, best;
  for (long k = 0; k < cfg.mm_max_iter; ++k) {
    const CMajorant g0(ybar, gram, c, d, p, eta, tau);
    ++out.w_recomputes;
    ++out.mm_iterations;
    const double g_start = g0.value(c);

    c_l = c;
    c_prev = c;
    best = c;
    double g_best = g_start;
    FistaSchedule schedule;
    double mu = std::max(cfg.nu, mu_warm);
    for (long l = 0; l < cfg.pg_max_iter; ++l) {
      double alpha = 0.0;
      if (cfg.extrapolate) {
        const FistaStep step = fista_alpha(schedule);
        alpha = step.alpha;
        schedule = step.next;
      }
      c_ex = c_l + alpha * (c_l - c_prev);
      double g_ex = g0.value_and_grad(c_ex, grad);
      if (!std::isfinite(g_ex)) {
        ++out.restarts;
        c_ex = c_l;
        g_ex = g0.value_and_grad(c_ex, grad);
      }
      mu = std::max(cfg.nu, mu / cfg.c);
      bool accepted = false;
      double g_cand = kInf;
      for (int j = 0; j <= cfg.max_doublings; ++j) {
        cand = project_rows_unit_sphere(c_ex - grad / mu, tie_break);
        g_cand = g0.value(cand);
        const Matrix step = cand - c_ex;
        const double model = g_ex + (grad.array() * step.array()).sum() + 0.5 * mu * step.squaredNorm();
        if (std::isfinite(g_cand) && g_cand <= model) {
          accepted = true;
          break;
        }
        mu *= cfg.c;
      }
      ++out.pg_iterations;
      if (!accepted) {
        ++out.stalls;
        break;
      }
      const double rc = rel_change(cand, c_l);
      c_prev = std::move(c_l);
      c_l = cand;
      if (g_cand < g_best) {
        g_best = g_cand;
        best = cand;
      }
      if (rc <= cfg.pg_rc_tol) break;
    }
    mu_warm = mu;

    Matrix c_new;
    if (g0.value(c_l) <= g_start)
      c_new = std::move(c_l);
    else if (g_best < g_start)
      c_new = std::move(best);
    else
      break;  // no majorant decrease available from this point
    const double rc = rel_change(c_new, c);
    c = std::move(c_new);
    if (trace_objective) out.objective.push_back(F_eta(c, d, ybar, p, eta, tau));
    if (rc <= cfg.mm_rc_tol) break;
  }
  out.C = std::move(c);
  return out;
}

// ---------------------------------------------------------------------------
// Outer BCD
// ---------------------------------------------------------------------------

struct PrState {
  Matrix C;
  Vector d;
  double eta = 0.0;
  double tau = 1.0;
  double sigma = 1.0;
  Vector p;

  Matrix B() const { return d.asDiagonal() * C; }
};

struct PrResult {
  Matrix B;
  PrState state;
  RunReport report;
};

inline PrResult pr_solve(const Matrix& y, double sigma, const Vector& p, const Matrix& b0, const PrConfig& cfg) {
  validate(cfg);
  detail::require(sigma > 0.0, "pr_solve: sigma must be positive");
  detail::require(b0.rows() == y.rows() && b0.cols() == y.rows() && p.size() == y.rows(), "pr_solve: shape mismatch");
  if (LuFactor(b0).singular()) throw std::invalid_argument("pr_solve: B0 is singular");
  Stopwatch clock;
  PrResult out;
  RunReport& rep = out.report;
  rep.algorithm = "pr-sisal";
  rep.config = to_json(cfg);
  rep.config["sigma"] = sigma;

  const Matrix ybar = y / sigma;
  const Matrix gram = ybar * ybar.transpose();
  PrState& st = out.state;
  st.sigma = sigma;
  st.tau = cfg.tau;
  st.p = p;
  if (!detail::normalize_rows(b0, st.C, st.d)) throw std::invalid_argument("pr_solve: B0 has a zero row");

  double eta = cfg.eta0;
  double mu_warm = cfg.c_step.nu;
  rep.termination = termination::rel_change;
  for (int stage = 0; stage < cfg.outer_max; ++stage) {
    PrStageTrace trace;
    trace.eta = eta;
    double f = F_eta(st.C, st.d, ybar, p, eta, cfg.tau);
    trace.objective.push_back(f);
    if (stage == 0) rep.objective.push_back(f);
    bool converged = false;
    for (long sweep = 0; sweep < cfg.inner_max; ++sweep) {
      const Matrix b_old = st.B();
      DStepResult ds = solve_d(st.C, st.d, p, eta, cfg.d_rc_tol, cfg.d_max_iter);
      trace.d_iterations += ds.iterations;
      if (d_objective(st.C, ds.d, p, eta) <= d_objective(st.C, st.d, p, eta)) st.d = std::move(ds.d);

      CStepResult cs = solve_C(st.C, st.d, ybar, gram, p, eta, cfg.tau, cfg.c_step, mu_warm);
      trace.w_recomputes += cs.w_recomputes;
      trace.c_pg_iterations += cs.pg_iterations;
      trace.c_stalls += cs.stalls;
      rep.restarts += cs.restarts;
      st.C = std::move(cs.C);

      ++trace.sweeps;
      ++rep.iterations;
      f = F_eta(st.C, st.d, ybar, p, eta, cfg.tau);
      trace.objective.push_back(f);
      if (rel_change(st.B(), b_old) <= cfg.inner_rc_tol) {
        converged = true;
        break;
      }
    }
    trace.budget_hit = !converged;
    if (!converged) rep.termination = termination::budget;
    rep.objective.push_back(f);
    rep.stages.push_back(std::move(trace));
    st.eta = eta;
    eta *= cfg.eta_growth;
  }
  out.B = st.B();
  rep.extra["formulation3_objective"] = finite_or_null(pr_objective_direct(out.B, ybar, cfg.tau));
  rep.extra["constraint_residual"] = (out.B.colwise().sum().transpose() - p).norm();
  rep.wall_ms = clock.elapsed_ms();
  return out;
}

// ---------------------------------------------------------------------------
// Direct projected gradient on the B form (runtime comparison only)
// ---------------------------------------------------------------------------

/// f0(B) = -log|det B| - (tau/T) sum log Phi(b_i^T ybar_t / ||b_i||). With
/// u_i = b_i/||b_i|| and x_it = u_i^T ybar_t, row i of the gradient is
///   -[B^{-T}]_i - (tau/T) sum_t (phi/Phi)(x_it) (ybar_t - x_it u_i)^T / ||b_i||.
class PrDirectObjective {
 public:
  PrDirectObjective(const Matrix& ybar, double tau) : ybar_(ybar), tau_(tau) {}

  double value(const Matrix& b) const { return pr_objective_direct(b, ybar_, tau_); }

  double value_and_grad(const Matrix& b, Matrix& grad) const {
    const LuFactor lu(b);
    if (lu.singular()) return kInf;
    Matrix u;
    Vector norms;
    if (!detail::normalize_rows(b, u, norms)) return kInf;
    const Matrix x = u * ybar_;
    Matrix lam(x.rows(), x.cols());
    double s = 0.0;
    for (Index k = 0; k < x.size(); ++k) {
      s += log_norm_cdf(x.data()[k]);
      lam.data()[k] = norm_pdf_over_cdf(x.data()[k]);
    }
    const double scale = tau_ / static_cast<double>(ybar_.cols());
    Matrix g_phi = lam * ybar_.transpose();
    const Vector lam_x = (lam.array() * x.array()).rowwise().sum();
    g_phi -= lam_x.asDiagonal() * u;
    grad = -lu.inverse().transpose() - scale * norms.cwiseInverse().asDiagonal() * g_phi;
    return -lu.log_abs_det().logdet - scale * s;
  }

 private:
  const Matrix& ybar_;
  double tau_;
};

struct PrDirectConfig {
  double tau = 1.0;
  ProjectedGradientConfig pg{0.5, 1.0, 2.0, 1e-8, 400000, true, DecreaseAnchor::extrapolated, 60, false};
};

inline PrResult pr_direct_solve(const Matrix& y, double sigma, const Vector& p, const Matrix& b0,
                                const PrDirectConfig& cfg) {
  detail::require(sigma > 0.0 && cfg.tau > 0.0, "pr_direct_solve: sigma and tau must be positive");
  const Matrix ybar = y / sigma;
  PrResult out;
  out.report.algorithm = cfg.pg.extrapolate ? "pr-sisal-epg" : "pr-sisal-pg";
  out.report.config = to_json(cfg.pg);
  out.report.config["tau"] = cfg.tau;
  out.report.config["sigma"] = sigma;
  const PrDirectObjective f0(ybar, cfg.tau);
  out.B = projected_gradient_solve(f0, p, b0, cfg.pg, out.report);
  out.state.sigma = sigma;
  out.state.tau = cfg.tau;
  out.state.p = p;
  detail::normalize_rows(out.B, out.state.C, out.state.d);
  return out;
}

}  // namespace sca

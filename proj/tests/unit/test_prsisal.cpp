#include <sca/pipeline.hpp>
#include <sca/prsisal.hpp>
#include <sca/synthetic.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sca;

namespace {

double naive_F(const Matrix& c, const Vector& d, const Matrix& ybar, const Vector& p, double eta, double tau) {
  double s = 0.0;
  for (Index i = 0; i < c.rows(); ++i)
    for (Index t = 0; t < ybar.cols(); ++t) s += std::log(oracle::gauss_cdf(c.row(i).dot(ybar.col(t))));
  double logd = 0.0;
  for (Index i = 0; i < d.size(); ++i) logd += std::log(d[i]);
  return -std::log(std::abs(oracle::cofactor_det(c))) - logd - tau * s / static_cast<double>(ybar.cols()) +
         eta * (c.transpose() * d - p).squaredNorm();
}

double naive_form2(const Matrix& b, const Matrix& y, double sigma) {
  const Index n = b.rows();
  const double t = static_cast<double>(y.cols());
  Vector v = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) v += b.row(i).transpose();
  double quad = 0.0;
  for (Index k = 0; k < y.cols(); ++k) quad += std::pow(v.dot(y.col(k)) - 1.0, 2);
  double phi = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < y.cols(); ++k) phi += std::log(oracle::gauss_cdf(b.row(i).dot(y.col(k)) / (sigma * b.row(i).norm())));
  return -std::log(std::abs(oracle::cofactor_det(b))) + std::log(v.norm()) + quad / (2 * sigma * sigma * t * v.squaredNorm()) -
         phi / t;
}

Matrix unit_rows(Matrix m) {
  for (Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

struct Problem {
  Matrix y;
  double sigma;
  Vector p;
  Matrix b0;
};

Problem problem(int m, int n, int t, double snr, std::uint64_t seed) {
  SynthSpec spec;
  spec.M = m;
  spec.N = n;
  spec.T = t;
  spec.snr_db = snr;
  spec.seed = seed;
  const Dataset d = generate(spec);
  UnmixOptions opt;
  opt.n = n;
  opt.algorithm = Algorithm::init;
  opt.sigma = std::sqrt(d.truth->sigma2);
  opt.anchor = AnchorMethod::second_order;
  const UnmixResult r = unmix(d.Y, opt);
  return {r.dr.reduce(d.Y), std::sqrt(d.truth->sigma2), r.anchor.p, r.init.B_init};
}

}  // namespace

TEST(PrObjective, FEtaExamplesAndNaiveLoop) {
  const Matrix zero = Matrix::Zero(3, 8);
  for (double tau : {0.5, 1.0, 4.0})
    EXPECT_NEAR(F_eta(Matrix::Identity(3, 3), Vector::Ones(3), zero, Vector::Ones(3), 7.0, tau), tau * 3 * std::log(2.0),
                1e-14);
  Rng rng(1, 0);
  const Matrix c = unit_rows(oracle::well_conditioned(3, rng));
  const Matrix ybar = 3.0 * oracle::normal_matrix(3, 25, rng);
  const Vector d = oracle::uniform_matrix(3, 1, rng, 0.5, 2.0);
  const Vector p = oracle::normal_matrix(3, 1, rng);
  EXPECT_NEAR(F_eta(c, d, ybar, p, 2.0, 1.5), naive_F(c, d, ybar, p, 2.0, 1.5), 1e-9);
  // Affine in eta and in tau.
  const double f1 = F_eta(c, d, ybar, p, 1.0, 1.0), f2 = F_eta(c, d, ybar, p, 2.0, 1.0), f3 = F_eta(c, d, ybar, p, 3.0, 1.0);
  EXPECT_NEAR(f3 - f1, 2.0 * (f2 - f1), 1e-10);
  const double t1 = F_eta(c, d, ybar, p, 1.0, 1.0), t2 = F_eta(c, d, ybar, p, 1.0, 2.0), t3 = F_eta(c, d, ybar, p, 1.0, 3.0);
  EXPECT_NEAR(t3 - t1, 2.0 * (t2 - t1), 1e-10);
  EXPECT_TRUE(std::isinf(F_eta(Matrix::Ones(3, 3), d, ybar, p, 1.0, 1.0)));
  EXPECT_TRUE(std::isinf(F_eta(c, -d, ybar, p, 1.0, 1.0)));
}

TEST(PrObjective, Form2MatchesNaiveLoop) {
  Rng rng(2, 0);
  for (int k = 0; k < 5; ++k) {
    const Matrix b = oracle::well_conditioned(3, rng);
    const Matrix y = oracle::uniform_matrix(3, 30, rng, 0.0, 1.0);
    EXPECT_NEAR(form2_objective(b, y, 0.3), naive_form2(b, y, 0.3), 1e-8);
  }
  Matrix zero_row = Matrix::Identity(3, 3);
  zero_row.row(1).setZero();
  EXPECT_TRUE(std::isinf(form2_objective(zero_row, Matrix::Ones(3, 4), 1.0)));
  EXPECT_THROW(form2_objective(Matrix::Identity(3, 3), Matrix::Ones(3, 4), 0.0), std::invalid_argument);
}

TEST(PrObjective, DirectFormAgreesWithFactoredForm) {
  Rng rng(3, 0);
  const Matrix c = unit_rows(oracle::well_conditioned(4, rng));
  const Vector d = oracle::uniform_matrix(4, 1, rng, 0.5, 2.0);
  const Matrix ybar = 2.0 * oracle::normal_matrix(4, 50, rng);
  const Matrix b = d.asDiagonal() * c;
  const Vector p = b.colwise().sum().transpose();
  EXPECT_NEAR(pr_objective_direct(b, ybar, 1.3, &p), F_eta(c, d, ybar, p, 5.0, 1.3), 1e-10);
  const Vector off = p + Vector::Constant(4, 0.1);
  EXPECT_TRUE(std::isinf(pr_objective_direct(b, ybar, 1.3, &off)));
  // Positive row scaling leaves the probit term unchanged.
  const Matrix scaled = Vector::LinSpaced(4, 0.5, 3.0).asDiagonal() * b;
  const double logdet_shift = std::log(Vector::LinSpaced(4, 0.5, 3.0).prod());
  EXPECT_NEAR(pr_objective_direct(scaled, ybar, 1.3), pr_objective_direct(b, ybar, 1.3) - logdet_shift, 1e-10);
}

TEST(PrObjective, DirectGradientMatchesFiniteDifferences) {
  Rng rng(4, 0);
  for (int k = 0; k < 10; ++k) {
    const Matrix b = oracle::well_conditioned(3, rng);
    const Matrix ybar = 2.0 * oracle::normal_matrix(3, 40, rng);
    const PrDirectObjective f(ybar, 1.7);
    Matrix grad;
    const double v = f.value_and_grad(b, grad);
    EXPECT_NEAR(v, f.value(b), 1e-12 * std::max(1.0, std::abs(v)));
    const Matrix fd = oracle::fd_gradient([&](const Matrix& x) { return f.value(x); }, b);
    EXPECT_LE(oracle::rel_err(grad, fd), 1e-5);
  }
}

TEST(DStep, ScalarRootForIdentity) {
  for (double eta : {0.1, 1.0, 30.0}) {
    const DStepResult r = solve_d(Matrix::Identity(3, 3), Vector::Constant(3, 0.3), Vector::Ones(3), eta, 1e-14);
    const double root = 0.5 * (1.0 + std::sqrt(1.0 + 2.0 / eta));
    for (Index i = 0; i < 3; ++i) {
      EXPECT_NEAR(r.d[i], root, 1e-8);
      EXPECT_NEAR(2.0 * eta * (r.d[i] - 1.0), 1.0 / r.d[i], 1e-7);
    }
  }
  EXPECT_THROW(solve_d(Matrix::Identity(2, 2), Vector::Ones(2), Vector::Ones(2), 0.0, 1e-6), std::invalid_argument);
}

TEST(DStep, StationarityForGeneralC) {
  Rng rng(5, 0);
  for (int k = 0; k < 10; ++k) {
    const Matrix c = unit_rows(oracle::well_conditioned(4, rng));
    const Vector p = oracle::uniform_matrix(4, 1, rng, 0.2, 1.0);
    const DStepResult r = solve_d(c, Vector::Ones(4), p, 3.0, 1e-13, 1000000);
    ASSERT_GT(r.d.minCoeff(), 0.0);
    const Vector kkt = -r.d.cwiseInverse() + d_smooth_grad(c, r.d, p, 3.0);
    EXPECT_LE(kkt.norm(), 1e-4);
    const Vector fd = oracle::fd_gradient_vec([&](const Vector& x) { return d_objective(c, x, p, 3.0); }, r.d);
    EXPECT_LE((fd - kkt).norm(), 1e-5);
  }
}

TEST(CMajorant, GradientTangencyAndMajorization) {
  Rng rng(6, 0);
  const Matrix ybar = 2.0 * oracle::normal_matrix(3, 60, rng);
  const Matrix gram = ybar * ybar.transpose();
  const Vector d = oracle::uniform_matrix(3, 1, rng, 0.5, 2.0);
  const Vector p = oracle::normal_matrix(3, 1, rng);
  const double logd = d.array().log().sum();
  for (int k = 0; k < 20; ++k) {
    const Matrix c_tilde = unit_rows(oracle::well_conditioned(3, rng));
    const CMajorant g(ybar, gram, c_tilde, d, p, 2.0, 1.4);
    EXPECT_NEAR(g.value(c_tilde) + g.offset() - logd, F_eta(c_tilde, d, ybar, p, 2.0, 1.4), 1e-9);
    const Matrix c = c_tilde + 0.3 * oracle::normal_matrix(3, 3, rng);
    Matrix grad;
    EXPECT_NEAR(g.value_and_grad(c, grad), g.value(c), 1e-10);
    const Matrix fd = oracle::fd_gradient([&](const Matrix& x) { return g.value(x); }, c);
    EXPECT_LE(oracle::rel_err(grad, fd), 1e-5);
    EXPECT_GE(g.value(c) + g.offset() - logd, F_eta(c, d, ybar, p, 2.0, 1.4) - 1e-10);
  }
}

TEST(CStep, MmIterationsDecreaseTheObjective) {
  const Problem pr = problem(6, 3, 300, 25, 7);
  const Matrix ybar = pr.y / pr.sigma;
  const Matrix gram = ybar * ybar.transpose();
  Matrix c;
  Vector d;
  c = unit_rows(pr.b0);
  d = pr.b0.rowwise().norm();
  CStepConfig cfg;
  double mu = cfg.nu;
  const CStepResult one = [&] {
    CStepConfig single = cfg;
    single.mm_max_iter = 1;
    return solve_C(c, d, ybar, gram, pr.p, 1.0, 1.0, single, mu, true);
  }();
  ASSERT_EQ(one.objective.size(), 2u);
  EXPECT_LT(one.objective[1], one.objective[0]);
  mu = cfg.nu;
  const CStepResult many = solve_C(c, d, ybar, gram, pr.p, 1.0, 1.0, cfg, mu, true);
  for (std::size_t k = 1; k < many.objective.size(); ++k) EXPECT_LE(many.objective[k], many.objective[k - 1]);
  EXPECT_LE((many.C.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(PrSolve, StagesAreMonotoneAndStateIsConsistent) {
  const Problem pr = problem(6, 3, 300, 25, 8);
  PrConfig cfg;
  cfg.outer_max = 4;
  cfg.inner_max = 200;
  const PrResult r = pr_solve(pr.y, pr.sigma, pr.p, pr.b0, cfg);
  ASSERT_EQ(r.report.stages.size(), 4u);
  double eta = cfg.eta0;
  for (const PrStageTrace& s : r.report.stages) {
    EXPECT_EQ(s.eta, eta);
    eta *= cfg.eta_growth;
    for (std::size_t k = 1; k < s.objective.size(); ++k)
      EXPECT_LE(s.objective[k], s.objective[k - 1] + 1e-12 * std::abs(s.objective[k - 1]));
  }
  EXPECT_LE((r.state.C.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GT(r.state.d.minCoeff(), 0.0);
  EXPECT_EQ(r.B, r.state.B());
  const Matrix ybar = pr.y / pr.sigma;
  EXPECT_NEAR(r.report.extra["formulation3_objective"].get<double>(), pr_objective_direct(r.B, ybar, cfg.tau), 1e-12);
  // The constraint residual shrinks as the penalty grows.
  EXPECT_LT(r.report.extra["constraint_residual"].get<double>(), 0.05 * pr.p.norm());
}

TEST(PrSolve, Validation) {
  const Problem pr = problem(6, 3, 100, 25, 9);
  PrConfig cfg;
  EXPECT_THROW(pr_solve(pr.y, 0.0, pr.p, pr.b0, cfg), std::invalid_argument);
  cfg.tau = 0.0;
  EXPECT_THROW(pr_solve(pr.y, pr.sigma, pr.p, pr.b0, cfg), std::invalid_argument);
  cfg = {};
  cfg.eta_growth = 1.0;
  EXPECT_THROW(pr_solve(pr.y, pr.sigma, pr.p, pr.b0, cfg), std::invalid_argument);
  cfg = {};
  Matrix zero_row = pr.b0;
  zero_row.row(0).setZero();
  EXPECT_THROW(pr_solve(pr.y, pr.sigma, pr.p, zero_row, cfg), std::invalid_argument);
}

TEST(PrDirectSolve, FeasibleDescent) {
  const Problem pr = problem(6, 3, 300, 25, 10);
  PrDirectConfig cfg;
  cfg.pg.max_iter = 300;
  const PrResult r = pr_direct_solve(pr.y, pr.sigma, pr.p, pr.b0, cfg);
  EXPECT_EQ(r.report.algorithm, "pr-sisal-epg");
  EXPECT_LE((r.B.colwise().sum().transpose() - pr.p).norm(), 1e-10);
  EXPECT_LT(r.report.objective.back(), r.report.objective.front());
  cfg.pg.extrapolate = false;
  const PrResult plain = pr_direct_solve(pr.y, pr.sigma, pr.p, pr.b0, cfg);
  EXPECT_EQ(plain.report.algorithm, "pr-sisal-pg");
  for (std::size_t k = 1; k < plain.report.objective.size(); ++k)
    EXPECT_LE(plain.report.objective[k], plain.report.objective[k - 1]);
}

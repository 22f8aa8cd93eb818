#include <sca/h2sisal.hpp>
#include <sca/pipeline.hpp>
#include <sca/synthetic.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sca;

namespace {

double naive_h2(const Matrix& b, const Matrix& y, double lambda) {
  double s = 0.0;
  for (Index i = 0; i < b.rows(); ++i)
    for (Index t = 0; t < y.cols(); ++t) {
      const double x = b.row(i).dot(y.col(t));
      if (x < 0.0) s += x * x;
    }
  return -std::log(std::abs(oracle::cofactor_det(b))) + lambda * s;
}

struct Reduced {
  Matrix y;
  Vector p;
  Matrix b0;
};

Reduced reduced_problem(int m, int n, double snr, std::uint64_t seed, bool noiseless = false) {
  SynthSpec spec;
  spec.M = m;
  spec.N = n;
  spec.T = 1000;
  spec.snr_db = snr;
  spec.noiseless = noiseless;
  spec.seed = seed;
  const Dataset d = generate(spec);
  UnmixOptions opt;
  opt.n = n;
  opt.algorithm = Algorithm::init;
  const UnmixResult r = unmix(d.Y, opt);
  return {r.dr.reduce(d.Y), r.anchor.p, r.init.B_init};
}

}  // namespace

TEST(H2Objective, Examples) {
  Rng rng(1, 0);
  const Matrix y = oracle::uniform_matrix(3, 30, rng);
  const ValueAndGrad at_id = h2_objective_and_grad(Matrix::Identity(3, 3), y, 10.0);
  EXPECT_EQ(at_id.value, 0.0);
  EXPECT_LE((at_id.grad + Matrix::Identity(3, 3)).norm(), 1e-15);
  const Matrix b = oracle::well_conditioned(3, rng);
  const Matrix yn = oracle::normal_matrix(3, 30, rng);
  const ValueAndGrad zero = h2_objective_and_grad(b, yn, 0.0);
  EXPECT_LE((zero.grad + b.inverse().transpose()).norm(), 1e-12);
  EXPECT_NEAR(h2_objective_and_grad(b, yn, 2.5).value, naive_h2(b, yn, 2.5), 1e-10);
  const ValueAndGrad sing = h2_objective_and_grad(Matrix::Ones(3, 3), yn, 1.0);
  EXPECT_TRUE(std::isinf(sing.value));
  EXPECT_EQ(sing.grad.size(), 0);
}

TEST(H2Objective, GradientMatchesFiniteDifferences) {
  Rng rng(2, 0);
  for (int k = 0; k < 20; ++k) {
    const Matrix b = oracle::well_conditioned(3, rng);
    const Matrix y = oracle::normal_matrix(3, 40, rng);
    const ValueAndGrad vg = h2_objective_and_grad(b, y, 3.0);
    const Matrix fd = oracle::fd_gradient([&](const Matrix& x) { return naive_h2(x, y, 3.0); }, b);
    EXPECT_LE(oracle::rel_err(vg.grad, fd), 1e-5);
  }
}

TEST(H2Solve, MatchesGenericProjectedGradient) {
  const Reduced r = reduced_problem(10, 5, 30, 3);
  H2Config cfg;
  cfg.pg.max_iter = 300;
  cfg.pg.rc_tol = 0.0;
  const H2Result fast = h2_solve(r.y, r.p, r.b0, cfg);
  RunReport rep;
  const Matrix generic = projected_gradient_solve(H2Objective(r.y, cfg.lambda), r.p, r.b0, cfg.pg, rep);
  EXPECT_EQ(fast.report.iterations, rep.iterations);
  EXPECT_LE(oracle::rel_err(fast.B, generic), 1e-8);
  ASSERT_EQ(fast.report.mu.size(), rep.mu.size());
  for (std::size_t k = 0; k < rep.mu.size(); ++k) EXPECT_EQ(fast.report.mu[k], rep.mu[k]);
}

TEST(H2Solve, StepInequalityAgainstExtrapolatedPoint) {
  const Reduced r = reduced_problem(10, 5, 30, 4);
  H2Config cfg;
  cfg.pg.keep_iterates = true;
  cfg.pg.max_iter = 400;
  const H2Result res = h2_solve(r.y, r.p, r.b0, cfg);
  const auto& it = res.report.iterates;
  ASSERT_EQ(it.size(), static_cast<std::size_t>(res.report.iterations) + 1);
  double mu_max = 0.0;
  for (std::size_t k = 1; k < it.size(); ++k) {
    const Matrix& prev = k >= 2 ? it[k - 2] : it[0];
    const Matrix b_ex = it[k - 1] + res.report.alpha[k - 1] * (it[k - 1] - prev);
    const ValueAndGrad ex = h2_objective_and_grad(b_ex, r.y, cfg.lambda);
    const double mu = res.report.mu[k - 1];
    const Matrix step = it[k] - b_ex;
    const double h = (ex.grad.array() * step.array()).sum() + 0.5 * mu * step.squaredNorm();
    const double f_next = naive_h2(it[k], r.y, cfg.lambda);
    EXPECT_LE(f_next, ex.value + cfg.pg.beta * h + 1e-9 * std::max(1.0, std::abs(ex.value))) << k;
    EXPECT_LE((it[k].colwise().sum().transpose() - r.p).norm(), 1e-10);
    mu_max = std::max(mu_max, mu);
  }
  EXPECT_TRUE(std::isfinite(mu_max));
  EXPECT_GT(res.report.objective.front(), res.report.objective.back());
}

TEST(H2Solve, MonotoneWithoutExtrapolation) {
  const Reduced r = reduced_problem(10, 5, 30, 5);
  H2Config cfg;
  cfg.pg.extrapolate = false;
  cfg.pg.max_iter = 2000;
  const H2Result res = h2_solve(r.y, r.p, r.b0, cfg);
  const auto& obj = res.report.objective;
  for (std::size_t k = 1; k < obj.size(); ++k) {
    EXPECT_LE(obj[k], obj[k - 1]);
    EXPECT_LE(res.report.model_decrease[k - 1], 0.0);
  }
  for (double a : res.report.alpha) EXPECT_EQ(a, 0.0);
}

TEST(H2Solve, LogDetDescentWithoutPenalty) {
  Rng rng(6, 0);
  const Matrix y = oracle::uniform_matrix(3, 50, rng, 0.1, 1.0);
  H2Config cfg;
  cfg.lambda = 0.0;
  cfg.pg.extrapolate = false;
  cfg.pg.max_iter = 50;
  const H2Result res = h2_solve(y, Vector::Ones(3), Matrix::Identity(3, 3), cfg);
  const auto& obj = res.report.objective;
  ASSERT_EQ(obj.size(), 51u);
  for (std::size_t k = 1; k < obj.size(); ++k) EXPECT_LT(obj[k], obj[k - 1]);
}

TEST(H2Solve, StopsOnRelativeChangeAndValidates) {
  const Reduced r = reduced_problem(10, 5, 0, 7, true);
  H2Config cfg;
  cfg.pg.max_iter = 100000;
  cfg.pg.rc_tol = 1e-4;
  const H2Result res = h2_solve(r.y, r.p, r.b0, cfg);
  EXPECT_EQ(res.report.termination, termination::rel_change);
  cfg.lambda = -1.0;
  EXPECT_THROW(h2_solve(r.y, r.p, r.b0, cfg), std::invalid_argument);
  cfg.lambda = 1.0;
  cfg.pg.beta = 1.0;
  EXPECT_THROW(h2_solve(r.y, r.p, r.b0, cfg), std::invalid_argument);
}

TEST(H2Solve, CurrentAnchorIsMonotone) {
  const Reduced r = reduced_problem(10, 5, 30, 8);
  H2Config cfg;
  cfg.pg.anchor = DecreaseAnchor::current;
  cfg.pg.max_iter = 500;
  const H2Result res = h2_solve(r.y, r.p, r.b0, cfg);
  const auto& obj = res.report.objective;
  for (std::size_t k = 1; k < obj.size(); ++k) EXPECT_LE(obj[k], obj[k - 1] + 1e-12 * std::abs(obj[k - 1]));
  EXPECT_EQ(res.report.config["anchor"], "current");
}

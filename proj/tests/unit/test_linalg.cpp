#include <sca/linalg.hpp>
#include <sca/numeric.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sca;

namespace {

Matrix random_symmetric(Index n, Rng& rng) {
  const Matrix a = oracle::normal_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST(SymEig, DiagonalAndRankOne) {
  Matrix r = Matrix::Zero(3, 3);
  r.diagonal() << 1.0, 3.0, 2.0;
  const EigPair e = sym_eig_top(r, 2);
  EXPECT_NEAR(e.values[0], 3.0, 1e-15);
  EXPECT_NEAR(e.values[1], 2.0, 1e-15);
  EXPECT_LE((e.vectors.col(0) - Vector::Unit(3, 1)).norm(), 1e-15);
  EXPECT_LE((e.vectors.col(1) - Vector::Unit(3, 2)).norm(), 1e-15);

  Vector v(4);
  v << 0.5, -0.5, 0.5, -0.5;
  const EigPair r1 = sym_eig_top(v * v.transpose(), 1);
  EXPECT_NEAR(r1.values[0], 1.0, 1e-12);
  EXPECT_NEAR(std::abs(r1.vectors.col(0).dot(v)), 1.0, 1e-12);
}

TEST(SymEig, MatchesSelfAdjointSolverAndResiduals) {
  Rng rng(21, 0);
  for (int k = 0; k < 20; ++k) {
    const Matrix r = random_symmetric(10, rng);
    const EigPair e = sym_eig(r);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(r);
    for (Index i = 0; i < 10; ++i) EXPECT_NEAR(e.values[i], ref.eigenvalues()[9 - i], 1e-8 * r.norm());
    EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(10, 10)).norm(), 1e-10);
    for (Index i = 0; i < 10; ++i) {
      EXPECT_LE((r * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm(), 1e-8 * r.norm());
      Index arg;
      e.vectors.col(i).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(e.vectors(arg, i), 0.0);
    }
    EXPECT_LE((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - r).norm(), 1e-8 * r.norm());
  }
}

TEST(SymEig, RejectsBadInput) {
  Matrix r = Matrix::Identity(3, 3);
  r(0, 1) = 1.0;
  EXPECT_THROW(sym_eig_top(r, 1), std::invalid_argument);
  EXPECT_THROW(sym_eig_top(Matrix::Identity(3, 3), 0), std::invalid_argument);
  EXPECT_THROW(sym_eig_top(Matrix::Identity(3, 3), 4), std::invalid_argument);
}

TEST(PinvApplyOnes, Examples) {
  EXPECT_LE((pinv_apply_ones(Matrix::Identity(4, 4)) - Vector::Ones(4)).norm(), 1e-14);
  Rng rng(22, 0);
  const Matrix y = oracle::normal_matrix(4, 50, rng);
  Eigen::JacobiSVD<Matrix> svd(y.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s_inv = svd.singularValues().cwiseInverse();
  const Vector expect = svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose() * Vector::Ones(50);
  EXPECT_LE((pinv_apply_ones(y) - expect).norm(), 1e-10 * expect.norm());
}

TEST(PinvApplyOnes, PermutationInvariantAndRankCheck) {
  Rng rng(23, 0);
  const Matrix y = oracle::normal_matrix(3, 40, rng);
  Matrix yp = y;
  for (Index t = 0; t < 40; ++t) yp.col(t) = y.col((t * 7) % 40);
  EXPECT_LE((pinv_apply_ones(y) - pinv_apply_ones(yp)).norm(), 1e-12);
  Matrix deficient = y;
  deficient.row(2) = deficient.row(0) + deficient.row(1);
  EXPECT_THROW(pinv_apply_ones(deficient), NumericalError);
}

TEST(Cond2, Examples) {
  EXPECT_NEAR(cond_2(Matrix::Identity(5, 5)), 1.0, 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 10.0;
  d(1, 1) = 0.1;
  EXPECT_NEAR(cond_2(d), 100.0, 1e-10);
  Rng rng(24, 0);
  const Matrix a = oracle::uniform_matrix(10, 5, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> ref(a.transpose() * a);
  const double expect = std::sqrt(ref.eigenvalues()[4] / ref.eigenvalues()[0]);
  EXPECT_NEAR(cond_2(a) / expect, 1.0, 1e-8);
  EXPECT_NEAR(cond_2(3.7 * a) / cond_2(a), 1.0, 1e-10);
  Matrix s = Matrix::Ones(3, 3);
  EXPECT_GT(cond_2(s), 1e12);
  EXPECT_THROW(cond_2(Matrix::Zero(2, 2)), std::invalid_argument);
}

TEST(SolveSpd, Examples) {
  Rng rng(25, 0);
  const Matrix g = oracle::normal_matrix(6, 3, rng);
  EXPECT_EQ(solve_spd(Matrix::Identity(6, 6), g), g);
  const Matrix half = solve_spd(2.0 * Matrix::Identity(4, 4), Matrix::Ones(4, 1));
  EXPECT_LE((half - Matrix::Constant(4, 1, 0.5)).norm(), 1e-15);
  const Matrix a = oracle::normal_matrix(6, 6, rng);
  const Matrix h = a * a.transpose() + Matrix::Identity(6, 6);
  const SpdSolver solver(h);
  EXPECT_LE((h * solver.solve(g) - g).norm(), 1e-9 * g.norm());
  const Matrix gr = oracle::normal_matrix(2, 6, rng);
  EXPECT_LE((solver.solve_right(gr) * h - gr).norm(), 1e-9 * gr.norm());
  Matrix indefinite = Matrix::Identity(3, 3);
  indefinite(2, 2) = -1.0;
  EXPECT_THROW(SpdSolver{indefinite}, NumericalError);
}

#pragma once

// Invertible starting points for the solvers: successive-projection vertex
// selection on affinely lifted data, followed by a centroid expansion.

#include <sca/core.hpp>
#include <sca/numeric.hpp>
#include <sca/rng.hpp>

#include <string>
#include <vector>

namespace sca {

struct InitResult {
  Matrix A_init;  // N x N, vertices as columns
  Matrix B_init;  // inverse of A_init
  double expansion = 1.0;
  std::vector<Index> selected_indices;
};

inline constexpr double kDefaultExpansion = 1.2;

/// Greedy pure-pixel search: append a row of ones, then pick N columns by
/// maximal residual norm, projecting the residuals onto the orthogonal
/// complement of each pick. Residual norms within 1e-12 (relative) of the
/// maximum count as ties and are broken with `rng`.
inline InitResult successive_projection_init(const Matrix& y, Index n, Rng& rng) {
  detail::require(n >= 1 && y.rows() == n, "successive_projection_init: data must be N x T");
  detail::require(y.cols() >= n, "successive_projection_init: need T >= N");
  const Index t_count = y.cols();
  Matrix residual(n + 1, t_count);
  residual.topRows(n) = y;
  residual.row(n).setOnes();

  Vector norms = residual.colwise().squaredNorm().transpose();
  const double initial = norms.maxCoeff();
  InitResult out;
  out.A_init.resize(n, n);
  std::vector<Index> ties;
  for (Index pick = 0; pick < n; ++pick) {
    const double best = norms.maxCoeff();
    if (!(best > 1e-20 * initial))
      throw NumericalError("successive_projection_init: degenerate data, only " + std::to_string(pick) +
                           " independent vertices");
    ties.clear();
    for (Index t = 0; t < t_count; ++t)
      if (norms[t] >= best * (1.0 - 1e-12)) ties.push_back(t);
    const Index chosen = ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];
    out.selected_indices.push_back(chosen);
    out.A_init.col(pick) = y.col(chosen);

    const Vector u = residual.col(chosen).normalized();
    const Eigen::RowVectorXd coeff = u.transpose() * residual;
    residual.noalias() -= u * coeff;
    norms = residual.colwise().squaredNorm().transpose();
    for (Index chosen_before : out.selected_indices) norms[chosen_before] = 0.0;
  }
  LuFactor lu(out.A_init);
  if (lu.singular()) throw NumericalError("successive_projection_init: selected vertices are singular");
  out.B_init = lu.inverse();
  return out;
}

/// Pushes vertices away from their centroid m: a_i <- m + kappa (a_i - m).
inline InitResult expand_vertices(const Matrix& a, double kappa) {
  detail::require(a.rows() == a.cols(), "expand_vertices: A must be square");
  detail::require(kappa >= 1.0, "expand_vertices: kappa must be >= 1");
  const Vector centroid = a.rowwise().mean();
  InitResult out;
  out.expansion = kappa;
  out.A_init = (kappa * a).colwise() + (1.0 - kappa) * centroid;
  LuFactor lu(out.A_init);
  if (lu.singular()) throw NumericalError("expand_vertices: expanded vertices are singular");
  out.B_init = lu.inverse();
  return out;
}

/// Selection plus expansion; the default initializer used by the pipeline.
inline InitResult expanded_vertex_init(const Matrix& y, Index n, double kappa, Rng& rng) {
  InitResult picked = successive_projection_init(y, n, rng);
  InitResult out = expand_vertices(picked.A_init, kappa);
  out.selected_indices = std::move(picked.selected_indices);
  return out;
}

}  // namespace sca

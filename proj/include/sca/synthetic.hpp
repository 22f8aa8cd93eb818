#pragma once

// Simulation model y_t = A0 s_t + v_t with s_t uniform on the unit simplex,
// A0 drawn elementwise from U[0,1] under a condition-number cap, and white
// Gaussian noise at a requested SNR. Also NMF-style column normalization.

#include <sca/core.hpp>
#include <sca/linalg.hpp>
#include <sca/rng.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace sca {

struct GroundTruth {
  Matrix A0;  // M x N
  Matrix S;   // N x T
  double sigma2 = 0.0;
};

struct Dataset {
  Matrix Y;  // M x T
  std::optional<GroundTruth> truth;
  std::uint64_t seed = 0;
};

struct SynthSpec {
  int M = 10;
  int N = 5;
  int T = 1000;
  double snr_db = 30.0;
  bool noiseless = false;
  double cond_max = 100.0;
  std::uint64_t seed = 0;
  int max_draws = 10000;
};

/// Stream ids within one seed.
enum class SynthStream : std::uint64_t { mixing = 1, latent = 2, noise = 3 };

/// `count` iid Dirichlet(1,...,1) columns of dimension n via normalized
/// standard-exponential draws.
inline Matrix sample_unit_simplex(int n, int count, Rng& rng) {
  detail::require(n >= 1, "sample_unit_simplex: n must be >= 1");
  detail::require(count >= 0, "sample_unit_simplex: negative count");
  Matrix s(n, count);
  for (int t = 0; t < count; ++t) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      s(i, t) = rng.exponential();
      sum += s(i, t);
    }
    s.col(t) /= sum;
  }
  return s;
}

/// sigma^2 that puts (1/T) sum ||x_t||^2 / (M sigma^2) at snr_db.
inline double sigma2_for_snr(const Matrix& noiseless, double snr_db) {
  const double power = noiseless.squaredNorm() / static_cast<double>(noiseless.cols());
  return power / (static_cast<double>(noiseless.rows()) * std::pow(10.0, snr_db / 10.0));
}

inline void validate(const SynthSpec& spec) {
  detail::require(spec.N >= 2, "SynthSpec: N must be >= 2");
  detail::require(spec.M >= spec.N, "SynthSpec: M must be >= N");
  detail::require(spec.T >= spec.N, "SynthSpec: T must be >= N");
  detail::require(spec.cond_max > 1.0, "SynthSpec: cond_max must exceed 1");
  detail::require(spec.noiseless || std::isfinite(spec.snr_db), "SynthSpec: snr_db must be finite unless noiseless");
}

inline Dataset generate(const SynthSpec& spec) {
  validate(spec);
  Rng mixing(spec.seed, static_cast<std::uint64_t>(SynthStream::mixing));
  Rng latent(spec.seed, static_cast<std::uint64_t>(SynthStream::latent));
  Rng noise(spec.seed, static_cast<std::uint64_t>(SynthStream::noise));

  Matrix a0(spec.M, spec.N);
  bool admitted = false;
  for (int draw = 0; draw < spec.max_draws && !admitted; ++draw) {
    for (Index j = 0; j < a0.cols(); ++j)
      for (Index i = 0; i < a0.rows(); ++i) a0(i, j) = mixing.uniform();
    admitted = cond_2(a0) <= spec.cond_max;
  }
  if (!admitted)
    throw GenerationError("generate: no mixing matrix with cond <= " + std::to_string(spec.cond_max) + " in " +
                          std::to_string(spec.max_draws) + " draws");

  GroundTruth truth;
  truth.A0 = a0;
  truth.S = sample_unit_simplex(spec.N, spec.T, latent);
  Matrix y = truth.A0 * truth.S;
  if (!spec.noiseless) {
    truth.sigma2 = sigma2_for_snr(y, spec.snr_db);
    const double sigma = std::sqrt(truth.sigma2);
    for (Index t = 0; t < y.cols(); ++t)
      for (Index i = 0; i < y.rows(); ++i) y(i, t) += sigma * noise.normal();
  }
  return Dataset{std::move(y), std::move(truth), spec.seed};
}

/// SNR in dB measured from the realized noise: ||A0 S||^2 / ||Y - A0 S||^2.
/// +inf for noiseless data.
inline double empirical_snr_db(const Dataset& data) {
  detail::require(data.truth.has_value(), "empirical_snr_db: dataset has no ground truth");
  const Matrix clean = data.truth->A0 * data.truth->S;
  const double noise = (data.Y - clean).squaredNorm();
  if (!(noise > 0.0)) return kInf;
  return 10.0 * std::log10(clean.squaredNorm() / noise);
}

/// Divides every column by its entry sum.
inline Matrix nmf_normalize(const Matrix& z) {
  Matrix out = z;
  for (Index t = 0; t < z.cols(); ++t) {
    const double sum = z.col(t).sum();
    if (!(sum > 0.0)) throw std::invalid_argument("nmf_normalize: column " + std::to_string(t) + " has non-positive sum");
    out.col(t) /= sum;
  }
  return out;
}

}  // namespace sca
